//! Shared fixtures for the stage benchmarks.

use hypermap_core::pipeline::{bench_scene, TWO_CLASSES};
use hypermap_core::{classify, ClassifyParams, LabelMap, Scene, SpectralDatabase};

/// Variance used for every benchmark classification, in degrees.
pub const VARIANCE_DEG: f64 = 10.0;

/// Bundled five-class scene at `size` x `size` pixels, stored as u8.
pub fn scene(size: usize, bands: usize) -> Scene {
    bench_scene(size, bands, 0).expect("bundled scene synthesizes")
}

pub fn two_class_db(scene: &Scene) -> SpectralDatabase {
    scene
        .db
        .subset(&TWO_CLASSES)
        .expect("bundled scene has both classes")
}

pub fn labels(scene: &Scene) -> LabelMap {
    classify(&scene.cube, &scene.db, &ClassifyParams::sam(VARIANCE_DEG))
        .expect("classification succeeds")
        .labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let s = scene(48, 8);
        assert_eq!(two_class_db(&s).len(), 2);
        let l = labels(&s);
        assert_eq!((l.width(), l.height()), (48, 48));
    }
}
