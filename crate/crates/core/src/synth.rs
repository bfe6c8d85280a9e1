//! Synthetic hyperspectral scenes with ground truth.
//!
//! A scene is a set of labelled polygons over a pixel grid. Each pixel's
//! spectrum is its class profile scaled by a smooth illumination field, plus
//! Gaussian noise, clamped to `[0, 1]`. Noise comes from a per-pixel ChaCha
//! stream so the output does not depend on the number of worker threads.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::LabelMap;
use crate::cube::{quantize, CameraMeta, HyperCube, SampleType, Samples};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::spectral::{palette_color, ClassId, SpectralDatabase, Spectrum};

/// Control points per axis of the illumination grid.
const ILLUMINATION_GRID: usize = 8;

const CORNFIELDS: &str = include_str!("../scenes/cornfields-like.json");
const RUNTIME_ADD: &str = include_str!("../scenes/runtime-add.json");

/// Names accepted by [`SceneSpec::bundled`].
pub const BUNDLED_SCENES: [&str; 2] = ["cornfields-like", "runtime-add"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Wavelengths {
    /// Evenly spaced from `start_nm` to `end_nm` inclusive.
    Range {
        start_nm: f64,
        end_nm: f64,
    },
    List(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub amplitude: f64,
    pub center_nm: f64,
    pub width_nm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[u8; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taxonomy: Vec<String>,
    #[serde(default)]
    pub baseline: f64,
    #[serde(default)]
    pub peaks: Vec<Peak>,
}

impl ClassProfile {
    /// Unit-illumination reflectance at `nm`, clamped to `[0, 1]`.
    pub fn evaluate(&self, nm: f64) -> f64 {
        let v = self.peaks.iter().fold(self.baseline, |acc, p| {
            let z = (nm - p.center_nm) / p.width_nm;
            acc + p.amplitude * (-0.5 * z * z).exp()
        });
        v.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRegion {
    pub class: String,
    pub outer: Vec<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Vec<Point>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub wavelengths: Wavelengths,
    pub classes: Vec<ClassProfile>,
    pub regions: Vec<SceneRegion>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "unit_illumination")]
    pub illumination: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub camera: CameraMeta,
    #[serde(default = "default_dtype")]
    pub dtype: SampleType,
}

fn unit_illumination() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_dtype() -> SampleType {
    SampleType::F32
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub cube: HyperCube,
    pub truth: LabelMap,
    pub db: SpectralDatabase,
}

impl SceneSpec {
    pub fn bundled(name: &str) -> Result<SceneSpec> {
        let text = match name {
            "cornfields-like" | "cornfields" => CORNFIELDS,
            "runtime-add" => RUNTIME_ADD,
            other => {
                return Err(Error::InvalidScene(format!(
                    "no bundled scene named {other:?} (expected one of {})",
                    BUNDLED_SCENES.join(", ")
                )))
            }
        };
        SceneSpec::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<SceneSpec> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SceneSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SceneSpec::from_json(&text)
    }

    /// The wavelength of every band, in nm.
    pub fn band_wavelengths(&self) -> Result<Vec<f64>> {
        let wl = match &self.wavelengths {
            Wavelengths::List(list) => list.clone(),
            Wavelengths::Range { start_nm, end_nm } => {
                if self.bands == 1 {
                    vec![*start_nm]
                } else {
                    let step = (end_nm - start_nm) / (self.bands - 1) as f64;
                    (0..self.bands)
                        .map(|i| start_nm + step * i as f64)
                        .collect()
                }
            }
        };
        if wl.len() != self.bands {
            return Err(Error::InvalidScene(format!(
                "{} bands but {} wavelengths",
                self.bands,
                wl.len()
            )));
        }
        if wl.iter().any(|w| !w.is_finite()) || wl.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScene(
                "wavelengths must be finite and strictly increasing".into(),
            ));
        }
        Ok(wl)
    }

    /// The same scene on a different pixel grid, with polygons scaled to fit.
    pub fn resized(&self, width: usize, height: usize) -> SceneSpec {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        let scale = |ring: &Vec<Point>| -> Vec<Point> {
            ring.iter()
                .map(|p| Point::new(p.x * sx, p.y * sy))
                .collect()
        };
        let mut out = self.clone();
        out.width = width;
        out.height = height;
        for r in &mut out.regions {
            r.outer = scale(&r.outer);
            r.holes = r.holes.iter().map(scale).collect();
        }
        out
    }

    /// The same scene sampled at `bands` bands over the same wavelength span.
    pub fn with_band_count(&self, bands: usize) -> Result<SceneSpec> {
        let wl = self.band_wavelengths()?;
        let mut out = self.clone();
        out.bands = bands;
        out.wavelengths = Wavelengths::Range {
            start_nm: wl[0],
            end_nm: wl[wl.len() - 1],
        };
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.bands == 0 {
            return Err(Error::InvalidScene(format!(
                "dimensions must be non-zero, got {}x{}x{}",
                self.width, self.height, self.bands
            )));
        }
        self.band_wavelengths()?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidScene(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        let [lo, hi] = self.illumination;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(Error::InvalidScene(format!(
                "illumination range must satisfy 0 < min <= max, got [{lo}, {hi}]"
            )));
        }
        self.camera.validate()?;
        let mut names = HashMap::new();
        for c in &self.classes {
            if names.insert(c.name.as_str(), ()).is_some() {
                return Err(Error::DuplicateClass(c.name.clone()));
            }
            if c.peaks.iter().any(|p| !(p.width_nm > 0.0)) {
                return Err(Error::InvalidScene(format!(
                    "class {:?} has a peak with non-positive width",
                    c.name
                )));
            }
        }
        for r in &self.regions {
            if !names.contains_key(r.class.as_str()) {
                return Err(Error::MissingProfile(r.class.clone()));
            }
            if std::iter::once(&r.outer)
                .chain(&r.holes)
                .any(|ring| ring.len() < 3)
            {
                return Err(Error::InvalidScene(format!(
                    "region of class {:?} has a ring with fewer than 3 vertices",
                    r.class
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Containment {
    Outside,
    Boundary,
    Inside,
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

struct PreparedRegion<'a> {
    label: ClassId,
    rings: Vec<&'a [Point]>,
    min: Point,
    max: Point,
}

impl PreparedRegion<'_> {
    /// Even-odd containment of `p` over all rings.
    fn contains(&self, p: Point) -> Containment {
        if p.x < self.min.x || p.x > self.max.x || p.y < self.min.y || p.y > self.max.y {
            return Containment::Outside;
        }
        let mut inside = false;
        for ring in &self.rings {
            let n = ring.len();
            for i in 0..n {
                let (a, b) = (ring[i], ring[(i + 1) % n]);
                if on_segment(p, a, b) {
                    return Containment::Boundary;
                }
                if (a.y > p.y) != (b.y > p.y) {
                    let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                    if p.x < x {
                        inside = !inside;
                    }
                }
            }
        }
        if inside {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }
}

/// Ground-truth labels by pixel-centre containment; the first region in spec
/// order wins on shared boundaries.
fn rasterize_truth(spec: &SceneSpec, ids: &HashMap<&str, ClassId>) -> Result<LabelMap> {
    let prepared: Vec<PreparedRegion> = spec
        .regions
        .iter()
        .map(|r| {
            let rings: Vec<&[Point]> = std::iter::once(&r.outer)
                .chain(&r.holes)
                .map(Vec::as_slice)
                .collect();
            let (mut min, mut max) = (r.outer[0], r.outer[0]);
            for p in &r.outer {
                min = Point::new(min.x.min(p.x), min.y.min(p.y));
                max = Point::new(max.x.max(p.x), max.y.max(p.y));
            }
            PreparedRegion {
                label: ids[r.class.as_str()],
                rings,
                min,
                max,
            }
        })
        .collect();

    let w = spec.width;
    let rows: Vec<Result<Vec<ClassId>>> = (0..spec.height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![ClassId::UNKNOWN; w];
            for (x, cell) in row.iter_mut().enumerate() {
                let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let mut interior: Option<usize> = None;
                for (i, region) in prepared.iter().enumerate() {
                    let c = region.contains(p);
                    if c == Containment::Outside {
                        continue;
                    }
                    if cell.is_unknown() {
                        *cell = region.label;
                    }
                    if c == Containment::Inside {
                        if let Some(first) = interior {
                            return Err(Error::OverlappingRegions { first, second: i });
                        }
                        interior = Some(i);
                    }
                }
            }
            Ok(row)
        })
        .collect();
    let mut labels = Vec::with_capacity(w * spec.height);
    for row in rows {
        labels.extend(row?);
    }
    LabelMap::new(w, spec.height, labels)
}

/// Smooth multiplicative brightness, bilinear over a seeded control grid.
struct Illumination {
    grid: [[f64; ILLUMINATION_GRID]; ILLUMINATION_GRID],
    sx: f64,
    sy: f64,
}

impl Illumination {
    fn new(spec: &SceneSpec) -> Self {
        let [lo, hi] = spec.illumination;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut grid = [[0.0; ILLUMINATION_GRID]; ILLUMINATION_GRID];
        for row in &mut grid {
            for v in row.iter_mut() {
                *v = lo + (hi - lo) * rng.gen::<f64>();
            }
        }
        let span = (ILLUMINATION_GRID - 1) as f64;
        let scale = |n: usize| if n > 1 { span / (n - 1) as f64 } else { 0.0 };
        Illumination {
            grid,
            sx: scale(spec.width),
            sy: scale(spec.height),
        }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        let last = ILLUMINATION_GRID - 1;
        let (u, v) = (x as f64 * self.sx, y as f64 * self.sy);
        let (i, j) = ((u as usize).min(last - 1), (v as usize).min(last - 1));
        let (fu, fv) = (u - i as f64, v - j as f64);
        let g = &self.grid;
        let top = g[j][i] * (1.0 - fu) + g[j][i + 1] * fu;
        let bottom = g[j + 1][i] * (1.0 - fu) + g[j + 1][i + 1] * fu;
        top * (1.0 - fv) + bottom * fv
    }
}

fn fill_row<T: Copy + Send>(
    spec: &SceneSpec,
    truth: &LabelMap,
    profiles: &[Vec<f64>],
    illumination: &Illumination,
    base_rng: &ChaCha8Rng,
    encode: impl Fn(f64) -> T + Sync,
    zero: T,
) -> Vec<T> {
    let (w, bands) = (spec.width, spec.bands);
    let mut out = vec![zero; w * spec.height * bands];
    let unknown = vec![0.0; bands];
    out.par_chunks_mut(w * bands)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let label = truth.get(x, y);
                let profile = if label.is_unknown() {
                    &unknown
                } else {
                    &profiles[label.0 as usize - 1]
                };
                let gain = illumination.at(x, y);
                let px = &mut row[x * bands..(x + 1) * bands];
                if spec.noise_sigma > 0.0 {
                    let mut rng = base_rng.clone();
                    rng.set_stream((y * w + x) as u64 + 1);
                    for (o, &p) in px.iter_mut().zip(profile) {
                        let n: f64 = rng.sample(StandardNormal);
                        *o = encode((gain * p + spec.noise_sigma * n).clamp(0.0, 1.0));
                    }
                } else {
                    for (o, &p) in px.iter_mut().zip(profile) {
                        *o = encode((gain * p).clamp(0.0, 1.0));
                    }
                }
            }
        });
    out
}

pub fn synthesize(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let wavelengths = spec.band_wavelengths()?;

    let mut db = SpectralDatabase::new();
    let mut ids = HashMap::new();
    let mut profiles = Vec::with_capacity(spec.classes.len());
    for (i, class) in spec.classes.iter().enumerate() {
        let values: Vec<f64> = wavelengths.iter().map(|&nm| class.evaluate(nm)).collect();
        let reference = Spectrum::new(wavelengths.clone(), values.clone())?;
        let color = class.color.unwrap_or_else(|| palette_color(i));
        let id = db.add_class(&class.name, color, reference, class.taxonomy.clone())?;
        debug_assert_eq!(id.0 as usize, i + 1);
        ids.insert(class.name.as_str(), id);
        profiles.push(values);
    }

    let truth = rasterize_truth(spec, &ids)?;
    let illumination = Illumination::new(spec);
    let base_rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let samples = match spec.dtype {
        SampleType::F32 => Samples::F32(fill_row(
            spec,
            &truth,
            &profiles,
            &illumination,
            &base_rng,
            |v| v as f32,
            0.0f32,
        )),
        SampleType::U16 => Samples::U16(fill_row(
            spec,
            &truth,
            &profiles,
            &illumination,
            &base_rng,
            |v| quantize(v as f32, u16::MAX as f32) as u16,
            0u16,
        )),
        SampleType::U8 => Samples::U8(fill_row(
            spec,
            &truth,
            &profiles,
            &illumination,
            &base_rng,
            |v| quantize(v as f32, u8::MAX as f32) as u8,
            0u8,
        )),
    };
    let cube = HyperCube::with_bands(
        spec.width,
        spec.height,
        spec.bands,
        wavelengths.iter().map(|&w| w as f32).collect(),
        samples,
        spec.camera,
    )?;
    Ok(Scene { cube, truth, db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectral_angle_deg;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }

    fn profile(name: &str, baseline: f64, center: f64) -> ClassProfile {
        ClassProfile {
            name: name.into(),
            color: None,
            taxonomy: Vec::new(),
            baseline,
            peaks: vec![Peak {
                amplitude: 0.3,
                center_nm: center,
                width_nm: 40.0,
            }],
        }
    }

    fn one_class(w: usize, h: usize) -> SceneSpec {
        SceneSpec {
            name: None,
            width: w,
            height: h,
            bands: 16,
            wavelengths: Wavelengths::Range {
                start_nm: 450.0,
                end_nm: 900.0,
            },
            classes: vec![profile("A", 0.2, 600.0)],
            regions: vec![SceneRegion {
                class: "A".into(),
                outer: square(0.0, 0.0, w as f64, h as f64),
                holes: Vec::new(),
            }],
            noise_sigma: 0.0,
            illumination: [1.0, 1.0],
            seed: 3,
            camera: CameraMeta::default(),
            dtype: SampleType::F32,
        }
    }

    #[test]
    fn noiseless_unit_illumination_reproduces_the_profile() {
        let scene = synthesize(&one_class(6, 5)).unwrap();
        let reference = scene.db.classes()[0].reference.values().to_vec();
        let expected: Vec<f32> = reference.iter().map(|&v| v as f32).collect();
        for y in 0..5 {
            for x in 0..6 {
                let s = scene.cube.pixel_spectrum(x, y).unwrap();
                let got: Vec<f32> = s.values().iter().map(|&v| v as f32).collect();
                assert_eq!(got, expected);
            }
        }
        assert_eq!(scene.truth, LabelMap::filled(6, 5, ClassId(1)));
    }

    #[test]
    fn same_seed_gives_identical_cubes() {
        let mut spec = one_class(20, 12);
        spec.noise_sigma = 0.05;
        spec.illumination = [0.5, 1.5];
        let a = synthesize(&spec).unwrap();
        let b = synthesize(&spec).unwrap();
        assert_eq!(a.cube, b.cube);
        spec.seed += 1;
        assert_ne!(synthesize(&spec).unwrap().cube, a.cube);
    }

    #[test]
    fn result_does_not_depend_on_thread_count() {
        let mut spec = one_class(33, 17);
        spec.noise_sigma = 0.02;
        spec.illumination = [0.5, 1.5];
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| synthesize(&spec).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| synthesize(&spec).unwrap());
        assert_eq!(serial.cube, parallel.cube);
    }

    #[test]
    fn illumination_keeps_every_angle_at_zero() {
        let mut spec = one_class(32, 32);
        spec.illumination = [0.5, 1.5];
        let scene = synthesize(&spec).unwrap();
        let reference = scene.db.classes()[0].reference.values();
        let mut buf = vec![0.0; spec.bands];
        let mut gains = Vec::new();
        for p in 0..scene.cube.pixel_count() {
            scene.cube.pixel_into(p, &mut buf);
            assert!(spectral_angle_deg(&buf, reference).unwrap() < 1e-3);
            gains.push(buf[0] / reference[0]);
        }
        let lo = gains.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = gains.iter().cloned().fold(0.0, f64::max);
        assert!(lo >= 0.5 - 1e-6 && hi <= 1.5 + 1e-6);
        assert!(hi - lo > 0.1, "illumination should vary, got [{lo}, {hi}]");
    }

    #[test]
    fn uncovered_pixels_are_unknown_and_boundaries_go_to_the_first_region() {
        let mut spec = one_class(4, 2);
        spec.classes.push(profile("B", 0.1, 800.0));
        // both squares share the edge x = 2; centres never lie on it
        spec.regions = vec![
            SceneRegion {
                class: "B".into(),
                outer: square(0.0, 0.0, 2.5, 1.0),
                holes: Vec::new(),
            },
            SceneRegion {
                class: "A".into(),
                outer: square(2.5, 0.0, 4.0, 1.0),
                holes: Vec::new(),
            },
        ];
        let scene = synthesize(&spec).unwrap();
        let ids: Vec<u16> = scene.truth.labels().iter().map(|c| c.0).collect();
        assert_eq!(ids, vec![2, 2, 2, 1, 0, 0, 0, 0]);
        let zero = scene.cube.pixel_spectrum(0, 1).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn holes_are_left_to_inner_regions() {
        let mut spec = one_class(6, 6);
        spec.classes.push(profile("B", 0.1, 800.0));
        spec.regions[0].holes = vec![square(2.0, 2.0, 4.0, 4.0)];
        spec.regions.push(SceneRegion {
            class: "B".into(),
            outer: square(2.0, 2.0, 4.0, 4.0),
            holes: Vec::new(),
        });
        let scene = synthesize(&spec).unwrap();
        assert_eq!(scene.truth.get(2, 2), ClassId(2));
        assert_eq!(scene.truth.get(3, 3), ClassId(2));
        assert_eq!(scene.truth.get(1, 3), ClassId(1));
        assert_eq!(scene.truth.unknown_count(), 0);
    }

    #[test]
    fn overlapping_interiors_are_rejected() {
        let mut spec = one_class(6, 6);
        spec.regions.push(SceneRegion {
            class: "A".into(),
            outer: square(1.0, 1.0, 3.0, 3.0),
            holes: Vec::new(),
        });
        assert!(matches!(
            synthesize(&spec),
            Err(Error::OverlappingRegions {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn region_without_profile_is_rejected() {
        let mut spec = one_class(4, 4);
        spec.regions[0].class = "Nope".into();
        assert!(matches!(synthesize(&spec), Err(Error::MissingProfile(_))));
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        let mut spec = one_class(4, 4);
        spec.noise_sigma = -0.1;
        assert!(synthesize(&spec).is_err());
        let mut spec = one_class(4, 4);
        spec.illumination = [0.0, 1.0];
        assert!(synthesize(&spec).is_err());
        let mut spec = one_class(4, 4);
        spec.illumination = [1.5, 1.0];
        assert!(synthesize(&spec).is_err());
    }

    #[test]
    fn truth_does_not_depend_on_bands() {
        let spec = SceneSpec::bundled("cornfields-like").unwrap();
        let a = synthesize(&spec.with_band_count(8).unwrap()).unwrap();
        let b = synthesize(&spec).unwrap();
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn bundled_scenes_parse_and_cover_the_frame() {
        for name in BUNDLED_SCENES {
            let spec = SceneSpec::bundled(name).unwrap();
            let scene = synthesize(&spec).unwrap();
            assert_eq!(scene.truth.unknown_count(), 0, "{name}");
            for class in scene.db.classes() {
                assert!(
                    scene.truth.labels().contains(&class.id),
                    "{name}: {}",
                    class.name
                );
            }
        }
        assert_eq!(
            SceneSpec::bundled("cornfields-like").unwrap().classes.len(),
            5
        );
        assert!(SceneSpec::bundled("elsewhere").is_err());
    }

    #[test]
    fn spec_json_round_trips() {
        let spec = SceneSpec::bundled("runtime-add").unwrap();
        assert_eq!(
            SceneSpec::from_json(&spec.to_json().unwrap()).unwrap(),
            spec
        );
    }

    #[test]
    fn u8_scenes_quantize_like_the_file_format() {
        let mut spec = one_class(3, 3);
        spec.dtype = SampleType::U8;
        let scene = synthesize(&spec).unwrap();
        let reference = scene.db.classes()[0].reference.values();
        let s = scene.cube.pixel_spectrum(1, 1).unwrap();
        for (got, r) in s.values().iter().zip(reference) {
            assert!((got - r).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }
}
