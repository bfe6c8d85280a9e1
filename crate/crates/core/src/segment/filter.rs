//! Metric size filtering: small nested regions are absorbed into their parent.

use crate::classify::LabelMap;
use crate::cube::CameraMeta;
use crate::error::{Error, Result};
use crate::geometry::pixel_area_m2;
use crate::segment::regions::{extract_regions, RegionSet};
use crate::spectral::ClassId;

/// Fills `area_m2` for every region from its pixel count.
pub fn compute_areas(set: &mut RegionSet, camera: &CameraMeta) -> Result<()> {
    let per_pixel = pixel_area_m2(set.width(), set.height(), camera)?;
    for r in set.regions_mut() {
        r.area_m2 = Some(r.pixel_count as f64 * per_pixel);
    }
    Ok(())
}

/// Removes regions smaller than `min_area_m2` that sit inside another
/// region's hole, relabelling their pixels with the parent's label, and
/// re-extracts until nothing removable remains.
///
/// Root regions are never removed. A labelled region whose parent is Unknown
/// is kept as well, so filtering never turns classified pixels into Unknown.
pub fn filter_regions(
    set: &RegionSet,
    map: &LabelMap,
    min_area_m2: f64,
    camera: &CameraMeta,
) -> Result<(RegionSet, LabelMap)> {
    if !(min_area_m2.is_finite() && min_area_m2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "min_area must be a finite value >= 0, got {min_area_m2}"
        )));
    }
    if set.width() != map.width() || set.height() != map.height() {
        return Err(Error::LabelMapMismatch(
            "region set and label map sizes differ".into(),
        ));
    }
    let mut map = map.clone();
    let mut set = set.clone();
    compute_areas(&mut set, camera)?;

    loop {
        let regions = set.regions();
        let mut removable: Vec<(f64, usize, ClassId)> = regions
            .iter()
            .filter_map(|r| {
                let area = r.area_m2.expect("areas computed");
                let parent = &regions[r.parent?];
                let absorbable = parent.label != r.label
                    && !(parent.label.is_unknown() && !r.label.is_unknown());
                (area < min_area_m2 && absorbable).then_some((area, r.id, parent.label))
            })
            .collect();
        if removable.is_empty() {
            break;
        }
        removable.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut target = vec![None; regions.len()];
        for &(_, id, label) in &removable {
            target[id] = Some(label);
        }
        for (label, &owner) in map.labels_mut().iter_mut().zip(set.owner()) {
            if let Some(t) = target[owner as usize] {
                *label = t;
            }
        }
        set = extract_regions(&map);
        compute_areas(&mut set, camera)?;
    }
    Ok((set, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Pose;
    use proptest::prelude::*;

    /// Camera whose footprint is exactly `side` meters at height 1 and 90° fov.
    fn camera() -> CameraMeta {
        CameraMeta::new(1.0, 90.0, Pose::default()).unwrap()
    }

    fn area_of_pixels(w: usize, h: usize, n: f64) -> f64 {
        pixel_area_m2(w, h, &camera()).unwrap() * n
    }

    fn map(w: usize, h: usize, ids: &[u16]) -> LabelMap {
        LabelMap::from_ids(w, h, ids).unwrap()
    }

    #[test]
    fn zero_threshold_is_identity() {
        let mut ids = vec![1u16; 25];
        ids[12] = 2;
        let m = map(5, 5, &ids);
        let set = extract_regions(&m);
        let (out, out_map) = filter_regions(&set, &m, 0.0, &camera()).unwrap();
        assert_eq!(out_map, m);
        let mut expected = set.clone();
        compute_areas(&mut expected, &camera()).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn single_speck_is_absorbed() {
        let mut ids = vec![1u16; 25];
        ids[12] = 2;
        let m = map(5, 5, &ids);
        let set = extract_regions(&m);
        let (out, out_map) =
            filter_regions(&set, &m, area_of_pixels(5, 5, 1.5), &camera()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out_map, LabelMap::filled(5, 5, ClassId(1)));
    }

    #[test]
    fn nested_small_regions_collapse_to_the_root() {
        #[rustfmt::skip]
        let ids = [
            1, 1, 1, 1, 1, 1, 1,
            1, 2, 2, 2, 2, 2, 1,
            1, 2, 3, 3, 3, 2, 1,
            1, 2, 3, 3, 3, 2, 1,
            1, 2, 3, 3, 3, 2, 1,
            1, 2, 2, 2, 2, 2, 1,
            1, 1, 1, 1, 1, 1, 1,
        ];
        let m = map(7, 7, &ids);
        let set = extract_regions(&m);
        let (out, out_map) =
            filter_regions(&set, &m, area_of_pixels(7, 7, 30.0), &camera()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.regions()[0].pixel_count, 49);
        assert_eq!(out_map, LabelMap::filled(7, 7, ClassId(1)));
    }

    #[test]
    fn only_roots_survive_a_huge_threshold() {
        #[rustfmt::skip]
        let ids = [
            1, 1, 1, 2, 2, 2,
            1, 3, 1, 2, 4, 2,
            1, 1, 1, 2, 2, 2,
        ];
        let m = map(6, 3, &ids);
        let set = extract_regions(&m);
        let (out, _) = filter_regions(&set, &m, 1e9, &camera()).unwrap();
        assert!(out.regions().iter().all(|r| r.parent.is_none()));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn labelled_specks_in_unknown_are_kept() {
        let mut ids = vec![0u16; 25];
        ids[12] = 2;
        let m = map(5, 5, &ids);
        let set = extract_regions(&m);
        let (out, out_map) = filter_regions(&set, &m, 1e9, &camera()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out_map, m);
    }

    #[test]
    fn unknown_specks_take_the_parent_label() {
        let mut ids = vec![4u16; 25];
        ids[6] = 0;
        let m = map(5, 5, &ids);
        let (out, out_map) = filter_regions(&extract_regions(&m), &m, 1e9, &camera()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out_map.unknown_count(), 0);
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let m = LabelMap::filled(2, 2, ClassId(1));
        assert!(filter_regions(&extract_regions(&m), &m, -1.0, &camera()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn filtering_preserves_partition_and_is_monotone(
            ids in prop::collection::vec(0u16..4, 24 * 24),
        ) {
            let m = map(24, 24, &ids);
            let set = extract_regions(&m);
            let px = area_of_pixels(24, 24, 1.0);
            let mut last = usize::MAX;
            for k in [0.0, 1.5, 3.5, 8.5, 30.5] {
                let (out, out_map) = filter_regions(&set, &m, k * px, &camera()).unwrap();
                prop_assert_eq!(out.total_pixels(), 24 * 24);
                prop_assert_eq!(out.rasterize(), out_map.clone());
                for (before, after) in m.labels().iter().zip(out_map.labels()) {
                    prop_assert!(before.is_unknown() || !after.is_unknown());
                }
                prop_assert!(out.len() <= last);
                last = out.len();
            }
        }
    }
}
