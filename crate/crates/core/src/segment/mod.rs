//! Label map to filtered, approximated polygons.

mod approx;
mod edges;
mod filter;
mod regions;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use approx::{approximate_polygon, approximate_polygon_traced, Approximation, Removal};
pub use edges::{detect_edges, EdgeImage};
pub use filter::{compute_areas, filter_regions};
pub use regions::{enclosed_pixels, extract_regions, region_area_px, Region, RegionSet};

use crate::classify::LabelMap;
use crate::cube::CameraMeta;
use crate::error::{Error, Result};
use crate::geometry::{PixelToWorld, Point};
use crate::spectral::SpectralDatabase;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub min_area_m2: f64,
    pub thickness_px: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            min_area_m2: 0.0,
            thickness_px: 0.0,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_area_m2.is_finite() && self.min_area_m2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "min_area must be a finite value >= 0, got {}",
                self.min_area_m2
            )));
        }
        if !(self.thickness_px.is_finite() && self.thickness_px >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thickness must be a finite value >= 0, got {}",
                self.thickness_px
            )));
        }
        Ok(())
    }
}

/// Wall time of each stage after classification.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub edge_detection: Duration,
    pub contour_extraction: Duration,
    pub size_filtering: Duration,
    pub polygon_approximation: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.edge_detection
            + self.contour_extraction
            + self.size_filtering
            + self.polygon_approximation
    }
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    /// Filtered regions with approximated rings.
    pub regions: RegionSet,
    /// Label map after size filtering.
    pub labels: LabelMap,
    pub edges: EdgeImage,
    pub timings: StageTimings,
}

/// Replaces every ring with its approximation.
pub fn approximate_regions(set: &RegionSet, thickness_px: f64) -> Result<RegionSet> {
    let mut out = set.clone();
    out.regions_mut()
        .par_iter_mut()
        .try_for_each(|r| -> Result<()> {
            r.outer = approximate_polygon(&r.outer, thickness_px)?;
            for hole in &mut r.holes {
                *hole = approximate_polygon(hole, thickness_px)?;
            }
            Ok(())
        })?;
    Ok(out)
}

pub fn segment(
    map: &LabelMap,
    camera: &CameraMeta,
    params: &SegmentParams,
) -> Result<Segmentation> {
    params.validate()?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let edges = detect_edges(map);
    timings.edge_detection = t.elapsed();

    let t = Instant::now();
    let extracted = extract_regions(map);
    timings.contour_extraction = t.elapsed();

    let t = Instant::now();
    let (filtered, labels) = filter_regions(&extracted, map, params.min_area_m2, camera)?;
    timings.size_filtering = t.elapsed();

    let t = Instant::now();
    let regions = approximate_regions(&filtered, params.thickness_px)?;
    timings.polygon_approximation = t.elapsed();

    Ok(Segmentation {
        regions,
        labels,
        edges,
        timings,
    })
}

fn closed_ring(ring: &[Point], transform: Option<&PixelToWorld>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = ring
        .iter()
        .map(|&p| transform.map_or(p, |t| t.apply(p)).into())
        .collect();
    if let Some(&first) = out.first() {
        out.push(first);
    }
    out
}

/// GeoJSON-style feature collection of regions. Coordinates are pixel
/// corners, or world meters when a transform is given.
pub fn regions_geojson(
    set: &RegionSet,
    db: &SpectralDatabase,
    transform: Option<&PixelToWorld>,
) -> Value {
    let features: Vec<Value> = set
        .regions()
        .iter()
        .map(|r| {
            let mut rings = vec![closed_ring(&r.outer, transform)];
            rings.extend(r.holes.iter().map(|h| closed_ring(h, transform)));
            json!({
                "type": "Feature",
                "id": r.id,
                "geometry": { "type": "Polygon", "coordinates": rings },
                "properties": {
                    "label_id": r.label.0,
                    "class_name": db.name_of(r.label),
                    "color": db.color_of(r.label),
                    "pixel_count": r.pixel_count,
                    "area_m2": r.area_m2,
                    "parent": r.parent,
                    "vertex_count": r.vertex_count(),
                }
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}
