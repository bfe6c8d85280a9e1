//! Per-pixel classification of a cube against the spectral database.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::raster::{self, RgbImage};
use crate::spectral::{self, ClassId, SimilarityAlgorithm, SpectralDatabase};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<ClassId>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<ClassId>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::LabelMapMismatch(format!(
                "dimensions must be non-zero, got {width}x{height}"
            )));
        }
        if labels.len() != width * height {
            return Err(Error::LabelMapMismatch(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        Ok(LabelMap {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: ClassId) -> Self {
        LabelMap {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    /// Builds a map from raw ids in row-major order.
    pub fn from_ids(width: usize, height: usize, ids: &[u16]) -> Result<Self> {
        Self::new(width, height, ids.iter().map(|&v| ClassId(v)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [ClassId] {
        &mut self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> ClassId {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: ClassId) {
        self.labels[y * self.width + x] = label;
    }

    pub fn unknown_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_unknown()).count()
    }

    pub fn counts(&self) -> BTreeMap<ClassId, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let ids: Vec<u16> = self.labels.iter().map(|l| l.0).collect();
        raster::encode_gray16(self.width, self.height, &ids)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let (w, h, ids) = raster::decode_gray16(bytes)?;
        Self::from_ids(w, h, &ids)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        raster::write_file(path.as_ref(), &self.to_png()?)
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let (w, h, ids) = raster::read_gray16(path)?;
        Self::from_ids(w, h, &ids)
    }

    /// Colour rendering with database colours; Unknown is black.
    pub fn render(&self, db: &SpectralDatabase) -> RgbImage {
        let data = self
            .labels
            .iter()
            .flat_map(|&l| {
                if l.is_unknown() {
                    [0, 0, 0]
                } else {
                    db.color_of(l)
                }
            })
            .collect();
        RgbImage::new(self.width, self.height, data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub name: String,
    pub color: [u8; 3],
}

/// JSON sidecar mapping label id to name and colour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub classes: BTreeMap<u16, LegendEntry>,
}

impl LabelSidecar {
    pub fn from_database(db: &SpectralDatabase) -> Self {
        let mut classes = BTreeMap::new();
        classes.insert(
            0,
            LegendEntry {
                name: "Unknown".into(),
                color: [0, 0, 0],
            },
        );
        for c in db.classes() {
            classes.insert(
                c.id.0,
                LegendEntry {
                    name: c.name.clone(),
                    color: c.color,
                },
            );
        }
        LabelSidecar { classes }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub algorithm: SimilarityAlgorithm,
    /// Largest accepted dissimilarity, in the algorithm's score unit (degrees for SAM).
    pub variance: f64,
}

impl ClassifyParams {
    pub fn sam(variance: f64) -> Self {
        ClassifyParams {
            algorithm: SimilarityAlgorithm::Sam,
            variance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance must be a finite value >= 0, got {}",
                self.variance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub labels: LabelMap,
    pub counts: BTreeMap<ClassId, usize>,
    pub unknown: usize,
    pub elapsed: Duration,
}

struct Reference {
    id: ClassId,
    values: Vec<f64>,
}

pub fn classify(
    cube: &HyperCube,
    db: &SpectralDatabase,
    params: &ClassifyParams,
) -> Result<Classification> {
    let start = Instant::now();
    params.validate()?;
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let bands = cube.bands();
    if let Some(found) = db.band_count().filter(|&b| b != bands) {
        return Err(Error::BandMismatch {
            expected: bands,
            found,
        });
    }

    let algorithm = params.algorithm;
    let refs: Vec<Reference> = db
        .classes()
        .iter()
        .map(|c| Reference {
            id: c.id,
            values: match algorithm {
                SimilarityAlgorithm::Sam => spectral::unit(c.reference.values()),
                SimilarityAlgorithm::Euclidean => c.reference.values().to_vec(),
            },
        })
        .collect();

    let width = cube.width();
    let mut labels = vec![ClassId::UNKNOWN; cube.pixel_count()];
    labels.par_chunks_mut(width).enumerate().for_each_init(
        || vec![0.0f64; bands],
        |pixel, (row, out)| {
            for (x, label) in out.iter_mut().enumerate() {
                cube.pixel_into(row * width + x, pixel);
                *label = label_pixel(pixel, &refs, algorithm, params.variance);
            }
        },
    );

    let labels = LabelMap::new(width, cube.height(), labels)?;
    let mut counts: BTreeMap<ClassId, usize> = db.classes().iter().map(|c| (c.id, 0)).collect();
    let mut unknown = 0;
    for &l in labels.labels() {
        if l.is_unknown() {
            unknown += 1;
        } else {
            *counts.entry(l).or_insert(0) += 1;
        }
    }
    Ok(Classification {
        labels,
        counts,
        unknown,
        elapsed: start.elapsed(),
    })
}

/// Sums over four independent lanes so the loop vectorizes.
#[inline]
fn lane_sum(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += f(x[k], y[k]);
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(&x, &y)| f(x, y)).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Label for one pixel; normalizes `pixel` in place for SAM.
fn label_pixel(
    pixel: &mut [f64],
    refs: &[Reference],
    algorithm: SimilarityAlgorithm,
    variance: f64,
) -> ClassId {
    // Both scores are monotone in the squared distance to the reference
    // (chord length for unit vectors), so the winner is found first and the
    // score is only evaluated for it. For unit references the smallest chord
    // is the largest dot product, which needs no normalization.
    let mut best = 0;
    let mut best_d;
    if algorithm == SimilarityAlgorithm::Sam {
        let n = spectral::norm(pixel);
        if n == 0.0 {
            return ClassId::UNKNOWN;
        }
        best_d = f64::NEG_INFINITY;
        for (k, r) in refs.iter().enumerate() {
            let d = lane_sum(pixel, &r.values, |x, y| x * y);
            if d > best_d {
                best = k;
                best_d = d;
            }
        }
        pixel.iter_mut().for_each(|v| *v /= n);
    } else {
        best_d = f64::INFINITY;
        for (k, r) in refs.iter().enumerate() {
            let d = lane_sum(pixel, &r.values, |x, y| (x - y) * (x - y));
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
    }
    let score = match algorithm {
        SimilarityAlgorithm::Sam => spectral::angle_between_units(pixel, &refs[best].values),
        SimilarityAlgorithm::Euclidean => best_d.sqrt(),
    };
    if score <= variance {
        refs[best].id
    } else {
        ClassId::UNKNOWN
    }
}
