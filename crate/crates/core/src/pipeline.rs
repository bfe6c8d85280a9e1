//! End-to-end runs with per-stage wall times, and the stage-timing benchmark.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use crate::classify::{classify, Classification, ClassifyParams};
use crate::cube::{HyperCube, SampleType};
use crate::error::Result;
use crate::segment::{segment, SegmentParams, Segmentation, StageTimings};
use crate::spectral::{SimilarityAlgorithm, SpectralDatabase};
use crate::synth::{synthesize, Scene, SceneSpec};

/// Side length of the benchmark cube, in pixels.
pub const BENCH_SIZE: usize = 1886;
pub const BENCH_BANDS: usize = 164;

/// Classes of the two-class benchmark database.
pub const TWO_CLASSES: [&str; 2] = ["Vegetation", "Water"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PipelineTimings {
    pub classification_s: f64,
    pub edge_detection_s: f64,
    pub contour_extraction_s: f64,
    pub size_filtering_s: f64,
    pub polygon_approximation_s: f64,
}

impl PipelineTimings {
    pub fn new(classification: Duration, stages: &StageTimings) -> Self {
        PipelineTimings {
            classification_s: classification.as_secs_f64(),
            edge_detection_s: stages.edge_detection.as_secs_f64(),
            contour_extraction_s: stages.contour_extraction.as_secs_f64(),
            size_filtering_s: stages.size_filtering.as_secs_f64(),
            polygon_approximation_s: stages.polygon_approximation.as_secs_f64(),
        }
    }

    pub fn stages(&self) -> [f64; 5] {
        [
            self.classification_s,
            self.edge_detection_s,
            self.contour_extraction_s,
            self.size_filtering_s,
            self.polygon_approximation_s,
        ]
    }

    pub fn total_s(&self) -> f64 {
        self.stages().iter().sum()
    }

    /// Share of the total taken by classification.
    pub fn classification_share(&self) -> f64 {
        self.classification_s / self.total_s()
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub classification: Classification,
    pub segmentation: Segmentation,
    pub timings: PipelineTimings,
}

pub fn run_pipeline(
    cube: &HyperCube,
    db: &SpectralDatabase,
    classify_params: &ClassifyParams,
    segment_params: &SegmentParams,
) -> Result<PipelineRun> {
    let classification = classify(cube, db, classify_params)?;
    let segmentation = segment(&classification.labels, cube.camera(), segment_params)?;
    let timings = PipelineTimings::new(classification.elapsed, &segmentation.timings);
    Ok(PipelineRun {
        classification,
        segmentation,
        timings,
    })
}

/// The bundled five-class scene scaled to the benchmark cube size.
pub fn bench_scene_spec(size: usize, bands: usize, seed: u64) -> Result<SceneSpec> {
    let mut spec = SceneSpec::bundled("cornfields-like")?
        .resized(size, size)
        .with_band_count(bands)?;
    spec.dtype = SampleType::U8;
    spec.noise_sigma = 0.01;
    spec.seed = seed;
    Ok(spec)
}

pub fn bench_scene(size: usize, bands: usize, seed: u64) -> Result<Scene> {
    synthesize(&bench_scene_spec(size, bands, seed)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub classes: usize,
    pub class_names: Vec<String>,
    pub timings: PipelineTimings,
}

/// Runs the pipeline once per database, keeping the fastest of `repeats` runs.
pub fn bench(
    cube: &HyperCube,
    databases: &[SpectralDatabase],
    classify_params: &ClassifyParams,
    segment_params: &SegmentParams,
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    databases
        .iter()
        .map(|db| {
            let mut best: Option<PipelineTimings> = None;
            for _ in 0..repeats.max(1) {
                let t = run_pipeline(cube, db, classify_params, segment_params)?.timings;
                if best.map_or(true, |b| t.total_s() < b.total_s()) {
                    best = Some(t);
                }
            }
            Ok(BenchRow {
                classes: db.len(),
                class_names: db.classes().iter().map(|c| c.name.clone()).collect(),
                timings: best.expect("at least one run"),
            })
        })
        .collect()
}

fn algorithm_tag(a: SimilarityAlgorithm) -> &'static str {
    match a {
        SimilarityAlgorithm::Sam => "SAM",
        SimilarityAlgorithm::Euclidean => "Euclidean",
    }
}

/// Plain-text table with one row per database, seconds to 4 decimals.
pub fn format_bench_table(rows: &[BenchRow], algorithm: SimilarityAlgorithm) -> String {
    let headers = [
        "Number of Semantic Classes".to_owned(),
        format!(
            "Classification Algorithm ({}) (s)",
            algorithm_tag(algorithm)
        ),
        "Edge Detection (s)".to_owned(),
        "Contour Extraction (s)".to_owned(),
        "Size Filtering (s)".to_owned(),
        "Polygon Approximation (s)".to_owned(),
        "Total Time (s)".to_owned(),
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![format!("{} ({})", r.classes, r.class_names.join(", "))];
            cells.extend(r.timings.stages().iter().map(|s| format!("{s:.4}")));
            cells.push(format!("{:.4}", r.timings.total_s()));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| {
            body.iter()
                .map(|row| row[c].len())
                .chain(std::iter::once(headers[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "| {} |", padded.join(" | "));
    };
    line(&mut out, &headers);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule);
    for row in &body {
        line(&mut out, row);
    }
    out
}
