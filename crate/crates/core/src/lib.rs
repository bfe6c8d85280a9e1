//! Training-free hyperspectral semantic mapping.
//!
//! The pipeline runs from a hyperspectral cube through per-pixel spectral
//! classification against a run-time reference database, polygon region
//! extraction, metric size filtering and dominant-point approximation, into a
//! multi-frame semantic map with an ontology export.

pub mod classify;
pub mod cube;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod raster;
pub mod segment;
pub mod semantic_map;
pub mod spectral;
pub mod synth;

pub use classify::{classify, Classification, ClassifyParams, LabelMap};
pub use cube::{load_cube, save_cube, CameraMeta, HyperCube, Pose, SampleType, Samples};
pub use error::{Error, Result};
pub use geometry::{image_footprint, pixel_to_world, Footprint, Point, WorldPoint};
pub use pipeline::{run_pipeline, PipelineRun, PipelineTimings};
pub use segment::{segment, Region, RegionSet, SegmentParams, Segmentation, StageTimings};
pub use semantic_map::{export_ontology, Feature, Ontology, SemanticMap};
pub use spectral::{ClassId, SimilarityAlgorithm, SpectralDatabase, Spectrum};
pub use synth::{synthesize, Scene, SceneSpec};
