use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hypermap_core::semantic_map::DEFAULT_RESOLUTION_M;
use hypermap_core::{ClassifyParams, SegmentParams, SimilarityAlgorithm};

#[derive(Debug, Parser)]
#[command(
    name = "hypermap",
    version,
    about = "Hyperspectral classification, polygonization and semantic mapping"
)]
pub struct Cli {
    /// Worker thread cap for data-parallel stages.
    #[arg(long, global = true, env = "HYPERMAP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a cube, its ground-truth label map and reference database.
    GenScene(GenSceneArgs),
    /// Label every pixel against a spectral database.
    Classify(ClassifyArgs),
    /// Classify (or load labels), then extract, filter and approximate polygons.
    Segment(SegmentArgs),
    /// Ingest one or more frames into a semantic map and export its ontology.
    Map(MapArgs),
    /// Time every pipeline stage for databases of different sizes.
    Bench(BenchArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenSceneArgs {
    /// Scene JSON file, or the name of a bundled scene.
    #[arg(long, default_value = "cornfields-like")]
    pub spec: String,
    /// Overrides the seed stored in the scene.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ClassifyOpts {
    /// Largest accepted dissimilarity (degrees for SAM).
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub variance: f64,
    #[arg(long, default_value_t = SimilarityAlgorithm::Sam, value_parser = parse_algorithm)]
    pub algorithm: SimilarityAlgorithm,
}

impl ClassifyOpts {
    pub fn params(&self) -> ClassifyParams {
        ClassifyParams {
            algorithm: self.algorithm,
            variance: self.variance,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SegmentOpts {
    /// Regions smaller than this ground area are merged into their parent.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub min_area_m2: f64,
    /// Polygon approximation thickness in pixels.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub thickness_px: f64,
}

impl SegmentOpts {
    pub fn params(&self) -> SegmentParams {
        SegmentParams {
            min_area_m2: self.min_area_m2,
            thickness_px: self.thickness_px,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    #[command(flatten)]
    pub classify: ClassifyOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Cube supplying the camera and, without --labels, the spectra.
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    /// Label map written by `classify`; skips classification.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub classify: ClassifyOpts,
    #[command(flatten)]
    pub segment: SegmentOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Frames in ingestion order; repeat the flag for each.
    #[arg(long = "cube", required = true)]
    pub cubes: Vec<PathBuf>,
    /// Frame ids, one per cube. Defaults to the cube file stems.
    #[arg(long = "frame-id")]
    pub frame_ids: Vec<String>,
    #[arg(long)]
    pub db: PathBuf,
    /// Existing map directory to extend.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION_M)]
    pub resolution_m: f64,
    #[command(flatten)]
    pub classify: ClassifyOpts,
    #[command(flatten)]
    pub segment: SegmentOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Database sizes to time; 2 is Vegetation and Water.
    #[arg(long = "classes", default_values_t = [2usize, 5])]
    pub classes: Vec<usize>,
    /// Benchmark an existing cube instead of a synthesized one.
    #[arg(long, requires = "db")]
    pub cube: Option<PathBuf>,
    #[arg(long, requires = "cube")]
    pub db: Option<PathBuf>,
    #[arg(long, default_value_t = hypermap_core::pipeline::BENCH_SIZE)]
    pub size: usize,
    #[arg(long, default_value_t = hypermap_core::pipeline::BENCH_BANDS)]
    pub bands: usize,
    /// Runs per database; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub classify: ClassifyOpts,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub min_area_m2: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub thickness_px: f64,
    /// Also write the rows as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Cube to serve. Without it a bundled scene is synthesized.
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Starting database. Defaults to the synthesized scene's, or empty with --cube.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Scene JSON file or bundled scene name used without --cube.
    #[arg(long, default_value = "runtime-add")]
    pub spec: String,
    /// Overrides the seed stored in the scene.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leave these classes out of the synthesized scene's database.
    #[arg(long)]
    pub withhold: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION_M)]
    pub resolution_m: f64,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8787)]
    pub port: u16,
}

fn parse_algorithm(s: &str) -> Result<SimilarityAlgorithm, String> {
    s.parse().map_err(|e: hypermap_core::Error| e.to_string())
}
