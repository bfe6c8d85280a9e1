use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use hypermap_core::classify::LabelSidecar;
use hypermap_core::cube::save_cube;
use hypermap_core::geometry::PixelToWorld;
use hypermap_core::pipeline::{self, BenchRow, TWO_CLASSES};
use hypermap_core::segment::regions_geojson;
use hypermap_core::semantic_map::features_geojson;
use hypermap_core::{
    classify, export_ontology, load_cube, segment, synthesize, Classification, ClassifyParams,
    HyperCube, LabelMap, SceneSpec, Segmentation, SemanticMap, SpectralDatabase,
};

use crate::args::{BenchArgs, ClassifyArgs, GenSceneArgs, MapArgs, SegmentArgs, ServeArgs};
use crate::service::{self, AppState};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassCount {
    pub id: u16,
    pub name: String,
    pub count: usize,
}

/// Pixel count per database class, zero counts included, in id order.
pub fn class_counts(c: &Classification, db: &SpectralDatabase) -> Vec<ClassCount> {
    db.classes()
        .iter()
        .map(|class| ClassCount {
            id: class.id.0,
            name: class.name.clone(),
            count: c.counts.get(&class.id).copied().unwrap_or(0),
        })
        .collect()
}

#[derive(Serialize)]
struct LabelSummary {
    params: ClassifyParams,
    width: usize,
    height: usize,
    unknown_count: usize,
    counts: Vec<ClassCount>,
    #[serde(flatten)]
    legend: LabelSidecar,
}

#[derive(Serialize)]
struct SegmentTimes {
    classification: Option<f64>,
    edge_detection: f64,
    contour_extraction: f64,
    size_filtering: f64,
    polygon_approximation: f64,
}

/// A scene file path, or else the name of a bundled scene.
pub fn resolve_spec(spec: &str, seed: Option<u64>) -> Result<SceneSpec> {
    let path = Path::new(spec);
    let mut resolved = if path.is_file() {
        SceneSpec::load(path)?
    } else {
        SceneSpec::bundled(spec)
            .with_context(|| format!("{spec:?} is neither a scene file nor a bundled scene"))?
    };
    if let Some(seed) = seed {
        resolved.seed = seed;
    }
    Ok(resolved)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_db(path: &Path) -> Result<SpectralDatabase> {
    SpectralDatabase::load(path).with_context(|| format!("loading database {}", path.display()))
}

fn load(path: &Path) -> Result<HyperCube> {
    load_cube(path).with_context(|| format!("loading cube {}", path.display()))
}

pub fn gen_scene(args: &GenSceneArgs) -> Result<()> {
    let spec = resolve_spec(&args.spec, args.seed)?;
    let start = Instant::now();
    let scene = synthesize(&spec)?;
    let elapsed = start.elapsed().as_secs_f64();

    let out = &args.out;
    create_dir(out)?;
    save_cube(&scene.cube, out.join("cube.hsc"), spec.dtype)?;
    scene.truth.save_png(out.join("truth.png"))?;
    write_json(
        &out.join("truth.json"),
        &LabelSidecar::from_database(&scene.db),
    )?;
    scene.db.save(out.join("db.json"))?;
    write_text(&out.join("scene.json"), &spec.to_json()?)?;
    scene.cube.false_rgb()?.save_png(out.join("rgb.png"))?;
    println!(
        "scene {}x{}x{} with {} classes written to {} ({elapsed:.4} s)",
        spec.width,
        spec.height,
        spec.bands,
        scene.db.len(),
        out.display()
    );
    Ok(())
}

fn write_labels(
    out: &Path,
    labels: &LabelMap,
    c: &Classification,
    params: ClassifyParams,
    db: &SpectralDatabase,
) -> Result<()> {
    labels.save_png(out.join("labels.png"))?;
    labels.render(db).save_png(out.join("labels_rgb.png"))?;
    let summary = LabelSummary {
        params,
        width: labels.width(),
        height: labels.height(),
        unknown_count: labels.unknown_count(),
        counts: class_counts(c, db),
        legend: LabelSidecar::from_database(db),
    };
    write_json(&out.join("labels.json"), &summary)
}

pub fn classify_cmd(args: &ClassifyArgs) -> Result<()> {
    let cube = load(&args.cube)?;
    let db = load_db(&args.db)?;
    let params = args.classify.params();
    let c = classify(&cube, &db, &params)?;
    create_dir(&args.out)?;
    write_labels(&args.out, &c.labels, &c, params, &db)?;
    let total = c.labels.len();
    println!(
        "classification ({}): {:.4} s, {} of {total} pixels Unknown",
        params.algorithm,
        c.elapsed.as_secs_f64(),
        c.unknown
    );
    Ok(())
}

pub fn segment_cmd(args: &SegmentArgs) -> Result<()> {
    let cube = load(&args.cube)?;
    let db = load_db(&args.db)?;
    let (labels, classification_s) = match &args.labels {
        Some(path) => {
            let labels = LabelMap::load_png(path)
                .with_context(|| format!("loading label map {}", path.display()))?;
            if (labels.width(), labels.height()) != (cube.width(), cube.height()) {
                bail!(
                    "label map is {}x{} but the cube is {}x{}",
                    labels.width(),
                    labels.height(),
                    cube.width(),
                    cube.height()
                );
            }
            (labels, None)
        }
        None => {
            let c = classify(&cube, &db, &args.classify.params())?;
            (c.labels, Some(c.elapsed.as_secs_f64()))
        }
    };
    let seg = segment(&labels, cube.camera(), &args.segment.params())?;

    let out = &args.out;
    create_dir(out)?;
    let world = PixelToWorld::new(cube.width(), cube.height(), cube.camera())?;
    write_json(
        &out.join("regions.geojson"),
        &regions_geojson(&seg.regions, &db, None),
    )?;
    write_json(
        &out.join("regions_world.geojson"),
        &regions_geojson(&seg.regions, &db, Some(&world)),
    )?;
    seg.labels.save_png(out.join("filtered_labels.png"))?;
    fs::write(out.join("edges.png"), seg.edges.to_png()?)
        .with_context(|| format!("writing {}", out.join("edges.png").display()))?;

    let times = segment_times(&seg, classification_s);
    write_json(&out.join("timings.json"), &times)?;
    if let Some(t) = times.classification {
        println!("classification:        {t:.4} s");
    }
    println!("edge detection:        {:.4} s", times.edge_detection);
    println!("contour extraction:    {:.4} s", times.contour_extraction);
    println!("size filtering:        {:.4} s", times.size_filtering);
    println!(
        "polygon approximation: {:.4} s",
        times.polygon_approximation
    );
    println!(
        "{} regions, {} vertices",
        seg.regions.len(),
        seg.regions.vertex_count()
    );
    Ok(())
}

fn segment_times(seg: &Segmentation, classification: Option<f64>) -> SegmentTimes {
    SegmentTimes {
        classification,
        edge_detection: seg.timings.edge_detection.as_secs_f64(),
        contour_extraction: seg.timings.contour_extraction.as_secs_f64(),
        size_filtering: seg.timings.size_filtering.as_secs_f64(),
        polygon_approximation: seg.timings.polygon_approximation.as_secs_f64(),
    }
}

fn frame_ids(args: &MapArgs) -> Result<Vec<String>> {
    if !args.frame_ids.is_empty() {
        if args.frame_ids.len() != args.cubes.len() {
            bail!(
                "{} frame ids given for {} cubes",
                args.frame_ids.len(),
                args.cubes.len()
            );
        }
        return Ok(args.frame_ids.clone());
    }
    args.cubes
        .iter()
        .map(|p: &PathBuf| {
            p.file_stem()
                .and_then(|s| s.to_str())
                .map(str::to_owned)
                .ok_or_else(|| anyhow!("cannot derive a frame id from {}", p.display()))
        })
        .collect()
}

pub fn map_cmd(args: &MapArgs) -> Result<()> {
    let db = load_db(&args.db)?;
    let ids = frame_ids(args)?;
    let mut map = match &args.map {
        Some(dir) => {
            SemanticMap::load(dir).with_context(|| format!("loading map {}", dir.display()))?
        }
        None => SemanticMap::new(args.resolution_m)?,
    };
    for (path, id) in args.cubes.iter().zip(&ids) {
        let cube = load(path)?;
        let c = classify(&cube, &db, &args.classify.params())?;
        let seg = segment(&c.labels, cube.camera(), &args.segment.params())?;
        map.ingest_frame(&seg.regions, cube.camera(), id, &db)?;
        println!(
            "frame {id}: {} regions ingested, {} known cells",
            seg.regions.len(),
            map.known_cells()
        );
    }

    let out = &args.out;
    create_dir(out)?;
    map.save(out)?;
    let features = map.extract_features();
    write_json(
        &out.join("features.geojson"),
        &features_geojson(&map, &features),
    )?;
    let ontology = export_ontology(&map, &features);
    write_text(&out.join("ontology.dot"), &ontology.to_dot())?;
    write_text(&out.join("ontology.json"), &ontology.to_json()?)?;
    println!(
        "map of {} frames, {} features, {}x{} cells at {} m written to {}",
        map.frames().len(),
        features.len(),
        map.cols(),
        map.rows(),
        map.resolution(),
        out.display()
    );
    Ok(())
}

/// Database for a bench row: Vegetation and Water for two classes when
/// present, otherwise the first `n` classes.
pub fn bench_database(db: &SpectralDatabase, n: usize) -> Result<SpectralDatabase> {
    if n == 0 || n > db.len() {
        bail!("--classes {n} is outside 1..={}", db.len());
    }
    if n == 2 {
        if let Ok(two) = db.subset(&TWO_CLASSES) {
            return Ok(two);
        }
    }
    let names: Vec<&str> = db.classes()[..n].iter().map(|c| c.name.as_str()).collect();
    Ok(db.subset(&names)?)
}

pub fn bench_cmd(args: &BenchArgs) -> Result<()> {
    let (cube, db) = match (&args.cube, &args.db) {
        (Some(cube), Some(db)) => (load(cube)?, load_db(db)?),
        _ => {
            let start = Instant::now();
            let scene = pipeline::bench_scene(args.size, args.bands, args.seed)?;
            println!(
                "synthesized a {}x{}x{} cube in {:.1} s",
                args.size,
                args.size,
                args.bands,
                start.elapsed().as_secs_f64()
            );
            (scene.cube, scene.db)
        }
    };
    let dbs = args
        .classes
        .iter()
        .map(|&n| bench_database(&db, n))
        .collect::<Result<Vec<_>>>()?;
    let seg = hypermap_core::SegmentParams {
        min_area_m2: args.min_area_m2,
        thickness_px: args.thickness_px,
    };
    let params = args.classify.params();
    let rows: Vec<BenchRow> = pipeline::bench(&cube, &dbs, &params, &seg, args.repeats)?;
    print!("{}", pipeline::format_bench_table(&rows, params.algorithm));
    if let Some(path) = &args.out {
        write_json(
            path,
            &json!({
                "width": cube.width(),
                "height": cube.height(),
                "bands": cube.bands(),
                "threads": rayon::current_num_threads(),
                "rows": rows,
            }),
        )?;
    }
    Ok(())
}

pub fn serve_state(args: &ServeArgs) -> Result<AppState> {
    let (cube, db) = match &args.cube {
        Some(path) => {
            let db = match &args.db {
                Some(p) => load_db(p)?,
                None => SpectralDatabase::new(),
            };
            (load(path)?, db)
        }
        None => {
            let scene = synthesize(&resolve_spec(&args.spec, args.seed)?)?;
            let mut db = match &args.db {
                Some(p) => load_db(p)?,
                None => scene.db,
            };
            for name in &args.withhold {
                let id = db
                    .by_name(name)
                    .map(|c| c.id)
                    .ok_or_else(|| anyhow!("cannot withhold {name:?}: no such class"))?;
                db.remove_class(id)?;
            }
            (scene.cube, db)
        }
    };
    Ok(AppState::new(cube, db, args.resolution_m)?)
}

pub fn serve_cmd(args: &ServeArgs) -> Result<()> {
    let state = serve_state(args)?;
    let addr = format!("{}:{}", args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        println!("listening on http://{addr}");
        axum::serve(listener, service::router(Arc::new(state)))
            .await
            .context("serving")
    })
}
