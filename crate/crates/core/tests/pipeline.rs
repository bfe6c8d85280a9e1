//! End-to-end runs across module boundaries and through files on disk.

use hypermap_core::semantic_map::features_geojson;
use hypermap_core::{
    classify, export_ontology, load_cube, run_pipeline, save_cube, segment, synthesize, ClassId,
    ClassifyParams, LabelMap, Pose, SampleType, SceneSpec, SegmentParams, SemanticMap,
    SimilarityAlgorithm, SpectralDatabase,
};
use tempfile::TempDir;

fn seg_params() -> SegmentParams {
    SegmentParams {
        min_area_m2: 0.02,
        thickness_px: 1.0,
    }
}

#[test]
fn scene_survives_the_file_round_trip_and_classifies_to_truth() {
    let scene = synthesize(&SceneSpec::bundled("cornfields-like").unwrap()).unwrap();
    let dir = TempDir::new().unwrap();
    let cube_path = dir.path().join("cube.hsc");
    let db_path = dir.path().join("db.json");
    let truth_path = dir.path().join("truth.png");
    save_cube(&scene.cube, &cube_path, SampleType::F32).unwrap();
    scene.db.save(&db_path).unwrap();
    scene.truth.save_png(&truth_path).unwrap();

    let cube = load_cube(&cube_path).unwrap();
    let db = SpectralDatabase::load(&db_path).unwrap();
    assert_eq!(cube, scene.cube);
    assert_eq!(db, scene.db);
    let c = classify(&cube, &db, &ClassifyParams::sam(5.0)).unwrap();
    assert_eq!(c.labels, LabelMap::load_png(&truth_path).unwrap());
}

#[test]
fn u8_and_u16_cubes_classify_like_the_float_cube() {
    let mut spec = SceneSpec::bundled("runtime-add").unwrap().resized(96, 96);
    spec.noise_sigma = 0.0;
    let reference = synthesize(&spec).unwrap();
    let params = ClassifyParams::sam(5.0);
    let float = classify(&reference.cube, &reference.db, &params).unwrap();
    for dtype in [SampleType::U16, SampleType::U8] {
        spec.dtype = dtype;
        let scene = synthesize(&spec).unwrap();
        let c = classify(&scene.cube, &scene.db, &params).unwrap();
        let same = c
            .labels
            .labels()
            .iter()
            .zip(float.labels.labels())
            .filter(|(a, b)| a == b)
            .count();
        assert!(
            same as f64 >= 0.99 * c.labels.len() as f64,
            "{dtype:?}: {same}"
        );
    }
}

#[test]
fn pipeline_polygons_cover_the_filtered_label_map() {
    let scene = synthesize(&SceneSpec::bundled("runtime-add").unwrap()).unwrap();
    let run = run_pipeline(
        &scene.cube,
        &scene.db,
        &ClassifyParams::sam(10.0),
        &SegmentParams {
            min_area_m2: 0.02,
            thickness_px: 0.0,
        },
    )
    .unwrap();
    // zero thickness keeps the traced outlines, so they rasterize exactly
    assert_eq!(
        run.segmentation.regions.rasterize(),
        run.segmentation.labels
    );
    let counted: usize = run.classification.counts.values().sum();
    assert_eq!(counted + run.classification.unknown, 256 * 256);
    assert!(run.timings.classification_share() > 0.0);
}

#[test]
fn withheld_class_becomes_unknown_then_known_after_addition() {
    let scene = synthesize(&SceneSpec::bundled("runtime-add").unwrap()).unwrap();
    let tarp = scene.db.by_name("Tarp").unwrap().clone();
    let mut db = scene.db.clone();
    db.remove_class(tarp.id).unwrap();
    let params = ClassifyParams::sam(10.0);
    let before = classify(&scene.cube, &db, &params).unwrap();
    let tarp_pixels = scene
        .truth
        .labels()
        .iter()
        .filter(|&&l| l == tarp.id)
        .count();
    assert!(before.unknown >= tarp_pixels);

    let picked = scene.cube.pixel_spectrum(230, 230).unwrap();
    db.add_class("Tarp", tarp.color, picked, vec![]).unwrap();
    let after = classify(&scene.cube, &db, &params).unwrap();
    assert!(after.unknown < before.unknown);
    for (b, a) in before.labels.labels().iter().zip(after.labels.labels()) {
        assert!(b.is_unknown() || !a.is_unknown());
    }
}

#[test]
fn two_frames_merge_and_the_map_reloads_identically() {
    let base = SceneSpec::bundled("runtime-add").unwrap();
    let mut map = SemanticMap::new(0.1).unwrap();
    let mut db_all = SpectralDatabase::new();
    for (k, pose) in [
        Pose {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        },
        Pose {
            x: 2.5,
            y: 1.0,
            yaw: 0.7,
        },
    ]
    .into_iter()
    .enumerate()
    {
        let mut spec = base.clone();
        spec.camera.pose = pose;
        let scene = synthesize(&spec).unwrap();
        let c = classify(&scene.cube, &scene.db, &ClassifyParams::sam(10.0)).unwrap();
        let s = segment(&c.labels, scene.cube.camera(), &seg_params()).unwrap();
        map.ingest_frame(&s.regions, scene.cube.camera(), &format!("f{k}"), &scene.db)
            .unwrap();
        db_all = scene.db;
    }
    let features = map.extract_features();
    assert!(!features.is_empty());
    let total: usize = features.iter().map(|f| f.cell_count).sum();
    assert_eq!(total, map.known_cells());
    assert!(features.iter().all(|f| f.source_frames.len() <= 2));
    assert!(features.iter().any(|f| f.source_frames.len() == 2));
    assert!(features
        .iter()
        .all(|f| db_all.get(f.label).is_some() && f.label != ClassId::UNKNOWN));

    let dir = TempDir::new().unwrap();
    map.save(dir.path()).unwrap();
    let loaded = SemanticMap::load(dir.path()).unwrap();
    assert_eq!(loaded.grid(), map.grid());
    assert_eq!(loaded.frames(), map.frames());
    let reloaded = loaded.extract_features();
    assert_eq!(
        features_geojson(&loaded, &reloaded),
        features_geojson(&map, &features)
    );
    assert_eq!(
        export_ontology(&loaded, &reloaded).to_dot(),
        export_ontology(&map, &features).to_dot()
    );
}

#[test]
fn euclidean_tracks_brightness_where_sam_does_not() {
    let scene = synthesize(&SceneSpec::bundled("cornfields-like").unwrap()).unwrap();
    let sam = classify(&scene.cube, &scene.db, &ClassifyParams::sam(5.0)).unwrap();
    let euclid = classify(
        &scene.cube,
        &scene.db,
        &ClassifyParams {
            algorithm: SimilarityAlgorithm::Euclidean,
            variance: f64::INFINITY,
        },
    );
    // infinite variance is rejected as a parameter
    assert!(euclid.is_err());
    let euclid = classify(
        &scene.cube,
        &scene.db,
        &ClassifyParams {
            algorithm: SimilarityAlgorithm::Euclidean,
            variance: 10.0,
        },
    )
    .unwrap();
    assert_eq!(sam.labels, scene.truth);
    assert_ne!(euclid.labels, scene.truth);
}
