use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use hypermap_cli::service::{router, AppState, SharedState};
use hypermap_core::segment::regions_geojson;
use hypermap_core::semantic_map::features_geojson;
use hypermap_core::{
    classify, export_ontology, segment, synthesize, ClassId, ClassifyParams, Scene, SceneSpec,
    SegmentParams, SemanticMap, SpectralDatabase,
};

/// A pixel inside the tarp square of the run-time addition scene.
const TARP: (usize, usize) = (230, 230);

fn scene() -> &'static Scene {
    static SCENE: OnceLock<Scene> = OnceLock::new();
    SCENE.get_or_init(|| synthesize(&SceneSpec::bundled("runtime-add").unwrap()).unwrap())
}

fn without(db: &SpectralDatabase, name: &str) -> SpectralDatabase {
    let mut db = db.clone();
    let id = db.by_name(name).unwrap().id;
    db.remove_class(id).unwrap();
    db
}

fn app(db: SpectralDatabase) -> (SharedState, Router) {
    let state = Arc::new(AppState::new(scene().cube.clone(), db, 0.05).unwrap());
    (state.clone(), router(state))
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.body));
        })
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_owned());
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

#[tokio::test]
async fn cube_metadata_and_spectra_pass_through() {
    let (_, app) = app(scene().db.clone());
    let cube = &scene().cube;
    let r = get(&app, "/api/cube").await;
    assert_eq!(r.status, StatusCode::OK);
    let meta = r.json();
    assert_eq!(meta["width"], 256);
    assert_eq!(meta["height"], 256);
    assert_eq!(meta["bands"], 64);
    assert_eq!(meta["h_m"], 10.0);
    assert_eq!(meta["fov_deg"], 35.0);
    assert_eq!(meta["pose"], json!({ "x": 0.0, "y": 0.0, "yaw": 0.0 }));
    assert_eq!(meta["wavelengths_nm"].as_array().unwrap().len(), 64);

    for (x, y) in [(0, 0), (255, 255), TARP] {
        let s = get(&app, &format!("/api/cube/spectrum?x={x}&y={y}"))
            .await
            .json();
        let direct = cube.pixel_spectrum(x, y).unwrap();
        let values: Vec<f64> = serde_json::from_value(s["values"].clone()).unwrap();
        let nm: Vec<f64> = serde_json::from_value(s["wavelengths_nm"].clone()).unwrap();
        assert_eq!(values, direct.values());
        assert_eq!(nm, direct.wavelengths());
    }

    let rgb = get(&app, "/api/cube/rgb.png").await;
    assert_eq!(rgb.content_type.as_deref(), Some("image/png"));
    assert_eq!(rgb.body, cube.false_rgb().unwrap().to_png().unwrap());
}

#[tokio::test]
async fn bad_requests_are_400() {
    let (_, app) = app(scene().db.clone());
    for uri in [
        "/api/cube/spectrum?x=256&y=0",
        "/api/cube/spectrum?x=0",
        "/api/cube/spectrum?x=-1&y=0",
    ] {
        assert_eq!(
            get(&app, uri).await.status,
            StatusCode::BAD_REQUEST,
            "{uri}"
        );
    }
    let r = post(&app, "/api/classify", json!({ "variance": -1 })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.json()["error"].as_str().unwrap().contains("variance"));
    for body in [
        json!({ "algorithm": "cosine", "variance": 5 }),
        json!({ "algorithm": "sam" }),
        json!({ "variance": "wide" }),
    ] {
        let r = post(&app, "/api/classify", body.clone()).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body}");
    }
    let malformed = Request::post("/api/classify")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from("{variance"))
        .unwrap();
    let res = app.clone().oneshot(malformed).await.unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);

    for body in [
        json!({ "name": "Tarp", "x": 1, "y": 1, "spectrum": vec![0.5; 64] }),
        json!({ "name": "Tarp" }),
        json!({ "name": "Tarp", "x": 300, "y": 1 }),
        json!({ "name": "Tarp", "spectrum": vec![0.5; 10] }),
        json!({ "name": "Tarp", "spectrum": vec![0.0; 64] }),
        json!({ "name": "Water", "x": 1, "y": 1 }),
        json!({ "name": "", "x": 1, "y": 1 }),
        json!({ "name": "Tarp", "x": 1, "y": 1, "taxonomy": ["Things", "Tarp"] }),
    ] {
        let r = post(&app, "/api/classes", body.clone()).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body}");
    }
    for body in [
        json!({ "thickness_px": -1.0 }),
        json!({ "min_area_m2": -0.5 }),
    ] {
        let r = post(&app, "/api/segment", body.clone()).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{body}");
    }
}

#[tokio::test]
async fn adding_a_class_at_run_time_reduces_unknown_pixels() {
    let full = &scene().db;
    let (state, app) = app(without(full, "Tarp"));
    let params = json!({ "algorithm": "sam", "variance": 10 });
    let before = post(&app, "/api/classify", params.clone()).await.json();
    let unknown_before = before["unknown_count"].as_u64().unwrap();
    assert!(unknown_before > 0);

    let r = post(
        &app,
        "/api/classes",
        json!({ "name": "Tarp", "x": TARP.0, "y": TARP.1, "color": [220, 40, 200] }),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let added = r.json();
    assert_eq!(added["version"], 1);
    assert_eq!(
        added["class"]["taxonomy"],
        json!(["World", "Obstacle", "Tarp"])
    );

    let after = post(&app, "/api/classify", params).await.json();
    let unknown_after = after["unknown_count"].as_u64().unwrap();
    assert!(
        unknown_after < unknown_before,
        "{unknown_after} >= {unknown_before}"
    );
    assert_eq!(after["cached"], false);
    assert_eq!(after["db_version"], 1);

    // the response is the classifier's own output for the session database
    let db = state.database();
    let direct = classify(&scene().cube, &db, &ClassifyParams::sam(10.0)).unwrap();
    assert_eq!(unknown_after as usize, direct.unknown);
    for c in after["counts"].as_array().unwrap() {
        let id = ClassId(c["id"].as_u64().unwrap() as u16);
        assert_eq!(c["name"], db.name_of(id));
        assert_eq!(
            c["count"].as_u64().unwrap() as usize,
            direct.counts.get(&id).copied().unwrap_or(0)
        );
    }
    let png = get(&app, "/api/labelmap.png").await;
    assert_eq!(png.status, StatusCode::OK);
    assert_eq!(png.body, direct.labels.render(&db).to_png().unwrap());
    let legend = get(&app, "/api/labelmap/legend").await.json();
    assert_eq!(legend["classes"]["0"]["name"], "Unknown");
    assert_eq!(
        legend["classes"][added["class"]["id"].to_string()]["name"],
        "Tarp"
    );
}

#[tokio::test]
async fn repeated_classification_is_served_from_cache() {
    let (_, app) = app(scene().db.clone());
    let params = json!({ "algorithm": "euclidean", "variance": 0.2 });
    let first = post(&app, "/api/classify", params.clone()).await.json();
    let second = post(&app, "/api/classify", params.clone()).await.json();
    assert_eq!(first["cached"], false);
    assert_eq!(second["cached"], true);
    for key in ["counts", "unknown_count", "time_s", "db_version"] {
        assert_eq!(first[key], second[key], "{key}");
    }
    let other = post(
        &app,
        "/api/classify",
        json!({ "algorithm": "euclidean", "variance": 0.3 }),
    )
    .await
    .json();
    assert_eq!(other["cached"], false);

    // any class mutation invalidates the cache
    let id = first["counts"][0]["id"].as_u64().unwrap();
    let r = call(&app, Method::DELETE, &format!("/api/classes/{id}"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let after = post(
        &app,
        "/api/classify",
        json!({ "algorithm": "euclidean", "variance": 0.3 }),
    )
    .await
    .json();
    assert_eq!(after["cached"], false);
    assert_eq!(after["db_version"], 1);
}

#[tokio::test]
async fn class_listing_and_deletion() {
    let (state, app) = app(scene().db.clone());
    let list = get(&app, "/api/classes").await.json();
    assert_eq!(list["version"], 0);
    let names: Vec<&str> = list["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["Concrete", "Ground", "Vegetation", "Water", "Wood", "Tarp"]
    );

    let water = scene().db.by_name("Water").unwrap().id.0;
    let r = call(&app, Method::DELETE, &format!("/api/classes/{water}"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["removed"]["name"], "Water");
    assert_eq!(state.db_version(), 1);
    let r = call(&app, Method::DELETE, &format!("/api/classes/{water}"), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::DELETE, "/api/classes/999", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::DELETE, "/api/classes/water", None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(state.db_version(), 1);

    // a spectrum given directly instead of a pixel
    let spectrum = scene().cube.pixel_spectrum(TARP.0, TARP.1).unwrap();
    let r = post(
        &app,
        "/api/classes",
        json!({ "name": "Sheet", "spectrum": spectrum.values() }),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let class = &r.json()["class"];
    assert_eq!(class["taxonomy"], json!(["World", "Sheet"]));
    let values: Vec<f64> = serde_json::from_value(class["values"].clone()).unwrap();
    assert_eq!(values, spectrum.values());
}

#[tokio::test]
async fn mutations_during_a_running_mutation_get_409() {
    let (state, app) = app(scene().db.clone());
    let gate = state.writer_gate();
    let held = gate.lock().await;
    let r = post(&app, "/api/classify", json!({ "variance": 5 })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = post(
        &app,
        "/api/classes",
        json!({ "name": "Tarp", "x": 1, "y": 1 }),
    )
    .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = call(&app, Method::DELETE, "/api/classes/1", None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = post(&app, "/api/segment", json!({})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = post(&app, "/api/map/frames", json!({ "frame_id": "a" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    // reads are not blocked
    assert_eq!(get(&app, "/api/classes").await.status, StatusCode::OK);
    assert_eq!(get(&app, "/api/cube").await.status, StatusCode::OK);
    assert_eq!(state.db_version(), 0);
    drop(held);
    let r = post(&app, "/api/classify", json!({ "variance": 5 })).await;
    assert_eq!(r.status, StatusCode::OK);
}

#[tokio::test]
async fn segmentation_and_map_follow_the_modules() {
    let db = scene().db.clone();
    let (state, app) = app(db.clone());
    assert_eq!(
        get(&app, "/api/labelmap.png").await.status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        post(&app, "/api/segment", json!({})).await.status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        post(&app, "/api/map/frames", json!({ "frame_id": "a" }))
            .await
            .status,
        StatusCode::NOT_FOUND
    );

    post(&app, "/api/classify", json!({ "variance": 10 })).await;
    let seg_params = SegmentParams {
        min_area_m2: 0.05,
        thickness_px: 1.0,
    };
    let r = post(
        &app,
        "/api/segment",
        json!({ "min_area_m2": 0.05, "thickness_px": 1.0 }),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    let body = r.json();

    let cube = &scene().cube;
    let c = classify(cube, &db, &ClassifyParams::sam(10.0)).unwrap();
    let seg = segment(&c.labels, cube.camera(), &seg_params).unwrap();
    assert_eq!(
        body["features"],
        regions_geojson(&seg.regions, &db, None)["features"]
    );
    assert_eq!(body["region_count"], seg.regions.len());
    assert_eq!(body["vertex_count"], seg.regions.vertex_count());
    for stage in [
        "edge_detection",
        "contour_extraction",
        "size_filtering",
        "polygon_approximation",
    ] {
        assert!(body["times_s"][stage].as_f64().unwrap() >= 0.0, "{stage}");
    }

    assert_eq!(
        post(&app, "/api/map/frames", json!({ "frame_id": " " }))
            .await
            .status,
        StatusCode::BAD_REQUEST
    );
    let r = post(&app, "/api/map/frames", json!({ "frame_id": "frame-1" })).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["frame_count"], 1);

    let mut map = SemanticMap::new(0.05).unwrap();
    map.ingest_frame(&seg.regions, cube.camera(), "frame-1", &db)
        .unwrap();
    assert_eq!(state.map().grid(), map.grid());
    let features = map.extract_features();
    assert_eq!(
        get(&app, "/api/map/features").await.json(),
        features_geojson(&map, &features)
    );

    let dot = get(&app, "/api/map/ontology.dot").await;
    assert!(dot.content_type.unwrap().starts_with("text/vnd.graphviz"));
    assert_eq!(
        String::from_utf8(dot.body).unwrap(),
        export_ontology(&map, &features).to_dot()
    );
    let ontology = get(&app, "/api/map/ontology").await.json();
    assert_eq!(ontology, json!(export_ontology(&map, &features)));
}

#[tokio::test]
async fn cors_allows_the_ui_origin() {
    let (_, app) = app(scene().db.clone());
    let req = Request::get("/api/cube")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert!(res
        .headers()
        .contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));

    let preflight = Request::builder()
        .method(Method::OPTIONS)
        .uri("/api/classify")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let res = app.clone().oneshot(preflight).await.unwrap();
    assert!(res.status().is_success());
}
