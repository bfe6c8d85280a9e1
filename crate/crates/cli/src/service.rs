//! HTTP facade over the pipeline for the labeling UI.
//!
//! Reads run concurrently. Class mutations, classification, segmentation and
//! map ingestion all take a single writer gate without waiting; a request that
//! finds the gate held gets 409.

use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{Mutex, OwnedMutexGuard};
use tower_http::cors::CorsLayer;

use hypermap_core::classify::LabelSidecar;
use hypermap_core::segment::regions_geojson;
use hypermap_core::semantic_map::features_geojson;
use hypermap_core::spectral::{palette_color, ClassRecord};
use hypermap_core::{
    classify, export_ontology, segment, ClassId, Classification, ClassifyParams, Error, HyperCube,
    SegmentParams, Segmentation, SemanticMap, SimilarityAlgorithm, SpectralDatabase, Spectrum,
};

use crate::commands::class_counts;

pub type SharedState = Arc<AppState>;

pub struct AppState {
    cube: HyperCube,
    rgb_png: Vec<u8>,
    gate: Arc<Mutex<()>>,
    session: RwLock<Session>,
}

struct Session {
    db: SpectralDatabase,
    db_version: u64,
    classified: Option<Classified>,
    segmented: Option<Segmented>,
    map: SemanticMap,
}

/// The latest label map with the database snapshot and params it came from.
struct Classified {
    db_version: u64,
    params: ClassifyParams,
    db: Arc<SpectralDatabase>,
    result: Arc<Classification>,
}

struct Segmented {
    db: Arc<SpectralDatabase>,
    result: Arc<Segmentation>,
}

impl AppState {
    pub fn new(
        cube: HyperCube,
        db: SpectralDatabase,
        resolution_m: f64,
    ) -> hypermap_core::Result<Self> {
        let rgb_png = cube.false_rgb()?.to_png()?;
        Ok(AppState {
            cube,
            rgb_png,
            gate: Arc::new(Mutex::new(())),
            session: RwLock::new(Session {
                db,
                db_version: 0,
                classified: None,
                segmented: None,
                map: SemanticMap::new(resolution_m)?,
            }),
        })
    }

    pub fn cube(&self) -> &HyperCube {
        &self.cube
    }

    /// Held by every mutating request while it runs.
    pub fn writer_gate(&self) -> Arc<Mutex<()>> {
        self.gate.clone()
    }

    pub fn database(&self) -> SpectralDatabase {
        self.read().db.clone()
    }

    pub fn db_version(&self) -> u64 {
        self.read().db_version
    }

    pub fn map(&self) -> SemanticMap {
        self.read().map.clone()
    }

    fn read(&self) -> RwLockReadGuard<'_, Session> {
        self.session.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Session> {
        self.session.write().unwrap_or_else(|e| e.into_inner())
    }

    fn try_gate(&self) -> Result<OwnedMutexGuard<()>, ApiError> {
        self.gate.clone().try_lock_owned().map_err(|_| {
            ApiError::new(
                StatusCode::CONFLICT,
                "another class mutation or classification is in progress",
            )
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownClass(_) => StatusCode::NOT_FOUND,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/api/cube", get(get_cube))
        .route("/api/cube/rgb.png", get(get_rgb))
        .route("/api/cube/spectrum", get(get_spectrum))
        .route("/api/classes", get(get_classes).post(post_class))
        .route("/api/classes/{id}", delete(delete_class))
        .route("/api/classify", post(post_classify))
        .route("/api/labelmap.png", get(get_labelmap))
        .route("/api/labelmap/legend", get(get_legend))
        .route("/api/segment", post(post_segment))
        .route("/api/map/frames", post(post_frame))
        .route("/api/map/features", get(get_features))
        .route("/api/map/ontology.dot", get(get_ontology_dot))
        .route("/api/map/ontology", get(get_ontology))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn get_cube(State(s): State<SharedState>) -> Json<Value> {
    let cube = &s.cube;
    let camera = cube.camera();
    Json(json!({
        "width": cube.width(),
        "height": cube.height(),
        "bands": cube.bands(),
        "wavelengths_nm": cube.wavelengths(),
        "h_m": camera.h_m,
        "fov_deg": camera.fov_deg,
        "pose": camera.pose,
    }))
}

async fn get_rgb(State(s): State<SharedState>) -> Response {
    png(s.rgb_png.clone())
}

#[derive(Deserialize)]
struct PixelQuery {
    x: usize,
    y: usize,
}

async fn get_spectrum(
    State(s): State<SharedState>,
    q: Result<Query<PixelQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(q) = q?;
    let spectrum = s.cube.pixel_spectrum(q.x, q.y)?;
    Ok(Json(json!({
        "x": q.x,
        "y": q.y,
        "wavelengths_nm": spectrum.wavelengths(),
        "values": spectrum.values(),
    })))
}

fn class_list(session: &Session) -> Value {
    json!({
        "version": session.db_version,
        "classes": session.db.to_document().classes,
    })
}

async fn get_classes(State(s): State<SharedState>) -> Json<Value> {
    Json(class_list(&s.read()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewClass {
    name: String,
    #[serde(default)]
    color: Option<[u8; 3]>,
    #[serde(default)]
    x: Option<usize>,
    #[serde(default)]
    y: Option<usize>,
    #[serde(default)]
    spectrum: Option<Vec<f64>>,
    #[serde(default)]
    taxonomy: Vec<String>,
}

fn record(db: &SpectralDatabase, id: ClassId) -> Option<ClassRecord> {
    db.to_document().classes.into_iter().find(|c| c.id == id)
}

async fn post_class(
    State(s): State<SharedState>,
    body: Result<Json<NewClass>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(req) = body?;
    let reference = match (req.x, req.y, req.spectrum) {
        (Some(x), Some(y), None) => s.cube.pixel_spectrum(x, y)?,
        (None, None, Some(values)) => {
            let wavelengths = s.cube.wavelengths().iter().map(|&w| w as f64).collect();
            Spectrum::new(wavelengths, values)?
        }
        _ => {
            return Err(ApiError::bad_request(
                "give either a pixel (x and y) or a spectrum, not both",
            ))
        }
    };
    let _gate = s.try_gate()?;
    let mut session = s.write();
    let color = req.color.unwrap_or_else(|| palette_color(session.db.len()));
    let id = session
        .db
        .add_class(&req.name, color, reference, req.taxonomy)?;
    session.db_version += 1;
    let class = record(&session.db, id);
    Ok((
        StatusCode::CREATED,
        Json(json!({ "version": session.db_version, "class": class })),
    ))
}

async fn delete_class(
    State(s): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let id: u16 = id
        .parse()
        .map_err(|_| ApiError::bad_request(format!("class id {id:?} is not an integer")))?;
    let _gate = s.try_gate()?;
    let mut session = s.write();
    let removed = session.db.remove_class(ClassId(id))?;
    session.db_version += 1;
    Ok(Json(json!({
        "version": session.db_version,
        "removed": { "id": removed.id, "name": removed.name },
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyRequest {
    #[serde(default)]
    algorithm: SimilarityAlgorithm,
    variance: f64,
}

fn classify_response(c: &Classified, cached: bool) -> Value {
    json!({
        "algorithm": c.params.algorithm,
        "variance": c.params.variance,
        "db_version": c.db_version,
        "counts": class_counts(&c.result, &c.db),
        "unknown_count": c.result.unknown,
        "pixel_count": c.result.labels.len(),
        "time_s": c.result.elapsed.as_secs_f64(),
        "cached": cached,
    })
}

async fn post_classify(
    State(s): State<SharedState>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = body?;
    let params = ClassifyParams {
        algorithm: req.algorithm,
        variance: req.variance,
    };
    params.validate()?;
    let gate = s.try_gate()?;
    let (db, db_version) = {
        let session = s.read();
        if let Some(c) = &session.classified {
            if c.db_version == session.db_version && c.params == params {
                return Ok(Json(classify_response(c, true)));
            }
        }
        (Arc::new(session.db.clone()), session.db_version)
    };
    let worker = s.clone();
    let snapshot = db.clone();
    let result = tokio::task::spawn_blocking(move || {
        let _gate = gate;
        classify(&worker.cube, &snapshot, &params)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let classified = Classified {
        db_version,
        params,
        db,
        result: Arc::new(result),
    };
    let body = classify_response(&classified, false);
    let mut session = s.write();
    session.classified = Some(classified);
    session.segmented = None;
    Ok(Json(body))
}

fn no_label_map() -> ApiError {
    ApiError::not_found("no label map yet: POST /api/classify first")
}

async fn get_labelmap(State(s): State<SharedState>) -> ApiResult<Response> {
    let (labels, db) = {
        let session = s.read();
        let c = session.classified.as_ref().ok_or_else(no_label_map)?;
        (c.result.clone(), c.db.clone())
    };
    Ok(png(labels.labels.render(&db).to_png()?))
}

async fn get_legend(State(s): State<SharedState>) -> ApiResult<Json<LabelSidecar>> {
    let session = s.read();
    let c = session.classified.as_ref().ok_or_else(no_label_map)?;
    Ok(Json(LabelSidecar::from_database(&c.db)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentRequest {
    #[serde(default)]
    min_area_m2: f64,
    #[serde(default)]
    thickness_px: f64,
}

async fn post_segment(
    State(s): State<SharedState>,
    body: Result<Json<SegmentRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = body?;
    let params = SegmentParams {
        min_area_m2: req.min_area_m2,
        thickness_px: req.thickness_px,
    };
    params.validate()?;
    let gate = s.try_gate()?;
    let (classified, db) = {
        let session = s.read();
        let c = session.classified.as_ref().ok_or_else(no_label_map)?;
        (c.result.clone(), c.db.clone())
    };
    let worker = s.clone();
    let seg = tokio::task::spawn_blocking(move || {
        let _gate = gate;
        segment(&classified.labels, worker.cube.camera(), &params)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;

    let mut body = regions_geojson(&seg.regions, &db, None);
    let t = &seg.timings;
    body["times_s"] = json!({
        "edge_detection": t.edge_detection.as_secs_f64(),
        "contour_extraction": t.contour_extraction.as_secs_f64(),
        "size_filtering": t.size_filtering.as_secs_f64(),
        "polygon_approximation": t.polygon_approximation.as_secs_f64(),
    });
    body["region_count"] = json!(seg.regions.len());
    body["vertex_count"] = json!(seg.regions.vertex_count());
    s.write().segmented = Some(Segmented {
        db,
        result: Arc::new(seg),
    });
    Ok(Json(body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRequest {
    frame_id: String,
}

async fn post_frame(
    State(s): State<SharedState>,
    body: Result<Json<FrameRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(req) = body?;
    if req.frame_id.trim().is_empty() {
        return Err(ApiError::bad_request("frame_id is empty"));
    }
    let _gate = s.try_gate()?;
    let mut session = s.write();
    let (regions, db) = match &session.segmented {
        Some(seg) => (seg.result.clone(), seg.db.clone()),
        None => {
            return Err(ApiError::not_found(
                "no segmented frame yet: POST /api/segment first",
            ))
        }
    };
    session
        .map
        .ingest_frame(&regions.regions, s.cube.camera(), &req.frame_id, &db)?;
    Ok(Json(json!({
        "frame_id": req.frame_id,
        "frame_count": session.map.frames().len(),
        "known_cells": session.map.known_cells(),
    })))
}

async fn get_features(State(s): State<SharedState>) -> Json<Value> {
    let session = s.read();
    let features = session.map.extract_features();
    Json(features_geojson(&session.map, &features))
}

async fn get_ontology_dot(State(s): State<SharedState>) -> Response {
    let session = s.read();
    let features = session.map.extract_features();
    let dot = export_ontology(&session.map, &features).to_dot();
    (
        [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
        dot,
    )
        .into_response()
}

async fn get_ontology(State(s): State<SharedState>) -> Json<Value> {
    let session = s.read();
    let features = session.map.extract_features();
    Json(json!(export_ontology(&session.map, &features)))
}
