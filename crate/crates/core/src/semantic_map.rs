//! Multi-frame semantic map: a global class raster in the world frame, polygon
//! features re-extracted from it, and the instance-label ontology.
//!
//! Cell `(i, j)` covers `[i·res, (i+1)·res) × [j·res, (j+1)·res)` in world
//! meters. The stored grid is a window over those cells that grows with each
//! ingested footprint; its row 0 is the northern-most row.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classify::LabelMap;
use crate::cube::CameraMeta;
use crate::error::{Error, Result};
use crate::geometry::{fill_even_odd, PixelToWorld, Point};
use crate::raster::{self, write_file};
use crate::segment::{extract_regions, RegionSet};
use crate::spectral::{ClassId, SpectralDatabase, TAXONOMY_ROOT};

pub const DEFAULT_RESOLUTION_M: f64 = 0.05;

const GRID_FILE: &str = "grid.png";
const FRAMES_FILE: &str = "frames.png";
const MANIFEST_FILE: &str = "manifest.json";

/// Class metadata the map keeps for labels it has seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapClass {
    pub id: ClassId,
    pub name: String,
    pub color: [u8; 3],
    pub taxonomy: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    pub camera: CameraMeta,
}

/// Rooted tree of instance labels, stored as the set of root-to-node paths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelTree {
    paths: BTreeSet<Vec<String>>,
}

impl LabelTree {
    pub fn new() -> Self {
        let mut paths = BTreeSet::new();
        paths.insert(vec![TAXONOMY_ROOT.to_owned()]);
        LabelTree { paths }
    }

    pub fn insert(&mut self, path: &[String]) -> Result<()> {
        if path.first().map(String::as_str) != Some(TAXONOMY_ROOT) {
            return Err(Error::InvalidTaxonomy(path.to_vec()));
        }
        for end in 1..=path.len() {
            self.paths.insert(path[..end].to_vec());
        }
        Ok(())
    }

    pub fn contains(&self, path: &[String]) -> bool {
        self.paths.contains(path)
    }

    /// Nodes in depth-first order, children sorted by name.
    pub fn nodes(&self) -> impl Iterator<Item = &Vec<String>> {
        self.paths.iter()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

pub fn node_id(path: &[String]) -> String {
    path.join("/")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Feature {
    /// 1-based, in raster order of the feature's first cell.
    pub id: usize,
    pub label: ClassId,
    pub class_name: String,
    pub instance_label: Vec<String>,
    /// World meters, counter-clockwise.
    pub outer: Vec<Point>,
    /// World meters, clockwise.
    pub holes: Vec<Vec<Point>>,
    pub cell_count: usize,
    pub area_m2: f64,
    pub source_frames: Vec<String>,
}

impl Feature {
    pub fn node_id(&self) -> String {
        format!("feature#{}", self.id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticMap {
    resolution: f64,
    i0: i64,
    j0: i64,
    cols: usize,
    rows: usize,
    cells: Vec<ClassId>,
    /// Per cell, 1 + index of the frame that last wrote it; 0 when never written.
    origin: Vec<u16>,
    frames: Vec<FrameRecord>,
    classes: BTreeMap<ClassId, MapClass>,
}

/// Rounds values within float noise of an integer onto it.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

impl SemanticMap {
    pub fn new(resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "map resolution must be > 0 m, got {resolution}"
            )));
        }
        Ok(SemanticMap {
            resolution,
            i0: 0,
            j0: 0,
            cols: 0,
            rows: 0,
            cells: Vec::new(),
            origin: Vec::new(),
            frames: Vec::new(),
            classes: BTreeMap::new(),
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn classes(&self) -> impl Iterator<Item = &MapClass> {
        self.classes.values()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// World cell index of the grid's south-west cell.
    pub fn origin_cell(&self) -> (i64, i64) {
        (self.i0, self.j0)
    }

    /// The grid as a label map, north up.
    pub fn grid(&self) -> LabelMap {
        LabelMap::new(self.cols, self.rows, self.cells.clone())
            .unwrap_or_else(|_| LabelMap::filled(0, 0, ClassId::UNKNOWN))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| c.is_unknown())
    }

    pub fn known_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_unknown()).count()
    }

    /// Label of world cell `(i, j)`; Unknown outside the grid.
    pub fn label_at_cell(&self, i: i64, j: i64) -> ClassId {
        match self.index(i, j) {
            Some(k) => self.cells[k],
            None => ClassId::UNKNOWN,
        }
    }

    pub fn label_at(&self, p: Point) -> ClassId {
        let i = (p.x / self.resolution).floor() as i64;
        let j = (p.y / self.resolution).floor() as i64;
        self.label_at_cell(i, j)
    }

    /// World cell indices `(i, j)` of every known cell with its label.
    pub fn known(&self) -> impl Iterator<Item = ((i64, i64), ClassId)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_unknown())
            .map(|(k, &c)| {
                let (col, row) = (k % self.cols, k / self.cols);
                (
                    (self.i0 + col as i64, self.j0 + (self.rows - 1 - row) as i64),
                    c,
                )
            })
    }

    fn index(&self, i: i64, j: i64) -> Option<usize> {
        let col = i - self.i0;
        let row = (self.j0 + self.rows as i64 - 1) - j;
        if col < 0 || row < 0 || col >= self.cols as i64 || row >= self.rows as i64 {
            return None;
        }
        Some(row as usize * self.cols + col as usize)
    }

    /// Records class metadata so the taxonomy covers classes before any
    /// cell carries them.
    pub fn register_classes(&mut self, db: &SpectralDatabase) {
        for c in db.classes() {
            self.classes.insert(
                c.id,
                MapClass {
                    id: c.id,
                    name: c.name.clone(),
                    color: c.color,
                    taxonomy: c.taxonomy.clone(),
                },
            );
        }
    }

    pub fn label_tree(&self) -> LabelTree {
        let mut tree = LabelTree::new();
        for c in self.classes.values() {
            tree.insert(&c.taxonomy)
                .expect("class taxonomies are validated by the database");
        }
        tree
    }

    /// Grows the grid window to include world cells `[i_lo, i_hi) × [j_lo, j_hi)`.
    fn grow(&mut self, i_lo: i64, i_hi: i64, j_lo: i64, j_hi: i64) {
        let (ni0, nj0, ni1, nj1) = if self.cols == 0 {
            (i_lo, j_lo, i_hi, j_hi)
        } else {
            (
                self.i0.min(i_lo),
                self.j0.min(j_lo),
                (self.i0 + self.cols as i64).max(i_hi),
                (self.j0 + self.rows as i64).max(j_hi),
            )
        };
        let (cols, rows) = ((ni1 - ni0) as usize, (nj1 - nj0) as usize);
        if (ni0, nj0, cols, rows) == (self.i0, self.j0, self.cols, self.rows) {
            return;
        }
        let mut cells = vec![ClassId::UNKNOWN; cols * rows];
        let mut origin = vec![0u16; cols * rows];
        for row in 0..self.rows {
            let j = self.j0 + (self.rows - 1 - row) as i64;
            let new_row = (nj1 - 1 - j) as usize;
            let new_col = (self.i0 - ni0) as usize;
            let src = row * self.cols..(row + 1) * self.cols;
            let dst = new_row * cols + new_col;
            cells[dst..dst + self.cols].copy_from_slice(&self.cells[src.clone()]);
            origin[dst..dst + self.cols].copy_from_slice(&self.origin[src]);
        }
        self.i0 = ni0;
        self.j0 = nj0;
        self.cols = cols;
        self.rows = rows;
        self.cells = cells;
        self.origin = origin;
    }

    /// Rasterizes a frame's region polygons into the grid. Later frames win on
    /// overlap, except that Unknown never overwrites a known cell.
    pub fn ingest_frame(
        &mut self,
        regions: &RegionSet,
        camera: &CameraMeta,
        frame_id: &str,
        db: &SpectralDatabase,
    ) -> Result<()> {
        camera.validate()?;
        if self.frames.len() >= u16::MAX as usize {
            return Err(Error::InvalidParameter("too many frames in one map".into()));
        }
        for r in regions.regions() {
            if !r.label.is_unknown() && db.get(r.label).is_none() {
                return Err(Error::UnknownClass(r.label));
            }
        }
        let transform = PixelToWorld::new(regions.width(), regions.height(), camera)?;
        let res = self.resolution;

        let corners = [
            (0.0, 0.0),
            (regions.width() as f64, 0.0),
            (regions.width() as f64, regions.height() as f64),
            (0.0, regions.height() as f64),
        ]
        .map(|(x, y)| transform.apply(Point::new(x, y)));
        let (mut lo, mut hi) = (corners[0], corners[0]);
        for c in &corners {
            lo = Point::new(lo.x.min(c.x), lo.y.min(c.y));
            hi = Point::new(hi.x.max(c.x), hi.y.max(c.y));
        }
        self.grow(
            snap(lo.x / res).floor() as i64,
            snap(hi.x / res).ceil() as i64,
            snap(lo.y / res).floor() as i64,
            snap(hi.y / res).ceil() as i64,
        );

        let used: BTreeSet<ClassId> = regions
            .regions()
            .iter()
            .map(|r| r.label)
            .filter(|l| !l.is_unknown())
            .collect();
        for id in used {
            let c = db.get(id).expect("checked above");
            self.classes.insert(
                id,
                MapClass {
                    id,
                    name: c.name.clone(),
                    color: c.color,
                    taxonomy: c.taxonomy.clone(),
                },
            );
        }

        self.frames.push(FrameRecord {
            frame_id: frame_id.to_owned(),
            camera: *camera,
        });
        let stamp = self.frames.len() as u16;
        let (i0, top) = (self.i0 as f64, (self.j0 + self.rows as i64) as f64);
        let to_grid = |p: Point| {
            let w = transform.apply(p);
            Point::new(w.x / res - i0, top - w.y / res)
        };
        let (cols, rows) = (self.cols, self.rows);
        for region in regions.regions().iter().filter(|r| !r.label.is_unknown()) {
            let rings: Vec<Vec<Point>> = region
                .rings()
                .map(|ring| ring.iter().map(|&p| to_grid(p)).collect())
                .collect();
            let (cells, origin) = (&mut self.cells, &mut self.origin);
            fill_even_odd(&rings, cols, rows, |col, row| {
                cells[row * cols + col] = region.label;
                origin[row * cols + col] = stamp;
            });
        }
        Ok(())
    }

    fn to_world(&self, p: Point) -> Point {
        let res = self.resolution;
        Point::new(
            (self.i0 as f64 + p.x) * res,
            (self.j0 as f64 + self.rows as f64 - p.y) * res,
        )
    }

    /// Connected same-class areas of the grid as world-frame polygons.
    pub fn extract_features(&self) -> Vec<Feature> {
        if self.cells.is_empty() {
            return Vec::new();
        }
        let set = extract_regions(&self.grid());
        let owner = set.owner();
        let mut frames: Vec<BTreeSet<u16>> = vec![BTreeSet::new(); set.len()];
        for (k, &o) in owner.iter().enumerate() {
            if self.origin[k] > 0 {
                frames[o as usize].insert(self.origin[k]);
            }
        }
        let cell_area = self.resolution * self.resolution;
        let ring = |r: &Vec<Point>| -> Vec<Point> {
            // the y flip reverses orientation; restore it
            r.iter().rev().map(|&p| self.to_world(p)).collect()
        };
        set.regions()
            .iter()
            .filter(|r| !r.label.is_unknown())
            .enumerate()
            .map(|(k, r)| {
                let class = self.classes.get(&r.label);
                Feature {
                    id: k + 1,
                    label: r.label,
                    class_name: class.map_or_else(|| r.label.to_string(), |c| c.name.clone()),
                    instance_label: class.map_or_else(
                        || vec![TAXONOMY_ROOT.to_owned(), r.label.to_string()],
                        |c| c.taxonomy.clone(),
                    ),
                    outer: ring(&r.outer),
                    holes: r.holes.iter().map(ring).collect(),
                    cell_count: r.pixel_count,
                    area_m2: r.pixel_count as f64 * cell_area,
                    source_frames: frames[r.id]
                        .iter()
                        .map(|&s| self.frames[s as usize - 1].frame_id.clone())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect(),
                }
            })
            .collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if !self.cells.is_empty() {
            let ids: Vec<u16> = self.cells.iter().map(|c| c.0).collect();
            write_file(
                &dir.join(GRID_FILE),
                &raster::encode_gray16(self.cols, self.rows, &ids)?,
            )?;
            write_file(
                &dir.join(FRAMES_FILE),
                &raster::encode_gray16(self.cols, self.rows, &self.origin)?,
            )?;
        }
        let manifest = Manifest {
            resolution_m: self.resolution,
            origin_cell: [self.i0, self.j0],
            cols: self.cols,
            rows: self.rows,
            frames: self.frames.clone(),
            classes: self.classes.values().cloned().collect(),
        };
        write_file(
            &dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        let mut map = SemanticMap::new(m.resolution_m)?;
        map.i0 = m.origin_cell[0];
        map.j0 = m.origin_cell[1];
        map.cols = m.cols;
        map.rows = m.rows;
        map.frames = m.frames;
        map.classes = m.classes.into_iter().map(|c| (c.id, c)).collect();
        if m.cols * m.rows > 0 {
            let read = |name: &str| -> Result<Vec<u16>> {
                let (w, h, v) = raster::read_gray16(dir.join(name))?;
                if (w, h) != (m.cols, m.rows) {
                    return Err(Error::LabelMapMismatch(format!(
                        "{name} is {w}x{h}, manifest says {}x{}",
                        m.cols, m.rows
                    )));
                }
                Ok(v)
            };
            map.cells = read(GRID_FILE)?.into_iter().map(ClassId).collect();
            map.origin = read(FRAMES_FILE)?;
            if map.origin.iter().any(|&o| o as usize > map.frames.len()) {
                return Err(Error::LabelMapMismatch(
                    "frame raster refers to a frame missing from the manifest".into(),
                ));
            }
        }
        Ok(map)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    resolution_m: f64,
    origin_cell: [i64; 2],
    cols: usize,
    rows: usize,
    frames: Vec<FrameRecord>,
    classes: Vec<MapClass>,
}

fn closed(ring: &[Point]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = ring.iter().map(|&p| p.into()).collect();
    if let Some(&first) = out.first() {
        out.push(first);
    }
    out
}

/// Features as a GeoJSON-style collection in world meters.
pub fn features_geojson(map: &SemanticMap, features: &[Feature]) -> Value {
    let items: Vec<Value> = features
        .iter()
        .map(|f| {
            let mut rings = vec![closed(&f.outer)];
            rings.extend(f.holes.iter().map(|h| closed(h)));
            let color = map.classes.get(&f.label).map(|c| c.color);
            json!({
                "type": "Feature",
                "id": f.id,
                "geometry": { "type": "Polygon", "coordinates": rings },
                "properties": {
                    "label_id": f.label.0,
                    "class_name": f.class_name,
                    "instance_label": node_id(&f.instance_label),
                    "color": color,
                    "area_m2": f.area_m2,
                    "cell_count": f.cell_count,
                    "source_frames": f.source_frames,
                }
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "resolution_m": map.resolution,
        "features": items,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OntologyNode {
    pub id: String,
    pub kind: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_m2: Option<f64>,
    /// Feature id in the map's feature collection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OntologyEdge {
    pub from: String,
    pub to: String,
    pub kind: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ontology {
    pub nodes: Vec<OntologyNode>,
    pub edges: Vec<OntologyEdge>,
}

pub const KIND_LABEL: &str = "label";
pub const KIND_INSTANCE: &str = "instance";
pub const EDGE_SUBCLASS: &str = "subclass";
pub const EDGE_INSTANCE: &str = "instance";

/// Taxonomy nodes with subclass edges, then one instance node per feature.
pub fn export_ontology(map: &SemanticMap, features: &[Feature]) -> Ontology {
    let mut tree = map.label_tree();
    for f in features {
        // features carry validated paths; an unregistered label still gets a node
        let _ = tree.insert(&f.instance_label);
    }
    let mut onto = Ontology::default();
    for path in tree.nodes() {
        onto.nodes.push(OntologyNode {
            id: node_id(path),
            kind: KIND_LABEL.into(),
            label: path.last().cloned().unwrap_or_default(),
            area_m2: None,
            shape: None,
        });
        if path.len() > 1 {
            onto.edges.push(OntologyEdge {
                from: node_id(&path[..path.len() - 1]),
                to: node_id(path),
                kind: EDGE_SUBCLASS.into(),
            });
        }
    }
    for f in features {
        onto.nodes.push(OntologyNode {
            id: f.node_id(),
            kind: KIND_INSTANCE.into(),
            label: f.class_name.clone(),
            area_m2: Some(f.area_m2),
            shape: Some(f.id),
        });
        onto.edges.push(OntologyEdge {
            from: node_id(&f.instance_label),
            to: f.node_id(),
            kind: EDGE_INSTANCE.into(),
        });
    }
    onto
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl Ontology {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ontology {\n  rankdir=LR;\n");
        for n in &self.nodes {
            let (label, shape) = match n.area_m2 {
                Some(a) => (format!("{} ({a:.3} m2)", n.id), "ellipse"),
                None => (n.label.clone(), "box"),
            };
            let _ = writeln!(
                out,
                "  {} [label={}, shape={shape}];",
                quote(&n.id),
                quote(&label)
            );
        }
        for e in &self.edges {
            let style = if e.kind == EDGE_INSTANCE {
                " [style=dashed]"
            } else {
                ""
            };
            let _ = writeln!(out, "  {} -> {}{style};", quote(&e.from), quote(&e.to));
        }
        out.push_str("}\n");
        out
    }
}
