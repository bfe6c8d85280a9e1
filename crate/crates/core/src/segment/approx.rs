//! Dominant-point polygon approximation with a thickness threshold.
//!
//! The first vertex is always dominant. Each later vertex is tested once,
//! against the line from the current dominant start to the vertex after it
//! (indices wrap, so the last vertex is tested against the first). A vertex
//! within `thickness` of that line is dropped; otherwise it becomes
//! dominant and the new start.

use crate::error::{Error, Result};
use crate::geometry::{point_line_distance, Point};

/// Record of a dropped vertex and the chord it was measured against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Removal {
    pub vertex: usize,
    pub start: usize,
    pub end: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Approximation {
    /// Indices of retained vertices, ascending.
    pub kept: Vec<usize>,
    pub removals: Vec<Removal>,
}

impl Approximation {
    pub fn points(&self, input: &[Point]) -> Vec<Point> {
        self.kept.iter().map(|&i| input[i]).collect()
    }
}

fn check(points: &[Point], thickness: f64) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::DegeneratePolygon(points.len()));
    }
    if !(thickness.is_finite() && thickness >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "thickness must be a finite value >= 0, got {thickness}"
        )));
    }
    Ok(())
}

pub fn approximate_polygon_traced(points: &[Point], thickness: f64) -> Result<Approximation> {
    check(points, thickness)?;
    let n = points.len();
    if n == 3 {
        return Ok(Approximation {
            kept: vec![0, 1, 2],
            removals: Vec::new(),
        });
    }
    let mut kept = vec![0];
    let mut removals = Vec::new();
    let mut start = 0;
    for vertex in 1..n {
        let end = (vertex + 1) % n;
        let distance = point_line_distance(points[vertex], points[start], points[end]);
        if distance <= thickness {
            removals.push(Removal {
                vertex,
                start,
                end,
                distance,
            });
        } else {
            kept.push(vertex);
            start = vertex;
        }
    }
    // A ring needs three vertices: restore the farthest dropped ones.
    while kept.len() < 3 {
        let (i, _) = removals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.distance.total_cmp(&b.1.distance).then(b.0.cmp(&a.0)))
            .expect("n > 3 leaves removals to restore");
        let restored = removals.remove(i);
        let at = kept.partition_point(|&k| k < restored.vertex);
        kept.insert(at, restored.vertex);
    }
    Ok(Approximation { kept, removals })
}

pub fn approximate_polygon(points: &[Point], thickness: f64) -> Result<Vec<Point>> {
    Ok(approximate_polygon_traced(points, thickness)?.points(points))
}
