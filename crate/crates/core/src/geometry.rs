//! Image footprint, pixel-to-world transform, polygon areas and scanline fill.

use serde::{Deserialize, Serialize};

use crate::cube::CameraMeta;
use crate::error::{Error, Result};

/// 2-D point; pixel-corner coordinates in image space or meters in the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

pub type WorldPoint = Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Footprint {
    pub side_m: f64,
    pub area_m2: f64,
}

/// Tangent of an angle in degrees on `(0, 90)`, exact at 45°.
fn tan_deg(a: f64) -> f64 {
    if a == 45.0 {
        1.0
    } else if a > 45.0 {
        1.0 / (90.0 - a).to_radians().tan()
    } else {
        a.to_radians().tan()
    }
}

/// Ground footprint of a nadir image: `side = 2 h tan(fov / 2)`, `area = side²`.
pub fn image_footprint(h_m: f64, fov_deg: f64) -> Result<Footprint> {
    if !(h_m.is_finite() && h_m > 0.0) {
        return Err(Error::InvalidCamera(format!(
            "height must be > 0 m, got {h_m}"
        )));
    }
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::InvalidCamera(format!(
            "field of view must be in (0, 180) degrees, got {fov_deg}"
        )));
    }
    let side_m = 2.0 * h_m * tan_deg(fov_deg / 2.0);
    Ok(Footprint {
        side_m,
        area_m2: side_m * side_m,
    })
}

/// Ground area covered by one pixel of a `width` x `height` image.
pub fn pixel_area_m2(width: usize, height: usize, camera: &CameraMeta) -> Result<f64> {
    let fp = image_footprint(camera.h_m, camera.fov_deg)?;
    Ok(fp.area_m2 / (width * height) as f64)
}

/// Affine map from pixel coordinates to the local world frame.
///
/// The image centre lands on the camera pose. Columns grow along +x and rows
/// along -y before the yaw rotation; each axis spans the footprint side.
#[derive(Clone, Copy, Debug)]
pub struct PixelToWorld {
    half_w: f64,
    half_h: f64,
    scale_x: f64,
    scale_y: f64,
    cos: f64,
    sin: f64,
    tx: f64,
    ty: f64,
}

impl PixelToWorld {
    pub fn new(width: usize, height: usize, camera: &CameraMeta) -> Result<Self> {
        let fp = image_footprint(camera.h_m, camera.fov_deg)?;
        Ok(PixelToWorld {
            half_w: width as f64 / 2.0,
            half_h: height as f64 / 2.0,
            scale_x: fp.side_m / width as f64,
            scale_y: fp.side_m / height as f64,
            cos: camera.pose.yaw.cos(),
            sin: camera.pose.yaw.sin(),
            tx: camera.pose.x,
            ty: camera.pose.y,
        })
    }

    pub fn apply(&self, p: Point) -> WorldPoint {
        let dx = (p.x - self.half_w) * self.scale_x;
        let dy = -(p.y - self.half_h) * self.scale_y;
        Point::new(
            self.tx + dx * self.cos - dy * self.sin,
            self.ty + dx * self.sin + dy * self.cos,
        )
    }

    /// Pixel coordinates of a world point; inverse of [`PixelToWorld::apply`].
    pub fn invert(&self, w: WorldPoint) -> Point {
        let (ex, ey) = (w.x - self.tx, w.y - self.ty);
        let dx = ex * self.cos + ey * self.sin;
        let dy = -ex * self.sin + ey * self.cos;
        Point::new(
            dx / self.scale_x + self.half_w,
            -dy / self.scale_y + self.half_h,
        )
    }

    pub fn meters_per_pixel(&self) -> (f64, f64) {
        (self.scale_x, self.scale_y)
    }
}

pub fn pixel_to_world(
    p: Point,
    width: usize,
    height: usize,
    camera: &CameraMeta,
) -> Result<WorldPoint> {
    Ok(PixelToWorld::new(width, height, camera)?.apply(p))
}

/// Signed shoelace area; positive for counter-clockwise rings in x-right/y-up reading.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        twice += a.x * b.y - b.x * a.y;
    }
    twice / 2.0
}

pub fn polygon_area_px(ring: &[Point]) -> Result<f64> {
    if ring.len() < 3 {
        return Err(Error::DegeneratePolygon(ring.len()));
    }
    Ok(signed_area(ring).abs())
}

/// Area of an outer ring minus its holes, in the rings' units squared.
pub fn polygon_with_holes_area(outer: &[Point], holes: &[Vec<Point>]) -> Result<f64> {
    let mut area = polygon_area_px(outer)?;
    for hole in holes {
        area -= polygon_area_px(hole)?;
    }
    Ok(area)
}

/// Perpendicular distance from `p` to the infinite line through `a` and `b`
/// (distance to `a` when the two coincide).
pub fn point_line_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return (p.x - a.x).hypot(p.y - a.y);
    }
    ((p.x - a.x) * dy - (p.y - a.y) * dx).abs() / len
}

/// Visits every cell `(col, row)` of a `width` x `height` grid whose centre
/// lies inside the rings under the even-odd rule. Centres on a boundary follow
/// a half-open convention so that polygons sharing an edge never both claim a cell.
pub fn fill_even_odd<R: AsRef<[Point]>>(
    rings: &[R],
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize),
) {
    let edges: Vec<(Point, Point)> = rings
        .iter()
        .flat_map(|r| {
            let r = r.as_ref();
            (0..r.len()).map(move |i| (r[i], r[(i + 1) % r.len()]))
        })
        .filter(|(a, b)| a.y != b.y)
        .collect();
    if edges.is_empty() {
        return;
    }
    let (ymin, ymax) = edges
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a.y).min(b.y), hi.max(a.y).max(b.y))
        });
    let row_start = (ymin - 0.5).ceil().max(0.0) as usize;
    let row_end = ((ymax - 0.5).ceil().max(0.0) as usize).min(height);
    let mut xs = Vec::new();
    for row in row_start..row_end {
        let yc = row as f64 + 0.5;
        xs.clear();
        for (a, b) in &edges {
            if (a.y <= yc) != (b.y <= yc) {
                xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let lo = (pair[0] - 0.5).ceil().max(0.0);
            let hi = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(width);
            for col in lo as usize..hi {
                visit(col, row);
            }
        }
    }
}
