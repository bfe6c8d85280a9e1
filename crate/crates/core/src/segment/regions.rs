//! Label map to polygon regions.
//!
//! Same-label pixels are grouped under 8-connectivity and each group's
//! boundary is traced along pixel edges, so outer rings and holes have integer
//! corner coordinates and filling them reproduces the label map exactly.
//! Out-of-image cells count as a foreign label.

use serde::Serialize;

use crate::classify::LabelMap;
use crate::geometry::{self, fill_even_odd, Point};
use crate::spectral::ClassId;

const NONE: u32 = u32::MAX;

/// Unit steps indexed by direction: +x, +y, -x, -y.
const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub id: usize,
    pub label: ClassId,
    /// Outer ring, positive signed area.
    pub outer: Vec<Point>,
    /// Hole rings, negative signed area.
    pub holes: Vec<Vec<Point>>,
    pub pixel_count: usize,
    /// Region owning the hole this region sits in.
    pub parent: Option<usize>,
    pub area_m2: Option<f64>,
}

impl Region {
    pub fn vertex_count(&self) -> usize {
        self.outer.len() + self.holes.iter().map(Vec::len).sum::<usize>()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Point>> {
        std::iter::once(&self.outer).chain(&self.holes)
    }
}

#[derive(Clone, Debug)]
pub struct RegionSet {
    width: usize,
    height: usize,
    regions: Vec<Region>,
    /// Region index owning each pixel, row-major.
    owner: Vec<u32>,
}

impl PartialEq for RegionSet {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.regions == other.regions
    }
}

impl RegionSet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn regions_mut(&mut self) -> &mut [Region] {
        &mut self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn owner(&self) -> &[u32] {
        &self.owner
    }

    pub fn region_at(&self, x: usize, y: usize) -> &Region {
        &self.regions[self.owner[y * self.width + x] as usize]
    }

    pub fn total_pixels(&self) -> usize {
        self.regions.iter().map(|r| r.pixel_count).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.regions.iter().map(Region::vertex_count).sum()
    }

    /// Fills every region's rings (even-odd) into a fresh label map.
    pub fn rasterize(&self) -> LabelMap {
        let mut map = LabelMap::filled(self.width, self.height, ClassId::UNKNOWN);
        for region in &self.regions {
            let rings: Vec<&[Point]> = region.rings().map(Vec::as_slice).collect();
            fill_even_odd(&rings, self.width, self.height, |x, y| {
                map.set(x, y, region.label)
            });
        }
        map
    }
}

struct Components {
    ids: Vec<u32>,
    labels: Vec<ClassId>,
    sizes: Vec<usize>,
}

/// 8-connected components of equal labels, numbered in raster order of their first pixel.
fn label_components(map: &LabelMap) -> Components {
    let (w, h) = (map.width(), map.height());
    let labels = map.labels();
    let mut ids = vec![NONE; w * h];
    let mut comp_labels = Vec::new();
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if ids[start] != NONE {
            continue;
        }
        let id = comp_labels.len() as u32;
        let label = labels[start];
        comp_labels.push(label);
        ids[start] = id;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            let (x, y) = (p % w, p / w);
            let y0 = y.saturating_sub(1);
            let y1 = (y + 1).min(h - 1);
            let x0 = x.saturating_sub(1);
            let x1 = (x + 1).min(w - 1);
            for ny in y0..=y1 {
                for nx in x0..=x1 {
                    let q = ny * w + nx;
                    if ids[q] == NONE && labels[q] == label {
                        ids[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        sizes.push(size);
    }
    Components {
        ids,
        labels: comp_labels,
        sizes,
    }
}

struct Tracer<'a> {
    w: i64,
    h: i64,
    ids: &'a [u32],
    /// Per pixel, bit `d` set once the boundary edge with that pixel on its
    /// left and direction `d` has been walked.
    visited: Vec<u8>,
}

impl Tracer<'_> {
    #[inline]
    fn owner(&self, x: i64, y: i64) -> u32 {
        if x < 0 || y < 0 || x >= self.w || y >= self.h {
            NONE
        } else {
            self.ids[(y * self.w + x) as usize]
        }
    }

    /// Pixel left of the edge leaving corner `(vx, vy)` in direction `d`.
    #[inline]
    fn left_of(vx: i64, vy: i64, d: usize) -> (i64, i64) {
        match d {
            0 => (vx, vy),
            1 => (vx - 1, vy),
            2 => (vx - 1, vy - 1),
            _ => (vx, vy - 1),
        }
    }

    #[inline]
    fn right_of(vx: i64, vy: i64, d: usize) -> (i64, i64) {
        match d {
            0 => (vx, vy - 1),
            1 => (vx, vy),
            2 => (vx - 1, vy),
            _ => (vx - 1, vy - 1),
        }
    }

    /// Walks one closed boundary of component `c`, keeping it on the left.
    /// At a diagonal pinch the walk turns right, which keeps 8-connected
    /// pixels of the component on one ring.
    fn trace(&mut self, c: u32, start: (i64, i64), start_dir: usize) -> Vec<(i64, i64)> {
        let (mut vx, mut vy) = start;
        let mut d = start_dir;
        let mut corners = Vec::new();
        loop {
            let (px, py) = Self::left_of(vx, vy, d);
            self.visited[(py * self.w + px) as usize] |= 1 << d;
            vx += STEPS[d].0;
            vy += STEPS[d].1;
            let (rx, ry) = Self::right_of(vx, vy, d);
            let (lx, ly) = Self::left_of(vx, vy, d);
            let next = if self.owner(rx, ry) == c {
                (d + 3) % 4
            } else if self.owner(lx, ly) == c {
                d
            } else {
                (d + 1) % 4
            };
            if next != d {
                corners.push((vx, vy));
            }
            d = next;
            if (vx, vy) == start && d == start_dir {
                break;
            }
        }
        canonical_start(&mut corners);
        corners
    }
}

/// Rotates a ring so it starts at its top-most, then left-most corner.
fn canonical_start(ring: &mut [(i64, i64)]) {
    if let Some(first) = ring
        .iter()
        .enumerate()
        .min_by_key(|(i, &(x, y))| (y, x, *i))
        .map(|(i, _)| i)
    {
        ring.rotate_left(first);
    }
}

fn twice_signed_area(ring: &[(i64, i64)]) -> i64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}

fn to_points(ring: &[(i64, i64)]) -> Vec<Point> {
    ring.iter()
        .map(|&(x, y)| Point::new(x as f64, y as f64))
        .collect()
}

struct HoleSeed {
    region: usize,
    pixel: usize,
}

pub fn extract_regions(map: &LabelMap) -> RegionSet {
    let (w, h) = (map.width(), map.height());
    let comps = label_components(map);
    let n = comps.labels.len();

    let mut outers: Vec<Option<Vec<Point>>> = vec![None; n];
    let mut holes: Vec<Vec<Vec<Point>>> = vec![Vec::new(); n];
    let mut seeds = Vec::new();

    let mut tracer = Tracer {
        w: w as i64,
        h: h as i64,
        ids: &comps.ids,
        visited: vec![0; w * h],
    };
    for p in 0..w * h {
        let c = comps.ids[p];
        let (x, y) = ((p % w) as i64, (p / w) as i64);
        // sides: top, right, bottom, left; the side index equals the
        // direction of the boundary edge walked with this pixel on the left
        let across = [(x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y)];
        let starts = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
        for side in 0..4 {
            if tracer.visited[p] & (1 << side) != 0 {
                continue;
            }
            let (ax, ay) = across[side];
            if tracer.owner(ax, ay) == c {
                continue;
            }
            let ring = tracer.trace(c, starts[side], side);
            let area2 = twice_signed_area(&ring);
            if area2 > 0 {
                debug_assert!(outers[c as usize].is_none(), "second outer ring");
                outers[c as usize] = Some(to_points(&ring));
            } else {
                seeds.push(HoleSeed {
                    region: c as usize,
                    pixel: (ay as usize) * w + ax as usize,
                });
                holes[c as usize].push(to_points(&ring));
            }
        }
    }

    let parents = find_parents(w, h, &comps, &seeds);

    let regions = (0..n)
        .map(|i| Region {
            id: i,
            label: comps.labels[i],
            outer: outers[i].take().expect("every component has an outer ring"),
            holes: std::mem::take(&mut holes[i]),
            pixel_count: comps.sizes[i],
            parent: parents[i],
            area_m2: None,
        })
        .collect();

    RegionSet {
        width: w,
        height: h,
        regions,
        owner: comps.ids,
    }
}

/// For each component, the region whose hole encloses it most tightly.
///
/// A hole is a 4-connected area of foreign pixels bounded by its owner; a
/// component lies in the hole when all of its pixels are reached by the fill.
fn find_parents(w: usize, h: usize, comps: &Components, seeds: &[HoleSeed]) -> Vec<Option<usize>> {
    let n = comps.labels.len();
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut stamp = vec![0u32; w * h];
    let mut seen_in_hole = vec![0usize; n];
    let mut touched = Vec::new();
    let mut stack = Vec::new();

    for (k, seed) in seeds.iter().enumerate() {
        let mark = k as u32 + 1;
        let owner = seed.region as u32;
        let mut area = 0;
        stamp[seed.pixel] = mark;
        stack.push(seed.pixel);
        while let Some(p) = stack.pop() {
            area += 1;
            let c = comps.ids[p] as usize;
            if seen_in_hole[c] == 0 {
                touched.push(c);
            }
            seen_in_hole[c] += 1;
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if stamp[q] != mark && comps.ids[q] != owner {
                    stamp[q] = mark;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        for c in touched.drain(..) {
            if seen_in_hole[c] == comps.sizes[c] && best[c].is_none_or(|(a, _)| area < a) {
                best[c] = Some((area, seed.region));
            }
            seen_in_hole[c] = 0;
        }
    }
    best.into_iter().map(|b| b.map(|(_, r)| r)).collect()
}

/// Number of pixels enclosed by a ring, by brute force over pixel centres.
pub fn enclosed_pixels(ring: &[Point], width: usize, height: usize) -> usize {
    let mut n = 0;
    fill_even_odd(&[ring], width, height, |_, _| n += 1);
    n
}

/// Area of a region's rings in pixels (outer minus holes).
pub fn region_area_px(region: &Region) -> f64 {
    geometry::signed_area(&region.outer)
        + region
            .holes
            .iter()
            .map(|h| geometry::signed_area(h))
            .sum::<f64>()
}
