use rayon::prelude::*;

use crate::classify::LabelMap;
use crate::error::Result;
use crate::raster;

/// Binary edge mask: a pixel is an edge when any of its 8 neighbours carries a
/// different label. Neighbours outside the image always differ, so the image
/// border ring is always edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeImage {
    width: usize,
    height: usize,
    edges: Vec<bool>,
}

impl EdgeImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.edges[y * self.width + x]
    }

    pub fn edges(&self) -> &[bool] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        raster::encode_bits(self.width, self.height, &self.edges)
    }
}

pub fn detect_edges(map: &LabelMap) -> EdgeImage {
    let (w, h) = (map.width(), map.height());
    let labels = map.labels();
    let mut edges = vec![false; w * h];
    edges.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                *out = true;
                continue;
            }
            let c = labels[y * w + x];
            *out = (y - 1..=y + 1).any(|ny| {
                labels[ny * w + x - 1..=ny * w + x + 1]
                    .iter()
                    .any(|&l| l != c)
            });
        }
    });
    EdgeImage {
        width: w,
        height: h,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ClassId;

    /// Direct transcription of the neighbourhood rule with an explicit sentinel.
    fn oracle(map: &LabelMap) -> Vec<bool> {
        let (w, h) = (map.width() as i64, map.height() as i64);
        let at = |x: i64, y: i64| -> Option<ClassId> {
            (x >= 0 && y >= 0 && x < w && y < h).then(|| map.get(x as usize, y as usize))
        };
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let c = at(x, y);
                let mut edge = false;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if (dx, dy) != (0, 0) && at(x + dx, y + dy) != c {
                            edge = true;
                        }
                    }
                }
                out.push(edge);
            }
        }
        out
    }

    #[test]
    fn uniform_five_by_five_has_a_border_ring() {
        let e = detect_edges(&LabelMap::filled(5, 5, ClassId(1)));
        assert_eq!(e.edge_count(), 16);
        for y in 1..4 {
            for x in 1..4 {
                assert!(!e.is_edge(x, y));
            }
        }
    }

    #[test]
    fn uniform_three_by_three_has_one_interior_pixel() {
        // the centre's eight neighbours are all inside the image and equal
        let e = detect_edges(&LabelMap::filled(3, 3, ClassId(1)));
        assert_eq!(e.edge_count(), 8);
        assert!(!e.is_edge(1, 1));
    }

    #[test]
    fn two_column_split() {
        let ids: Vec<u16> = (0..25).map(|i| if i % 5 < 2 { 1 } else { 2 }).collect();
        let map = LabelMap::from_ids(5, 5, &ids).unwrap();
        let e = detect_edges(&map);
        assert_eq!(e.edge_count(), 22);
        let interior: Vec<(usize, usize)> = (0..5)
            .flat_map(|r| (0..5).map(move |c| (r, c)))
            .filter(|&(r, c)| !e.is_edge(c, r))
            .collect();
        assert_eq!(interior, vec![(1, 3), (2, 3), (3, 3)]);
        assert_eq!(e.edges(), &oracle(&map)[..]);
    }

    #[test]
    fn matches_the_sentinel_oracle_on_a_patterned_map() {
        let ids: Vec<u16> = (0..13 * 9).map(|i| ((i * 7 / 5) % 3) as u16).collect();
        let map = LabelMap::from_ids(13, 9, &ids).unwrap();
        assert_eq!(detect_edges(&map).edges(), &oracle(&map)[..]);
        let thin = LabelMap::from_ids(1, 4, &[1, 1, 1, 1]).unwrap();
        assert_eq!(detect_edges(&thin).edge_count(), 4);
    }
}
