//! Finite lattice geometries with open boundaries.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square,
    Diamond,
    Polygon,
}

/// An ordered set of integer lattice sites.
///
/// Sites are stored row-major by `(y, x)`, which fixes the layout of state
/// vectors and eigenvector files. Boundary sites are those with fewer than
/// four in-set nearest neighbors, i.e. the sites on the geometric edge.
#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    pub shape: Shape,
    pub size: usize,
    sites: Vec<(i32, i32)>,
    index: HashMap<(i32, i32), usize>,
    boundary: Vec<bool>,
}

impl LatticeGeometry {
    fn from_sites(shape: Shape, size: usize, mut sites: Vec<(i32, i32)>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("geometry has no sites".into()));
        }
        sites.sort_by_key(|&(x, y)| (y, x));
        sites.dedup();
        let index: HashMap<(i32, i32), usize> =
            sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let boundary = sites
            .iter()
            .map(|&(x, y)| {
                let neighbors = [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)];
                neighbors.iter().filter(|n| index.contains_key(n)).count() < 4
            })
            .collect();
        Ok(Self { shape, size, sites, index, boundary })
    }

    /// `L x L` square, sites `(x, y)` with `0 <= x, y < L`.
    pub fn square(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("square size must be >= 1".into()));
        }
        let n = l as i32;
        let sites = (0..n).flat_map(|y| (0..n).map(move |x| (x, y))).collect();
        Self::from_sites(Shape::Square, l, sites)
    }

    /// Diamond of size `L`: sites with `|x - L/2| + |y - L/2| <= L/2`.
    pub fn diamond(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("diamond size must be >= 1".into()));
        }
        let c = l as f64 / 2.0;
        let r = l as f64 / 2.0 + 1e-9;
        let n = l as i32;
        let sites = (0..=n)
            .flat_map(|y| (0..=n).map(move |x| (x, y)))
            .filter(|&(x, y)| (x as f64 - c).abs() + (y as f64 - c).abs() <= r)
            .collect();
        Self::from_sites(Shape::Diamond, l, sites)
    }

    /// Geometry from an explicit site list (deduplicated, reordered).
    pub fn from_points(sites: Vec<(i32, i32)>) -> Result<Self> {
        let size = sites
            .iter()
            .map(|&(x, y)| x.max(y))
            .max()
            .unwrap_or(0)
            .max(0) as usize;
        Self::from_sites(Shape::Polygon, size, sites)
    }

    /// Sites strictly inside or on the edge of a simple polygon
    /// (vertices in order, closed implicitly).
    pub fn polygon(vertices: &[(f64, f64)]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument("polygon needs at least 3 vertices".into()));
        }
        let min_x = vertices.iter().map(|v| v.0).fold(f64::INFINITY, f64::min).floor() as i32;
        let max_x = vertices.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max).ceil() as i32;
        let min_y = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min).floor() as i32;
        let max_y = vertices.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max).ceil() as i32;
        let mut sites = Vec::new();
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                if point_in_polygon(x as f64, y as f64, vertices) {
                    sites.push((x, y));
                }
            }
        }
        let size = (max_x - min_x).max(max_y - min_y).max(0) as usize;
        Self::from_sites(Shape::Polygon, size, sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[(i32, i32)] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> (i32, i32) {
        self.sites[i]
    }

    pub fn index_of(&self, site: (i32, i32)) -> Option<usize> {
        self.index.get(&site).copied()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Graph distance of every site to the nearest boundary site
    /// (boundary sites are at distance 0). Multi-source BFS.
    pub fn boundary_distance(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.sites.len()];
        let mut queue = VecDeque::new();
        for (i, &b) in self.boundary.iter().enumerate() {
            if b {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let (x, y) = self.sites[i];
            for n in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if let Some(j) = self.index_of(n) {
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        dist
    }

    /// Serialize as `index,x,y,is_boundary` CSV lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,is_boundary\n");
        for (i, &(x, y)) in self.sites.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", i, x, y, u8::from(self.boundary[i])));
        }
        out
    }
}

/// Even-odd crossing test with on-edge points counted inside.
fn point_in_polygon(px: f64, py: f64, vertices: &[(f64, f64)]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let (x1, y1) = vertices[i];
        let (x2, y2) = vertices[(i + 1) % n];
        // on-segment check
        let cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1);
        if cross.abs() < 1e-9
            && px >= x1.min(x2) - 1e-9
            && px <= x1.max(x2) + 1e-9
            && py >= y1.min(y2) - 1e-9
            && py <= y1.max(y2) + 1e-9
        {
            return true;
        }
        if (y1 > py) != (y2 > py) {
            let x_at = x1 + (py - y1) / (y2 - y1) * (x2 - x1);
            if px < x_at {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts_and_boundary() {
        let g = LatticeGeometry::square(5).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.boundary_count(), 16);
        // row-major by (y, x)
        assert_eq!(g.site(0), (0, 0));
        assert_eq!(g.site(1), (1, 0));
        assert_eq!(g.site(5), (0, 1));
    }

    #[test]
    fn diamond_is_l1_ball() {
        let g = LatticeGeometry::diamond(40).unwrap();
        // |x-20|+|y-20| <= 20 has 2*20^2 + 2*20 + 1 integer points.
        assert_eq!(g.len(), 841);
        for i in 0..g.len() {
            let (x, y) = g.site(i);
            let l1 = (x - 20).abs() + (y - 20).abs();
            assert!(l1 <= 20);
            assert_eq!(g.is_boundary(i), l1 == 20);
        }
    }

    #[test]
    fn boundary_distance_rings() {
        let g = LatticeGeometry::diamond(8).unwrap();
        let dist = g.boundary_distance();
        for i in 0..g.len() {
            let (x, y) = g.site(i);
            let l1 = (x - 4).abs() + (y - 4).abs();
            assert_eq!(dist[i], (4 - l1) as usize);
        }
    }

    #[test]
    fn polygon_reproduces_square() {
        let g = LatticeGeometry::polygon(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)])
            .unwrap();
        assert_eq!(g.len(), 25);
    }

    #[test]
    fn sites_are_unique() {
        let g = LatticeGeometry::diamond(12).unwrap();
        let mut seen = std::collections::HashSet::new();
        assert!(g.sites().iter().all(|s| seen.insert(*s)));
    }
}
