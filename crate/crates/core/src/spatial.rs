//! Uniform-grid spatial index for fixed-radius neighbor queries.
//!
//! Points are bucketed into cubic cells of edge `cell_edge` covering the
//! bounding box. Buckets are stored flat (counting sort) so a query walks at
//! most 27 contiguous slices.

use crate::error::{Error, Result};
use crate::structure::{BoundingBox, Point3};

/// Upper bound on grid cells; guards against a tiny cell edge over a large box.
const MAX_CELLS: usize = 1 << 24;

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    origin: Point3,
    cell_edge: f64,
    dims: [usize; 3],
    /// `cell_start[c]..cell_start[c + 1]` indexes `members` for cell `c`.
    cell_start: Vec<u32>,
    members: Vec<u32>,
    cell_of: Vec<u32>,
}

impl SpatialIndex {
    /// Buckets `points` into a grid with the given cell edge.
    pub fn build(points: &[Point3], cell_edge: f64) -> Result<Self> {
        if !(cell_edge > 0.0) || !cell_edge.is_finite() {
            return Err(Error::Config(format!("cell edge must be positive, got {cell_edge}")));
        }
        let Some(bb) = BoundingBox::of(points) else {
            return Ok(Self {
                origin: Point3::default(),
                cell_edge,
                dims: [1, 1, 1],
                cell_start: vec![0, 0],
                members: Vec::new(),
                cell_of: Vec::new(),
            });
        };
        let dim = |lo: f64, hi: f64| ((hi - lo) / cell_edge).floor() as usize + 1;
        let dims = [
            dim(bb.min.x, bb.max.x),
            dim(bb.min.y, bb.max.y),
            dim(bb.min.z, bb.max.z),
        ];
        let n_cells = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .filter(|&v| v <= MAX_CELLS)
            .ok_or_else(|| {
                Error::Config(format!(
                    "cell edge {cell_edge} Å is too small for a {:.1}×{:.1}×{:.1} Å box",
                    bb.max.x - bb.min.x,
                    bb.max.y - bb.min.y,
                    bb.max.z - bb.min.z
                ))
            })?;

        let mut index = Self {
            origin: bb.min,
            cell_edge,
            dims,
            cell_start: vec![0; n_cells + 1],
            members: vec![0; points.len()],
            cell_of: Vec::with_capacity(points.len()),
        };
        for p in points {
            let c = index.flat(index.cell_coords(p));
            index.cell_of.push(c as u32);
            index.cell_start[c + 1] += 1;
        }
        for c in 0..n_cells {
            index.cell_start[c + 1] += index.cell_start[c];
        }
        let mut fill = index.cell_start.clone();
        for (i, &c) in index.cell_of.iter().enumerate() {
            let slot = &mut fill[c as usize];
            index.members[*slot as usize] = i as u32;
            *slot += 1;
        }
        Ok(index)
    }

    pub fn cell_edge(&self) -> f64 {
        self.cell_edge
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Node indices bucketed in flat cell `c`.
    pub fn bucket(&self, c: usize) -> &[u32] {
        &self.members[self.cell_start[c] as usize..self.cell_start[c + 1] as usize]
    }

    pub fn cell_count(&self) -> usize {
        self.cell_start.len() - 1
    }

    fn cell_coords(&self, p: &Point3) -> [usize; 3] {
        let c = |v: f64, o: f64, d: usize| {
            let k = ((v - o) / self.cell_edge).floor();
            (k.max(0.0) as usize).min(d - 1)
        };
        [
            c(p.x, self.origin.x, self.dims[0]),
            c(p.y, self.origin.y, self.dims[1]),
            c(p.z, self.origin.z, self.dims[2]),
        ]
    }

    #[inline]
    fn flat(&self, [x, y, z]: [usize; 3]) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    /// Nodes `s != p` with `distance(p, s) <= radius`, ascending.
    ///
    /// `points` must be the slice the index was built from.
    pub fn radius_query(&self, points: &[Point3], p: usize, radius: f64) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        self.radius_query_into(points, p, radius, &mut out)?;
        Ok(out)
    }

    /// As [`radius_query`](Self::radius_query), reusing `out`.
    pub fn radius_query_into(
        &self,
        points: &[Point3],
        p: usize,
        radius: f64,
        out: &mut Vec<u32>,
    ) -> Result<()> {
        if radius > self.cell_edge {
            return Err(Error::Config(format!(
                "query radius {radius} Å exceeds index cell edge {} Å",
                self.cell_edge
            )));
        }
        if points.len() != self.members.len() || p >= points.len() {
            return Err(Error::Contract(format!(
                "query node {p} not in an index of {} points",
                self.members.len()
            )));
        }
        out.clear();
        let centre = points[p];
        let [cx, cy, cz] = self.cell_coords(&centre);
        let span = |c: usize, d: usize| c.saturating_sub(1)..=(c + 1).min(d - 1);
        for z in span(cz, self.dims[2]) {
            for y in span(cy, self.dims[1]) {
                for x in span(cx, self.dims[0]) {
                    for &s in self.bucket(self.flat([x, y, z])) {
                        if s as usize != p && centre.distance(&points[s as usize]) <= radius {
                            out.push(s);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_node_has_no_neighbors() {
        let pts = [Point3::new(1.0, 1.0, 1.0)];
        let idx = SpatialIndex::build(&pts, 10.0).unwrap();
        assert!(idx.radius_query(&pts, 0, 10.0).unwrap().is_empty());
    }

    #[test]
    fn boundary_distance_is_inclusive() {
        let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(10.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&pts, 10.0).unwrap();
        assert_eq!(idx.radius_query(&pts, 0, 10.0).unwrap(), vec![1]);
        assert_eq!(idx.radius_query(&pts, 1, 10.0).unwrap(), vec![0]);
    }

    #[test]
    fn radius_larger_than_cell_rejected() {
        let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&pts, 2.0).unwrap();
        assert!(matches!(idx.radius_query(&pts, 0, 2.5), Err(Error::Config(_))));
    }

    #[test]
    fn every_point_in_exactly_one_bucket() {
        let pts: Vec<Point3> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                Point3::new(t.cos() * 7.0 + t, t.sin() * 7.0, (i % 13) as f64)
            })
            .collect();
        let idx = SpatialIndex::build(&pts, 3.0).unwrap();
        let mut seen = vec![0u32; pts.len()];
        for c in 0..idx.cell_count() {
            for &m in idx.bucket(c) {
                seen[m as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&k| k == 1));
    }

    #[test]
    fn empty_index() {
        let idx = SpatialIndex::build(&[], 5.0).unwrap();
        assert!(idx.is_empty());
    }

    #[test]
    fn tiny_cell_over_huge_box_rejected() {
        let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0e6, 1.0e6, 1.0e6)];
        assert!(matches!(SpatialIndex::build(&pts, 0.01), Err(Error::Config(_))));
    }
}
