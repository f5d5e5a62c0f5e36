//! Hard (bonded) and soft (spatial) neighborhoods.
//!
//! Both neighbor relations are stored in compressed-sparse-row form: one flat
//! sorted index array per relation plus per-node offsets. The update kernel
//! streams these arrays every step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::SpatialIndex;
use crate::structure::FilamentGraph;

pub const DEFAULT_RADIUS: f64 = 10.0;
pub const DEFAULT_SOFT_WEIGHT: f64 = 0.9;

/// Which neighbor relation to inspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborKind {
    Hard,
    Soft,
}

/// Flat adjacency: neighbors of `p` are `targets[offsets[p]..offsets[p + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Csr {
    fn from_lists(lists: &[Vec<u32>]) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        offsets.push(0);
        for l in lists {
            targets.extend_from_slice(l);
            offsets.push(targets.len() as u32);
        }
        Self { offsets, targets }
    }

    #[inline]
    pub fn neighbors(&self, p: usize) -> &[u32] {
        &self.targets[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }

    #[inline]
    pub fn degree(&self, p: usize) -> usize {
        (self.offsets[p + 1] - self.offsets[p]) as usize
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn entry_count(&self) -> usize {
        self.targets.len()
    }
}

/// Per-node hard neighbors u(p), soft neighbors w(p), radius and soft weight.
///
/// Invariants (checked on construction): lists are sorted and unique, no node
/// lists itself, u(p) and w(p) are disjoint, and both relations are symmetric.
#[derive(Debug, Clone)]
pub struct NeighborhoodTable {
    hard: Csr,
    soft: Csr,
    radius: f64,
    soft_weight: f64,
}

impl NeighborhoodTable {
    /// Builds a table from explicit per-node lists, validating every invariant.
    pub fn from_lists(
        hard: Vec<Vec<u32>>,
        soft: Vec<Vec<u32>>,
        radius: f64,
        soft_weight: f64,
    ) -> Result<Self> {
        check_weight(soft_weight)?;
        if hard.len() != soft.len() {
            return Err(Error::Contract(format!(
                "hard lists cover {} nodes, soft lists {}",
                hard.len(),
                soft.len()
            )));
        }
        let n = hard.len();
        for (kind, lists) in [("hard", &hard), ("soft", &soft)] {
            for (p, l) in lists.iter().enumerate() {
                if l.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Contract(format!("{kind} list of node {p} not sorted/unique")));
                }
                if l.iter().any(|&s| s as usize >= n) {
                    return Err(Error::Contract(format!("{kind} list of node {p} out of range")));
                }
                if l.binary_search(&(p as u32)).is_ok() {
                    return Err(Error::Contract(format!("node {p} is its own {kind} neighbor")));
                }
                for &s in l {
                    if lists[s as usize].binary_search(&(p as u32)).is_err() {
                        return Err(Error::Contract(format!(
                            "{kind} relation not symmetric between {p} and {s}"
                        )));
                    }
                }
            }
        }
        for p in 0..n {
            if hard[p].iter().any(|s| soft[p].binary_search(s).is_ok()) {
                return Err(Error::Contract(format!("node {p} has overlapping hard and soft neighbors")));
            }
        }
        Ok(Self {
            hard: Csr::from_lists(&hard),
            soft: Csr::from_lists(&soft),
            radius,
            soft_weight,
        })
    }

    pub fn len(&self) -> usize {
        self.hard.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn hard(&self, p: usize) -> &[u32] {
        self.hard.neighbors(p)
    }

    #[inline]
    pub fn soft(&self, p: usize) -> &[u32] {
        self.soft.neighbors(p)
    }

    pub fn hard_csr(&self) -> &Csr {
        &self.hard
    }

    pub fn soft_csr(&self) -> &Csr {
        &self.soft
    }

    /// |u(p)| + |w(p)|, the denominator of the neighbor ratio.
    #[inline]
    pub fn neighborhood_size(&self, p: usize) -> usize {
        self.hard.degree(p) + self.soft.degree(p)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn soft_weight(&self) -> f64 {
        self.soft_weight
    }

    /// Same lists with a different soft weight.
    pub fn with_soft_weight(&self, soft_weight: f64) -> Result<Self> {
        check_weight(soft_weight)?;
        Ok(Self {
            soft_weight,
            ..self.clone()
        })
    }

    pub fn degree(&self, p: usize, kind: NeighborKind) -> usize {
        match kind {
            NeighborKind::Hard => self.hard.degree(p),
            NeighborKind::Soft => self.soft.degree(p),
        }
    }
}

fn check_weight(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::Config(format!("soft weight must lie in [0, 1], got {w}")))
    }
}

/// Builds hard neighborhoods from bond edges and soft neighborhoods from a
/// radius query, excluding hard neighbors and the node itself.
pub fn build_neighborhoods(
    graph: &FilamentGraph,
    index: &SpatialIndex,
    radius: f64,
    soft_weight: f64,
) -> Result<NeighborhoodTable> {
    if !(radius > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {radius}")));
    }
    check_weight(soft_weight)?;
    let n = graph.len();
    let mut hard: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in graph.edges() {
        hard[a as usize].push(b);
        hard[b as usize].push(a);
    }
    for l in &mut hard {
        l.sort_unstable();
    }
    let positions = graph.positions();
    let mut soft = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for p in 0..n {
        index.radius_query_into(positions, p, radius, &mut buf)?;
        let h = &hard[p];
        soft.push(
            buf.iter()
                .copied()
                .filter(|s| h.binary_search(s).is_err())
                .collect::<Vec<u32>>(),
        );
    }
    let table = NeighborhoodTable {
        hard: Csr::from_lists(&hard),
        soft: Csr::from_lists(&soft),
        radius,
        soft_weight,
    };
    log::debug!(
        "neighborhoods: {} hard entries, {} soft entries over {n} nodes",
        table.hard.entry_count(),
        table.soft.entry_count()
    );
    Ok(table)
}

/// Builds the spatial index with cell edge = `radius` and the neighborhood table.
pub fn neighborhoods_for(graph: &FilamentGraph, radius: f64, soft_weight: f64) -> Result<NeighborhoodTable> {
    let index = SpatialIndex::build(graph.positions(), radius)?;
    build_neighborhoods(graph, &index, radius, soft_weight)
}

/// Fraction of nodes with each degree, for degrees that occur.
pub fn degree_histogram(table: &NeighborhoodTable, kind: NeighborKind) -> BTreeMap<usize, f64> {
    let n = table.len();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for p in 0..n {
        *counts.entry(table.degree(p, kind)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(d, c)| (d, c as f64 / n as f64))
        .collect()
}

/// Fraction of nodes whose degree lies in `lo..=hi`.
pub fn degree_band_ratio(table: &NeighborhoodTable, kind: NeighborKind, lo: usize, hi: usize) -> f64 {
    if table.is_empty() {
        return 0.0;
    }
    let hits = (0..table.len())
        .filter(|&p| (lo..=hi).contains(&table.degree(p, kind)))
        .count();
    hits as f64 / table.len() as f64
}
