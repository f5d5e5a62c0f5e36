//! Atomic structure ingest: PDB fixed-column records to a bonded node graph.
//!
//! Only the first `MODEL` of a file is read. Bonds are not taken from
//! `CONNECT` records; they are inferred from a pairwise distance cutoff.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::SpatialIndex;

/// Cartesian position in Ångström.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    #[inline]
    pub fn axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Coordinate axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Config(format!("unknown axis `{other}`"))),
        }
    }
}

/// One `ATOM`/`HETATM` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub serial: u32,
    pub element: String,
    pub position: Point3,
}

/// Axis-aligned bounds of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point3,
    pub max: Point3,
}

impl BoundingBox {
    /// Bounds of `points`; `None` when empty.
    pub fn of(points: &[Point3]) -> Option<Self> {
        let first = *points.first()?;
        let mut bb = BoundingBox {
            min: first,
            max: first,
        };
        for p in &points[1..] {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.min.z = bb.min.z.min(p.z);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
            bb.max.z = bb.max.z.max(p.z);
        }
        Some(bb)
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        self.max.axis(axis) - self.min.axis(axis)
    }
}

/// Parameters for distance-based bond inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondConfig {
    /// Maximum bonded distance in Å (inclusive).
    pub cutoff: f64,
    /// Mean degree above which the cutoff is rejected as non-chemical.
    pub max_mean_degree: f64,
}

impl Default for BondConfig {
    fn default() -> Self {
        Self {
            cutoff: 1.9,
            max_mean_degree: 8.0,
        }
    }
}

/// Immutable bonded atom graph.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone)]
pub struct FilamentGraph {
    nodes: Vec<AtomRecord>,
    positions: Vec<Point3>,
    edges: Vec<(u32, u32)>,
    bounding_box: BoundingBox,
}

impl FilamentGraph {
    /// Builds a graph from atoms and an edge list. Edge pairs may come in any
    /// orientation; they are normalized to `i < j` and sorted.
    pub fn new(nodes: Vec<AtomRecord>, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Structure("structure contains no atoms".into()));
        }
        if nodes.len() > u32::MAX as usize {
            return Err(Error::Structure("too many atoms".into()));
        }
        let n = nodes.len() as u32;
        let mut norm = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Structure(format!("edge ({a}, {b}) references a missing node")));
            }
            if a == b {
                return Err(Error::Structure(format!("self-loop on node {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(Error::Structure("duplicate edges".into()));
        }
        let positions: Vec<Point3> = nodes.iter().map(|a| a.position).collect();
        let bounding_box = BoundingBox::of(&positions).expect("non-empty");
        Ok(Self {
            nodes,
            positions,
            edges: norm,
            bounding_box,
        })
    }

    /// Unbonded graph from bare positions; serials are 1-based indices.
    pub fn from_positions(positions: &[Point3]) -> Result<Self> {
        let nodes = positions
            .iter()
            .enumerate()
            .map(|(i, &position)| AtomRecord {
                serial: i as u32 + 1,
                element: "C".into(),
                position,
            })
            .collect();
        Self::new(nodes, std::iter::empty())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[AtomRecord] {
        &self.nodes
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn bounding_box(&self) -> BoundingBox {
        self.bounding_box
    }

    /// Mean Euclidean length over all edges; `None` without edges.
    pub fn mean_bond_length(&self) -> Option<f64> {
        if self.edges.is_empty() {
            return None;
        }
        let total: f64 = self
            .edges
            .iter()
            .map(|&(a, b)| self.positions[a as usize].distance(&self.positions[b as usize]))
            .sum();
        Some(total / self.edges.len() as f64)
    }

    /// Writes `node,x,y,z` rows.
    pub fn write_nodes_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node,x,y,z")?;
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    /// Writes `i,j` rows, one per undirected edge.
    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j")?;
        for (a, b) in &self.edges {
            writeln!(out, "{a},{b}")?;
        }
        Ok(())
    }
}

impl fmt::Display for FilamentGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nodes, {} edges", self.nodes.len(), self.edges.len())
    }
}

fn column(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        return "";
    }
    line.get(start..end).unwrap_or("").trim()
}

fn element_from_name(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphabetic())
        .take(1)
        .collect::<String>()
        .to_ascii_uppercase()
}

/// Parses `ATOM`/`HETATM` records of the first model, in file order.
///
/// Lines of any other record type are ignored. An input without atom
/// records yields an empty list.
pub fn parse_structure(text: &str) -> Result<Vec<AtomRecord>> {
    let mut atoms = Vec::new();
    let mut serials = std::collections::HashSet::new();
    let mut seen_model = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let record = column(line, 0, 6);
        match record {
            "MODEL" => {
                if seen_model {
                    break;
                }
                seen_model = true;
                continue;
            }
            "ENDMDL" => break,
            "ATOM" | "HETATM" => {}
            _ => continue,
        }
        let parse_err = |what: &str| Error::Parse {
            line: line_no,
            message: what.to_string(),
        };
        let serial: u32 = column(line, 6, 11)
            .parse()
            .map_err(|_| parse_err("malformed serial number (columns 7-11)"))?;
        let mut coords = [0.0f64; 3];
        for (k, (s, e)) in [(30, 38), (38, 46), (46, 54)].into_iter().enumerate() {
            let field = column(line, s, e);
            coords[k] = field.parse().map_err(|_| {
                parse_err(&format!(
                    "malformed {} coordinate `{field}` (columns {}-{})",
                    ["x", "y", "z"][k],
                    s + 1,
                    e
                ))
            })?;
        }
        let position = Point3::new(coords[0], coords[1], coords[2]);
        if !position.is_finite() {
            return Err(parse_err("non-finite coordinate"));
        }
        let mut element = column(line, 76, 78).to_ascii_uppercase();
        if element.is_empty() {
            element = element_from_name(column(line, 12, 16));
        }
        if !serials.insert(serial) {
            return Err(Error::Structure(format!(
                "line {line_no}: duplicate atom serial {serial}"
            )));
        }
        atoms.push(AtomRecord {
            serial,
            element,
            position,
        });
    }
    Ok(atoms)
}

/// Bonds every pair of distinct atoms within `config.cutoff` Å (inclusive).
///
/// Pairs are returned as `(i, j)` with `i < j`, sorted.
pub fn infer_bonds(atoms: &[AtomRecord], config: &BondConfig) -> Result<Vec<(u32, u32)>> {
    if !(config.cutoff > 0.0) || !config.cutoff.is_finite() {
        return Err(Error::Config(format!(
            "bond cutoff must be positive, got {}",
            config.cutoff
        )));
    }
    if atoms.is_empty() {
        return Ok(Vec::new());
    }
    let positions: Vec<Point3> = atoms.iter().map(|a| a.position).collect();
    let index = SpatialIndex::build(&positions, config.cutoff)?;
    let mut edges = Vec::new();
    let mut buf = Vec::new();
    for i in 0..positions.len() {
        index.radius_query_into(&positions, i, config.cutoff, &mut buf)?;
        edges.extend(buf.iter().filter(|&&j| (j as usize) > i).map(|&j| (i as u32, j)));
    }
    let mean_degree = 2.0 * edges.len() as f64 / atoms.len() as f64;
    if mean_degree > config.max_mean_degree {
        return Err(Error::Config(format!(
            "bond cutoff {} Å gives mean degree {mean_degree:.2} > {}; not a chemical bond length",
            config.cutoff, config.max_mean_degree
        )));
    }
    Ok(edges)
}

/// Reads, parses and bonds a structure file.
pub fn load_filament(path: impl AsRef<Path>, config: &BondConfig) -> Result<FilamentGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let atoms = parse_structure(&text)?;
    if atoms.is_empty() {
        return Err(Error::Structure(format!(
            "{}: no ATOM/HETATM records",
            path.display()
        )));
    }
    let edges = infer_bonds(&atoms, config)?;
    let graph = FilamentGraph::new(atoms, edges)?;
    log::info!(
        "loaded {}: {graph}, mean bond length {:.3} Å",
        path.display(),
        graph.mean_bond_length().unwrap_or(f64::NAN)
    );
    Ok(graph)
}
