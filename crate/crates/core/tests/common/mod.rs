//! Test-only oracles. Nothing here calls into the kernels it is used to check.
#![allow(dead_code)]

use std::collections::HashSet;

use actin_automata::{
    AtomRecord, BondConfig, BooleanCover, CellState, FilamentGraph, NeighborhoodTable, Point3, RuleKind, RuleParams,
};
use rand::Rng;

/// All-pairs scan: nodes s != p with distance <= radius, ascending.
pub fn brute_radius(points: &[Point3], p: usize, radius: f64) -> Vec<u32> {
    (0..points.len())
        .filter(|&s| s != p)
        .filter(|&s| {
            let (a, b) = (points[p], points[s]);
            ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt() <= radius
        })
        .map(|s| s as u32)
        .collect()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, side: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
        .collect()
}

pub fn atoms(points: &[Point3]) -> Vec<AtomRecord> {
    points
        .iter()
        .enumerate()
        .map(|(i, &position)| AtomRecord {
            serial: i as u32 + 1,
            element: "C".into(),
            position,
        })
        .collect()
}

/// Graph whose edges join all pairs within `cutoff`, computed by brute force.
pub fn brute_graph(points: &[Point3], cutoff: f64) -> FilamentGraph {
    let mut edges = Vec::new();
    for i in 0..points.len() {
        for j in brute_radius(points, i, cutoff) {
            if j as usize > i {
                edges.push((i as u32, j));
            }
        }
    }
    FilamentGraph::new(atoms(points), edges).unwrap()
}

/// Naive neighborhoods rebuilt from geometry with hash sets.
pub struct NaiveNeighborhoods {
    pub hard: Vec<HashSet<usize>>,
    pub soft: Vec<HashSet<usize>>,
    pub mu: f64,
}

impl NaiveNeighborhoods {
    pub fn from_graph(graph: &FilamentGraph, radius: f64, mu: f64) -> Self {
        let n = graph.len();
        let edges: HashSet<(usize, usize)> = graph
            .edges()
            .iter()
            .flat_map(|&(a, b)| [(a as usize, b as usize), (b as usize, a as usize)])
            .collect();
        let pts = graph.positions();
        let mut hard = vec![HashSet::new(); n];
        let mut soft = vec![HashSet::new(); n];
        for p in 0..n {
            for s in 0..n {
                if s == p {
                    continue;
                }
                if edges.contains(&(p, s)) {
                    hard[p].insert(s);
                } else if brute_radius(pts, p, radius).contains(&(s as u32)) {
                    soft[p].insert(s);
                }
            }
        }
        Self { hard, soft, mu }
    }

    pub fn from_lists(hard: &[Vec<u32>], mu: f64) -> Self {
        Self {
            hard: hard.iter().map(|l| l.iter().map(|&s| s as usize).collect()).collect(),
            soft: vec![HashSet::new(); hard.len()],
            mu,
        }
    }

    pub fn gamma(&self, p: usize, states: &[CellState]) -> f64 {
        let h = self.hard[p].iter().filter(|&&s| states[s] == CellState::Excited).count();
        let w = self.soft[p].iter().filter(|&&s| states[s] == CellState::Excited).count();
        let size = self.hard[p].len() + self.soft[p].len();
        if size == 0 {
            0.0
        } else {
            (h as f64 + self.mu * w as f64) / size as f64
        }
    }

    /// Reference step written directly from the rule definitions.
    pub fn step(&self, states: &[CellState], rule: &RuleParams) -> Vec<CellState> {
        let inside = |lo: f64, hi: f64, g: f64| lo <= g && g <= hi;
        (0..states.len())
            .map(|p| {
                let g = self.gamma(p, states);
                match (rule.kind, states[p]) {
                    (_, CellState::Resting) if inside(rule.birth.lo, rule.birth.hi, g) => CellState::Excited,
                    (_, CellState::Resting) => CellState::Resting,
                    (RuleKind::Semitotalistic, CellState::Excited) => {
                        let s = rule.survive.unwrap();
                        if inside(s.lo, s.hi, g) {
                            CellState::Excited
                        } else {
                            CellState::Resting
                        }
                    }
                    (RuleKind::Excitable, CellState::Excited) => CellState::Refractory,
                    (_, CellState::Refractory) => CellState::Resting,
                }
            })
            .collect()
    }
}

/// Moore-neighborhood hard lists on a `w × h` torus, node = y·w + x.
pub fn moore_torus(w: usize, h: usize) -> Vec<Vec<u32>> {
    (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            let mut v: Vec<u32> = Vec::new();
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = (x + dx).rem_euclid(w as i64) as usize;
                    let ny = (y + dy).rem_euclid(h as i64) as usize;
                    v.push((ny * w + nx) as u32);
                }
            }
            v.sort_unstable();
            v
        })
        .collect()
}

pub fn moore_table(w: usize, h: usize) -> NeighborhoodTable {
    NeighborhoodTable::from_lists(moore_torus(w, h), vec![Vec::new(); w * h], 1.5, 0.9).unwrap()
}

/// Textbook Conway step on a torus of live cells.
pub fn conway_step(live: &HashSet<(i64, i64)>, w: i64, h: i64) -> HashSet<(i64, i64)> {
    let mut next = HashSet::new();
    for y in 0..h {
        for x in 0..w {
            let mut n = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy) != (0, 0) && live.contains(&((x + dx).rem_euclid(w), (y + dy).rem_euclid(h))) {
                        n += 1;
                    }
                }
            }
            let alive = live.contains(&(x, y));
            if n == 3 || (alive && n == 2) {
                next.insert((x, y));
            }
        }
    }
    next
}

pub fn cells_to_states(live: &HashSet<(i64, i64)>, w: usize, h: usize) -> Vec<CellState> {
    let mut s = vec![CellState::Resting; w * h];
    for &(x, y) in live {
        s[y as usize * w + x as usize] = CellState::Excited;
    }
    s
}

/// Ring of `n` nodes, hard edges to both neighbours.
pub fn ring_lists(n: usize) -> Vec<Vec<u32>> {
    (0..n)
        .map(|p| {
            let mut v = vec![((p + n - 1) % n) as u32, ((p + 1) % n) as u32];
            v.sort_unstable();
            v
        })
        .collect()
}

/// Cylinder of jittered lattice points along x: lattice spacing 1.5 Å, so
/// bonds at the default cutoff join lattice neighbours.
pub fn synthetic_filament<R: Rng>(rng: &mut R, length: f64, radius: f64) -> FilamentGraph {
    let step = 1.5;
    let mut pts = Vec::new();
    let r_steps = (radius / step).ceil() as i64;
    let mut x = 0.0;
    while x <= length {
        for iy in -r_steps..=r_steps {
            for iz in -r_steps..=r_steps {
                let (y, z) = (iy as f64 * step, iz as f64 * step);
                if y * y + z * z <= radius * radius {
                    pts.push(Point3::new(
                        x + rng.gen_range(-0.1..0.1),
                        y + rng.gen_range(-0.1..0.1),
                        z + rng.gen_range(-0.1..0.1),
                    ));
                }
            }
        }
        x += step;
    }
    let atoms = atoms(&pts);
    let edges = actin_automata::infer_bonds(&atoms, &BondConfig::default()).unwrap();
    FilamentGraph::new(atoms, edges).unwrap()
}

/// Every product is prime: dropping any literal admits an off-set minterm.
pub fn is_prime_cover(cover: &BooleanCover, on: &HashSet<u32>) -> bool {
    let n = cover.n_vars();
    cover.products().iter().all(|c| {
        (0..n).all(|bit| {
            let b = 1u32 << bit;
            if c.care & b == 0 {
                return true;
            }
            let care = c.care & !b;
            let value = c.value & !b;
            (0..1u32 << n).any(|m| m & care == value && !on.contains(&m))
        })
    })
}

/// Removing any product changes the function.
pub fn is_irredundant(cover: &BooleanCover, on: &HashSet<u32>) -> bool {
    let ps = cover.products();
    (0..ps.len()).all(|k| {
        on.iter()
            .any(|&m| ps[k].contains(m) && !ps.iter().enumerate().any(|(j, c)| j != k && c.contains(m)))
    })
}

/// Cover equals the on-set on every input.
pub fn matches_function(cover: &BooleanCover, on: &HashSet<u32>) -> bool {
    (0..1u32 << cover.n_vars()).all(|m| cover.evaluate(m) == on.contains(&m))
}

/// Stand-in with the size and packing of a 14.8k-atom filament: bonded chains
/// along x (1.45 Å links) on a 4.26 Å transverse grid inside a 29.7 Å radius,
/// which gives roughly 150 nodes within 10 Å of an interior node.
pub fn mock_filament<R: Rng>(rng: &mut R) -> FilamentGraph {
    let (spacing, link, radius, length) = (4.26f64, 1.45f64, 29.7f64, 140.0f64);
    let k = (radius / spacing).ceil() as i64;
    let mut pts = Vec::new();
    for iy in -k..=k {
        for iz in -k..=k {
            let (y, z) = (iy as f64 * spacing, iz as f64 * spacing);
            if y * y + z * z > radius * radius {
                continue;
            }
            let mut x = 0.0;
            while x <= length {
                pts.push(Point3::new(
                    x + rng.gen_range(-0.1..0.1),
                    y + rng.gen_range(-0.1..0.1),
                    z + rng.gen_range(-0.1..0.1),
                ));
                x += link;
            }
        }
    }
    let atoms = atoms(&pts);
    let edges = actin_automata::infer_bonds(&atoms, &BondConfig::default()).unwrap();
    FilamentGraph::new(atoms, edges).unwrap()
}
