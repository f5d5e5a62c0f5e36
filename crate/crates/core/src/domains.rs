//! Cylindrical I/O domains along the filament's x axis, input writing by
//! random excitation and output reading by thresholded excitation counts.
//!
//! Bit strings are indexed so that port 0 is the most significant bit of the
//! input index: the string `10000000` is index 128 and excites domain 0.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::{AutomatonState, CellState};
use crate::error::{Error, Result};
use crate::structure::FilamentGraph;

pub const DEFAULT_PORTS: usize = 8;
pub const DEFAULT_SPACING: f64 = 15.0;
pub const DEFAULT_DOMAIN_RADIUS: f64 = 7.0;

/// Domain geometry and membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSet {
    pub spacing: f64,
    pub radius: f64,
    /// Centers k(i) = spacing·(i+1) in the normalized frame.
    pub centers: Vec<f64>,
    /// Translation subtracted from raw x so the minimum node x is 0.
    pub x_offset: f64,
    /// Sorted node indices per domain.
    pub members: Vec<Vec<u32>>,
}

impl DomainSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// True when no node belongs to two domains.
    pub fn is_disjoint(&self) -> bool {
        let mut all: Vec<u32> = self.members.iter().flatten().copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        all.len() == n
    }

    /// Writes `domain,node` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "domain,node")?;
        for (d, members) in self.members.iter().enumerate() {
            for p in members {
                writeln!(out, "{d},{p}")?;
            }
        }
        Ok(())
    }
}

/// Assigns `m` slabs `|x − x_min − spacing·(i+1)| < radius`.
pub fn define_domains(graph: &FilamentGraph, m: usize, spacing: f64, radius: f64) -> Result<DomainSet> {
    if m == 0 {
        return Err(Error::Config("domain count must be at least 1".into()));
    }
    if !(spacing > 0.0) || !(radius > 0.0) {
        return Err(Error::Config(format!(
            "domain spacing ({spacing}) and radius ({radius}) must be positive"
        )));
    }
    let x_offset = graph.bounding_box().min.x;
    let centers: Vec<f64> = (0..m).map(|i| spacing * (i + 1) as f64).collect();
    let mut members = vec![Vec::new(); m];
    for (p, pos) in graph.positions().iter().enumerate() {
        let x = pos.x - x_offset;
        for (i, &k) in centers.iter().enumerate() {
            if (x - k).abs() < radius {
                members[i].push(p as u32);
            }
        }
    }
    if let Some(i) = members.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "domain {i} (center {} Å, radius {radius} Å) contains no nodes",
            centers[i]
        )));
    }
    Ok(DomainSet {
        spacing,
        radius,
        centers,
        x_offset,
        members,
    })
}

/// Input-writing and output-reading parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    /// Probability of exciting each node of a TRUE domain.
    pub p_excite: f64,
    /// An output is 1 when more than `kappa` domain nodes are excited.
    pub kappa: u32,
    /// Readout step ζ.
    pub steps: usize,
}

impl Default for EncodingParams {
    fn default() -> Self {
        Self {
            p_excite: 0.5,
            kappa: 0,
            steps: 40,
        }
    }
}

impl EncodingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_excite) {
            return Err(Error::Config(format!(
                "excitation probability must lie in [0, 1], got {}",
                self.p_excite
            )));
        }
        Ok(())
    }
}

/// Bits of `index` as an `m`-port vector, port 0 first (most significant).
pub fn bits_from_index(index: usize, m: usize) -> Vec<bool> {
    (0..m).map(|i| (index >> (m - 1 - i)) & 1 == 1).collect()
}

pub fn index_from_bits(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Config(format!("bit string `{s}` may contain only 0 and 1"))),
        })
        .collect()
}

fn check_width(domains: &DomainSet, bits: &[bool]) -> Result<()> {
    if bits.len() != domains.len() {
        return Err(Error::Contract(format!(
            "{} input bits for {} domains",
            bits.len(),
            domains.len()
        )));
    }
    Ok(())
}

/// Nodes to excite for `bits`, ascending and without duplicates.
///
/// Draws one Bernoulli(`p_excite`) per node of each TRUE domain, domains in
/// port order and nodes in index order.
pub fn draw_excitation<R: Rng + ?Sized>(
    domains: &DomainSet,
    bits: &[bool],
    p_excite: f64,
    rng: &mut R,
) -> Result<Vec<u32>> {
    check_width(domains, bits)?;
    if !(0.0..=1.0).contains(&p_excite) {
        return Err(Error::Config(format!("excitation probability {p_excite} outside [0, 1]")));
    }
    let mut out = Vec::new();
    for (members, _) in domains.members.iter().zip(bits).filter(|(_, &b)| b) {
        for &p in members {
            if rng.gen_bool(p_excite) {
                out.push(p);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Initial state for `bits` on a graph of `n` nodes at t = 0.
pub fn encode_input<R: Rng + ?Sized>(
    n: usize,
    domains: &DomainSet,
    bits: &[bool],
    params: &EncodingParams,
    rng: &mut R,
) -> Result<AutomatonState> {
    params.validate()?;
    let mut state = AutomatonState::resting(n);
    for p in draw_excitation(domains, bits, params.p_excite, rng)? {
        let slot = state
            .states
            .get_mut(p as usize)
            .ok_or_else(|| Error::Contract(format!("domain node {p} outside a {n}-node state")))?;
        *slot = CellState::Excited;
    }
    Ok(state)
}

/// Number of excited nodes in each domain.
pub fn excited_counts(states: &[CellState], domains: &DomainSet) -> Vec<u32> {
    domains
        .members
        .iter()
        .map(|m| m.iter().filter(|&&p| states[p as usize] == CellState::Excited).count() as u32)
        .collect()
}

/// `O_i = 1` iff more than `kappa` nodes of domain i are excited.
pub fn read_output(states: &[CellState], domains: &DomainSet, kappa: u32) -> Vec<bool> {
    excited_counts(states, domains).into_iter().map(|c| c > kappa).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Point3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> FilamentGraph {
        let pts: Vec<Point3> = xs.iter().map(|&x| Point3::new(x, 0.0, 0.0)).collect();
        FilamentGraph::from_positions(&pts).unwrap()
    }

    #[test]
    fn strict_membership() {
        // offset node at x = 0 anchors the frame
        let g = line(&[0.0, 14.0, 15.0, 16.0, 17.0, 13.0]);
        let d = define_domains(&g, 1, 15.0, 2.0).unwrap();
        // 17 = k + r_s and 13 = k − r_s are excluded
        assert_eq!(d.members[0], vec![1, 2, 3]);
        assert_eq!(d.centers, vec![15.0]);
    }

    #[test]
    fn frame_is_anchored_at_min_x() {
        let g = line(&[100.0, 115.0]);
        let d = define_domains(&g, 1, 15.0, 1.0).unwrap();
        assert_eq!(d.x_offset, 100.0);
        assert_eq!(d.members[0], vec![1]);
    }

    #[test]
    fn empty_domain_is_config_error() {
        let g = line(&[0.0, 15.0]);
        let err = define_domains(&g, 2, 15.0, 2.0).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("domain 1")), "{err}");
    }

    #[test]
    fn bit_index_order() {
        assert_eq!(bits_from_index(0b0101_1111, 8), parse_bits("01011111").unwrap());
        assert_eq!(index_from_bits(&parse_bits("10000000").unwrap()), 128);
        assert_eq!(bits_to_string(&bits_from_index(5, 4)), "0101");
        assert!(parse_bits("01a").is_err());
    }

    fn two_domain_graph() -> (FilamentGraph, DomainSet) {
        let g = line(&[0.0, 14.0, 15.0, 16.0, 29.0, 30.0, 45.0]);
        let d = define_domains(&g, 2, 15.0, 2.0).unwrap();
        (g, d)
    }

    #[test]
    fn all_zero_bits_give_rest() {
        let (g, d) = two_domain_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = encode_input(g.len(), &d, &[false, false], &EncodingParams::default(), &mut rng).unwrap();
        assert!(s.is_quiescent());
        assert_eq!(s.time, 0);
    }

    #[test]
    fn certain_excitation_fills_domains() {
        let (g, d) = two_domain_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = EncodingParams {
            p_excite: 1.0,
            ..Default::default()
        };
        let s = encode_input(g.len(), &d, &[true, true], &params, &mut rng).unwrap();
        let excited: Vec<usize> = (0..g.len()).filter(|&p| s.states[p] == CellState::Excited).collect();
        assert_eq!(excited, vec![1, 2, 3, 4, 5]);
        assert_eq!(read_output(&s.states, &d, 0), vec![true, true]);
    }

    #[test]
    fn wrong_width_rejected() {
        let (g, d) = two_domain_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(encode_input(g.len(), &d, &[true], &EncodingParams::default(), &mut rng).is_err());
    }

    #[test]
    fn output_threshold_is_strict() {
        let g = line(&[0.0, 15.0, 30.0, 45.0, 60.0]);
        let d = define_domains(&g, 4, 15.0, 2.0).unwrap();
        let mut s = AutomatonState::resting(g.len());
        s.states[4] = CellState::Excited; // x = 60 → domain 3
        assert_eq!(bits_to_string(&read_output(&s.states, &d, 0)), "0001");
        assert_eq!(bits_to_string(&read_output(&s.states, &d, 1)), "0000");
        s.states[4] = CellState::Refractory;
        assert_eq!(bits_to_string(&read_output(&s.states, &d, 0)), "0000");
    }

    #[test]
    fn domain_csv() {
        let (_, d) = two_domain_graph();
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "domain,node\n0,1\n0,2\n0,3\n1,4\n1,5\n");
        assert!(d.is_disjoint());
    }
}
