//! Synchronous automaton rules over a [`NeighborhoodTable`].
//!
//! Two rules share one driver, the weighted excited-neighbor ratio
//!
//! ```text
//! γ(p) = (|{s ∈ u(p) : s = ⋆}| + μ·|{s ∈ w(p) : s = ⋆}|) / (|u(p)| + |w(p)|)
//! ```
//!
//! which is 0 for a node without neighbors. Refractory neighbors count in the
//! denominator only.
//!
//! * semi-totalistic: `∘ → ⋆` when γ ∈ birth, `⋆ → ⋆` when γ ∈ survive,
//!   everything else becomes `∘`.
//! * excitable: `∘ → ⋆` when γ ∈ birth, `⋆ → •` and `• → ∘` unconditionally.
//!
//! Intervals are closed on both ends.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodTable;
use crate::structure::{Axis, FilamentGraph};

/// Node state. The semi-totalistic rule only uses `Resting` and `Excited`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    #[default]
    Resting = 0,
    Excited = 1,
    Refractory = 2,
}

impl CellState {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CellState::Resting),
            1 => Some(CellState::Excited),
            2 => Some(CellState::Refractory),
            _ => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            CellState::Resting => '.',
            CellState::Excited => '*',
            CellState::Refractory => 'o',
        }
    }
}

/// Closed interval `[lo, hi]` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl std::str::FromStr for Interval {
    type Err = Error;

    /// Accepts `lo,hi` or `lo:hi`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([',', ':']).map(str::trim).collect();
        let bad = || Error::Config(format!("cannot parse interval `{s}`; expected `lo,hi`"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let lo = parts[0].parse().map_err(|_| bad())?;
        let hi = parts[1].parse().map_err(|_| bad())?;
        Interval::new(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    #[serde(alias = "g")]
    Semitotalistic,
    #[serde(alias = "e")]
    Excitable,
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" | "semitotalistic" | "semi-totalistic" => Ok(RuleKind::Semitotalistic),
            "e" | "excitable" => Ok(RuleKind::Excitable),
            other => Err(Error::Config(format!("unknown rule `{other}`; use g or e"))),
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Semitotalistic => "semitotalistic",
            RuleKind::Excitable => "excitable",
        })
    }
}

/// Transition parameters. The soft weight μ lives in the neighborhood table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    pub kind: RuleKind,
    /// `[θ'∘, θ''∘]`: γ range that excites a resting node.
    pub birth: Interval,
    /// `[θ'⋆, θ''⋆]`: γ range that keeps an excited node excited (semi-totalistic only).
    pub survive: Option<Interval>,
}

impl RuleParams {
    pub fn semitotalistic(birth: Interval, survive: Interval) -> Self {
        Self {
            kind: RuleKind::Semitotalistic,
            birth,
            survive: Some(survive),
        }
    }

    pub fn excitable(birth: Interval) -> Self {
        Self {
            kind: RuleKind::Excitable,
            birth,
            survive: None,
        }
    }

    /// Default intervals for each rule: `[0.25, 0.375]` for both
    /// semi-totalistic intervals, `[0.15, 0.25]` for the excitable rule.
    pub fn default_for(kind: RuleKind) -> Self {
        match kind {
            RuleKind::Semitotalistic => {
                let iv = Interval { lo: 0.25, hi: 0.375 };
                Self::semitotalistic(iv, iv)
            }
            RuleKind::Excitable => Self::excitable(Interval { lo: 0.15, hi: 0.25 }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Interval::new(self.birth.lo, self.birth.hi)?;
        match (self.kind, self.survive) {
            (RuleKind::Semitotalistic, Some(s)) => Interval::new(s.lo, s.hi).map(|_| ()),
            (RuleKind::Semitotalistic, None) => {
                Err(Error::Config("semi-totalistic rule needs a survive interval".into()))
            }
            (RuleKind::Excitable, _) => Ok(()),
        }
    }

    /// Next state of a node in state `current` whose neighbor ratio is `gamma`.
    #[inline]
    pub fn next(&self, current: CellState, gamma: f64) -> CellState {
        match (self.kind, current) {
            (_, CellState::Resting) => {
                if self.birth.contains(gamma) {
                    CellState::Excited
                } else {
                    CellState::Resting
                }
            }
            (RuleKind::Semitotalistic, CellState::Excited) => match self.survive {
                Some(s) if s.contains(gamma) => CellState::Excited,
                _ => CellState::Resting,
            },
            (RuleKind::Excitable, CellState::Excited) => CellState::Refractory,
            (_, CellState::Refractory) => CellState::Resting,
        }
    }
}

/// Neighbor ratio from excited-neighbor counts.
///
/// Every kernel funnels through this function so that results agree to the bit.
#[inline]
pub fn ratio(hard_excited: u32, soft_excited: u32, neighborhood_size: u32, soft_weight: f64) -> f64 {
    if neighborhood_size == 0 {
        0.0
    } else {
        (hard_excited as f64 + soft_weight * soft_excited as f64) / neighborhood_size as f64
    }
}

/// Per-node states plus the step counter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonState {
    pub states: Vec<CellState>,
    pub time: u64,
}

impl AutomatonState {
    pub fn resting(n: usize) -> Self {
        Self {
            states: vec![CellState::Resting; n],
            time: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn count(&self, s: CellState) -> usize {
        self.states.iter().filter(|&&x| x == s).count()
    }

    pub fn is_quiescent(&self) -> bool {
        self.states.iter().all(|&s| s == CellState::Resting)
    }
}

/// γ(p) against `states`.
pub fn gamma(p: usize, states: &[CellState], table: &NeighborhoodTable) -> f64 {
    let count = |list: &[u32]| list.iter().filter(|&&s| states[s as usize] == CellState::Excited).count() as u32;
    ratio(
        count(table.hard(p)),
        count(table.soft(p)),
        table.neighborhood_size(p) as u32,
        table.soft_weight(),
    )
}

fn check_shape(state: &AutomatonState, table: &NeighborhoodTable) -> Result<()> {
    if state.len() != table.len() {
        return Err(Error::Contract(format!(
            "state has {} nodes, neighborhood table {}",
            state.len(),
            table.len()
        )));
    }
    Ok(())
}

fn check_two_state(states: &[CellState]) -> Result<()> {
    if let Some(p) = states.iter().position(|&s| s == CellState::Refractory) {
        return Err(Error::Contract(format!(
            "refractory node {p} in a semi-totalistic run"
        )));
    }
    Ok(())
}

const PAR_CHUNK: usize = 2048;

/// Writes the successor of `old` into `new`. All ratios read `old` only.
pub fn step_into(old: &[CellState], new: &mut [CellState], table: &NeighborhoodTable, params: &RuleParams) {
    for (p, slot) in new.iter_mut().enumerate() {
        *slot = params.next(old[p], gamma(p, old, table));
    }
}

/// As [`step_into`], partitioned across the rayon pool. The result is
/// identical for any worker count: each node's successor depends on `old` only.
pub fn par_step_into(old: &[CellState], new: &mut [CellState], table: &NeighborhoodTable, params: &RuleParams) {
    new.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, chunk)| {
        let base = c * PAR_CHUNK;
        for (k, slot) in chunk.iter_mut().enumerate() {
            let p = base + k;
            *slot = params.next(old[p], gamma(p, old, table));
        }
    });
}

fn advance(state: &AutomatonState, table: &NeighborhoodTable, params: &RuleParams) -> AutomatonState {
    let mut next = vec![CellState::Resting; state.len()];
    step_into(&state.states, &mut next, table, params);
    AutomatonState {
        states: next,
        time: state.time + 1,
    }
}

/// One synchronous step of the semi-totalistic rule.
pub fn step_semitotalistic(
    state: &AutomatonState,
    table: &NeighborhoodTable,
    params: &RuleParams,
) -> Result<AutomatonState> {
    check_shape(state, table)?;
    check_two_state(&state.states)?;
    let params = RuleParams {
        kind: RuleKind::Semitotalistic,
        ..*params
    };
    params.validate()?;
    Ok(advance(state, table, &params))
}

/// One synchronous step of the excitable rule.
pub fn step_excitable(
    state: &AutomatonState,
    table: &NeighborhoodTable,
    params: &RuleParams,
) -> Result<AutomatonState> {
    check_shape(state, table)?;
    let params = RuleParams {
        kind: RuleKind::Excitable,
        ..*params
    };
    params.validate()?;
    Ok(advance(state, table, &params))
}

/// One step of the rule selected by `params.kind`.
pub fn step(state: &AutomatonState, table: &NeighborhoodTable, params: &RuleParams) -> Result<AutomatonState> {
    match params.kind {
        RuleKind::Semitotalistic => step_semitotalistic(state, table, params),
        RuleKind::Excitable => step_excitable(state, table, params),
    }
}

/// Applies `steps` steps; `steps == 0` returns the input unchanged.
pub fn run(
    initial: &AutomatonState,
    table: &NeighborhoodTable,
    params: &RuleParams,
    steps: usize,
) -> Result<AutomatonState> {
    run_with(initial, table, params, steps, |_| Ok(()))
}

/// As [`run`], calling `observe` on the initial state and after every step.
pub fn run_with<F>(
    initial: &AutomatonState,
    table: &NeighborhoodTable,
    params: &RuleParams,
    steps: usize,
    mut observe: F,
) -> Result<AutomatonState>
where
    F: FnMut(&AutomatonState) -> Result<()>,
{
    check_shape(initial, table)?;
    params.validate()?;
    if params.kind == RuleKind::Semitotalistic {
        check_two_state(&initial.states)?;
    }
    let mut cur = initial.clone();
    observe(&cur)?;
    let mut next = vec![CellState::Resting; cur.len()];
    for _ in 0..steps {
        par_step_into(&cur.states, &mut next, table, params);
        std::mem::swap(&mut cur.states, &mut next);
        cur.time += 1;
        observe(&cur)?;
    }
    Ok(cur)
}

/// Excited-node counts along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub axis: Axis,
    /// Lower edge of bin 0 (the bounding-box minimum on `axis`).
    pub origin: f64,
    pub bin_width: f64,
    pub counts: Vec<u32>,
}

impl ActivityProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// `[lo, hi)` of bin `k`.
    pub fn bin_range(&self, k: usize) -> (f64, f64) {
        let lo = self.origin + k as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }
}

/// Histogram of excited nodes along `axis`, bins of `bin_width` Å starting at
/// the bounding-box minimum.
pub fn activity_profile(
    state: &AutomatonState,
    graph: &FilamentGraph,
    axis: Axis,
    bin_width: f64,
) -> Result<ActivityProfile> {
    if !(bin_width > 0.0) {
        return Err(Error::Config(format!("bin width must be positive, got {bin_width}")));
    }
    if state.len() != graph.len() {
        return Err(Error::Contract("state and graph sizes differ".into()));
    }
    let bb = graph.bounding_box();
    let origin = bb.min.axis(axis);
    let n_bins = (bb.extent(axis) / bin_width).floor() as usize + 1;
    let mut counts = vec![0u32; n_bins];
    for (p, pos) in graph.positions().iter().enumerate() {
        if state.states[p] == CellState::Excited {
            let k = (((pos.axis(axis) - origin) / bin_width).floor() as usize).min(n_bins - 1);
            counts[k] += 1;
        }
    }
    Ok(ActivityProfile {
        axis,
        origin,
        bin_width,
        counts,
    })
}
