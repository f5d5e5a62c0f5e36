//! Activity-driven simulator.
//!
//! Keeps, for every node, the number of excited hard and soft neighbors, and
//! updates those counters by scattering from nodes that enter or leave the
//! excited state. A resting node with no excited neighbor has γ = 0; when the
//! birth interval excludes 0 such a node cannot change, so each step only
//! visits excited and refractory nodes plus the neighbors of excited nodes.
//! When the birth interval contains 0 every node is visited.
//!
//! The transition itself goes through [`RuleParams::next`] and
//! [`ratio`], so results are bit-identical to the dense kernels.

use crate::automaton::{ratio, AutomatonState, CellState, RuleKind, RuleParams};
use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodTable;

pub struct SparseSimulator<'a> {
    table: &'a NeighborhoodTable,
    params: RuleParams,
    states: Vec<CellState>,
    hard_excited: Vec<u32>,
    soft_excited: Vec<u32>,
    /// Nodes currently excited or refractory, in no particular order.
    active: Vec<u32>,
    candidates: Vec<u32>,
    mark: Vec<u32>,
    epoch: u32,
    changes: Vec<(u32, CellState)>,
    scan_all: bool,
    time: u64,
}

impl<'a> SparseSimulator<'a> {
    pub fn new(table: &'a NeighborhoodTable, params: RuleParams) -> Result<Self> {
        params.validate()?;
        let n = table.len();
        Ok(Self {
            table,
            params,
            states: vec![CellState::Resting; n],
            hard_excited: vec![0; n],
            soft_excited: vec![0; n],
            active: Vec::new(),
            candidates: Vec::new(),
            mark: vec![0; n],
            epoch: 0,
            changes: Vec::new(),
            scan_all: params.birth.contains(0.0),
            time: 0,
        })
    }

    pub fn params(&self) -> &RuleParams {
        &self.params
    }

    pub fn states(&self) -> &[CellState] {
        &self.states
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn excited_count(&self) -> usize {
        self.active
            .iter()
            .filter(|&&p| self.states[p as usize] == CellState::Excited)
            .count()
    }

    pub fn is_quiescent(&self) -> bool {
        self.active.is_empty()
    }

    pub fn snapshot(&self) -> AutomatonState {
        AutomatonState {
            states: self.states.clone(),
            time: self.time,
        }
    }

    /// Returns every node to rest and the clock to 0.
    pub fn clear(&mut self) {
        let active = std::mem::take(&mut self.active);
        for &p in &active {
            if self.states[p as usize] == CellState::Excited {
                self.scatter(p, false);
            }
            self.states[p as usize] = CellState::Resting;
        }
        self.active = active;
        self.active.clear();
        self.time = 0;
    }

    /// Replaces the configuration by `excited` nodes on a resting background.
    pub fn load_excited(&mut self, excited: &[u32]) -> Result<()> {
        self.clear();
        for &p in excited {
            let slot = self
                .states
                .get_mut(p as usize)
                .ok_or_else(|| Error::Contract(format!("node {p} out of range")))?;
            if *slot != CellState::Excited {
                *slot = CellState::Excited;
                self.active.push(p);
                self.scatter(p, true);
            }
        }
        Ok(())
    }

    /// Replaces the configuration by an arbitrary state.
    pub fn load(&mut self, state: &AutomatonState) -> Result<()> {
        if state.len() != self.states.len() {
            return Err(Error::Contract(format!(
                "state has {} nodes, table {}",
                state.len(),
                self.states.len()
            )));
        }
        if self.params.kind == RuleKind::Semitotalistic && state.states.contains(&CellState::Refractory) {
            return Err(Error::Contract("refractory node in a semi-totalistic run".into()));
        }
        self.clear();
        for (p, &s) in state.states.iter().enumerate() {
            if s != CellState::Resting {
                self.states[p] = s;
                self.active.push(p as u32);
                if s == CellState::Excited {
                    self.scatter(p as u32, true);
                }
            }
        }
        self.time = state.time;
        Ok(())
    }

    fn scatter(&mut self, p: u32, on: bool) {
        let p = p as usize;
        let (hard, soft) = (self.table.hard(p), self.table.soft(p));
        if on {
            for &s in hard {
                self.hard_excited[s as usize] += 1;
            }
            for &s in soft {
                self.soft_excited[s as usize] += 1;
            }
        } else {
            for &s in hard {
                self.hard_excited[s as usize] -= 1;
            }
            for &s in soft {
                self.soft_excited[s as usize] -= 1;
            }
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    fn collect_candidates(&mut self) {
        self.candidates.clear();
        if self.scan_all {
            self.candidates.extend(0..self.states.len() as u32);
            return;
        }
        let epoch = self.next_epoch();
        for &p in &self.active {
            if self.mark[p as usize] != epoch {
                self.mark[p as usize] = epoch;
                self.candidates.push(p);
            }
            if self.states[p as usize] == CellState::Excited {
                let pu = p as usize;
                for &s in self.table.hard(pu).iter().chain(self.table.soft(pu)) {
                    if self.mark[s as usize] != epoch {
                        self.mark[s as usize] = epoch;
                        self.candidates.push(s);
                    }
                }
            }
        }
    }

    /// One synchronous step.
    pub fn step(&mut self) {
        self.collect_candidates();
        self.changes.clear();
        let mu = self.table.soft_weight();
        let mut next_active = Vec::with_capacity(self.active.len());
        for &p in &self.candidates {
            let pu = p as usize;
            let g = ratio(
                self.hard_excited[pu],
                self.soft_excited[pu],
                self.table.neighborhood_size(pu) as u32,
                mu,
            );
            let cur = self.states[pu];
            let nxt = self.params.next(cur, g);
            if nxt != cur {
                self.changes.push((p, nxt));
            }
            if nxt != CellState::Resting {
                next_active.push(p);
            }
        }
        let changes = std::mem::take(&mut self.changes);
        for &(p, nxt) in &changes {
            let was = self.states[p as usize] == CellState::Excited;
            let now = nxt == CellState::Excited;
            if was != now {
                self.scatter(p, now);
            }
            self.states[p as usize] = nxt;
        }
        self.changes = changes;
        self.active = next_active;
        self.time += 1;
    }

    /// Applies `steps` steps, skipping work once a quiescent fixed point is reached.
    pub fn run(&mut self, steps: usize) {
        for done in 0..steps {
            if self.active.is_empty() && !self.scan_all {
                self.time += (steps - done) as u64;
                return;
            }
            self.step();
        }
    }
}
