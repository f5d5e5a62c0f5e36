mod common;

use actin_automata::automaton::{par_step_into, step_into};
use actin_automata::neighborhood::neighborhoods_for;
use actin_automata::{
    run, step, AutomatonState, CellState, Interval, NeighborhoodTable, RuleKind, RuleParams, SparseSimulator,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval() -> impl Strategy<Value = Interval> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap())
}

fn rule() -> impl Strategy<Value = RuleParams> {
    prop_oneof![
        (interval(), interval()).prop_map(|(b, s)| RuleParams::semitotalistic(b, s)),
        interval().prop_map(RuleParams::excitable),
    ]
}

fn random_states<R: Rng>(rng: &mut R, n: usize, kind: RuleKind) -> Vec<CellState> {
    (0..n)
        .map(|_| match (kind, rng.gen_range(0..3)) {
            (_, 0) => CellState::Excited,
            (RuleKind::Excitable, 1) => CellState::Refractory,
            _ => CellState::Resting,
        })
        .collect()
}

fn random_table<R: Rng>(rng: &mut R, n: usize) -> (actin_automata::FilamentGraph, NeighborhoodTable, f64) {
    let side = rng.gen_range(4.0..14.0);
    let pts = random_points(rng, n, side);
    let graph = brute_graph(&pts, rng.gen_range(1.0..2.5));
    let radius = rng.gen_range(1.5..5.0);
    let mu = rng.gen_range(0.0..=1.0);
    let table = neighborhoods_for(&graph, radius, mu).unwrap();
    (graph, table, radius)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Dense, parallel and sparse kernels agree with the set-based reference,
    /// including rules whose birth interval admits zero.
    #[test]
    fn kernels_match_reference(seed in any::<u64>(), n in 1usize..120, rule in rule()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (graph, table, radius) = random_table(&mut rng, n);
        let naive = NaiveNeighborhoods::from_graph(&graph, radius, table.soft_weight());
        let mut reference = random_states(&mut rng, n, rule.kind);
        let mut sparse = SparseSimulator::new(&table, rule).unwrap();
        sparse.load(&AutomatonState { states: reference.clone(), time: 0 }).unwrap();
        let mut dense = reference.clone();
        let mut buf = vec![CellState::Resting; n];
        for _ in 0..30 {
            reference = naive.step(&reference, &rule);
            step_into(&dense, &mut buf, &table, &rule);
            let mut par = vec![CellState::Resting; n];
            par_step_into(&dense, &mut par, &table, &rule);
            prop_assert_eq!(&buf, &par);
            std::mem::swap(&mut dense, &mut buf);
            sparse.step();
            prop_assert_eq!(&dense, &reference);
            prop_assert_eq!(sparse.states(), reference.as_slice());
        }
    }

    /// Relabelling nodes commutes with a step: the update is synchronous and
    /// does not depend on visiting order.
    #[test]
    fn step_commutes_with_relabelling(seed in any::<u64>(), n in 2usize..80, rule in rule()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, table, _) = random_table(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let relabel = |list: &[u32]| {
            let mut v: Vec<u32> = list.iter().map(|&s| perm[s as usize] as u32).collect();
            v.sort_unstable();
            v
        };
        let mut hard = vec![Vec::new(); n];
        let mut soft = vec![Vec::new(); n];
        for p in 0..n {
            hard[perm[p]] = relabel(table.hard(p));
            soft[perm[p]] = relabel(table.soft(p));
        }
        let permuted = NeighborhoodTable::from_lists(hard, soft, table.radius(), table.soft_weight()).unwrap();
        let states = random_states(&mut rng, n, rule.kind);
        let mut moved = vec![CellState::Resting; n];
        for p in 0..n {
            moved[perm[p]] = states[p];
        }
        let a = run(&AutomatonState { states, time: 0 }, &table, &rule, 5).unwrap();
        let b = run(&AutomatonState { states: moved, time: 0 }, &permuted, &rule, 5).unwrap();
        for p in 0..n {
            prop_assert_eq!(a.states[p], b.states[perm[p]]);
        }
    }

    /// Excitable dynamics only ever move resting → excited → refractory → resting.
    #[test]
    fn excitable_cycle_order(seed in any::<u64>(), n in 1usize..100, birth in interval()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, table, _) = random_table(&mut rng, n);
        let rule = RuleParams::excitable(birth);
        let mut state = AutomatonState { states: random_states(&mut rng, n, RuleKind::Excitable), time: 0 };
        for _ in 0..20 {
            let next = step(&state, &table, &rule).unwrap();
            for (a, b) in state.states.iter().zip(&next.states) {
                let ok = matches!(
                    (a, b),
                    (CellState::Resting, CellState::Resting)
                        | (CellState::Resting, CellState::Excited)
                        | (CellState::Excited, CellState::Refractory)
                        | (CellState::Refractory, CellState::Resting)
                );
                prop_assert!(ok, "{:?} -> {:?}", a, b);
            }
            state = next;
        }
    }

    /// With birth bounded away from zero, all-resting stays all-resting.
    #[test]
    fn quiescence_is_fixed(seed in any::<u64>(), n in 1usize..100, rule in rule()) {
        prop_assume!(rule.birth.lo > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, table, _) = random_table(&mut rng, n);
        let out = run(&AutomatonState::resting(n), &table, &rule, 10).unwrap();
        prop_assert!(out.is_quiescent());
        prop_assert_eq!(out.time, 10);
    }
}

/// Large enough that the parallel kernel splits into several chunks.
#[test]
fn parallel_and_sparse_agree_on_large_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let graph = synthetic_filament(&mut rng, 100.0, 8.0);
    assert!(graph.len() > 4096, "{} nodes", graph.len());
    let table = neighborhoods_for(&graph, 3.5, 0.9).unwrap();
    for kind in [RuleKind::Semitotalistic, RuleKind::Excitable] {
        let rule = RuleParams::default_for(kind);
        let init = AutomatonState {
            states: (0..graph.len())
                .map(|_| if rng.gen_bool(0.3) { CellState::Excited } else { CellState::Resting })
                .collect(),
            time: 0,
        };
        let mut sim = SparseSimulator::new(&table, rule).unwrap();
        sim.load(&init).unwrap();
        let mut dense = init;
        let mut serial = vec![CellState::Resting; graph.len()];
        for _ in 0..15 {
            step_into(&dense.states, &mut serial, &table, &rule);
            dense = step(&dense, &table, &rule).unwrap();
            sim.step();
            assert_eq!(dense.states, serial);
            assert_eq!(sim.states(), dense.states.as_slice());
        }
    }
}

#[test]
fn semitotalistic_rejects_refractory_cells() {
    let table = NeighborhoodTable::from_lists(ring_lists(4), vec![Vec::new(); 4], 1.0, 0.9).unwrap();
    let mut state = AutomatonState::resting(4);
    state.states[1] = CellState::Refractory;
    let err = step(&state, &table, &RuleParams::default_for(RuleKind::Semitotalistic)).unwrap_err();
    assert!(err.is_config());
}
