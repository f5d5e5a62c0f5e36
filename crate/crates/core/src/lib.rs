//! Graph automata over atomic filament structures.
//!
//! The pipeline runs in this order:
//!
//! 1. [`structure`]: parse PDB atom records and infer bonds by distance.
//! 2. [`neighborhood`]: hard (bonded) and soft (within a radius) neighbor
//!    lists, built with the grid index in [`spatial`].
//! 3. [`automaton`]: the semi-totalistic and excitable rules driven by the
//!    weighted excited-neighbor ratio; [`sparse`] is the activity-driven
//!    kernel used for bulk experiments.
//! 4. [`domains`]: cylindrical I/O ports, input writing and output reading.
//! 5. [`experiment`]: the all-inputs Monte Carlo sweep producing the
//!    frequency table W, and threshold statistics over it.
//! 6. [`logic`]: exact two-level minimization of thresholded outputs.

pub mod automaton;
pub mod domains;
pub mod error;
pub mod experiment;
pub mod logic;
pub mod neighborhood;
pub mod seed;
pub mod spatial;
pub mod sparse;
pub mod structure;
pub mod trajectory;

pub use automaton::{
    activity_profile, gamma, run, run_with, step, step_excitable, step_semitotalistic, ActivityProfile,
    AutomatonState, CellState, Interval, RuleKind, RuleParams,
};
pub use domains::{define_domains, encode_input, read_output, DomainSet, EncodingParams};
pub use error::{Error, Result};
pub use experiment::{
    epsilon_ratio, ones_ratio, run_trials, sweep_inputs, sweep_lower_threshold, threshold_map, ExperimentConfig,
    FrequencyTable, TruthTables,
};
pub use logic::{evaluate_cover, format_expression, mine, minimize, minterms_for_output, BooleanCover, MiningReport};
pub use neighborhood::{build_neighborhoods, degree_histogram, NeighborKind, NeighborhoodTable};
pub use spatial::SpatialIndex;
pub use sparse::SparseSimulator;
pub use structure::{infer_bonds, load_filament, parse_structure, AtomRecord, BondConfig, FilamentGraph, Point3};
