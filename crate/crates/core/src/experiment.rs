//! Monte Carlo sweep over all input strings, the output-frequency table W
//! and the threshold statistics derived from it.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{Interval, RuleParams};
use crate::domains::{bits_from_index, bits_to_string, draw_excitation, excited_counts, DomainSet, EncodingParams};
use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodTable;
use crate::seed::trial_rng;
use crate::sparse::SparseSimulator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rule: RuleParams,
    pub encoding: EncodingParams,
    /// Trials per input string (h).
    pub trials: u32,
    pub master_seed: u64,
    /// Read outputs one step after ζ (t = ζ + 1) instead of at t = ζ.
    pub late_readout: bool,
}

impl ExperimentConfig {
    pub fn new(rule: RuleParams) -> Self {
        Self {
            rule,
            encoding: EncodingParams::default(),
            trials: 100,
            master_seed: 0,
            late_readout: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        self.encoding.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of step applications before readout.
    pub fn readout_steps(&self) -> usize {
        self.encoding.steps + usize::from(self.late_readout)
    }
}

/// Output counts of one input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowCounts {
    /// Trials in which each output read 1.
    pub ones: Vec<u32>,
    /// Trials whose realized t = 0 state did not read back as the requested bits.
    pub realized_mismatches: u32,
}

/// Runs `h` trials of one input and counts output ones.
pub fn run_trials(
    table: &NeighborhoodTable,
    domains: &DomainSet,
    config: &ExperimentConfig,
    bits: &[bool],
) -> Result<RowCounts> {
    config.validate()?;
    let mut sim = SparseSimulator::new(table, config.rule)?;
    run_row(&mut sim, domains, config, bits)
}

fn run_row(
    sim: &mut SparseSimulator<'_>,
    domains: &DomainSet,
    config: &ExperimentConfig,
    bits: &[bool],
) -> Result<RowCounts> {
    let m = domains.len();
    let input = crate::domains::index_from_bits(bits) as u64;
    let mut ones = vec![0u32; m];
    let mut realized_mismatches = 0;
    let steps = config.readout_steps();
    let kappa = config.encoding.kappa;
    for trial in 1..=config.trials as u64 {
        let mut rng = trial_rng(config.master_seed, input, trial);
        let excited = draw_excitation(domains, bits, config.encoding.p_excite, &mut rng)?;
        sim.load_excited(&excited)?;
        let realized: Vec<bool> = excited_counts(sim.states(), domains)
            .into_iter()
            .map(|c| c > kappa)
            .collect();
        if realized != bits {
            realized_mismatches += 1;
            log::trace!(
                "input {} trial {trial}: realized t=0 state reads {}",
                bits_to_string(bits),
                bits_to_string(&realized)
            );
        }
        sim.run(steps);
        for (slot, c) in ones.iter_mut().zip(excited_counts(sim.states(), domains)) {
            if c > kappa {
                *slot += 1;
            }
        }
    }
    Ok(RowCounts {
        ones,
        realized_mismatches,
    })
}

/// Normalized output frequencies, one row per input string in lexicographic order.
///
/// Stored as integer counts; `w = count / trials`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    ports: usize,
    trials: u32,
    counts: Vec<u32>,
    #[serde(default)]
    realized_mismatches: Vec<u32>,
}

impl FrequencyTable {
    /// Builds a table from per-row counts (`2^ports` rows of `ports` entries).
    pub fn from_counts(ports: usize, trials: u32, rows: Vec<Vec<u32>>) -> Result<Self> {
        if ports == 0 || ports > 16 {
            return Err(Error::Config(format!("port count {ports} outside 1..=16")));
        }
        if trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if rows.len() != 1 << ports {
            return Err(Error::Structure(format!(
                "{} rows for {ports} ports; expected {}",
                rows.len(),
                1usize << ports
            )));
        }
        let mut counts = Vec::with_capacity(rows.len() * ports);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ports || row.iter().any(|&c| c > trials) {
                return Err(Error::Structure(format!("row {r} has bad shape or counts above {trials}")));
            }
            counts.extend_from_slice(row);
        }
        Ok(Self {
            ports,
            trials,
            counts,
            realized_mismatches: vec![0; rows.len()],
        })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn rows(&self) -> usize {
        1 << self.ports
    }

    pub fn trials(&self) -> u32 {
        self.trials
    }

    pub fn count(&self, row: usize, port: usize) -> u32 {
        self.counts[row * self.ports + port]
    }

    pub fn row_counts(&self, row: usize) -> &[u32] {
        &self.counts[row * self.ports..(row + 1) * self.ports]
    }

    #[inline]
    pub fn w(&self, row: usize, port: usize) -> f64 {
        self.count(row, port) as f64 / self.trials as f64
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.ports).map(|i| self.w(row, i)).collect()
    }

    pub fn realized_mismatches(&self) -> &[u32] {
        &self.realized_mismatches
    }

    pub fn input_string(&self, row: usize) -> String {
        bits_to_string(&bits_from_index(row, self.ports))
    }

    /// Mean of all w entries; the overall fraction of outputs reading 1.
    pub fn mean_frequency(&self) -> f64 {
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        total as f64 / (self.counts.len() as f64 * self.trials as f64)
    }

    /// Decimal places written to CSV: 2 when that is exact for `trials`,
    /// otherwise enough for `round(w·h)` to recover every count.
    pub fn csv_decimals(&self) -> usize {
        let mut d = 2u32;
        loop {
            let scale = 10u64.pow(d);
            if scale.is_multiple_of(self.trials as u64) || scale > self.trials as u64 {
                return d as usize;
            }
            d += 1;
        }
    }

    /// Writes `input,w_0..w_{m-1}` rows with `# ` comment lines first.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "# trials={}", self.trials)?;
        let header: Vec<String> = (0..self.ports).map(|i| format!("w_{i}")).collect();
        writeln!(out, "input,{}", header.join(","))?;
        let dec = self.csv_decimals();
        for r in 0..self.rows() {
            write!(out, "{}", self.input_string(r))?;
            for i in 0..self.ports {
                write!(out, ",{:.*}", dec, self.w(r, i))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Parses a table written by [`write_csv`](Self::write_csv). The trial
    /// count comes from the `# trials=` comment unless `trials` is given.
    pub fn read_csv(text: &str, trials: Option<u32>) -> Result<Self> {
        let mut h = trials;
        let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
        let mut ports = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(v) = c.trim().strip_prefix("trials=") {
                    if h.is_none() {
                        h = Some(v.trim().parse().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("bad trial count `{v}`"),
                        })?);
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields[0] == "input" {
                ports = Some(fields.len() - 1);
                continue;
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad frequency: {e}"),
                })?;
            rows.push((fields[0].to_string(), values));
        }
        let h = h.ok_or_else(|| Error::Structure("W table lacks a `# trials=` line".into()))?;
        let ports = ports.ok_or_else(|| Error::Structure("W table lacks a header row".into()))?;
        let mut by_row = vec![None; 1usize.checked_shl(ports as u32).unwrap_or(0)];
        if by_row.is_empty() || ports > 16 {
            return Err(Error::Structure(format!("unsupported port count {ports}")));
        }
        for (input, values) in rows {
            let bits = crate::domains::parse_bits(&input).map_err(|_| Error::Structure(format!("bad input string `{input}`")))?;
            if bits.len() != ports || values.len() != ports {
                return Err(Error::Structure(format!("row `{input}` does not have {ports} ports")));
            }
            let counts = values
                .iter()
                .map(|&w| {
                    if (0.0..=1.0).contains(&w) {
                        Ok((w * h as f64).round() as u32)
                    } else {
                        Err(Error::Structure(format!("frequency {w} outside [0, 1]")))
                    }
                })
                .collect::<Result<Vec<u32>>>()?;
            by_row[crate::domains::index_from_bits(&bits)] = Some(counts);
        }
        let rows = by_row
            .into_iter()
            .enumerate()
            .map(|(r, c)| c.ok_or_else(|| Error::Structure(format!("missing row {r}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_counts(ports, h, rows)
    }

    /// Lossless JSON form: `{ports, trials, rows: [{input, counts, w}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (0..self.rows())
            .map(|r| {
                serde_json::json!({
                    "input": self.input_string(r),
                    "counts": self.row_counts(r),
                    "w": self.row(r),
                    "realized_mismatches": self.realized_mismatches.get(r).copied().unwrap_or(0),
                })
            })
            .collect();
        serde_json::json!({
            "ports": self.ports,
            "trials": self.trials,
            "rows": rows,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::Structure(format!("W json: {m}"));
        let ports = value["ports"].as_u64().ok_or_else(|| bad("missing ports"))? as usize;
        let trials = value["trials"].as_u64().ok_or_else(|| bad("missing trials"))? as u32;
        let rows = value["rows"]
            .as_array()
            .ok_or_else(|| bad("missing rows"))?
            .iter()
            .map(|r| {
                r["counts"]
                    .as_array()
                    .ok_or_else(|| bad("row without counts"))?
                    .iter()
                    .map(|c| c.as_u64().map(|c| c as u32).ok_or_else(|| bad("non-integer count")))
                    .collect::<Result<Vec<u32>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_counts(ports, trials, rows)
    }

    /// Binary PGM (P5): one `cell`-pixel square per (input row, output), grey
    /// level `round(255·w)`.
    pub fn write_pgm<W: Write>(&self, mut out: W, cell: usize, comments: &[String]) -> std::io::Result<()> {
        let cell = cell.max(1);
        let (width, height) = (self.ports * cell, self.rows() * cell);
        writeln!(out, "P5")?;
        for c in comments {
            writeln!(out, "# {}", c.replace('\n', " "))?;
        }
        writeln!(out, "{width} {height}")?;
        writeln!(out, "255")?;
        let mut line = Vec::with_capacity(width);
        for r in 0..self.rows() {
            line.clear();
            for i in 0..self.ports {
                let level = (255.0 * self.w(r, i)).round() as u8;
                line.extend(std::iter::repeat_n(level, cell));
            }
            for _ in 0..cell {
                out.write_all(&line)?;
            }
        }
        Ok(())
    }
}

/// Runs every input string. Rows are distributed over the current rayon pool;
/// the result does not depend on the pool size.
pub fn sweep_inputs(
    table: &NeighborhoodTable,
    domains: &DomainSet,
    config: &ExperimentConfig,
) -> Result<FrequencyTable> {
    config.validate()?;
    let m = domains.len();
    if m > 16 {
        return Err(Error::Config(format!("{m} ports is too many for an exhaustive sweep")));
    }
    let rows: Vec<RowCounts> = (0..1usize << m)
        .into_par_iter()
        .map_init(
            || SparseSimulator::new(table, config.rule).expect("validated rule"),
            |sim, r| {
                let bits = bits_from_index(r, m);
                let row = run_row(sim, domains, config, &bits);
                log::debug!("row {} done", bits_to_string(&bits));
                row
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let mismatches: Vec<u32> = rows.iter().map(|r| r.realized_mismatches).collect();
    let total_mismatch: u64 = mismatches.iter().map(|&c| c as u64).sum();
    if total_mismatch > 0 {
        log::info!("{total_mismatch} trials realized an initial state differing from the requested input");
    }
    let mut table = FrequencyTable::from_counts(m, config.trials, rows.into_iter().map(|r| r.ones).collect())?;
    table.realized_mismatches = mismatches;
    Ok(table)
}

/// Runs `f` inside a rayon pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-output truth tables obtained by thresholding W.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTables {
    /// `outputs[i][row]` is O_i for input `row`.
    pub outputs: Vec<Vec<bool>>,
}

impl TruthTables {
    pub fn ports(&self) -> usize {
        self.outputs.len()
    }

    pub fn ones(&self) -> usize {
        self.outputs.iter().flatten().filter(|&&b| b).count()
    }
}

/// `O_i = 1` where `w_i > gamma` (strict).
pub fn threshold_map(w: &FrequencyTable, gamma: f64) -> TruthTables {
    let outputs = (0..w.ports())
        .map(|i| (0..w.rows()).map(|r| w.w(r, i) > gamma).collect())
        .collect();
    TruthTables { outputs }
}

/// Fraction of rows in which some output frequency exceeds `gamma`.
pub fn epsilon_ratio(w: &FrequencyTable, gamma: f64) -> f64 {
    let hits = (0..w.rows())
        .filter(|&r| (0..w.ports()).any(|i| w.w(r, i) > gamma))
        .count();
    hits as f64 / w.rows() as f64
}

/// Fraction of truth-table entries equal to 1.
pub fn ones_ratio(tables: &TruthTables) -> f64 {
    let total: usize = tables.outputs.iter().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    tables.ones() as f64 / total as f64
}

/// One point of a lower-threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub theta_lower: f64,
    /// Ones ratio of the truth tables thresholded at the sweep's γ.
    pub ones_ratio: f64,
    /// Mean of W: fraction of all trial outputs reading 1.
    pub mean_frequency: f64,
    pub epsilon: f64,
}

/// Re-runs the full sweep for each lower birth threshold θ'∘, holding the
/// upper threshold fixed.
pub fn sweep_lower_threshold(
    table: &NeighborhoodTable,
    domains: &DomainSet,
    config: &ExperimentConfig,
    thetas: &[f64],
    gamma: f64,
) -> Result<Vec<ThetaPoint>> {
    let hi = config.rule.birth.hi;
    thetas
        .iter()
        .map(|&theta| {
            if theta > hi {
                return Err(Error::Config(format!(
                    "lower threshold {theta} exceeds the upper threshold {hi}"
                )));
            }
            let mut cfg = *config;
            cfg.rule.birth = Interval::new(theta, hi)?;
            let w = sweep_inputs(table, domains, &cfg)?;
            let point = ThetaPoint {
                theta_lower: theta,
                ones_ratio: ones_ratio(&threshold_map(&w, gamma)),
                mean_frequency: w.mean_frequency(),
                epsilon: epsilon_ratio(&w, gamma),
            };
            log::info!("θ'∘ = {theta}: ones ratio {:.4}", point.ones_ratio);
            Ok(point)
        })
        .collect()
}

/// Writes `gamma,epsilon` rows.
pub fn write_epsilon_csv<W: Write>(
    mut out: W,
    w: &FrequencyTable,
    gammas: &[f64],
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "gamma,epsilon")?;
    for &g in gammas {
        writeln!(out, "{g},{}", epsilon_ratio(w, g))?;
    }
    Ok(())
}

/// Writes `theta_lower,ones_ratio,mean_frequency,epsilon` rows.
pub fn write_theta_csv<W: Write>(mut out: W, points: &[ThetaPoint], comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "theta_lower,ones_ratio,mean_frequency,epsilon")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.theta_lower, p.ones_ratio, p.mean_frequency, p.epsilon)?;
    }
    Ok(())
}

/// γ grid `0, step, 2·step, …, 1`.
pub fn gamma_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|k| (k as f64 * step).min(1.0)).collect()
}
