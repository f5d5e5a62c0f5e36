//! Run configuration: a flat TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use actin_automata::domains::{DEFAULT_DOMAIN_RADIUS, DEFAULT_PORTS, DEFAULT_SPACING};
use actin_automata::neighborhood::{DEFAULT_RADIUS, DEFAULT_SOFT_WEIGHT};
use actin_automata::{BondConfig, EncodingParams, ExperimentConfig, Interval, RuleKind, RuleParams};
use clap::Args;
use serde::{Deserialize, Serialize};

/// A bad parameter, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Every parameter of a run. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pdb: PathBuf,
    pub bond_cutoff: f64,
    pub max_mean_degree: f64,
    pub radius: f64,
    pub soft_weight: f64,
    pub rule: RuleKind,
    /// `[lo, hi]`; the rule's default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub birth: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survive: Option<[f64; 2]>,
    pub ports: usize,
    pub spacing: f64,
    pub domain_radius: f64,
    pub p_excite: f64,
    pub kappa: u32,
    pub steps: usize,
    pub trials: u32,
    pub seed: u64,
    pub late_readout: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let enc = EncodingParams::default();
        let bond = BondConfig::default();
        Self {
            pdb: PathBuf::from("data/3J8I.pdb"),
            bond_cutoff: bond.cutoff,
            max_mean_degree: bond.max_mean_degree,
            radius: DEFAULT_RADIUS,
            soft_weight: DEFAULT_SOFT_WEIGHT,
            rule: RuleKind::Semitotalistic,
            birth: None,
            survive: None,
            ports: DEFAULT_PORTS,
            spacing: DEFAULT_SPACING,
            domain_radius: DEFAULT_DOMAIN_RADIUS,
            p_excite: enc.p_excite,
            kappa: enc.kappa,
            steps: enc.steps,
            trials: 100,
            seed: 0,
            late_readout: false,
            out_dir: PathBuf::from("."),
        }
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let i: Interval = s.parse().map_err(|e| format!("{e}"))?;
    Ok([i.lo, i.hi])
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML file of run parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Structure file (PDB).
    #[arg(long, global = true)]
    pub pdb: Option<PathBuf>,
    /// Bond distance cutoff in Å.
    #[arg(long, global = true)]
    pub bond_cutoff: Option<f64>,
    /// Soft-neighborhood radius ρ in Å.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Weight μ of soft neighbors.
    #[arg(long, global = true)]
    pub soft_weight: Option<f64>,
    /// Rule: g (semi-totalistic) or e (excitable).
    #[arg(long, global = true)]
    pub rule: Option<RuleKind>,
    /// Birth interval `lo,hi`.
    #[arg(long, global = true, value_parser = parse_pair)]
    pub birth: Option<[f64; 2]>,
    /// Survival interval `lo,hi` (rule g only).
    #[arg(long, global = true, value_parser = parse_pair)]
    pub survive: Option<[f64; 2]>,
    /// Number of I/O domains.
    #[arg(long, global = true)]
    pub ports: Option<usize>,
    /// Distance between domain centers in Å.
    #[arg(long, global = true)]
    pub spacing: Option<f64>,
    /// Half-width of each domain slab in Å.
    #[arg(long, global = true)]
    pub domain_radius: Option<f64>,
    /// Probability of exciting each node of a TRUE domain.
    #[arg(long, global = true)]
    pub p_excite: Option<f64>,
    /// An output reads 1 when more than this many domain nodes are excited.
    #[arg(long, global = true)]
    pub kappa: Option<u32>,
    /// Steps before readout.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Trials per input string.
    #[arg(long, global = true)]
    pub trials: Option<u32>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Read outputs one step after the readout time.
    #[arg(long, global = true)]
    pub late_readout: bool,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(o: &Overrides) -> anyhow::Result<Self> {
        let mut c = match &o.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { c.$f = v; } )* };
        }
        take!(pdb, bond_cutoff, radius, soft_weight, rule, ports, spacing, domain_radius, p_excite, kappa, steps, trials, seed, out_dir);
        if o.birth.is_some() {
            c.birth = o.birth;
        }
        if o.survive.is_some() {
            c.survive = o.survive;
        }
        c.late_readout |= o.late_readout;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if !(self.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.bond_cutoff > 0.0) {
            return bad(format!("bond_cutoff must be positive, got {}", self.bond_cutoff));
        }
        if !(0.0..=1.0).contains(&self.soft_weight) {
            return bad(format!("soft_weight {} outside [0, 1]", self.soft_weight));
        }
        if self.ports == 0 || self.ports > 16 {
            return bad(format!("ports must be in 1..=16, got {}", self.ports));
        }
        if self.rule == RuleKind::Excitable && self.survive.is_some() {
            return bad("survive applies to rule g only".into());
        }
        self.experiment().map(|_| ()).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn bond(&self) -> BondConfig {
        BondConfig {
            cutoff: self.bond_cutoff,
            max_mean_degree: self.max_mean_degree,
        }
    }

    pub fn rule_params(&self) -> actin_automata::Result<RuleParams> {
        let mut rule = RuleParams::default_for(self.rule);
        if let Some([lo, hi]) = self.birth {
            rule.birth = Interval::new(lo, hi)?;
        }
        if let Some([lo, hi]) = self.survive {
            rule.survive = Some(Interval::new(lo, hi)?);
        }
        rule.validate()?;
        Ok(rule)
    }

    pub fn experiment(&self) -> actin_automata::Result<ExperimentConfig> {
        let config = ExperimentConfig {
            rule: self.rule_params()?,
            encoding: EncodingParams {
                p_excite: self.p_excite,
                kappa: self.kappa,
                steps: self.steps,
            },
            trials: self.trials,
            master_seed: self.seed,
            late_readout: self.late_readout,
        };
        config.validate()?;
        Ok(config)
    }

    /// Config written back as TOML, with the effective intervals filled in.
    pub fn to_toml(&self) -> String {
        let mut c = self.clone();
        if let Ok(rule) = self.rule_params() {
            c.birth = Some([rule.birth.lo, rule.birth.hi]);
            c.survive = rule.survive.map(|s| [s.lo, s.hi]);
        }
        toml::to_string(&c).expect("config serializes")
    }

    /// Header lines for output files: the command plus the resolved config,
    /// each a valid TOML line once the comment marker is stripped.
    pub fn record(&self, command: &str) -> Vec<String> {
        let mut lines = vec![
            format!("command = \"{command}\""),
            format!("version = \"{}\"", env!("CARGO_PKG_VERSION")),
        ];
        lines.extend(self.to_toml().lines().map(str::to_string));
        lines
    }
}
