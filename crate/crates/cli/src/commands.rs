use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use actin_automata::domains::{bits_to_string, index_from_bits, parse_bits};
use actin_automata::experiment::{gamma_grid, sweep_lower_threshold, write_epsilon_csv, write_theta_csv};
use actin_automata::neighborhood::{degree_band_ratio, neighborhoods_for};
use actin_automata::seed::trial_rng;
use actin_automata::structure::Axis;
use actin_automata::trajectory::{write_csv_frame, write_csv_header, write_frames};
use actin_automata::{
    activity_profile, define_domains, degree_histogram, epsilon_ratio, load_filament, mine, sweep_inputs,
    DomainSet, FilamentGraph, FrequencyTable, NeighborKind, NeighborhoodTable, SparseSimulator,
};
use anyhow::{Context, Result};

use crate::config::{ConfigError, Overrides, RunConfig};
use crate::{Command, TrajectoryFormat};

pub fn run(command: Command, overrides: &Overrides) -> Result<()> {
    let config = RunConfig::resolve(overrides)?;
    match command {
        Command::Ingest { dump } => ingest(&config, dump),
        Command::Stats => stats(&config),
        Command::Domains => domains(&config),
        Command::Simulate {
            bits,
            trial,
            trajectory,
            bin_width,
        } => simulate(&config, &bits, trial, trajectory, bin_width),
        Command::Sweep {
            gamma_list,
            out,
            pgm_cell,
        } => sweep(&config, gamma_list, out, pgm_cell),
        Command::Mine { table, gammas, out } => mine_cmd(&config, table, &gammas, out),
        Command::ThetaSweep { thetas, gamma, out } => theta_sweep(&config, &thetas, gamma, out),
    }
}

/// Creates `path` (and its directory) and hands a buffered writer to `f`.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn comments(out: &mut impl Write, lines: &[String]) -> std::io::Result<()> {
    lines.iter().try_for_each(|l| writeln!(out, "# {l}"))
}

fn output(config: &RunConfig, explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| config.out_dir.join(name))
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.with_file_name(name)
}

fn load(config: &RunConfig) -> Result<FilamentGraph> {
    Ok(load_filament(&config.pdb, &config.bond())?)
}

fn setup(config: &RunConfig) -> Result<(FilamentGraph, NeighborhoodTable, DomainSet)> {
    let graph = load(config)?;
    let table = neighborhoods_for(&graph, config.radius, config.soft_weight)?;
    let domains = define_domains(&graph, config.ports, config.spacing, config.domain_radius)?;
    log::info!("domain sizes {:?}", domains.sizes());
    Ok((graph, table, domains))
}

fn ingest(config: &RunConfig, dump: bool) -> Result<()> {
    let graph = load(config)?;
    let bb = graph.bounding_box();
    println!("nodes: {}", graph.len());
    println!("edges: {}", graph.edges().len());
    match graph.mean_bond_length() {
        Some(d) => println!("mean bond length: {d:.4} Å"),
        None => println!("mean bond length: n/a"),
    }
    println!("mean hard degree: {:.4}", 2.0 * graph.edges().len() as f64 / graph.len() as f64);
    println!(
        "bounding box: x [{:.3}, {:.3}], y [{:.3}, {:.3}], z [{:.3}, {:.3}]",
        bb.min.x, bb.max.x, bb.min.y, bb.max.y, bb.min.z, bb.max.z
    );
    if dump {
        let record = config.record("ingest");
        write_file(&config.out_dir.join("nodes.csv"), |w| {
            comments(w, &record)?;
            graph.write_nodes_csv(w)
        })?;
        write_file(&config.out_dir.join("edges.csv"), |w| {
            comments(w, &record)?;
            graph.write_edges_csv(w)
        })?;
    }
    Ok(())
}

fn stats(config: &RunConfig) -> Result<()> {
    let graph = load(config)?;
    let table = neighborhoods_for(&graph, config.radius, config.soft_weight)?;
    let record = config.record("stats");
    for (kind, name) in [(NeighborKind::Hard, "degree_hard.csv"), (NeighborKind::Soft, "degree_soft.csv")] {
        let hist = degree_histogram(&table, kind);
        write_file(&config.out_dir.join(name), |w| {
            comments(w, &record)?;
            writeln!(w, "degree,ratio")?;
            hist.iter().try_for_each(|(d, r)| writeln!(w, "{d},{r}"))
        })?;
    }
    let hard = degree_histogram(&table, NeighborKind::Hard);
    for d in 1..=4 {
        println!("hard degree {d}: {:.4}", hard.get(&d).copied().unwrap_or(0.0));
    }
    println!(
        "soft degree in [133, 185]: {:.4}",
        degree_band_ratio(&table, NeighborKind::Soft, 133, 185)
    );
    Ok(())
}

fn domains(config: &RunConfig) -> Result<()> {
    let graph = load(config)?;
    let d = define_domains(&graph, config.ports, config.spacing, config.domain_radius)?;
    let record = config.record("domains");
    write_file(&config.out_dir.join("domains.csv"), |w| {
        comments(w, &record)?;
        d.write_csv(w)
    })?;
    for (i, (size, center)) in d.sizes().iter().zip(&d.centers).enumerate() {
        println!("domain {i}: center {center} Å, {size} nodes");
    }
    Ok(())
}

fn simulate(config: &RunConfig, bits: &str, trial: u64, format: TrajectoryFormat, bin_width: f64) -> Result<()> {
    let bits = parse_bits(bits)?;
    if bits.len() != config.ports {
        return Err(ConfigError(format!("--bits has {} digits but ports = {}", bits.len(), config.ports)).into());
    }
    if trial == 0 {
        return Err(ConfigError("trials are numbered from 1".into()).into());
    }
    let experiment = config.experiment()?;
    let (graph, table, domains) = setup(config)?;
    let mut rng = trial_rng(config.seed, index_from_bits(&bits) as u64, trial);
    let excited = actin_automata::domains::draw_excitation(&domains, &bits, config.p_excite, &mut rng)?;
    let mut sim = SparseSimulator::new(&table, experiment.rule)?;
    sim.load_excited(&excited)?;

    let mut record = config.record("simulate");
    record.push(format!("bits = \"{}\"", bits_to_string(&bits)));
    record.push(format!("trial = {trial}"));

    let steps = experiment.readout_steps();
    let mut activity = Vec::with_capacity(steps + 1);
    let mut frames = Vec::new();
    for t in 0..=steps {
        if t > 0 {
            sim.step();
        }
        let snap = sim.snapshot();
        activity.push((
            t,
            snap.count(actin_automata::CellState::Excited),
            snap.count(actin_automata::CellState::Refractory),
            actin_automata::domains::excited_counts(&snap.states, &domains),
        ));
        if format != TrajectoryFormat::None {
            frames.push(snap);
        }
    }
    let final_state = sim.snapshot();

    let header: Vec<String> = (0..config.ports).map(|i| format!("d_{i}")).collect();
    write_file(&config.out_dir.join("activity.csv"), |w| {
        comments(w, &record)?;
        writeln!(w, "t,excited,refractory,{}", header.join(","))?;
        for (t, e, r, per) in &activity {
            let per: Vec<String> = per.iter().map(u32::to_string).collect();
            writeln!(w, "{t},{e},{r},{}", per.join(","))?;
        }
        Ok(())
    })?;
    let profile = activity_profile(&final_state, &graph, Axis::X, bin_width)?;
    write_file(&config.out_dir.join("profile.csv"), |w| {
        comments(w, &record)?;
        writeln!(w, "x_lo,x_hi,excited")?;
        for (k, c) in profile.counts.iter().enumerate() {
            let (lo, hi) = profile.bin_range(k);
            writeln!(w, "{lo},{hi},{c}")?;
        }
        Ok(())
    })?;
    write_file(&config.out_dir.join("final_state.csv"), |w| {
        comments(w, &record)?;
        write_csv_header(w)?;
        write_csv_frame(w, &final_state)
    })?;
    match format {
        TrajectoryFormat::None => {}
        TrajectoryFormat::Csv => write_file(&config.out_dir.join("trajectory.csv"), |w| {
            comments(w, &record)?;
            write_csv_header(w)?;
            frames.iter().try_for_each(|f| write_csv_frame(w, f))
        })?,
        TrajectoryFormat::Binary => {
            let path = config.out_dir.join("trajectory.bin");
            write_sidecar(&path, &record)?;
            let mut buf = Vec::new();
            write_frames(&mut buf, &frames)?;
            write_file(&path, |w| w.write_all(&buf))?;
        }
    }

    let outputs = actin_automata::read_output(&final_state.states, &domains, config.kappa);
    for (t, e, r, _) in &activity {
        println!("t={t:>3} excited={e} refractory={r}");
    }
    println!("input {} -> output {} at t={}", bits_to_string(&bits), bits_to_string(&outputs), final_state.time);
    Ok(())
}

/// `<file>.meta.toml` next to a file that cannot carry comments.
fn write_sidecar(path: &Path, record: &[String]) -> Result<()> {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.toml");
    write_file(&path.with_file_name(name), |w| record.iter().try_for_each(|l| writeln!(w, "{l}")))
}

fn run_sweep(config: &RunConfig) -> Result<FrequencyTable> {
    let experiment = config.experiment()?;
    let (_, table, domains) = setup(config)?;
    let start = std::time::Instant::now();
    let w = sweep_inputs(&table, &domains, &experiment)?;
    log::info!(
        "sweep of {} inputs x {} trials took {:.1?}",
        w.rows(),
        w.trials(),
        start.elapsed()
    );
    Ok(w)
}

fn sweep(config: &RunConfig, gamma_list: Vec<f64>, out: Option<PathBuf>, pgm_cell: usize) -> Result<()> {
    let gammas = if gamma_list.is_empty() { gamma_grid(0.05) } else { gamma_list };
    let w = run_sweep(config)?;
    let record = config.record("sweep");
    let csv_path = output(config, out, "W.csv");
    write_file(&csv_path, |f| w.write_csv(f, &record))?;
    let mut json = w.to_json();
    json["config"] = serde_json::to_value(config)?;
    json["command"] = "sweep".into();
    let json_text = serde_json::to_string_pretty(&json)?;
    write_file(&sibling(&csv_path, "W.json"), |f| writeln!(f, "{json_text}"))?;
    write_file(&sibling(&csv_path, "epsilon.csv"), |f| write_epsilon_csv(f, &w, &gammas, &record))?;
    write_file(&sibling(&csv_path, "W.pgm"), |f| w.write_pgm(f, pgm_cell, &record))?;
    let mismatched: u64 = w.realized_mismatches().iter().map(|&c| c as u64).sum();
    println!("mean w: {:.4}", w.mean_frequency());
    println!("trials whose t=0 state did not read back as the input: {mismatched}");
    for &g in &gammas {
        println!("gamma {g}: epsilon {:.4}", epsilon_ratio(&w, g));
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<(FrequencyTable, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| actin_automata::Error::Structure(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| actin_automata::Error::Structure(format!("{}: {e}", path.display())))?;
        let source = value
            .get("config")
            .and_then(|c| toml::to_string(c).ok())
            .map(|t| t.lines().map(str::to_string).collect())
            .unwrap_or_default();
        Ok((FrequencyTable::from_json(&value)?, source))
    } else {
        let source = text
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .filter(|l| !l.starts_with("trials="))
            .map(str::to_string)
            .collect();
        Ok((FrequencyTable::read_csv(&text, None)?, source))
    }
}

fn mine_cmd(config: &RunConfig, table: Option<PathBuf>, gammas: &[f64], out: Option<PathBuf>) -> Result<()> {
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(ConfigError(format!("gamma {g} outside [0, 1]")).into());
    }
    let (w, mut record) = match &table {
        Some(path) => {
            let (w, source) = read_table(path)?;
            let mut record = vec!["command = \"mine\"".to_string(), format!("table = {:?}", path.display().to_string())];
            record.push(format!("source = {:?}", source.join("\n")));
            (w, record)
        }
        None => (run_sweep(config)?, config.record("mine")),
    };
    record.push(format!("gammas = {gammas:?}"));
    let report = mine(&w, gammas)?;
    let path = output(config, out, "functions.json");
    let json = serde_json::to_string_pretty(&report.functions)?;
    write_file(&path, |f| writeln!(f, "{json}"))?;
    write_sidecar(&path, &record)?;
    let summary = report.summary();
    write_file(&sibling(&path, "functions.txt"), |f| {
        comments(f, &record)?;
        f.write_all(summary.as_bytes())
    })?;
    print!("{summary}");
    Ok(())
}

fn theta_sweep(config: &RunConfig, thetas: &[f64], gamma: f64, out: Option<PathBuf>) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ConfigError(format!("gamma {gamma} outside [0, 1]")).into());
    }
    let experiment = config.experiment()?;
    let (_, table, domains) = setup(config)?;
    let points = sweep_lower_threshold(&table, &domains, &experiment, thetas, gamma)?;
    let mut record = config.record("theta-sweep");
    record.push(format!("thetas = {thetas:?}"));
    record.push(format!("gamma = {gamma}"));
    let path = output(config, out, "theta_sweep.csv");
    write_file(&path, |f| write_theta_csv(f, &points, &record))?;
    for p in &points {
        println!(
            "theta_lower {}: ones ratio {:.4}, mean w {:.4}, epsilon {:.4}",
            p.theta_lower, p.ones_ratio, p.mean_frequency, p.epsilon
        );
    }
    Ok(())
}
