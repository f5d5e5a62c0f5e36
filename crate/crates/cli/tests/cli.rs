use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

/// Parallel chains along x, 1.45 Å links, 4.26 Å apart in y and z.
fn write_pdb(dir: &Path) -> PathBuf {
    let mut text = String::new();
    let mut serial = 0;
    for y in -2i32..=2 {
        for z in -2i32..=2 {
            if y * y + z * z > 4 {
                continue;
            }
            let mut x = 0.0;
            while x < 130.0 {
                serial += 1;
                text.push_str(&format!(
                    "ATOM  {serial:>5}  CA  ALA A{:>4}    {x:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C\n",
                    serial % 10000,
                    y as f64 * 4.26,
                    z as f64 * 4.26
                ));
                x += 1.45;
            }
        }
    }
    text.push_str("END\n");
    let path = dir.join("chains.pdb");
    std::fs::write(&path, text).unwrap();
    path
}

struct Fixture {
    dir: TempDir,
    pdb: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let pdb = write_pdb(dir.path());
        Self { dir, pdb }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Runs `filament` with a small, fast parameter set plus `args`.
    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_filament"))
            .args(args)
            .args(["--pdb", self.pdb.to_str().unwrap(), "--radius", "4", "--trials", "4", "-q"])
            .env_remove("FILAMENT_THREADS")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn quiescent_input_stays_quiescent() {
    let f = Fixture::new();
    let out_dir = f.path("sim");
    f.ok(&["simulate", "--bits", "00000000", "--trajectory", "csv", "--out-dir", out_dir.to_str().unwrap()]);
    let activity = std::fs::read_to_string(out_dir.join("activity.csv")).unwrap();
    let rows: Vec<&str> = activity.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 41);
    for row in rows {
        assert!(row.split(',').skip(1).all(|v| v == "0"), "{row}");
    }
    assert!(out_dir.join("trajectory.csv").exists());
    assert!(out_dir.join("final_state.csv").exists());
}

#[test]
fn gamma_one_gives_constant_false() {
    let f = Fixture::new();
    let w = f.path("run/W.csv");
    f.ok(&["sweep", "--rule", "e", "--seed", "3", "--out", w.to_str().unwrap()]);
    for name in ["W.json", "epsilon.csv", "W.pgm"] {
        assert!(f.path("run").join(name).exists(), "{name}");
    }
    let functions = f.path("run/functions.json");
    f.ok(&["mine", "--table", w.to_str().unwrap(), "--gammas", "1.0", "--out", functions.to_str().unwrap()]);
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&functions).unwrap()).unwrap();
    let list = parsed.as_array().unwrap();
    assert_eq!(list.len(), 8);
    for item in list {
        assert_eq!(item["expression"], "0");
        assert_eq!(item["n_products"], 0);
        assert_eq!(item["minterm_count"], 0);
    }
    assert!(f.path("run/functions.json.meta.toml").exists());
}

#[test]
fn mining_json_and_csv_tables_agree() {
    let f = Fixture::new();
    let w = f.path("W.csv");
    f.ok(&["sweep", "--rule", "e", "--seed", "8", "--out", w.to_str().unwrap()]);
    let from_csv = f.path("a.json");
    let from_json = f.path("b.json");
    f.ok(&["mine", "--table", w.to_str().unwrap(), "--out", from_csv.to_str().unwrap()]);
    f.ok(&["mine", "--table", f.path("W.json").to_str().unwrap(), "--out", from_json.to_str().unwrap()]);
    assert_eq!(std::fs::read(from_csv).unwrap(), std::fs::read(from_json).unwrap());
}

#[test]
fn sweep_output_is_reproducible_across_runs_and_threads() {
    let f = Fixture::new();
    let mut files = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let w = f.path(&format!("r{i}/W.csv"));
        f.ok(&["sweep", "--seed", "42", "--threads", threads, "--out", w.to_str().unwrap()]);
        files.push(std::fs::read(w).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let f = Fixture::new();
    let config = f.path("run.toml");
    std::fs::write(&config, "seed = 5\nrule = \"e\"\nsteps = 12\n").unwrap();
    let out_dir = f.path("out");
    let args = ["domains", "--config", config.to_str().unwrap(), "--seed", "9", "--out-dir", out_dir.to_str().unwrap()];
    f.ok(&args);
    let text = std::fs::read_to_string(out_dir.join("domains.csv")).unwrap();
    let header: String = text.lines().filter_map(|l| l.strip_prefix("# ")).collect::<Vec<_>>().join("\n");
    assert!(header.contains("seed = 9"), "{header}");
    assert!(header.contains("steps = 12"), "{header}");
    assert!(header.contains("rule = \"excitable\""), "{header}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let f = Fixture::new();
    assert_eq!(code(&f.run(&["sweep", "--birth", "0.5,0.2"])), 2);
    assert_eq!(code(&f.run(&["simulate", "--bits", "0101"])), 2);
    assert_eq!(code(&f.run(&["sweep", "--rule", "e", "--survive", "0.1,0.2"])), 2);
    assert_eq!(code(&f.run(&["frobnicate"])), 2);
    let config = f.path("bad.toml");
    std::fs::write(&config, "sed = 1\n").unwrap();
    assert_eq!(code(&f.run(&["ingest", "--config", config.to_str().unwrap()])), 2);
}

#[test]
fn input_data_errors_exit_with_three() {
    let f = Fixture::new();
    let missing = f.path("nope.pdb");
    let out = Command::new(env!("CARGO_BIN_EXE_filament"))
        .args(["ingest", "--pdb", missing.to_str().unwrap(), "-q"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let garbage = f.path("garbage.pdb");
    std::fs::write(&garbage, "ATOM  this is not a record\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_filament"))
        .args(["ingest", "--pdb", garbage.to_str().unwrap(), "-q"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let table = f.path("W.csv");
    std::fs::write(&table, "input,w_0\n0,abc\n").unwrap();
    assert_eq!(code(&f.run(&["mine", "--table", table.to_str().unwrap()])), 3);
}

#[test]
fn ingest_dump_lists_every_node_and_bond() {
    let f = Fixture::new();
    let out_dir = f.path("dump");
    let stdout = f.ok(&["ingest", "--dump", "--out-dir", out_dir.to_str().unwrap()]);
    let count = |name: &str| {
        std::fs::read_to_string(out_dir.join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count()
            - 1
    };
    assert!(stdout.contains(&format!("nodes: {}", count("nodes.csv"))), "{stdout}");
    assert!(stdout.contains(&format!("edges: {}", count("edges.csv"))), "{stdout}");
}

#[test]
fn theta_sweep_writes_one_row_per_threshold() {
    let f = Fixture::new();
    let out = f.path("theta.csv");
    f.ok(&["theta-sweep", "--thetas", "0.1,0.2", "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}
