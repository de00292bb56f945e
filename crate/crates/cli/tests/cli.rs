use std::path::{Path, PathBuf};
use std::process::Command;

use priorwave_cli::{run_scenario, validate_dir, RunOptions, ScenarioConfig};

const SMALL: &str = r#"
name = "small"

[array]
m_t = 4
m_r = 4
l_samples = 8

[distribution]
kind = "mixture-uniform"
intervals_deg = [[-20.0, -10.0], [5.0, 15.0]]
weights = [0.5, 0.5]

[run]
methods = ["pcrb", "psbp-fair", "psbp-int", "crb", "omni"]
kappa_list = [1.2, 2.0]
snr_list_db = [0.0, 20.0]
n_trials = 40
grid_size = 181
moment_grid_size = 401
seed = 3
output_dir = "unused"
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_priorwave"))
}

fn cases_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cases")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn bundled_cases_parse_and_round_trip() {
    let mut n = 0;
    for entry in std::fs::read_dir(cases_dir()).unwrap() {
        let path = entry.unwrap().path();
        let (cfg, _) = ScenarioConfig::load(&path).unwrap();
        let again = ScenarioConfig::parse(&cfg.to_toml(), &path).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        assert_eq!(cfg.array.m_t, 8);
        assert_eq!(cfg.run.grid_size, 361);
        n += 1;
    }
    assert_eq!(n, 14);
}

#[test]
fn scenario_three_encodes_four_modes() {
    let (cfg, _) = ScenarioConfig::load(&cases_dir().join("scenario-3.cfg")).unwrap();
    let modes = cfg.distribution().unwrap().modes();
    let want = [-60.0f64, -30.0, 20.0, 50.0];
    assert_eq!(modes.len(), 4);
    for (m, w) in modes.iter().zip(want) {
        assert!((m - w.to_radians()).abs() < 1e-12);
    }
    assert_eq!(cfg.distribution.weights, Some(vec![0.15, 0.25, 0.4, 0.2]));
}

#[test]
fn library_run_writes_valid_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::parse(SMALL, Path::new("small.cfg")).unwrap();
    let opts = RunOptions {
        output_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let m = run_scenario(&cfg, SMALL, &opts).unwrap();
    assert_eq!(m.cells.len(), 9);
    assert_eq!(m.failures().count(), 0);
    assert!(validate_dir(dir.path()).unwrap().is_empty());
    let listed: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    assert!(listed.contains(&"psbp_fair_kappa1.20/beampattern.csv"));
    assert!(listed.contains(&"omni/mse.csv"));
    assert!(!listed.contains(&"omni/trace.csv"));

    std::fs::write(dir.path().join("omni/pcrb.csv"), "snr_db,pcrb\n1,2\n").unwrap();
    let problems = validate_dir(dir.path()).unwrap();
    assert!(problems.iter().any(|p| p.contains("checksum")));
    assert!(problems.iter().any(|p| p.contains("header")));
}

#[test]
fn binary_runs_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let status = bin()
        .args(["--threads", "2", "run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = bin().arg("validate").arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));

    let bp = dir.path().join("bp.csv");
    let status = bin()
        .arg("beampattern")
        .arg("--waveform")
        .arg(out.join("pcrb_kappa1.20/waveform.csv"))
        .args(["--grid-size", "181", "--out"])
        .arg(&bp)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(
        std::fs::read(&bp).unwrap(),
        std::fs::read(out.join("pcrb_kappa1.20/beampattern.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("grid_size = 181", "grid_size = 1");
    let cfg = write_config(dir.path(), &bad);
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let line = bad.lines().position(|l| l.starts_with("grid_size")).unwrap() + 1;
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(&format!("scenario.cfg:{line}:")), "{stderr}");
}

#[test]
fn failing_cell_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    // a tiny auxiliary penalty makes the fair solver reject its settings
    let text = format!("{SMALL}\n[admm]\nrho_aux = 1e-6\n");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let status = bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.contains(",failed,")).count(), 2);
    assert_eq!(summary.lines().filter(|l| l.contains(",ok,")).count(), 7);
    assert!(out.join("pcrb_kappa1.20/waveform.csv").exists());
    assert!(validate_dir(&out).unwrap().is_empty());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::parse(SMALL, Path::new("small.cfg")).unwrap();
    let run = |seed: Option<u64>, sub: &str| {
        let out = dir.path().join(sub);
        let opts = RunOptions {
            output_dir: Some(out.clone()),
            seed,
            ..Default::default()
        };
        let m = run_scenario(&cfg, SMALL, &opts).unwrap();
        assert_eq!(m.seed, seed.unwrap_or(3));
        std::fs::read(out.join("omni/waveform.csv")).unwrap()
    };
    assert_eq!(run(None, "a"), run(Some(3), "b"));
    assert_ne!(run(None, "c"), run(Some(4), "d"));
}
