use std::path::Path;
use std::process::Command;

use radcom::harness::{
    self, run_power_experiment, AntennaRole, ExperimentConfig, OperatingPoint, SolverKind, BASELINE_CSV, MANIFEST_JSON,
    SWEEP_CSV, SWEEP_MEAN_CSV,
};
use radcom::model::linear_to_db;

fn small_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        n_total: 8,
        n_users: 2,
        power_total: 10.0,
        rho_grid: vec![0.0, 1.0, 100.0],
        n_trials: 3,
        seed: 7,
        output_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn empty_file_gives_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "").unwrap();
    assert_eq!(harness::parse_config(&path).unwrap(), ExperimentConfig::default());
}

#[test]
fn config_roundtrips_through_toml() {
    let mut config = ExperimentConfig { n_radar: Some(6), power_radar: Some(30.0), ..ExperimentConfig::default() };
    config.rate_weights = Some(vec![1.0, 2.0, 1.0, 0.5]);
    config.shared.eps_inner = 1e-7;
    let text = config.to_toml().unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), config);
}

#[test]
fn negative_power_names_key() {
    let err = ExperimentConfig::from_toml("power_total = -3.0\n").unwrap_err();
    assert!(err.is_config_error());
    assert!(err.to_string().contains("power_total"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let err = ExperimentConfig::from_toml("[shared]\neps_innr = 1e-3\n").unwrap_err();
    assert!(err.to_string().contains("eps_innr"), "{err}");
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let names = [SWEEP_CSV, SWEEP_MEAN_CSV, BASELINE_CSV, MANIFEST_JSON];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let result = harness::run_tradeoff_sweep(&config).unwrap();
        assert_eq!(result.failed_rows(), 0);
        harness::write_sweep(&result, &config, dir.path(), "sweep").unwrap();
        runs.push(names.map(|n| std::fs::read(dir.path().join(n)).unwrap()));
    }
    for (i, name) in names.iter().enumerate() {
        assert!(!runs[0][i].is_empty());
        assert!(runs[0][i] == runs[1][i], "{name} differs between runs");
    }
}

#[test]
fn sweep_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let result = harness::run_tradeoff_sweep(&config).unwrap();
    harness::write_sweep(&result, &config, dir.path(), "sweep").unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join(SWEEP_CSV)).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, harness::SWEEP_HEADER);
    // 2 solvers × 3 ρ × 3 trials
    assert_eq!(reader.records().count(), 18);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_JSON)).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["failed_rows"], 0);
}

#[test]
fn single_shared_trial_at_zero_rho_hits_radar_bound() {
    let config = ExperimentConfig {
        n_trials: 1,
        rho_grid: vec![0.0],
        solvers: vec![SolverKind::Shared],
        ..ExperimentConfig::default()
    };
    let result = harness::run_tradeoff_sweep(&config).unwrap();
    assert_eq!(result.rows.len(), 1);
    let dbm = result.rows[0].probing_dbm;
    assert!((dbm - linear_to_db(1600.0)).abs() <= 0.05, "{dbm}");
    assert!((dbm - 32.04).abs() <= 0.05);
}

#[test]
fn power_report_meets_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.n_trials = 2;
    config.solvers = vec![SolverKind::Separated, SolverKind::Shared];
    let rows = run_power_experiment(&config, OperatingPoint::Rho(1.0)).unwrap();
    let n = config.n_total as f64;
    let p_r = config.power_total / 2.0;
    let n_tr = (config.n_total / 2) as f64;
    let mut comm_sum = 0.0;
    for row in &rows {
        match row.role {
            AntennaRole::Shared => assert!((row.power - config.power_total / n).abs() <= 1e-10),
            AntennaRole::Radar => assert!((row.power - p_r / n_tr).abs() <= 1e-6),
            AntennaRole::Comm => comm_sum += row.power,
        }
    }
    assert!(comm_sum <= config.power_total / 2.0 + 1e-8);
    assert_eq!(rows.iter().filter(|r| r.solver == SolverKind::Shared).count(), config.n_total);
    assert_eq!(rows.iter().filter(|r| r.solver == SolverKind::Separated).count(), config.n_total);
}

fn radcom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radcom"))
}

#[test]
fn cli_help_succeeds() {
    let status = radcom().arg("--help").output().unwrap().status;
    assert_eq!(status.code(), Some(0));
}

#[test]
fn cli_usage_error_exits_one() {
    let status = radcom().args(["sweep", "--bogus"]).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn cli_config_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "power_total = -1.0\n").unwrap();
    let out = radcom().args(["sweep", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("power_total"));
}

#[test]
fn cli_solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.toml");
    std::fs::write(
        &path,
        "n_total = 4\nn_users = 1\nsolvers = [\"separated\"]\n[separated]\nadmm_max_iters = 1\nadmm_tol = 1e-14\n",
    )
    .unwrap();
    let out = radcom()
        .args(["sweep", "--trials", "1", "--rho", "1", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // Files are still written.
    assert!(dir.path().join(MANIFEST_JSON).exists());
}

#[test]
fn cli_sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.toml");
    std::fs::write(&path, "n_total = 6\nn_users = 2\n").unwrap();
    let out = radcom()
        .args(["sweep", "--trials", "2", "--rho", "0,10", "--solver", "shared", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [SWEEP_CSV, SWEEP_MEAN_CSV, BASELINE_CSV, MANIFEST_JSON] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}
