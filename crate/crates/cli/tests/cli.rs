//! End-to-end tests of the batch front-end: emitted files, schemas,
//! determinism, exit codes.

use ppd_cli::config::{Mode, RunConfig};
use ppd_cli::run::run;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn parse_file(mode: Mode, name: &str) -> RunConfig {
    let text = fs::read_to_string(repo_config(name)).unwrap();
    RunConfig::parse(mode, &text).unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn train_run_emits_files_and_meets_the_mean_photon_target() {
    let config = parse_file(Mode::Train, "train.toml");
    let dir = tempfile::tempdir().unwrap();
    let files = run(&config, dir.path(), None).unwrap();
    assert_eq!(files.len(), 3);

    let summary = read_json(&dir.path().join("summary.json"));
    assert!(summary["relative_error"].as_f64().unwrap() < 0.005);
    assert!((summary["mean_n_analytic"].as_f64().unwrap() - 0.002).abs() < 1e-15);

    // trajectory header: t, mean_n, p_D_pre, p_D_post, p_0, p_1, trace
    let trajectory = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let header = trajectory.lines().next().unwrap();
    assert_eq!(header, "t,mean_n,p_D_pre,p_D_post,p_0,p_1,trace");
    assert_eq!(trajectory.lines().count(), 1 + 1 + 40 * 400);

    let overlay = fs::read_to_string(dir.path().join("analytic_overlay.csv")).unwrap();
    assert_eq!(overlay.lines().next().unwrap(), "t,p1,train");
}

#[test]
fn identical_configs_produce_byte_identical_outputs() {
    let config = RunConfig::parse(
        Mode::Train,
        "g = 0.1\nkappa = 1.0\nT = 500.0\nn_cycles = 8\nsamples_per_cycle = 50\ndiscard_cycles = 2\n",
    )
    .unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let files_a = run(&config, dir_a.path(), None).unwrap();
    let files_b = run(&config, dir_b.path(), None).unwrap();
    for (a, b) in files_a.iter().zip(&files_b) {
        assert_eq!(
            fs::read(a).unwrap(),
            fs::read(b).unwrap(),
            "{} differs between runs",
            a.file_name().unwrap().to_string_lossy()
        );
    }
}

#[test]
fn laser_run_reports_the_vacuum_trapping_point() {
    let config = parse_file(Mode::Laser, "laser_trapping.toml");
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path(), None).unwrap();

    let summary = read_json(&dir.path().join("fixed_point.json"));
    assert_eq!(summary["converged"], serde_json::Value::Bool(true));
    assert!((summary["p_d"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(summary["trapped_n"].as_u64(), Some(0));

    let dist = fs::read_to_string(dir.path().join("photon_distribution.csv")).unwrap();
    assert_eq!(dist.lines().next().unwrap(), "n,p_n");
    assert_eq!(dist.lines().count(), 1 + 10 + 1); // header + n = 0..=n_max
}

#[test]
fn sweep_rows_match_the_grid_and_are_worker_independent() {
    // six quickly-converging points around the trapping angle
    let text = "g = 1.0\nkappa = 1e-2\nT = 6.3\nn_max = 12\n\
                [[sweep.axes]]\nparam = \"kappa\"\nmin = 1e-2\nmax = 2e-2\nsteps = 2\n\
                [[sweep.axes]]\nparam = \"T\"\nmin = 6.1\nmax = 6.5\nsteps = 3\n";
    let config = RunConfig::parse(Mode::Sweep, text).unwrap();

    let dir_serial = tempfile::tempdir().unwrap();
    let dir_parallel = tempfile::tempdir().unwrap();
    run(&config, dir_serial.path(), Some(1)).unwrap();
    run(&config, dir_parallel.path(), Some(4)).unwrap();

    let serial = fs::read_to_string(dir_serial.path().join("sweep.csv")).unwrap();
    let parallel = fs::read_to_string(dir_parallel.path().join("sweep.csv")).unwrap();
    assert_eq!(serial, parallel, "row order must not depend on the worker count");

    assert_eq!(serial.lines().next().unwrap(), "g,kappa,T,mean_n,Q,p_D,n_trap,status");
    assert_eq!(serial.lines().count(), 1 + 6);
    for row in serial.lines().skip(1) {
        let status = row.split(',').next_back().unwrap();
        assert!(status == "converged" || status.starts_with("failed:"), "{row}");
    }
}

#[test]
fn default_sweep_grid_contains_both_statistics_classes() {
    let config = parse_file(Mode::Sweep, "sweep_default.toml");
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path(), None).unwrap();

    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 400);
    let mut q_values = Vec::new();
    for row in sweep.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields[7] == "converged" && !fields[4].is_empty() {
            q_values.push(fields[4].parse::<f64>().unwrap());
        }
    }
    assert!(q_values.iter().any(|&q| q < -0.05), "no sub-Poissonian rows");
    assert!(q_values.iter().any(|&q| q > 0.05), "no super-Poissonian rows");
}

#[test]
fn curves_run_matches_the_closed_forms_pointwise() {
    let config = parse_file(Mode::Curves, "curves.toml");
    let dir = tempfile::tempdir().unwrap();
    let files = run(&config, dir.path(), None).unwrap();
    assert_eq!(files.len(), 4);

    let train = ppd_core::analytic::TrainParams::new(0.1, 1.0, 50.0).unwrap();
    let p1_csv = fs::read_to_string(dir.path().join("p1.csv")).unwrap();
    for row in p1_csv.lines().skip(1).step_by(400) {
        let mut fields = row.split(',');
        let t: f64 = fields.next().unwrap().parse().unwrap();
        let v: f64 = fields.next().unwrap().parse().unwrap();
        assert!((v - ppd_core::analytic::p1(t, &train).unwrap()).abs() < 1e-15);
    }

    let summary = read_json(&dir.path().join("curves_summary.json"));
    assert_eq!(summary["regime"], "overdamped");
    assert!((summary["mean_photon_number"].as_f64().unwrap() - 0.02).abs() < 1e-15);
}

// ---------------------------------------------------------------------------
// exit codes through the real binary
// ---------------------------------------------------------------------------

fn ppd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppd"))
}

#[test]
fn exit_code_zero_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let status = ppd()
        .args(["curves", "--config"])
        .arg(repo_config("curves.toml"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("g1.csv").exists());
}

#[test]
fn exit_code_one_on_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "g = 0.1\nkappa = -1.0\nT = 5.0\n").unwrap();
    let status = ppd()
        .args(["train", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // unreadable config path is a config error as well
    let status = ppd()
        .args(["train", "--config", "/nonexistent.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn exit_code_two_on_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let stalled = dir.path().join("stalled.toml");
    // far too few iterations for this damping rate: honest non-convergence
    fs::write(
        &stalled,
        "g = 1.0\nkappa = 1e-3\nT = 6.283185307179586\nn_max = 10\nmax_iter = 5\n",
    )
    .unwrap();
    let status = ppd()
        .args(["laser", "--config"])
        .arg(&stalled)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // diagnostics are still written
    assert!(dir.path().join("fixed_point.json").exists());
}
