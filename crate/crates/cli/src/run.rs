//! Run orchestration: builds the engine from a [`RunConfig`], executes the
//! selected mode, and emits CSV/JSON files with documented schemas.

use std::path::{Path, PathBuf};

use ppd_core::analytic::{self, TrainParams};
use ppd_core::dynamics::{DynamicsError, Liouvillian};
use ppd_core::observables::{self, statistics};
use ppd_core::state::{DensityState, SystemParams};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Mode, RunConfig};
use crate::emit::{self, fmt, fmt_opt, EmitError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code: 1 for configuration problems, 2 for runtime
    /// failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<EmitError> for CliError {
    fn from(e: EmitError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Execute a validated run, writing outputs under `out_dir`. Returns the
/// emitted file paths.
pub fn run(
    config: &RunConfig,
    out_dir: &Path,
    workers_override: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    match config.mode {
        Mode::Train => run_train(config, out_dir),
        Mode::Laser => run_laser(config, out_dir),
        Mode::Sweep => run_sweep(config, out_dir, workers_override),
        Mode::Curves => run_curves(config, out_dir),
    }
}

fn initial_state(config: &RunConfig) -> Result<DensityState, CliError> {
    DensityState::new_pure(config.initial_dot, config.initial_photons, config.params.n_max)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Serialize)]
struct TrainSummary {
    mode: &'static str,
    g: f64,
    kappa: f64,
    #[serde(rename = "T")]
    period: f64,
    n_max: usize,
    n_cycles: usize,
    samples_per_cycle: usize,
    discard_cycles: usize,
    mean_n_numeric: f64,
    mean_n_analytic: f64,
    relative_error: f64,
}

fn run_train(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = config.params;
    let lv = Liouvillian::new(params);
    let traj = lv.simulate(&initial_state(config)?, config.n_cycles, config.samples_per_cycle)?;

    let trajectory_path = out_dir.join("trajectory.csv");
    let mut header: Vec<String> = ["t", "mean_n", "p_D_pre", "p_D_post"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..=params.n_max).map(|n| format!("p_{n}")));
    header.push("trace".to_string());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = traj
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![fmt(s.t), fmt(s.mean_n), fmt(s.p_d_pre), fmt(s.p_d_post)];
            row.extend(s.photon_dist.iter().map(|&p| fmt(p)));
            row.push(fmt(s.trace));
            row
        })
        .collect();
    emit::write_csv(&trajectory_path, &header_refs, &rows, Some(0))?;

    // closed-form overlay on the same time grid
    let train = train_params(&params)?;
    let overlay_path = out_dir.join("analytic_overlay.csv");
    let overlay_rows: Vec<Vec<String>> = traj
        .samples
        .iter()
        .map(|s| {
            Ok(vec![
                fmt(s.t),
                fmt(analytic::p1(s.t, &train).map_err(|e| CliError::Runtime(e.to_string()))?),
                fmt(analytic::photon_train(s.t, &train)
                    .map_err(|e| CliError::Runtime(e.to_string()))?),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    emit::write_csv(&overlay_path, &["t", "p1", "train"], &overlay_rows, Some(0))?;

    let mean_numeric =
        observables::time_average(&traj, "mean_n", (config.discard_cycles, config.n_cycles))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mean_analytic =
        analytic::mean_photon_number(&train).map_err(|e| CliError::Runtime(e.to_string()))?;
    let summary = TrainSummary {
        mode: "train",
        g: params.g,
        kappa: params.kappa,
        period: params.period,
        n_max: params.n_max,
        n_cycles: config.n_cycles,
        samples_per_cycle: config.samples_per_cycle,
        discard_cycles: config.discard_cycles,
        mean_n_numeric: mean_numeric,
        mean_n_analytic: mean_analytic,
        relative_error: (mean_numeric - mean_analytic).abs() / mean_analytic,
    };
    let summary_path = out_dir.join("summary.json");
    emit::write_json(&summary_path, &summary)?;

    Ok(vec![trajectory_path, overlay_path, summary_path])
}

fn train_params(params: &SystemParams) -> Result<TrainParams, CliError> {
    TrainParams::new(params.g, params.kappa, params.period)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Serialize)]
struct LaserSummary {
    mode: &'static str,
    g: f64,
    kappa: f64,
    #[serde(rename = "T")]
    period: f64,
    n_max: usize,
    converged: bool,
    iterations: usize,
    residual: f64,
    p_d: f64,
    mean_n: f64,
    variance: f64,
    mandel_q: Option<f64>,
    classification: Option<observables::Classification>,
    trapped_n: Option<usize>,
}

fn run_laser(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = config.params;
    let lv = Liouvillian::new(params);
    let fp = lv
        .fixed_point_from(&initial_state(config)?, config.fixed_point_tol, config.max_iter)?;
    let stats = statistics(&fp.state);
    let p_d = if fp.converged {
        observables::stationary_p_d(&lv, &fp.state, config.fixed_point_tol)
            .map_err(|e| CliError::Runtime(e.to_string()))?
    } else {
        fp.state.excited_population()
    };
    let summary = LaserSummary {
        mode: "laser",
        g: params.g,
        kappa: params.kappa,
        period: params.period,
        n_max: params.n_max,
        converged: fp.converged,
        iterations: fp.iterations,
        residual: fp.residual,
        p_d,
        mean_n: stats.mean_n,
        variance: stats.variance,
        mandel_q: stats.mandel_q,
        classification: stats.classification,
        trapped_n: observables::detect_trapping(&stats.p_n, config.trap_threshold, &params),
    };
    let summary_path = out_dir.join("fixed_point.json");
    emit::write_json(&summary_path, &summary)?;

    let dist_path = out_dir.join("photon_distribution.csv");
    let rows: Vec<Vec<String>> = stats
        .p_n
        .iter()
        .enumerate()
        .map(|(n, &p)| vec![n.to_string(), fmt(p)])
        .collect();
    emit::write_csv(&dist_path, &["n", "p_n"], &rows, None)?;

    if !fp.converged {
        return Err(CliError::Runtime(format!(
            "fixed point did not converge within {} iterations (residual {:e})",
            fp.iterations, fp.residual
        )));
    }
    Ok(vec![summary_path, dist_path])
}

/// Outcome of one sweep grid point; failures are recorded, never fatal.
struct SweepRow {
    params: SystemParams,
    mean_n: Option<f64>,
    mandel_q: Option<f64>,
    p_d: Option<f64>,
    trapped_n: Option<usize>,
    status: &'static str,
}

fn sweep_point(config: &RunConfig, params: SystemParams) -> SweepRow {
    let lv = Liouvillian::new(params);
    let failed = |status: &'static str| SweepRow {
        params,
        mean_n: None,
        mandel_q: None,
        p_d: None,
        trapped_n: None,
        status,
    };
    match lv.fixed_point(config.fixed_point_tol, config.max_iter) {
        Ok(fp) if fp.converged => {
            let stats = statistics(&fp.state);
            match observables::stationary_p_d(&lv, &fp.state, config.fixed_point_tol) {
                Ok(p_d) => SweepRow {
                    params,
                    mean_n: Some(stats.mean_n),
                    mandel_q: stats.mandel_q,
                    p_d: Some(p_d),
                    trapped_n: observables::detect_trapping(
                        &stats.p_n,
                        config.trap_threshold,
                        &params,
                    ),
                    status: "converged",
                },
                Err(_) => failed("failed:inconsistent"),
            }
        }
        Ok(_) => failed("failed:not_converged"),
        Err(DynamicsError::Truncation { .. }) => failed("failed:truncation"),
        Err(_) => failed("failed:error"),
    }
}

fn run_sweep(
    config: &RunConfig,
    out_dir: &Path,
    workers_override: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let grid = config.sweep_grid();
    let workers = workers_override.or(config.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;

    // points are independent; rayon preserves grid order in the collect
    let rows: Vec<SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        grid.par_iter().map(|p| sweep_point(config, *p)).collect()
    });

    let path = out_dir.join("sweep.csv");
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.params.g),
                fmt(r.params.kappa),
                fmt(r.params.period),
                fmt_opt(r.mean_n),
                fmt_opt(r.mandel_q),
                fmt_opt(r.p_d),
                r.trapped_n.map(|n| n.to_string()).unwrap_or_default(),
                r.status.to_string(),
            ]
        })
        .collect();
    emit::write_csv(
        &path,
        &["g", "kappa", "T", "mean_n", "Q", "p_D", "n_trap", "status"],
        &csv_rows,
        None,
    )?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct CurvesSummary {
    mode: &'static str,
    g: f64,
    kappa: f64,
    #[serde(rename = "T")]
    period: f64,
    regime: analytic::Regime,
    mean_photon_number: Option<f64>,
}

fn run_curves(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = config.params;
    let train = train_params(&params)?;
    let spec = &config.curves;

    let grid = |max: f64| -> Vec<f64> {
        (0..spec.points)
            .map(|i| max * i as f64 / (spec.points - 1) as f64)
            .collect()
    };

    let mut emitted = Vec::new();
    for (file, label, f) in [
        (
            "p1.csv",
            "p1",
            Box::new(|t: f64| analytic::p1(t, &train).expect("t >= 0")) as Box<dyn Fn(f64) -> f64>,
        ),
        (
            "photon_train.csv",
            "train",
            Box::new(|t: f64| analytic::photon_train(t, &train).expect("t >= 0")),
        ),
    ] {
        let path = out_dir.join(file);
        let rows: Vec<Vec<String>> = grid(spec.t_max)
            .iter()
            .map(|&t| vec![fmt(t), fmt(f(t))])
            .collect();
        emit::write_csv(&path, &["t", label], &rows, Some(0))?;
        emitted.push(path);
    }

    let g1_path = out_dir.join("g1.csv");
    let rows: Vec<Vec<String>> = grid(spec.tau_max)
        .iter()
        .map(|&tau| vec![fmt(tau), fmt(analytic::g1(tau, &train))])
        .collect();
    emit::write_csv(&g1_path, &["tau", "g1"], &rows, Some(0))?;
    emitted.push(g1_path);

    let summary_path = out_dir.join("curves_summary.json");
    emit::write_json(
        &summary_path,
        &CurvesSummary {
            mode: "curves",
            g: params.g,
            kappa: params.kappa,
            period: params.period,
            regime: train.regime,
            mean_photon_number: analytic::mean_photon_number(&train).ok(),
        },
    )?;
    emitted.push(summary_path);
    Ok(emitted)
}
