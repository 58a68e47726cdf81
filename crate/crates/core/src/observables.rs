//! Photon statistics, dot excitation probability, trapping detection, and
//! trajectory averaging.

use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

use crate::dynamics::{DynamicsError, Liouvillian, Trajectory};
use crate::state::{DensityState, SystemParams};

/// `|Q|` below this is reported as Poissonian.
pub const POISSON_Q_TOL: f64 = 1e-6;
/// Mean photon number below this counts as vacuum; the Mandel Q is then
/// undefined and reported as not-applicable rather than 0 or infinity.
pub const VACUUM_MEAN_FLOOR: f64 = 1e-12;
/// Relative tolerance on the Rabi angle being an integer multiple of pi in
/// the trapping test.
pub const TRAPPING_ANGLE_REL_TOL: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ObservablesError {
    #[error("unknown observable \"{0}\"")]
    UnknownObservable(String),
    #[error("window {start}..{end} is degenerate or exceeds the trajectory extent ({cycles} cycles)")]
    InvalidWindow {
        start: usize,
        end: usize,
        cycles: usize,
    },
    #[error(
        "excitation probability drifts by {delta:e} over further cycles (allowed {allowed:e}); \
         input is not a converged fixed point"
    )]
    InconsistentFixedPoint { delta: f64, allowed: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    SubPoissonian,
    Poissonian,
    SuperPoissonian,
}

/// Photon-number statistics of a state. Populations are clamped to zero at
/// extraction; at vacuum the Mandel Q and the classification are
/// not-applicable (`None`).
#[derive(Debug, Clone, Serialize)]
pub struct PhotonStatistics {
    pub p_n: Vec<f64>,
    pub mean_n: f64,
    pub variance: f64,
    pub mandel_q: Option<f64>,
    pub classification: Option<Classification>,
}

pub fn statistics(state: &DensityState) -> PhotonStatistics {
    let p_n: Vec<f64> = state
        .photon_distribution()
        .into_iter()
        .map(|p| p.max(0.0))
        .collect();
    let mean_n: f64 = p_n.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = p_n
        .iter()
        .enumerate()
        .map(|(n, p)| (n * n) as f64 * p)
        .sum();
    let variance = second - mean_n * mean_n;
    let mandel_q = (mean_n > VACUUM_MEAN_FLOOR).then(|| variance / mean_n - 1.0);
    let classification = mandel_q.map(|q| {
        if q.abs() < POISSON_Q_TOL {
            Classification::Poissonian
        } else if q < 0.0 {
            Classification::SubPoissonian
        } else {
            Classification::SuperPoissonian
        }
    });
    PhotonStatistics {
        p_n,
        mean_n,
        variance,
        mandel_q,
        classification,
    }
}

/// Excited-dot probability pair: the population of the state as-is, and the
/// value it would take just after a pump event.
pub fn excitation_probability(state: &DensityState) -> (f64, f64) {
    (
        state.excited_population(),
        state.post_pump_excited_population(),
    )
}

/// Excitation probability of the stationary regime, taken from a converged
/// fixed point of the period map. Constancy is verified over two further
/// cycles; drift beyond `10 * tol` signals a non-converged input.
pub fn stationary_p_d(
    lv: &Liouvillian,
    fixed_point: &DensityState,
    tol: f64,
) -> Result<f64, ObservablesError> {
    let once = lv.period_map(fixed_point)?;
    let twice = lv.period_map(&once)?;
    let p0 = fixed_point.excited_population();
    let p1 = once.excited_population();
    let p2 = twice.excited_population();
    let delta = (p1 - p0).abs().max((p2 - p1).abs());
    let allowed = 10.0 * tol;
    if delta > allowed {
        return Err(ObservablesError::InconsistentFixedPoint { delta, allowed });
    }
    Ok(p0)
}

/// Detect a trapped photon number: the smallest `n*` whose tail mass
/// `sum_{n > n*} p_n` is below `threshold` while the accumulated Rabi angle
/// `g (T/2) sqrt(n*+1)` sits within 1% of an integer multiple of pi (the dot
/// completes full Rabi cycles and cannot push the photon number past `n*`).
pub fn detect_trapping(p_n: &[f64], threshold: f64, params: &SystemParams) -> Option<usize> {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    let mut tail: f64 = p_n.iter().sum();
    for (n_star, &p) in p_n.iter().enumerate() {
        tail -= p;
        if tail < threshold && rabi_angle_is_full_cycle(params, n_star) {
            return Some(n_star);
        }
    }
    None
}

fn rabi_angle_is_full_cycle(params: &SystemParams, n_star: usize) -> bool {
    let angle = params.g * params.half_period() * ((n_star + 1) as f64).sqrt();
    let multiple = (angle / PI).round();
    multiple >= 1.0 && (angle - multiple * PI).abs() <= TRAPPING_ANGLE_REL_TOL * multiple * PI
}

/// Trapezoidal time average of a named per-sample observable over a window
/// of pump intervals `[start, end)` (both in units of `T/2`).
///
/// Recognized names: `mean_n`, `p_d_pre`, `p_d_post`, `trace`, and `p_<k>`
/// for individual photon-number probabilities.
pub fn time_average(
    traj: &Trajectory,
    observable: &str,
    window: (usize, usize),
) -> Result<f64, ObservablesError> {
    let (start, end) = window;
    let cycles = traj.n_cycles();
    if start >= end || end > cycles {
        return Err(ObservablesError::InvalidWindow { start, end, cycles });
    }
    let extract = parse_observable(observable)?;
    let i0 = start * traj.samples_per_cycle;
    let i1 = end * traj.samples_per_cycle;
    let samples = &traj.samples[i0..=i1];
    let mut integral = 0.0;
    for pair in samples.windows(2) {
        let dt = pair[1].t - pair[0].t;
        integral += 0.5 * dt * (extract(&pair[0]) + extract(&pair[1]));
    }
    let span = samples.last().unwrap().t - samples.first().unwrap().t;
    Ok(integral / span)
}

type SampleExtractor = Box<dyn Fn(&crate::dynamics::Sample) -> f64>;

fn parse_observable(name: &str) -> Result<SampleExtractor, ObservablesError> {
    match name {
        "mean_n" => Ok(Box::new(|s| s.mean_n)),
        "p_d_pre" => Ok(Box::new(|s| s.p_d_pre)),
        "p_d_post" => Ok(Box::new(|s| s.p_d_post)),
        "trace" => Ok(Box::new(|s| s.trace)),
        other => {
            if let Some(k) = other.strip_prefix("p_").and_then(|k| k.parse::<usize>().ok()) {
                Ok(Box::new(move |s| s.photon_dist.get(k).copied().unwrap_or(0.0)))
            } else {
                Err(ObservablesError::UnknownObservable(other.to_string()))
            }
        }
    }
}

/// Default microlaser sweep grid: `g = 1`, `kappa` in `{1e-3, 1e-2}`, and
/// the accumulated half-period Rabi angle `g T/2` spanning `[0.1, 2*pi]` in
/// 200 steps, at Fock truncation 30. Rows are ordered kappa-major.
pub fn default_sweep_grid() -> Vec<SystemParams> {
    let g = 1.0;
    let n_max = 30;
    let steps = 200;
    let (theta_min, theta_max) = (0.1, 2.0 * PI);
    let mut grid = Vec::with_capacity(2 * steps);
    for &kappa in &[1e-3, 1e-2] {
        for i in 0..steps {
            let theta =
                theta_min + (theta_max - theta_min) * i as f64 / (steps - 1) as f64;
            let period = 2.0 * theta / g;
            grid.push(SystemParams::new(g, kappa, period, n_max).expect("grid params are valid"));
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::DotLevel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn state_with_distribution(p: &[f64]) -> DensityState {
        let mut s = DensityState::zero(p.len() - 1);
        s.c_gg.copy_from_slice(p);
        s
    }

    #[test]
    fn two_point_distribution_statistics() {
        let stats = statistics(&state_with_distribution(&[0.5, 0.5]));
        assert_eq!(stats.mean_n, 0.5);
        assert_eq!(stats.variance, 0.25);
        assert_eq!(stats.mandel_q, Some(-0.5));
        assert_eq!(stats.classification, Some(Classification::SubPoissonian));
    }

    #[test]
    fn fock_state_has_q_of_minus_one() {
        for n in 1..=4 {
            let s = DensityState::new_pure(DotLevel::Ground, n, 5).unwrap();
            let stats = statistics(&s);
            assert_abs_diff_eq!(stats.mandel_q.unwrap(), -1.0, epsilon = 1e-12);
            assert_eq!(stats.classification, Some(Classification::SubPoissonian));
        }
    }

    #[test]
    fn truncated_poisson_distribution_is_poissonian() {
        let lambda: f64 = 0.5;
        let mut p = vec![0.0; 21];
        let mut fact = 1.0;
        for (n, slot) in p.iter_mut().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            *slot = (-lambda).exp() * lambda.powi(n as i32) / fact;
        }
        let norm: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= norm);
        let stats = statistics(&state_with_distribution(&p));
        assert!(stats.mandel_q.unwrap().abs() < 1e-6);
        assert_eq!(stats.classification, Some(Classification::Poissonian));
        assert_relative_eq!(stats.mean_n, lambda, max_relative = 1e-10);
    }

    #[test]
    fn vacuum_q_is_not_applicable() {
        let s = DensityState::new_pure(DotLevel::Excited, 0, 3).unwrap();
        let stats = statistics(&s);
        assert_eq!(stats.mandel_q, None);
        assert_eq!(stats.classification, None);
        assert_eq!(stats.mean_n, 0.0);
    }

    #[test]
    fn negative_roundoff_is_clamped_at_extraction() {
        let mut s = DensityState::new_pure(DotLevel::Ground, 1, 2).unwrap();
        s.c_gg[0] = -1e-13;
        let stats = statistics(&s);
        assert!(stats.p_n.iter().all(|&p| p >= 0.0));
        assert!(stats.mandel_q.unwrap() >= -1.0);
    }

    #[test]
    fn excitation_probability_pairs() {
        let e = DensityState::new_pure(DotLevel::Excited, 2, 4).unwrap();
        assert_eq!(excitation_probability(&e), (1.0, 1.0));
        let se = DensityState::new_pure(DotLevel::SemiExcited, 1, 4).unwrap();
        assert_eq!(excitation_probability(&se), (0.0, 1.0));
        let g = DensityState::new_pure(DotLevel::Ground, 3, 4).unwrap();
        assert_eq!(excitation_probability(&g), (0.0, 0.0));
    }

    #[test]
    fn post_pump_value_matches_pumped_state_exactly() {
        let mut s = DensityState::zero(4);
        s.c_ee = vec![0.11, 0.07, 0.0, 0.02, 0.01];
        s.c_sese = vec![0.3, 0.05, 0.14, 0.0, 0.1];
        s.c_gg = vec![0.1, 0.05, 0.05, 0.0, 0.0];
        assert_eq!(
            excitation_probability(&s).1,
            s.pump_map().excited_population()
        );
    }

    #[test]
    fn stationary_p_d_in_the_decoupled_limit() {
        let params = SystemParams::new(0.0, 0.7, 2.0, 3).unwrap();
        let lv = Liouvillian::new(params);
        let fp = lv.fixed_point(1e-12, 100).unwrap();
        assert!(fp.converged);
        let p_d = stationary_p_d(&lv, &fp.state, 1e-12).unwrap();
        assert_relative_eq!(p_d, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn stationary_p_d_rejects_unconverged_input() {
        let params = SystemParams::new(0.9, 0.4, 3.0, 6).unwrap();
        let lv = Liouvillian::new(params);
        // an excited start is far from stationary
        let s = DensityState::new_pure(DotLevel::Excited, 0, 6).unwrap();
        assert!(matches!(
            stationary_p_d(&lv, &s, 1e-12),
            Err(ObservablesError::InconsistentFixedPoint { .. })
        ));
    }

    #[test]
    fn trapping_detection_by_construction() {
        // all mass on n <= 3 and g (T/2) * 2 = 2 pi
        let params = SystemParams::new(1.0, 1e-3, 2.0 * PI, 10).unwrap();
        let mut p = vec![0.0; 11];
        p[0] = 0.1;
        p[1] = 0.2;
        p[2] = 0.3;
        p[3] = 0.4;
        assert_eq!(detect_trapping(&p, 1e-3, &params), Some(3));
    }

    #[test]
    fn flat_tail_without_rabi_multiple_is_not_trapped() {
        // angle g T/2 sqrt(n+1) = 1.3 sqrt(n+1) stays away from m*pi for n <= 10
        let params = SystemParams::new(1.0, 1e-3, 2.6, 10).unwrap();
        let p = vec![1.0 / 11.0; 11];
        assert_eq!(detect_trapping(&p, 1e-3, &params), None);
    }

    #[test]
    fn trapping_threshold_is_monotone() {
        let params = SystemParams::new(1.0, 1e-3, 2.0 * PI, 10).unwrap();
        let p = [0.5, 0.3, 0.1, 0.05, 0.03, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0];
        let loose = detect_trapping(&p, 0.5, &params);
        let tight = detect_trapping(&p, 1e-3, &params);
        match (loose, tight) {
            (Some(a), Some(b)) => assert!(a <= b),
            (None, Some(_)) => panic!("loosening the threshold lost the trap"),
            _ => {}
        }
    }

    #[test]
    fn time_average_of_constant_observable() {
        let params = SystemParams::new(0.4, 0.6, 3.0, 4).unwrap();
        let lv = Liouvillian::new(params);
        let initial = DensityState::new_pure(DotLevel::Excited, 0, 4).unwrap();
        let traj = lv.simulate(&initial, 4, 16).unwrap();
        // the run is trace preserving, so "trace" is the constant 1
        let avg = time_average(&traj, "trace", (0, 4)).unwrap();
        assert_abs_diff_eq!(avg, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn time_average_rejects_bad_windows_and_names() {
        let params = SystemParams::new(0.4, 0.6, 3.0, 2).unwrap();
        let lv = Liouvillian::new(params);
        let initial = DensityState::new_pure(DotLevel::Excited, 0, 2).unwrap();
        let traj = lv.simulate(&initial, 3, 4).unwrap();
        assert!(matches!(
            time_average(&traj, "mean_n", (2, 2)),
            Err(ObservablesError::InvalidWindow { .. })
        ));
        assert!(matches!(
            time_average(&traj, "mean_n", (0, 5)),
            Err(ObservablesError::InvalidWindow { .. })
        ));
        assert!(matches!(
            time_average(&traj, "entropy", (0, 2)),
            Err(ObservablesError::UnknownObservable(_))
        ));
        // photon-slot observables parse
        assert!(time_average(&traj, "p_1", (0, 3)).is_ok());
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_sweep_grid();
        assert_eq!(grid.len(), 400);
        assert!(grid.iter().all(|p| p.g == 1.0 && p.n_max == 30));
        let thetas: Vec<f64> = grid[..200]
            .iter()
            .map(|p| p.g * p.half_period())
            .collect();
        assert_abs_diff_eq!(thetas[0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(*thetas.last().unwrap(), 2.0 * PI, epsilon = 1e-12);
    }
}
