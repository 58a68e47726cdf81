//! Shared helpers for the integration suites: an independent quadrature
//! oracle, random valid-state generation, and fitting/deviation utilities.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use ppd_core::state::DensityState;
use rand::Rng;

/// Adaptive Simpson quadrature with Richardson correction. Independent of
/// every closed-form antiderivative it is used to check.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Random normalized state satisfying all representation invariants
/// (positive 2x2 coherence blocks with margin).
pub fn random_valid_state<R: Rng>(rng: &mut R, n_max: usize) -> DensityState {
    let mut s = DensityState::zero(n_max);
    for k in 0..=n_max {
        s.c_ee[k] = rng.random::<f64>();
        s.c_gg[k] = rng.random::<f64>();
        s.c_sese[k] = rng.random::<f64>();
    }
    let tr = s.trace();
    s.c_ee.iter_mut().for_each(|v| *v /= tr);
    s.c_gg.iter_mut().for_each(|v| *v /= tr);
    s.c_sese.iter_mut().for_each(|v| *v /= tr);
    for k in 0..n_max {
        let bound = (s.c_ee[k] * s.c_gg[k + 1]).sqrt();
        let r = 0.95 * bound * rng.random::<f64>();
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        s.c_ge[k] = Complex64::from_polar(r, phase);
    }
    s
}

/// Largest entrywise modulus difference between two complex matrices.
pub fn max_matrix_deviation(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).map(|c| c.norm()).max()
}

/// Largest coefficient difference between two reduced states (coherences by
/// modulus).
pub fn max_state_deviation(a: &DensityState, b: &DensityState) -> f64 {
    let pops = a
        .c_ee
        .iter()
        .zip(&b.c_ee)
        .chain(a.c_gg.iter().zip(&b.c_gg))
        .chain(a.c_sese.iter().zip(&b.c_sese))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let cohs = a
        .c_ge
        .iter()
        .zip(&b.c_ge)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max);
    pops.max(cohs)
}

/// Mean photon number from the raw distribution.
pub fn mean_photon(state: &DensityState) -> f64 {
    state
        .photon_distribution()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}
