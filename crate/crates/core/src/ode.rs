//! Adaptive Dormand-Prince 5(4) integrator over flat `f64` state vectors.
//!
//! Endpoint-only output with FSAL reuse and standard PI-free step control.
//! Used by the dense Lindblad oracle and as the propagation fallback when the
//! coefficient space is too large for a dense matrix exponential.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); E is the difference to the
// embedded 4th-order solution.
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1` and return `y(t1)`.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<f64>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0.to_vec());
    }
    debug_assert!(span > 0.0, "integration runs forward");

    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut t = t0;

    rhs(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], span, opts);
    let mut rejected = false;

    for _ in 0..opts.max_steps {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { t });
        }

        for s in 1..7 {
            for (i, v) in stage.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s - 1][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                *v = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + C[s] * h, &stage, &mut tail[0]);
        }

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut dy = 0.0;
            let mut de = 0.0;
            for s in 0..7 {
                dy += B[s] * k[s][i];
                de += E[s] * k[s][i];
            }
            y_new[i] = y[i] + h * dy;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let r = h * de / scale;
            err_sq += r * r;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the 7th stage is the derivative at the accepted point
            k.swap(0, 6);
            let fac_max = if rejected { 1.0 } else { 5.0 };
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, fac_max);
            rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            rejected = true;
        }
    }
    if t >= t1 {
        Ok(y)
    } else {
        Err(OdeError::MaxStepsExceeded {
            t,
            max_steps: opts.max_steps,
        })
    }
}

fn initial_step(y0: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 > 1e-10 && d1 > 1e-10 {
        0.01 * d0 / d1
    } else {
        1e-6 * span
    };
    // keep the first trial conservative relative to the tolerance target
    (h0 * opts.rtol.powf(0.2) / 1e-2).min(span / 10.0).max(1e-12 * span)
}
