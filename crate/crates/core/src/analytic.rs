//! Closed-form photon-train results for the overdamped (bad-cavity) regime:
//! the single-shot photon probability, the periodic train built from it,
//! the stationary mean photon number, and the first-order coherence.
//!
//! These serve both as a fast evaluation path and as the primary oracle for
//! the numeric engine in [`crate::dynamics`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for deciding that `kappa^2` and `16 g^2` coincide, at
/// which point the single-shot formula has a removable singularity.
pub const CRITICAL_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("no stationary photon train for kappa = 0")]
    UndampedCavity,
}

/// Damping regime relative to the coupling, classified by `kappa^2` versus
/// `16 g^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `4g < kappa`: an emitted photon is not re-absorbed.
    Overdamped,
    /// `4g = kappa` within [`CRITICAL_REL_TOL`].
    Critical,
    /// `4g > kappa`. Supported by analytic continuation of the overdamped
    /// closed form; the single-photon restriction behind it is only
    /// physically justified in the bad-cavity limit.
    Underdamped,
}

/// Parameters of the single-dot photon train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub g: f64,
    pub kappa: f64,
    pub period: f64,
    pub regime: Regime,
}

impl TrainParams {
    pub fn new(g: f64, kappa: f64, period: f64) -> Result<Self, AnalyticError> {
        let check = |name: &'static str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(AnalyticError::InvalidParameter {
                    name,
                    reason: "must be finite and > 0".to_string(),
                })
            }
        };
        check("g", g.is_finite() && g > 0.0)?;
        check("kappa", kappa.is_finite() && kappa >= 0.0)?;
        check("period", period.is_finite() && period > 0.0)?;
        let disc = kappa * kappa - 16.0 * g * g;
        let regime = if disc.abs() < CRITICAL_REL_TOL * (kappa * kappa).max(16.0 * g * g) {
            Regime::Critical
        } else if disc > 0.0 {
            Regime::Overdamped
        } else {
            Regime::Underdamped
        };
        Ok(Self {
            g,
            kappa,
            period,
            regime,
        })
    }

    /// `sqrt(kappa^2 - 16 g^2)` in the overdamped regime.
    pub fn beta(&self) -> f64 {
        (self.kappa * self.kappa - 16.0 * self.g * self.g).max(0.0).sqrt()
    }

    /// Phase offset of the first-order coherence, `arctan(kappa / 2g)`.
    pub fn phi(&self) -> f64 {
        (self.kappa / (2.0 * self.g)).atan()
    }
}

/// Probability of finding the photon in the resonator at time `t` after a
/// single excitation of the dot from the field vacuum.
///
/// Overdamped closed form, written in underflow-safe factors:
///
/// ```text
/// p1(t) = 8 g^2 / (kappa^2 - 16 g^2)
///         * exp(-kappa t / 2) * (cosh(t/2 sqrt(kappa^2 - 16 g^2)) - 1)
///       = 8 g^2 / beta^2 * exp(-(kappa - beta) t / 2) * expm1(-beta t / 2)^2 / 2
/// ```
///
/// Near the critical point the removable singularity is evaluated by series,
/// `p1 -> g^2 t^2 exp(-kappa t / 2)`; the underdamped branch is the analytic
/// continuation `cosh(ix) = cos(x)`.
pub fn p1(t: f64, params: &TrainParams) -> Result<f64, AnalyticError> {
    if t < 0.0 || !t.is_finite() {
        return Err(AnalyticError::NegativeTime(t));
    }
    let (g, kappa) = (params.g, params.kappa);
    let value = match params.regime {
        Regime::Critical => {
            // g^2 t^2 e^{-kt/2} (1 + x^2/12 + x^4/360), x^2 = (k^2-16g^2) t^2/4
            let x2 = (kappa * kappa - 16.0 * g * g) * t * t / 4.0;
            g * g * t * t * (-kappa * t / 2.0).exp() * (1.0 + x2 / 12.0 + x2 * x2 / 360.0)
        }
        Regime::Overdamped => {
            let beta = params.beta();
            let em = (-beta * t / 2.0).exp_m1();
            8.0 * g * g / (beta * beta) * (-(kappa - beta) * t / 2.0).exp() * em * em / 2.0
        }
        Regime::Underdamped => {
            let omega = (16.0 * g * g - kappa * kappa).sqrt();
            let s = (omega * t / 4.0).sin();
            16.0 * g * g / (omega * omega) * (-kappa * t / 2.0).exp() * s * s
        }
    };
    Ok(value.min(1.0))
}

/// The periodic photon train: pulses of `p1` shifted by multiples of the
/// period, windowed so that exactly one pulse is active at any time. The
/// window boundaries `t = m T` themselves evaluate to 0 (the step function is
/// closed at zero).
pub fn photon_train(t: f64, params: &TrainParams) -> Result<f64, AnalyticError> {
    if t < 0.0 || !t.is_finite() {
        return Err(AnalyticError::NegativeTime(t));
    }
    let m = (t / params.period).floor();
    let dt = t - m * params.period;
    if dt == 0.0 {
        return Ok(0.0);
    }
    p1(dt, params)
}

/// Stationary mean photon number of the train, `1 / (kappa T)`.
pub fn mean_photon_number(params: &TrainParams) -> Result<f64, AnalyticError> {
    if params.kappa == 0.0 {
        return Err(AnalyticError::UndampedCavity);
    }
    Ok(1.0 / (params.kappa * params.period))
}

/// First-order coherence of the train,
/// `g1(tau) = sqrt(1 + kappa^2/4g^2) exp(-kappa|tau|/2) cos(g|tau| + phi)`
/// with `phi = arctan(kappa / 2g)`. Even in `tau`, normalized to 1 at zero.
pub fn g1(tau: f64, params: &TrainParams) -> f64 {
    let (g, kappa) = (params.g, params.kappa);
    let tau = tau.abs();
    let envelope = (1.0 + kappa * kappa / (4.0 * g * g)).sqrt() * (-kappa * tau / 2.0).exp();
    envelope * (g * tau + params.phi()).cos()
}
