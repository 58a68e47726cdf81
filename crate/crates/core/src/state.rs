//! Hilbert-space model for the three-level dot coupled to a truncated Fock
//! ladder: system parameters, the reduced density-operator representation,
//! and the instantaneous incoherent pump map.
//!
//! The density operator is closed under both the free evolution and the pump
//! map on the five coefficient families
//!
//! ```text
//! rho = sum_n  c_ee[n]   |e,n><e,n|
//!            + c_gg[n]   |g,n><g,n|
//!            + c_sese[n] |se,n><se,n|
//!            + c_ge[n]   |g,n+1><e,n|  + conj(c_ge[n]) |e,n><g,n+1|
//! ```
//!
//! so only these families are stored; the full dot⊗field matrix exists as a
//! test oracle via [`DensityState::to_full_matrix`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `trace == 1` for normalized states.
pub const TRACE_TOL: f64 = 1e-9;
/// Populations may dip this far below zero from roundoff before a state is
/// considered invalid.
pub const NEGATIVITY_TOL: f64 = 1e-12;
/// Slack on the 2x2 coherence-block positivity check.
pub const COHERENCE_SLACK: f64 = 1e-12;
/// Default bound on the population of the truncated coupling edge `|e,n_max>`
/// during evolution.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("photon number {n} exceeds Fock truncation n_max = {n_max}")]
    PhotonOutOfRange { n: usize, n_max: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("matrix dimension {got} does not match 3*(n_max+1) = {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("state invariant violated: {0}")]
    InvariantViolation(String),
}

/// Physical constants of one dot+cavity configuration.
///
/// All rates and times are in dimensionless user units; results depend only
/// on the combinations `g/kappa` and `g*T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Dot-field coupling rate.
    pub g: f64,
    /// Cavity damping rate.
    pub kappa: f64,
    /// Pump period: one full electron+hole cycle. Pump events occur every
    /// `T/2`, at `t_i = T/2, T, 3T/2, ...`.
    pub period: f64,
    /// Highest retained photon number.
    pub n_max: usize,
    /// Truncation monitor: evolution fails once the population of
    /// `|e,n_max>` (the level whose upward coupling is cut) exceeds this.
    pub tail_threshold: f64,
}

impl SystemParams {
    pub fn new(g: f64, kappa: f64, period: f64, n_max: usize) -> Result<Self, StateError> {
        let check = |name: &'static str, ok: bool, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(StateError::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        };
        // g = 0 is admitted so the decoupled pump-chain limit stays runnable
        check("g", g.is_finite() && g >= 0.0, "must be finite and >= 0")?;
        check("kappa", kappa.is_finite() && kappa >= 0.0, "must be finite and >= 0")?;
        check("period", period.is_finite() && period > 0.0, "must be finite and > 0")?;
        check("n_max", n_max >= 1, "must be >= 1")?;
        Ok(Self {
            g,
            kappa,
            period,
            n_max,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        })
    }

    pub fn with_tail_threshold(mut self, threshold: f64) -> Result<Self, StateError> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(StateError::InvalidParameter {
                name: "tail_threshold",
                reason: "must be finite and > 0".to_string(),
            });
        }
        self.tail_threshold = threshold;
        Ok(self)
    }

    /// Spacing between consecutive pump events.
    pub fn half_period(&self) -> f64 {
        self.period / 2.0
    }
}

/// The three dot levels. `SemiExcited` (one carrier captured) is annihilated
/// by both pseudo-spin operators and does not couple to the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DotLevel {
    Excited,
    Ground,
    SemiExcited,
}

impl DotLevel {
    /// Block index in the full-matrix basis ordering (dot-major: e, g, se).
    pub(crate) fn block(self) -> usize {
        match self {
            DotLevel::Excited => 0,
            DotLevel::Ground => 1,
            DotLevel::SemiExcited => 2,
        }
    }
}

/// Reduced coefficient representation of the dot+field density operator.
///
/// Populations are real arrays indexed by photon number `0..=n_max`; the
/// coherence family `c_ge[n]` is the coefficient of `|g,n+1><e,n|` for
/// `n = 0..n_max-1` (its conjugate partner is implied, never stored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    pub n_max: usize,
    pub c_ee: Vec<f64>,
    pub c_gg: Vec<f64>,
    pub c_sese: Vec<f64>,
    pub c_ge: Vec<Complex64>,
}

impl DensityState {
    /// All-zero coefficient set (not a valid state; useful as an accumulator).
    pub fn zero(n_max: usize) -> Self {
        Self {
            n_max,
            c_ee: vec![0.0; n_max + 1],
            c_gg: vec![0.0; n_max + 1],
            c_sese: vec![0.0; n_max + 1],
            c_ge: vec![Complex64::ZERO; n_max],
        }
    }

    /// Pure product state `|dot, n><dot, n|`.
    pub fn new_pure(dot: DotLevel, n: usize, n_max: usize) -> Result<Self, StateError> {
        if n > n_max {
            return Err(StateError::PhotonOutOfRange { n, n_max });
        }
        let mut state = Self::zero(n_max);
        match dot {
            DotLevel::Excited => state.c_ee[n] = 1.0,
            DotLevel::Ground => state.c_gg[n] = 1.0,
            DotLevel::SemiExcited => state.c_sese[n] = 1.0,
        }
        Ok(state)
    }

    pub fn trace(&self) -> f64 {
        self.c_ee.iter().sum::<f64>()
            + self.c_gg.iter().sum::<f64>()
            + self.c_sese.iter().sum::<f64>()
    }

    /// Population of the excited dot level, `Tr(S+ S- rho)`.
    pub fn excited_population(&self) -> f64 {
        self.c_ee.iter().sum()
    }

    /// Excited population the state would have just after a pump event:
    /// rules (a) and (c) funnel both `se` and `e` populations into `e`.
    /// Summed in the same entry order as [`DensityState::pump_map`] so the
    /// two agree bitwise.
    pub fn post_pump_excited_population(&self) -> f64 {
        (0..=self.n_max).map(|k| self.c_sese[k] + self.c_ee[k]).sum()
    }

    /// Expectation of the total excitation number `S+ S- + a† a`, the
    /// conserved quantity of the undamped coupled system.
    pub fn total_excitation(&self) -> f64 {
        (0..=self.n_max)
            .map(|n| {
                (n as f64 + 1.0) * self.c_ee[n] + n as f64 * (self.c_gg[n] + self.c_sese[n])
            })
            .sum()
    }

    /// One incoherent pump event: a semi-excited dot completes its exciton,
    /// an unexcited dot captures a carrier, an excited dot is left alone.
    /// All coherences are destroyed.
    pub fn pump_map(&self) -> Self {
        let n = self.n_max;
        let mut out = Self::zero(n);
        for k in 0..=n {
            out.c_ee[k] = self.c_sese[k] + self.c_ee[k];
            out.c_sese[k] = self.c_gg[k];
        }
        out
    }

    /// Photon-number distribution by partial trace over the dot. No
    /// clamping: sums to `trace()` exactly, also for unnormalized input.
    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..=self.n_max)
            .map(|k| self.c_ee[k] + self.c_gg[k] + self.c_sese[k])
            .collect()
    }

    /// Check the representation invariants of a normalized state.
    pub fn validate(&self) -> Result<(), StateError> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(StateError::InvariantViolation(format!(
                "trace = {tr} deviates from 1 beyond {TRACE_TOL:e}"
            )));
        }
        for (family, arr) in [
            ("c_ee", &self.c_ee),
            ("c_gg", &self.c_gg),
            ("c_sese", &self.c_sese),
        ] {
            if let Some((k, &v)) = arr.iter().enumerate().find(|(_, v)| **v < -NEGATIVITY_TOL) {
                return Err(StateError::InvariantViolation(format!(
                    "{family}[{k}] = {v} below -{NEGATIVITY_TOL:e}"
                )));
            }
        }
        for k in 0..self.n_max {
            let bound = self.c_ee[k] * self.c_gg[k + 1] + COHERENCE_SLACK;
            if self.c_ge[k].norm_sqr() > bound {
                return Err(StateError::InvariantViolation(format!(
                    "|c_ge[{k}]|^2 = {} exceeds c_ee[{k}]*c_gg[{}] + slack",
                    self.c_ge[k].norm_sqr(),
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Embed into the full dot⊗field matrix.
    ///
    /// Basis ordering is dot-major, `(e, g, se) x (0..=n_max)`: row/column
    /// index `block(dot)*(n_max+1) + n`. The result is hermitian by
    /// construction and round-trips exactly with [`DensityState::from_full_matrix`].
    pub fn to_full_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let nf = self.n_max + 1;
        let dim = 3 * nf;
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        let idx = |dot: DotLevel, n: usize| dot.block() * nf + n;
        for n in 0..=self.n_max {
            m[(idx(DotLevel::Excited, n), idx(DotLevel::Excited, n))] = self.c_ee[n].into();
            m[(idx(DotLevel::Ground, n), idx(DotLevel::Ground, n))] = self.c_gg[n].into();
            m[(idx(DotLevel::SemiExcited, n), idx(DotLevel::SemiExcited, n))] =
                self.c_sese[n].into();
        }
        for n in 0..self.n_max {
            m[(idx(DotLevel::Ground, n + 1), idx(DotLevel::Excited, n))] = self.c_ge[n];
            m[(idx(DotLevel::Excited, n), idx(DotLevel::Ground, n + 1))] = self.c_ge[n].conj();
        }
        m
    }

    /// Extract the reduced coefficients from a full matrix (inverse of
    /// [`DensityState::to_full_matrix`]; entries outside the reduced family are ignored).
    pub fn from_full_matrix(
        m: &nalgebra::DMatrix<Complex64>,
        n_max: usize,
    ) -> Result<Self, StateError> {
        let nf = n_max + 1;
        if m.nrows() != 3 * nf || m.ncols() != 3 * nf {
            return Err(StateError::DimensionMismatch {
                got: m.nrows(),
                expected: 3 * nf,
            });
        }
        let idx = |dot: DotLevel, n: usize| dot.block() * nf + n;
        let mut state = Self::zero(n_max);
        for n in 0..=n_max {
            state.c_ee[n] = m[(idx(DotLevel::Excited, n), idx(DotLevel::Excited, n))].re;
            state.c_gg[n] = m[(idx(DotLevel::Ground, n), idx(DotLevel::Ground, n))].re;
            state.c_sese[n] = m[(idx(DotLevel::SemiExcited, n), idx(DotLevel::SemiExcited, n))].re;
        }
        for n in 0..n_max {
            state.c_ge[n] = m[(idx(DotLevel::Ground, n + 1), idx(DotLevel::Excited, n))];
        }
        Ok(state)
    }

    /// JSON checkpoint of the coefficient arrays (schema documented in the
    /// repository README).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("DensityState serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Length of the packed real coefficient vector for truncation `n_max`:
    /// three population families plus the complex coherence family.
    pub(crate) fn packed_len(n_max: usize) -> usize {
        3 * (n_max + 1) + 2 * n_max
    }

    /// Pack as `[c_ee | c_gg | c_sese | Re c_ge | Im c_ge]`.
    pub(crate) fn pack(&self) -> nalgebra::DVector<f64> {
        let nf = self.n_max + 1;
        let mut v = nalgebra::DVector::<f64>::zeros(Self::packed_len(self.n_max));
        for k in 0..nf {
            v[k] = self.c_ee[k];
            v[nf + k] = self.c_gg[k];
            v[2 * nf + k] = self.c_sese[k];
        }
        for k in 0..self.n_max {
            v[3 * nf + k] = self.c_ge[k].re;
            v[3 * nf + self.n_max + k] = self.c_ge[k].im;
        }
        v
    }

    pub(crate) fn unpack(n_max: usize, v: &nalgebra::DVector<f64>) -> Self {
        debug_assert_eq!(v.len(), Self::packed_len(n_max));
        let nf = n_max + 1;
        let mut state = Self::zero(n_max);
        for k in 0..nf {
            state.c_ee[k] = v[k];
            state.c_gg[k] = v[nf + k];
            state.c_sese[k] = v[2 * nf + k];
        }
        for k in 0..n_max {
            state.c_ge[k] = Complex64::new(v[3 * nf + k], v[3 * nf + n_max + k]);
        }
        state
    }
}
