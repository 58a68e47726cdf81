//! Continuous evolution under the damped Jaynes-Cummings generator, the
//! stroboscopic pump-cycle map, its fixed point (the microlaser steady
//! state), and a brute-force dense-matrix oracle.
//!
//! Inserting the reduced coefficient ansatz into the master equation
//!
//! ```text
//! d rho/dt = g [a S+ - a† S-, rho] + kappa/2 ([a, rho a†] + [a rho, a†])
//! ```
//!
//! closes on the coefficient families and yields the linear system
//!
//! ```text
//! d c_ee[n]   = 2 g sqrt(n+1) Re c_ge[n]
//!             + kappa ((n+1) c_ee[n+1] - n c_ee[n])
//! d c_gg[n]   = -2 g sqrt(n) Re c_ge[n-1]
//!             + kappa ((n+1) c_gg[n+1] - n c_gg[n])
//! d c_sese[n] = kappa ((n+1) c_sese[n+1] - n c_sese[n])
//! d c_ge[n]   = g sqrt(n+1) (c_gg[n+1] - c_ee[n])
//!             + kappa (sqrt((n+1)(n+2)) c_ge[n+1] - (n + 1/2) c_ge[n])
//! ```
//!
//! with out-of-range terms dropped at the Fock truncation. Correctness of
//! this derivation is established against the dense oracle, not assumed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::OnceLock;
use thiserror::Error;

use crate::ode::{self, OdeOptions};
use crate::state::{DensityState, DotLevel, StateError, SystemParams};

/// Above this packed-coefficient dimension the dense matrix exponential is
/// abandoned in favor of adaptive integration per step.
pub const EXPM_MAX_DIM: usize = 4096;

/// Default local tolerance of the dense oracle integrator.
pub const DENSE_ORACLE_TOL: f64 = 1e-13;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error(
        "Fock truncation overflow at t = {time}: population {population:e} at |e,n_max> \
         exceeds the tail threshold {threshold:e}"
    )]
    Truncation {
        time: f64,
        population: f64,
        threshold: f64,
    },
    #[error("invalid argument {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("state truncation n_max = {state} does not match system n_max = {system}")]
    TruncationMismatch { state: usize, system: usize },
    #[error(transparent)]
    Integrator(#[from] ode::OdeError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Linear generator of the free (between-pump) evolution, acting on packed
/// coefficient vectors. Immutable after construction; the half-period
/// propagator is cached on first use and shared across threads.
pub struct Liouvillian {
    params: SystemParams,
    generator: DMatrix<f64>,
    half_period_prop: OnceLock<DMatrix<f64>>,
}

impl Liouvillian {
    pub fn new(params: SystemParams) -> Self {
        let generator = build_generator(&params);
        Self {
            params,
            generator,
            half_period_prop: OnceLock::new(),
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Packed coefficient-space dimension.
    pub fn dim(&self) -> usize {
        DensityState::packed_len(self.params.n_max)
    }

    /// Generator applied to a coefficient vector, `out = G y`.
    fn apply_generator(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let g = &self.generator;
        for (j, &yj) in y.iter().enumerate() {
            if yj != 0.0 {
                let col = g.column(j);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += col[i] * yj;
                }
            }
        }
    }

    /// Time derivative of a state under the free evolution. The result is a
    /// coefficient set (zero trace), not a normalized state.
    pub fn apply(&self, state: &DensityState) -> Result<DensityState, DynamicsError> {
        self.check_state(state)?;
        let y = state.pack();
        let mut out = vec![0.0; y.len()];
        self.apply_generator(y.as_slice(), &mut out);
        Ok(DensityState::unpack(
            self.params.n_max,
            &DVector::from_vec(out),
        ))
    }

    fn check_state(&self, state: &DensityState) -> Result<(), DynamicsError> {
        if state.n_max != self.params.n_max {
            return Err(DynamicsError::TruncationMismatch {
                state: state.n_max,
                system: self.params.n_max,
            });
        }
        Ok(())
    }

    /// Truncation monitor. Within one free-evolution window the population
    /// of `|e,n_max>` can only decay (its coherent feed is exactly the
    /// coupling removed by the truncation), so checking at window entry
    /// bounds it for the whole window.
    fn check_tail(&self, state: &DensityState, time: f64) -> Result<(), DynamicsError> {
        let population = state.c_ee[self.params.n_max];
        if population > self.params.tail_threshold {
            return Err(DynamicsError::Truncation {
                time,
                population,
                threshold: self.params.tail_threshold,
            });
        }
        Ok(())
    }

    fn propagator(&self, dt: f64) -> DMatrix<f64> {
        (&self.generator * dt).exp()
    }

    fn half_period_propagator(&self) -> &DMatrix<f64> {
        self.half_period_prop
            .get_or_init(|| self.propagator(self.params.half_period()))
    }

    /// Free evolution `exp(G * duration)` applied to `state`.
    ///
    /// Below [`EXPM_MAX_DIM`] coefficients this is a dense matrix exponential
    /// (exact to rounding; `tol` is unused). Larger systems fall back to
    /// adaptive integration with local error `tol`.
    pub fn evolve(
        &self,
        state: &DensityState,
        duration: f64,
        tol: f64,
    ) -> Result<DensityState, DynamicsError> {
        self.check_state(state)?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(DynamicsError::InvalidArgument {
                name: "duration",
                reason: format!("must be finite and >= 0, got {duration}"),
            });
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(DynamicsError::InvalidArgument {
                name: "tol",
                reason: format!("must be finite and > 0, got {tol}"),
            });
        }
        self.check_tail(state, 0.0)?;
        if duration == 0.0 {
            return Ok(state.clone());
        }
        if self.dim() <= EXPM_MAX_DIM {
            let prop = if duration == self.params.half_period() {
                self.half_period_propagator().clone()
            } else {
                self.propagator(duration)
            };
            let v = prop * state.pack();
            Ok(DensityState::unpack(self.params.n_max, &v))
        } else {
            self.evolve_adaptive(state, duration, tol)
        }
    }

    fn evolve_adaptive(
        &self,
        state: &DensityState,
        duration: f64,
        tol: f64,
    ) -> Result<DensityState, DynamicsError> {
        let y0 = state.pack();
        let y1 = ode::integrate(
            |_, y, dy| self.apply_generator(y, dy),
            0.0,
            duration,
            y0.as_slice(),
            &OdeOptions::with_tol(tol),
        )?;
        Ok(DensityState::unpack(
            self.params.n_max,
            &DVector::from_vec(y1),
        ))
    }

    /// One pump cycle: free evolution over half a period, then the
    /// instantaneous pump event.
    pub fn period_map(&self, state: &DensityState) -> Result<DensityState, DynamicsError> {
        self.check_state(state)?;
        self.check_tail(state, 0.0)?;
        let v = self.half_period_propagator() * state.pack();
        Ok(DensityState::unpack(self.params.n_max, &v).pump_map())
    }

    /// Alternate free evolution and pump events for `n_cycles` pump events,
    /// sampling observables `samples_per_cycle` times per pump interval.
    pub fn simulate(
        &self,
        initial: &DensityState,
        n_cycles: usize,
        samples_per_cycle: usize,
    ) -> Result<Trajectory, DynamicsError> {
        self.check_state(initial)?;
        if n_cycles == 0 {
            return Err(DynamicsError::InvalidArgument {
                name: "n_cycles",
                reason: "must be >= 1".to_string(),
            });
        }
        if samples_per_cycle == 0 {
            return Err(DynamicsError::InvalidArgument {
                name: "samples_per_cycle",
                reason: "must be >= 1".to_string(),
            });
        }
        let hp = self.params.half_period();
        let h = hp / samples_per_cycle as f64;
        let substep = self.propagator(h);

        let mut samples = Vec::with_capacity(n_cycles * samples_per_cycle + 1);
        let mut pump_events = Vec::with_capacity(n_cycles);
        let mut state = initial.clone();
        samples.push(Sample::extract(0.0, &state));

        for cycle in 0..n_cycles {
            let window_start = cycle as f64 * hp;
            self.check_tail(&state, window_start)?;
            for k in 1..=samples_per_cycle {
                let v = &substep * state.pack();
                state = DensityState::unpack(self.params.n_max, &v);
                samples.push(Sample::extract(window_start + k as f64 * h, &state));
            }
            let event_time = (cycle + 1) as f64 * hp;
            let pumped = state.pump_map();
            pump_events.push(PumpEvent {
                t: event_time,
                excited_before: state.excited_population(),
                excited_after: pumped.excited_population(),
            });
            state = pumped;
        }

        Ok(Trajectory {
            half_period: hp,
            samples_per_cycle,
            samples,
            pump_events,
            final_state: state,
        })
    }

    /// Power iteration of the period map, starting from the ground dot with
    /// the field in vacuum, until successive iterates differ by less than
    /// `tol` in total-variation distance.
    ///
    /// Non-convergence within `max_iter` is reported in the result, not as
    /// an error; errors are reserved for truncation overflow.
    pub fn fixed_point(&self, tol: f64, max_iter: usize) -> Result<FixedPointResult, DynamicsError> {
        let start = DensityState::new_pure(DotLevel::Ground, 0, self.params.n_max)?;
        self.fixed_point_from(&start, tol, max_iter)
    }

    /// Power iteration from a caller-supplied initial state.
    pub fn fixed_point_from(
        &self,
        initial: &DensityState,
        tol: f64,
        max_iter: usize,
    ) -> Result<FixedPointResult, DynamicsError> {
        self.check_state(initial)?;
        if !(tol.is_finite() && tol > 0.0) {
            return Err(DynamicsError::InvalidArgument {
                name: "tol",
                reason: format!("must be finite and > 0, got {tol}"),
            });
        }
        let mut state = initial.clone();
        let mut residual_history = Vec::new();
        for iteration in 1..=max_iter {
            let next = self.period_map(&state)?;
            let residual = tv_distance(&state, &next);
            residual_history.push(residual);
            state = next;
            if residual < tol {
                return Ok(FixedPointResult {
                    state,
                    iterations: iteration,
                    residual,
                    converged: true,
                    residual_history,
                });
            }
        }
        let residual = residual_history.last().copied().unwrap_or(f64::NAN);
        Ok(FixedPointResult {
            state,
            iterations: max_iter,
            residual,
            converged: false,
            residual_history,
        })
    }

    /// Direct fixed-point solve: assembles the full period-map matrix
    /// (pump composed with the half-period propagator) and solves the
    /// unit-trace null-space problem by least squares. Cross-check for the
    /// power iteration; intended for modest truncations.
    pub fn fixed_point_direct(&self) -> Result<DensityState, DynamicsError> {
        let dim = self.dim();
        let n_max = self.params.n_max;
        let nf = n_max + 1;
        // pump map as a matrix on packed coefficients
        let mut pump = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..nf {
            pump[(k, k)] = 1.0; // e <- e
            pump[(k, 2 * nf + k)] = 1.0; // e <- se
            pump[(2 * nf + k, nf + k)] = 1.0; // se <- g
        }
        let period = pump * self.half_period_propagator();

        // stack (M - I) with the unit-trace constraint row
        let mut system = DMatrix::<f64>::zeros(dim + 1, dim);
        for r in 0..dim {
            for c in 0..dim {
                system[(r, c)] = period[(r, c)] - if r == c { 1.0 } else { 0.0 };
            }
        }
        for k in 0..3 * nf {
            system[(dim, k)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(dim + 1);
        rhs[dim] = 1.0;

        let svd = system.svd(true, true);
        let solution = svd.solve(&rhs, 1e-14).map_err(|e| DynamicsError::InvalidArgument {
            name: "period_map",
            reason: format!("singular least-squares solve: {e}"),
        })?;
        Ok(DensityState::unpack(n_max, &solution))
    }
}

/// Total-variation distance on the coefficient representation: half the L1
/// distance, with coherences counted twice for their implied conjugates.
pub fn tv_distance(a: &DensityState, b: &DensityState) -> f64 {
    debug_assert_eq!(a.n_max, b.n_max);
    let pops: f64 = a
        .c_ee
        .iter()
        .zip(&b.c_ee)
        .chain(a.c_gg.iter().zip(&b.c_gg))
        .chain(a.c_sese.iter().zip(&b.c_sese))
        .map(|(x, y)| (x - y).abs())
        .sum();
    let cohs: f64 = a
        .c_ge
        .iter()
        .zip(&b.c_ge)
        .map(|(x, y)| (x - y).norm())
        .sum();
    0.5 * (pops + 2.0 * cohs)
}

/// Outcome of the stroboscopic fixed-point search.
#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub state: DensityState,
    pub iterations: usize,
    /// Total-variation distance between the last two iterates.
    pub residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

/// One observable sample along a trajectory. Populations are clamped to be
/// non-negative at extraction; the evolving coefficients are never touched.
#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mean_n: f64,
    /// Excited-dot population of the state as-is.
    pub p_d_pre: f64,
    /// Excited-dot population the state would have just after a pump event.
    pub p_d_post: f64,
    /// Clamped photon-number distribution.
    pub photon_dist: Vec<f64>,
    pub trace: f64,
}

impl Sample {
    fn extract(t: f64, state: &DensityState) -> Self {
        let photon_dist: Vec<f64> = state
            .photon_distribution()
            .into_iter()
            .map(|p| p.max(0.0))
            .collect();
        let mean_n = photon_dist
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum();
        Self {
            t,
            mean_n,
            p_d_pre: state.excited_population(),
            p_d_post: state.post_pump_excited_population(),
            photon_dist,
            trace: state.trace(),
        }
    }
}

/// Record of one pump event: excited population immediately before and
/// after the instantaneous reset.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PumpEvent {
    pub t: f64,
    pub excited_before: f64,
    pub excited_after: f64,
}

/// Time-sampled observables over a run of pump cycles.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub half_period: f64,
    pub samples_per_cycle: usize,
    pub samples: Vec<Sample>,
    pub pump_events: Vec<PumpEvent>,
    pub final_state: DensityState,
}

impl Trajectory {
    /// Number of completed pump intervals.
    pub fn n_cycles(&self) -> usize {
        self.pump_events.len()
    }

    /// JSON export carrying the samples, pump events, and final state.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serialization cannot fail")
    }
}

fn build_generator(params: &SystemParams) -> DMatrix<f64> {
    let n_max = params.n_max;
    let nf = n_max + 1;
    let (g, kappa) = (params.g, params.kappa);
    let dim = DensityState::packed_len(n_max);
    let ia = |k: usize| k;
    let id = |k: usize| nf + k;
    let is = |k: usize| 2 * nf + k;
    let irb = |k: usize| 3 * nf + k;
    let iib = |k: usize| 3 * nf + n_max + k;

    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..=n_max {
        let kf = k as f64;
        if k < n_max {
            m[(ia(k), irb(k))] += 2.0 * g * (kf + 1.0).sqrt();
            m[(ia(k), ia(k + 1))] += kappa * (kf + 1.0);
            m[(id(k), id(k + 1))] += kappa * (kf + 1.0);
            m[(is(k), is(k + 1))] += kappa * (kf + 1.0);
        }
        if k >= 1 {
            m[(id(k), irb(k - 1))] += -2.0 * g * kf.sqrt();
        }
        m[(ia(k), ia(k))] += -kappa * kf;
        m[(id(k), id(k))] += -kappa * kf;
        m[(is(k), is(k))] += -kappa * kf;
    }
    for k in 0..n_max {
        let kf = k as f64;
        let coupling = g * (kf + 1.0).sqrt();
        m[(irb(k), id(k + 1))] += coupling;
        m[(irb(k), ia(k))] += -coupling;
        let relax = -kappa * (kf + 0.5);
        m[(irb(k), irb(k))] += relax;
        m[(iib(k), iib(k))] += relax;
        if k + 1 < n_max {
            let shift = kappa * ((kf + 1.0) * (kf + 2.0)).sqrt();
            m[(irb(k), irb(k + 1))] += shift;
            m[(iib(k), iib(k + 1))] += shift;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Dense-matrix oracle
// ---------------------------------------------------------------------------

/// Integrate the full Lindblad equation on the dense dot⊗field matrix with
/// the adaptive integrator at local tolerance `tol`. Test oracle only: it
/// shares no code path with the coefficient representation.
///
/// Basis ordering matches [`DensityState::to_full_matrix`].
pub fn dense_oracle_evolve(
    params: &SystemParams,
    rho: &DMatrix<Complex64>,
    duration: f64,
    tol: f64,
) -> Result<DMatrix<Complex64>, DynamicsError> {
    let nf = params.n_max + 1;
    let d = 3 * nf;
    if rho.nrows() != d || rho.ncols() != d {
        return Err(DynamicsError::InvalidArgument {
            name: "rho",
            reason: format!("expected a {d}x{d} matrix, got {}x{}", rho.nrows(), rho.ncols()),
        });
    }
    let hermiticity_defect = (rho - rho.adjoint()).map(|c| c.norm()).max();
    if hermiticity_defect > 1e-10 {
        return Err(DynamicsError::InvalidArgument {
            name: "rho",
            reason: format!("input is not hermitian (defect {hermiticity_defect:e})"),
        });
    }

    // flatten column-major into [re0, im0, re1, im1, ...]
    let mut y0 = vec![0.0; 2 * d * d];
    for (k, c) in rho.iter().enumerate() {
        y0[2 * k] = c.re;
        y0[2 * k + 1] = c.im;
    }

    let mut work = vec![Complex64::ZERO; d * d];
    let mut deriv = vec![Complex64::ZERO; d * d];
    let y1 = ode::integrate(
        move |_, y, dy| {
            for (k, w) in work.iter_mut().enumerate() {
                *w = Complex64::new(y[2 * k], y[2 * k + 1]);
            }
            lindblad_rhs(params, &work, &mut deriv);
            for (k, dv) in deriv.iter().enumerate() {
                dy[2 * k] = dv.re;
                dy[2 * k + 1] = dv.im;
            }
        },
        0.0,
        duration,
        &y0,
        &OdeOptions::with_tol(tol),
    )?;

    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for (k, c) in out.iter_mut().enumerate() {
        *c = Complex64::new(y1[2 * k], y1[2 * k + 1]);
    }
    Ok(out)
}

/// Full Lindblad right-hand side on a column-major complex matrix buffer,
/// exploiting the band structure of the field operators. `rho` and `out`
/// are `d*d` buffers with element `(r, c)` at `r + c*d`.
fn lindblad_rhs(params: &SystemParams, rho: &[Complex64], out: &mut [Complex64]) {
    let n_max = params.n_max;
    let nf = n_max + 1;
    let d = 3 * nf;
    let (g, kappa) = (params.g, params.kappa);
    let e = |n: usize| n; // excited block
    let gr = |n: usize| nf + n; // ground block
    let at = |r: usize, c: usize| r + c * d;

    out.fill(Complex64::ZERO);

    // coherent part: g ([X rho] - [rho X]) with
    //   X|g,n> = sqrt(n) |e,n-1>,  X|e,n> = -sqrt(n+1) |g,n+1>,  X|se,n> = 0
    for c in 0..d {
        for n in 0..=n_max {
            let sq = ((n + 1) as f64).sqrt();
            if n < n_max {
                // (X rho)[(e,n), c] = sqrt(n+1) rho[(g,n+1), c]
                out[at(e(n), c)] += g * sq * rho[at(gr(n + 1), c)];
                // (X rho)[(g,n+1), c] = -sqrt(n+1) rho[(e,n), c]
                out[at(gr(n + 1), c)] -= g * sq * rho[at(e(n), c)];
            }
        }
    }
    for r in 0..d {
        for n in 0..=n_max {
            let sq = ((n + 1) as f64).sqrt();
            if n < n_max {
                // (rho X)[r, (e,n)] = -sqrt(n+1) rho[r, (g,n+1)]
                out[at(r, e(n))] += g * sq * rho[at(r, gr(n + 1))];
                // (rho X)[r, (g,n+1)] = sqrt(n+1) rho[r, (e,n)]
                out[at(r, gr(n + 1))] -= g * sq * rho[at(r, e(n))];
            }
        }
    }

    // damping: kappa (a rho a† - 1/2 {n̂, rho}) with a = I_dot ⊗ a_field
    let fock = |idx: usize| idx % nf;
    for c in 0..d {
        let nc = fock(c);
        for r in 0..d {
            let nr = fock(r);
            let mut v = -0.5 * kappa * (nr + nc) as f64 * rho[at(r, c)];
            if nr + 1 < nf && nc + 1 < nf {
                let w = (((nr + 1) * (nc + 1)) as f64).sqrt();
                v += kappa * w * rho[at(r + 1, c + 1)];
            }
            out[at(r, c)] += v;
        }
    }
}
