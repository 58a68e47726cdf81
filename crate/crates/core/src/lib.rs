//! Simulation engine for a periodically pumped quantum dot coupled to a
//! single damped cavity mode.
//!
//! The dot is a three-level system (excited, ground, semi-excited) whose
//! excited/ground pair couples to the field with strength `g`; the cavity
//! damps at rate `kappa`; carriers arrive every half pump period `T/2` as an
//! instantaneous incoherent reset. The crate provides
//!
//! - [`state`]: the reduced density-operator representation and the pump map,
//! - [`dynamics`]: free evolution, the stroboscopic cycle map, its fixed
//!   point, and a dense-matrix oracle,
//! - [`analytic`]: bad-cavity closed forms (single-shot photon probability,
//!   photon train, mean photon number, first-order coherence),
//! - [`observables`]: photon statistics, excitation probability, trapping
//!   detection, and trajectory averages.

pub mod analytic;
pub mod dynamics;
pub mod observables;
pub mod ode;
pub mod state;

pub use dynamics::{dense_oracle_evolve, FixedPointResult, Liouvillian, Trajectory};
pub use state::{DensityState, DotLevel, SystemParams};
