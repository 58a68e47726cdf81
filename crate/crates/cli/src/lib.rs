//! Batch front-end for the periodically pumped dot simulator.
//!
//! Four modes: `train` (periodic emission trajectory with the closed-form
//! overlay), `laser` (stroboscopic fixed point and its photon statistics),
//! `sweep` (fixed-point statistics over a parameter grid), and `curves`
//! (closed-form evaluations for plotting). File schemas are documented in
//! the repository README.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{Mode, RunConfig};
pub use run::{run, CliError};
