//! Run configuration: a TOML key-value document plus the mode selected on
//! the command line. Unknown keys are rejected; every violated constraint is
//! reported with the offending key.

use ppd_core::state::{DotLevel, SystemParams};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for \"{key}\": {reason}")]
    Invalid { key: String, reason: String },
    #[error("missing required key \"{0}\"")]
    Missing(&'static str),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Laser,
    Sweep,
    Curves,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Laser => "laser",
            Mode::Sweep => "sweep",
            Mode::Curves => "curves",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    G,
    Kappa,
    #[serde(alias = "T")]
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default = "default_scale")]
    pub scale: AxisScale,
}

fn default_scale() -> AxisScale {
    AxisScale::Linear
}

impl SweepAxis {
    /// Grid values along this axis (endpoints included; a single step pins
    /// the axis at `min`).
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| {
                // endpoints are returned exactly
                if i == 0 {
                    return self.min;
                }
                if i == self.steps - 1 {
                    return self.max;
                }
                let f = i as f64 / (self.steps - 1) as f64;
                match self.scale {
                    AxisScale::Linear => self.min + (self.max - self.min) * f,
                    AxisScale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp(),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.steps == 0 {
            return Err(invalid("sweep.axes.steps", "must be >= 1"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(invalid("sweep.axes.min/max", "need finite min <= max"));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return Err(invalid("sweep.axes.min", "log scale needs min > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurves {
    t_max: Option<f64>,
    points: Option<usize>,
    tau_max: Option<f64>,
}

/// The raw document: everything optional so mode defaults can fill in.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    g: Option<f64>,
    kappa: Option<f64>,
    #[serde(rename = "T")]
    period: Option<f64>,
    n_max: Option<usize>,
    initial_dot: Option<DotLevel>,
    initial_photons: Option<usize>,
    n_cycles: Option<usize>,
    samples_per_cycle: Option<usize>,
    discard_cycles: Option<usize>,
    evolve_tol: Option<f64>,
    fixed_point_tol: Option<f64>,
    max_iter: Option<usize>,
    tail_threshold: Option<f64>,
    trap_threshold: Option<f64>,
    workers: Option<usize>,
    sweep: Option<RawSweep>,
    curves: Option<RawCurves>,
}

#[derive(Debug, Clone)]
pub struct CurvesSpec {
    pub t_max: f64,
    pub points: usize,
    pub tau_max: f64,
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: SystemParams,
    pub initial_dot: DotLevel,
    pub initial_photons: usize,
    pub n_cycles: usize,
    pub samples_per_cycle: usize,
    /// Pump events discarded from the head of averaging windows.
    pub discard_cycles: usize,
    pub evolve_tol: f64,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
    pub trap_threshold: f64,
    pub workers: Option<usize>,
    pub axes: Vec<SweepAxis>,
    pub curves: CurvesSpec,
}

impl RunConfig {
    pub fn parse(mode: Mode, text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;

        let g = raw.g.ok_or(ConfigError::Missing("g"))?;
        let kappa = raw.kappa.ok_or(ConfigError::Missing("kappa"))?;
        let period = raw.period.ok_or(ConfigError::Missing("T"))?;

        let n_max = raw.n_max.unwrap_or(match mode {
            Mode::Train => 1,
            Mode::Laser | Mode::Sweep => 30,
            Mode::Curves => 1,
        });

        let params = SystemParams::new(g, kappa, period, n_max)
            .and_then(|p| match raw.tail_threshold {
                Some(t) => p.with_tail_threshold(t),
                None => Ok(p),
            })
            .map_err(|e| match e {
                ppd_core::state::StateError::InvalidParameter { name, reason } => {
                    // the config key for the period is "T"
                    let key = if name == "period" { "T" } else { name };
                    invalid(key, reason)
                }
                other => invalid("params", other.to_string()),
            })?;

        if matches!(mode, Mode::Train | Mode::Curves) && g <= 0.0 {
            return Err(invalid(
                "g",
                "train and curves modes evaluate the closed-form train, which needs g > 0",
            ));
        }

        let initial_dot = raw.initial_dot.unwrap_or(match mode {
            Mode::Train => DotLevel::Excited,
            _ => DotLevel::Ground,
        });
        let initial_photons = raw.initial_photons.unwrap_or(0);
        if initial_photons > params.n_max {
            return Err(invalid(
                "initial_photons",
                format!("exceeds n_max = {}", params.n_max),
            ));
        }

        let n_cycles = raw.n_cycles.unwrap_or(40);
        if n_cycles == 0 {
            return Err(invalid("n_cycles", "must be >= 1"));
        }
        let samples_per_cycle = raw.samples_per_cycle.unwrap_or(400);
        if samples_per_cycle == 0 {
            return Err(invalid("samples_per_cycle", "must be >= 1"));
        }
        let discard_cycles = raw.discard_cycles.unwrap_or_else(|| (n_cycles / 4).min(10));
        if discard_cycles >= n_cycles {
            return Err(invalid(
                "discard_cycles",
                format!("must be below n_cycles = {n_cycles}"),
            ));
        }

        let positive = |key: &'static str, v: f64| -> Result<f64, ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(invalid(key, "must be finite and > 0"))
            }
        };
        let evolve_tol = positive("evolve_tol", raw.evolve_tol.unwrap_or(1e-10))?;
        let fixed_point_tol = positive("fixed_point_tol", raw.fixed_point_tol.unwrap_or(1e-10))?;
        let trap_threshold = positive("trap_threshold", raw.trap_threshold.unwrap_or(1e-2))?;
        if trap_threshold >= 1.0 {
            return Err(invalid("trap_threshold", "must be below 1"));
        }
        let max_iter = raw.max_iter.unwrap_or(100_000);
        if max_iter == 0 {
            return Err(invalid("max_iter", "must be >= 1"));
        }

        let axes = match (mode, raw.sweep) {
            (Mode::Sweep, Some(sweep)) => {
                if sweep.axes.is_empty() {
                    return Err(invalid("sweep.axes", "sweep mode needs at least one axis"));
                }
                for axis in &sweep.axes {
                    axis.validate()?;
                }
                sweep.axes
            }
            (Mode::Sweep, None) => {
                return Err(ConfigError::Missing("sweep.axes"));
            }
            (_, Some(_)) => {
                return Err(invalid(
                    "sweep",
                    format!("only valid in sweep mode, not {}", mode.name()),
                ));
            }
            (_, None) => Vec::new(),
        };

        let curves = match (mode, raw.curves) {
            (Mode::Curves, spec) => {
                let spec = spec.unwrap_or(RawCurves {
                    t_max: None,
                    points: None,
                    tau_max: None,
                });
                let t_max = positive("curves.t_max", spec.t_max.unwrap_or(2.0 * period))?;
                let tau_max = positive("curves.tau_max", spec.tau_max.unwrap_or(t_max))?;
                let points = spec.points.unwrap_or(1000);
                if points < 2 {
                    return Err(invalid("curves.points", "need at least 2 points"));
                }
                CurvesSpec {
                    t_max,
                    points,
                    tau_max,
                }
            }
            (_, Some(_)) => {
                return Err(invalid(
                    "curves",
                    format!("only valid in curves mode, not {}", mode.name()),
                ));
            }
            (_, None) => CurvesSpec {
                t_max: 2.0 * period,
                points: 1000,
                tau_max: 2.0 * period,
            },
        };

        Ok(Self {
            mode,
            params,
            initial_dot,
            initial_photons,
            n_cycles,
            samples_per_cycle,
            discard_cycles,
            evolve_tol,
            fixed_point_tol,
            max_iter,
            trap_threshold,
            workers: raw.workers,
            axes,
            curves,
        })
    }

    /// Sweep grid as the cartesian product of the axes, row-major in axis
    /// order (last axis fastest).
    pub fn sweep_grid(&self) -> Vec<SystemParams> {
        let value_sets: Vec<Vec<f64>> = self.axes.iter().map(|a| a.values()).collect();
        let total: usize = value_sets.iter().map(|v| v.len()).product();
        let mut grid = Vec::with_capacity(total);
        for mut index in 0..total {
            let mut point = self.params;
            for (axis, values) in self.axes.iter().zip(&value_sets).rev() {
                let v = values[index % values.len()];
                index /= values.len();
                match axis.param {
                    SweepParameter::G => point.g = v,
                    SweepParameter::Kappa => point.kappa = v,
                    SweepParameter::T => point.period = v,
                }
            }
            grid.push(point);
        }
        grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_train_config_gets_mode_defaults() {
        let cfg = RunConfig::parse(Mode::Train, "g = 0.1\nkappa = 1.0\nT = 500.0\n").unwrap();
        assert_eq!(cfg.params.n_max, 1);
        assert_eq!(cfg.evolve_tol, 1e-10);
        assert_eq!(cfg.initial_dot, DotLevel::Excited);
        assert_eq!(cfg.n_cycles, 40);
        assert_eq!(cfg.discard_cycles, 10);
    }

    #[test]
    fn laser_defaults_differ() {
        let cfg = RunConfig::parse(Mode::Laser, "g = 1.0\nkappa = 1e-4\nT = 6.28\n").unwrap();
        assert_eq!(cfg.params.n_max, 30);
        assert_eq!(cfg.initial_dot, DotLevel::Ground);
        assert_eq!(cfg.max_iter, 100_000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse(Mode::Train, "g = 0.1\nkappa = 1.0\nT = 5.0\ncoupling = 2\n")
            .unwrap_err();
        assert!(err.to_string().contains("coupling"), "{err}");
    }

    #[test]
    fn negative_kappa_is_reported_by_key() {
        let err = RunConfig::parse(Mode::Train, "g = 0.1\nkappa = -1.0\nT = 5.0\n").unwrap_err();
        assert!(err.to_string().contains("\"kappa\""), "{err}");
    }

    #[test]
    fn zero_step_axis_is_rejected() {
        let text = "g = 1.0\nkappa = 1e-3\nT = 1.0\n\
                    [[sweep.axes]]\nparam = \"t\"\nmin = 0.2\nmax = 2.0\nsteps = 0\n";
        let err = RunConfig::parse(Mode::Sweep, text).unwrap_err();
        assert!(err.to_string().contains("steps"), "{err}");
    }

    #[test]
    fn sweep_table_is_rejected_outside_sweep_mode() {
        let text = "g = 1.0\nkappa = 1e-3\nT = 1.0\n\
                    [[sweep.axes]]\nparam = \"t\"\nmin = 0.2\nmax = 2.0\nsteps = 3\n";
        let err = RunConfig::parse(Mode::Laser, text).unwrap_err();
        assert!(err.to_string().contains("sweep"), "{err}");
    }

    #[test]
    fn grid_is_the_axis_product_last_axis_fastest() {
        let text = "g = 1.0\nkappa = 1.0\nT = 1.0\n\
                    [[sweep.axes]]\nparam = \"kappa\"\nmin = 1e-3\nmax = 1e-2\nsteps = 2\nscale = \"log\"\n\
                    [[sweep.axes]]\nparam = \"t\"\nmin = 1.0\nmax = 3.0\nsteps = 3\n";
        let cfg = RunConfig::parse(Mode::Sweep, text).unwrap();
        let grid = cfg.sweep_grid();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0].kappa, 1e-3);
        assert_eq!(grid[0].period, 1.0);
        assert_eq!(grid[1].period, 2.0);
        assert_eq!(grid[3].kappa, 1e-2);
        // log axis hits both endpoints
        assert!((grid[5].kappa - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn log_axis_requires_positive_min() {
        let text = "g = 1.0\nkappa = 1.0\nT = 1.0\n\
                    [[sweep.axes]]\nparam = \"g\"\nmin = 0.0\nmax = 1.0\nsteps = 4\nscale = \"log\"\n";
        let err = RunConfig::parse(Mode::Sweep, text).unwrap_err();
        assert!(err.to_string().contains("min"), "{err}");
    }
}
