//! Scripted numerical experiments.
//!
//! Each experiment is a deterministic function of its inputs and returns its
//! data series together with the [`PowerLawFit`]s and pass/fail [`Check`]s
//! that summarize it. Writing files is left to the caller.

mod fit;
mod lz;
mod shapes;
mod sweep;
mod tails;

use serde::{Deserialize, Serialize};

pub use fit::{fit_power_law, linear_grid, log_grid, PowerLawFit, TAIL_MIN_POINTS};
pub use lz::{lz_check, LzReport, LZ_TOLERANCE};
pub use shapes::{control_scan, control_shape_experiment, spectrum_scan, ControlScan, ShapeReport, SpectrumScan};
pub use sweep::{
    derivative_sign_changes, separability_sweep, SweepOptions, SweepPoint, SweepResult, DEFAULT_EPSILONS,
    SWEEP_MIN_POINTS, THRESHOLD_EPSILON, THRESHOLD_PROBABILITY,
};
pub use tails::{
    asymmetric_crossover_experiment, default_crossover_windows, tail_exponent_experiment, tail_guard, CrossoverReport, TailReport,
    TAIL_TARGETS,
};

/// A named pass/fail comparison of a computed value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
}

impl Check {
    /// `|value - target| <= tolerance`.
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Check { name: name.into(), pass, value, target, tolerance }
    }

    /// `target / factor <= value <= target * factor`, for positive targets.
    pub fn within_factor(name: impl Into<String>, value: f64, target: f64, factor: f64) -> Self {
        let pass = value >= target / factor && value <= target * factor;
        Check { name: name.into(), pass, value, target, tolerance: factor }
    }

    /// `value < limit`. The target is reported as zero.
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), pass: value < limit, value, target: 0.0, tolerance: limit }
    }

    /// `value > limit`. The target is reported as the limit, tolerance zero.
    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), pass: value > limit, value, target: limit, tolerance: 0.0 }
    }
}

/// Machine-readable record of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub fits: Vec<PowerLawFit>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}
