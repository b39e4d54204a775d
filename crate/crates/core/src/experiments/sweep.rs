//! Residual non-adiabaticity of separated controls as a function of `eps`.

use rayon::prelude::*;
use serde::Serialize;

use super::fit::{fit_power_law, PowerLawFit};
use super::Check;
use crate::control::{ControlField, ControlKind};
use crate::error::{Error, Result};
use crate::models::{Model, ThreeLevelModel};
use crate::propagate::{
    asymptotic_value, default_step, default_window, evolve, instantaneous_eigenstate, nonadiabaticity,
    EvolveOptions,
};

pub const DEFAULT_EPSILONS: [f64; 7] = [10.0, 15.0, 20.0, 30.0, 50.0, 70.0, 100.0];
/// A sweep fit has far fewer points than a `tau` tail, so its floor is lower.
pub const SWEEP_MIN_POINTS: usize = 5;
pub const THRESHOLD_EPSILON: f64 = 5.0;
pub const THRESHOLD_PROBABILITY: f64 = 1e-4;
const EXPONENT_TARGET: f64 = -2.0;
const EXPONENT_TOLERANCE: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    /// Range of `eps` values entering the power-law fit.
    pub fit_window: (f64, f64),
    /// Fraction of the run averaged for the asymptotic value.
    pub tail_fraction: f64,
    /// Integration step; `None` uses the per-model default.
    pub step: Option<f64>,
    pub record_every: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { fit_window: (10.0, 100.0), tail_fraction: 0.1, step: None, record_every: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub probability: f64,
    pub step: f64,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: ControlKind,
    pub points: Vec<SweepPoint>,
    /// Present when enough points fall in the fit window.
    pub fit: Option<PowerLawFit>,
}

impl SweepResult {
    pub fn epsilons(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.epsilon).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }

    pub fn probability_at(&self, epsilon: f64) -> Option<f64> {
        self.points.iter().find(|p| p.epsilon == epsilon).map(|p| p.probability)
    }

    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        (vec!["epsilon".into(), "probability".into()], vec![self.epsilons(), self.probabilities()])
    }

    /// Fit exponent near `-2` and, if `eps = 5` was run, the `1e-4` threshold.
    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        if let Some(fit) = &self.fit {
            checks.push(Check::within(
                format!("{} eps exponent", self.kind),
                fit.exponent,
                EXPONENT_TARGET,
                EXPONENT_TOLERANCE,
            ));
        }
        if let Some(p) = self.probability_at(THRESHOLD_EPSILON) {
            checks.push(Check::within_factor(
                format!("{} probability at eps=5", self.kind),
                p,
                THRESHOLD_PROBABILITY,
                3.0,
            ));
        }
        checks
    }
}

/// Propagates the ground state under `H0 + H1` for every `eps` (other
/// parameters from `base`) and fits the asymptotic non-adiabaticity.
/// Runs execute in parallel; results keep the input order.
pub fn separability_sweep(
    base: &ThreeLevelModel,
    epsilons: &[f64],
    kind: ControlKind,
    options: SweepOptions,
) -> Result<SweepResult> {
    if !matches!(kind, ControlKind::SeparatedMatrix | ControlKind::SeparatedSingleField) {
        return Err(Error::WrongRegime(format!("sweep needs a separated control, got {kind}")));
    }
    if epsilons.is_empty() {
        return Err(Error::InvalidModel("epsilon list is empty".into()));
    }
    let points = epsilons
        .par_iter()
        .map(|&epsilon| {
            let mut model = *base;
            model.epsilon = epsilon;
            model.validate()?;
            sweep_point(model.into(), kind, &options)
        })
        .collect::<Result<Vec<_>>>()?;

    let xs: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.probability).collect();
    let in_window = xs.iter().filter(|x| (options.fit_window.0..=options.fit_window.1).contains(*x)).count();
    let fit = if in_window >= SWEEP_MIN_POINTS {
        Some(fit_power_law(&xs, &ys, options.fit_window, SWEEP_MIN_POINTS)?)
    } else {
        None
    };
    Ok(SweepResult { kind, points, fit })
}

fn sweep_point(model: Model, kind: ControlKind, options: &SweepOptions) -> Result<SweepPoint> {
    let control = ControlField::new(kind, model)?;
    let (lo, hi) = default_window(&model);
    let step = match options.step {
        Some(step) => step,
        None => default_step(&control, lo, hi)?,
    };
    let psi0 = instantaneous_eigenstate(&model, lo, 0)?;
    let opts = EvolveOptions { record_every: options.record_every, verify_step_halving: false };
    let trajectory = evolve(&control, &psi0, lo, hi, step, opts)?;
    let probability = asymptotic_value(&nonadiabaticity(&trajectory)?, options.tail_fraction)?;
    Ok(SweepPoint { epsilon: model.epsilon(), probability, step: trajectory.step, window: (lo, hi) })
}

/// Number of sign changes in the discrete derivative of `values`.
pub fn derivative_sign_changes(values: &[f64]) -> usize {
    let signs: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|s| s[0] != s[1]).count()
}
