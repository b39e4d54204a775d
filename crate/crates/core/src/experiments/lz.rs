//! Two-level Landau-Zener sanity run.

use super::Check;
use crate::control::{ControlField, ControlKind};
use crate::error::{Error, Result};
use crate::models::{lz_asymptotic_probability, Model, TwoLevelModel};
use crate::propagate::{
    asymptotic_value, default_step, evolve, instantaneous_eigenstate, nonadiabaticity, EvolveOptions,
    ObservableSeries,
};

/// Default relative tolerance on the asymptotic transition probability.
pub const LZ_TOLERANCE: f64 = 0.02;
const EXACT_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LzReport {
    pub kind: ControlKind,
    pub window: (f64, f64),
    pub step: f64,
    /// Tail-averaged non-adiabaticity at the end of the run.
    pub simulated: f64,
    pub predicted: f64,
    pub relative_error: f64,
    pub max_nonadiabaticity: f64,
    pub series: ObservableSeries,
    pub checks: Vec<Check>,
}

/// Propagates the ground state across the crossing. Without control the
/// final non-adiabaticity is compared to `exp(-pi delta^2 / (2 alpha))`;
/// with the exact control it must stay below `1e-8` throughout.
pub fn lz_check(
    model: &TwoLevelModel,
    window: (f64, f64),
    kind: ControlKind,
    step: Option<f64>,
    tolerance: f64,
) -> Result<LzReport> {
    if !matches!(kind, ControlKind::None | ControlKind::ExactCd) {
        return Err(Error::WrongRegime(format!("lz-check supports `none` and `exact` controls, got {kind}")));
    }
    let full: Model = (*model).into();
    let control = ControlField::new(kind, full)?;
    let step = match step {
        Some(step) => step,
        None => default_step(&control, window.0, window.1)?,
    };
    let psi0 = instantaneous_eigenstate(&full, window.0, 0)?;
    let opts = EvolveOptions { record_every: 20, verify_step_halving: false };
    let trajectory = evolve(&control, &psi0, window.0, window.1, step, opts)?;
    let series = nonadiabaticity(&trajectory)?;
    let simulated = asymptotic_value(&series, 0.1)?;
    let predicted = lz_asymptotic_probability(model);
    let relative_error = (simulated - predicted).abs() / predicted;
    let max_nonadiabaticity = series.max();
    let checks = match kind {
        ControlKind::None => vec![Check::below("lz relative error", relative_error, tolerance)],
        _ => vec![Check::below("exact control max nonadiabaticity", max_nonadiabaticity, EXACT_LIMIT)],
    };
    Ok(LzReport {
        kind,
        window,
        step: trajectory.step,
        simulated,
        predicted,
        relative_error,
        max_nonadiabaticity,
        series,
        checks,
    })
}
