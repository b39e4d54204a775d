//! Long-time decay of the exact control entries.

use super::fit::{fit_power_law, linear_grid, log_grid, PowerLawFit, TAIL_MIN_POINTS};
use super::Check;
use crate::control::{cd_exact, crossover_time};
use crate::error::{Error, Result};
use crate::models::{Model, ThreeLevelModel};

/// Expected exponent and tolerance for `|H12|`, `|H23|`, `|H13|`.
pub const TAIL_TARGETS: [(f64, f64); 3] = [(-2.0, 0.1), (-2.0, 0.1), (-4.0, 0.2)];
const MIN_R_SQUARED: f64 = 0.999;
const CROSSOVER_TOLERANCE: f64 = 0.3;

/// Earliest `tau` admitted to tail fits, `3 eps/alpha + 10/alpha`.
pub fn tail_guard(model: &ThreeLevelModel) -> f64 {
    (3.0 * model.epsilon.abs() + 10.0) / model.alpha.abs()
}

#[derive(Clone, Debug)]
pub struct TailReport {
    pub taus: Vec<f64>,
    /// `|H12|`, `|H23|`, `|H13|` on `taus`.
    pub magnitudes: [Vec<f64>; 3],
    pub fits: [PowerLawFit; 3],
    pub checks: Vec<Check>,
}

impl TailReport {
    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let header = ["tau", "abs_h12", "abs_h23", "abs_h13"].map(String::from).to_vec();
        let mut columns = vec![self.taus.clone()];
        columns.extend(self.magnitudes.iter().cloned());
        (header, columns)
    }
}

fn check_window(model: &ThreeLevelModel, window: (f64, f64)) -> Result<()> {
    let guard = tail_guard(model);
    if !(window.0 < window.1) {
        return Err(Error::InvalidWindow(format!("fit window [{}, {}] is empty", window.0, window.1)));
    }
    if window.0 < guard {
        return Err(Error::InvalidWindow(format!(
            "fit window starts at {} inside the crossing region (guard {guard})",
            window.0
        )));
    }
    Ok(())
}

fn magnitudes(model: &Model, taus: &[f64]) -> Result<[Vec<f64>; 3]> {
    let mut out: [Vec<f64>; 3] = Default::default();
    for &tau in taus {
        let h1 = cd_exact(model, tau)?;
        for (column, (r, c)) in out.iter_mut().zip([(0, 1), (1, 2), (0, 2)]) {
            column.push(h1[(r, c)].norm());
        }
    }
    Ok(out)
}

/// Fits the three exact-control entries on `points` evenly spaced times in `window`.
pub fn tail_exponent_experiment(model: &ThreeLevelModel, window: (f64, f64), points: usize) -> Result<TailReport> {
    if model.delta_alpha() != 0.0 {
        return Err(Error::WrongRegime("tail exponents need equal sweep rates (delta_alpha = 0)".into()));
    }
    check_window(model, window)?;
    let taus = linear_grid(window.0, window.1, points);
    let mags = magnitudes(&(*model).into(), &taus)?;
    let mut fits = Vec::with_capacity(3);
    let mut checks = Vec::new();
    for ((values, (target, tol)), name) in mags.iter().zip(TAIL_TARGETS).zip(["h12", "h23", "h13"]) {
        let fit = fit_power_law(&taus, values, window, TAIL_MIN_POINTS)?;
        checks.push(Check::within(format!("{name} exponent"), fit.exponent, target, tol));
        checks.push(Check::above(format!("{name} r_squared"), fit.r_squared, MIN_R_SQUARED));
        fits.push(fit);
    }
    Ok(TailReport { taus, magnitudes: mags, fits: [fits[0], fits[1], fits[2]], checks })
}

#[derive(Clone, Debug)]
pub struct CrossoverReport {
    pub taus: Vec<f64>,
    /// `|H13|` on `taus`.
    pub magnitudes: Vec<f64>,
    pub early: PowerLawFit,
    pub late: PowerLawFit,
    /// Intersection of the two fitted lines.
    pub crossover: f64,
    /// `5 eps / |delta_alpha|`.
    pub predicted: f64,
    pub checks: Vec<Check>,
}

impl CrossoverReport {
    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        (vec!["tau".into(), "abs_h13".into()], vec![self.taus.clone(), self.magnitudes.clone()])
    }
}

/// Default fit windows `[max(100, guard), tau*/10]` and `[10 tau*, 100 tau*]`.
pub fn default_crossover_windows(model: &ThreeLevelModel) -> ((f64, f64), (f64, f64)) {
    let t = crossover_time(model);
    ((tail_guard(model).max(100.0 / model.alpha.abs()), t / 10.0), (10.0 * t, 100.0 * t))
}

/// Fits `|H13|` below and above the crossover between the `tau^-4` and
/// `tau^-3` regimes of a model with unequal sweep rates.
pub fn asymmetric_crossover_experiment(
    model: &ThreeLevelModel,
    windows: Option<((f64, f64), (f64, f64))>,
    points: usize,
) -> Result<CrossoverReport> {
    if model.delta_alpha() == 0.0 {
        return Err(Error::WrongRegime("crossover needs unequal sweep rates (delta_alpha != 0)".into()));
    }
    let (early_window, late_window) = windows.unwrap_or_else(|| default_crossover_windows(model));
    check_window(model, early_window)?;
    check_window(model, late_window)?;
    let taus = log_grid(early_window.0.min(late_window.0), early_window.1.max(late_window.1), points);
    let [_, _, h13] = magnitudes(&(*model).into(), &taus)?;
    let early = fit_power_law(&taus, &h13, early_window, TAIL_MIN_POINTS)?;
    let late = fit_power_law(&taus, &h13, late_window, TAIL_MIN_POINTS)?;
    let crossover = early.intersection(&late).unwrap_or(f64::NAN);
    let predicted = crossover_time(model);
    let checks = vec![
        Check::within("early h13 exponent", early.exponent, -4.0, CROSSOVER_TOLERANCE),
        Check::within("late h13 exponent", late.exponent, -3.0, CROSSOVER_TOLERANCE),
        Check::within_factor("crossover time", crossover, predicted, 3.0),
    ];
    Ok(CrossoverReport { taus, magnitudes: h13, early, late, crossover, predicted, checks })
}
