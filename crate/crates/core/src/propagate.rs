//! Time-dependent Schrödinger propagation, `i d psi/d tau = H(tau) psi`.
//!
//! Each step applies `exp(-i K)` with the fourth-order Magnus generator
//!
//! ```text
//! K = (h/2)(H(t1) + H(t2)) - i (sqrt3/12) h^2 [H(t2), H(t1)]
//! t1,2 = tau + h (1/2 -+ sqrt3/6)
//! ```
//!
//! and the exponential is taken through the eigendecomposition of the
//! Hermitian `K`, so every step is unitary to rounding. States are never
//! renormalized; a norm drift above `1e-10` aborts the run.

use std::io::Write;

use serde::Serialize;

use crate::control::{ControlField, ControlKind, Driven};
use crate::error::{Error, Result};
use crate::models::{Hamiltonian, Model};
use crate::smallmat::{hermitian_eigen, CVector, C64};

/// Maximum tolerated `| |psi| - 1 |` during a run.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Maximum `step * |H|` accepted by the stability check.
pub const MAX_STEP_NORM: f64 = 0.1;
/// Final-state agreement required between a run and its half-step rerun.
pub const STEP_HALVING_TOLERANCE: f64 = 1e-8;

const INITIAL_NORM_TOLERANCE: f64 = 1e-12;
const STABILITY_SAMPLES: usize = 101;

/// Uniform time grid. `step` is signed, so grids may run backwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid from `start` to `end` whose spacing is the largest value not
    /// exceeding `max_step` that divides the interval evenly.
    pub fn new(start: f64, end: f64, max_step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && max_step.is_finite()) {
            return Err(Error::InvalidWindow("window and step must be finite".into()));
        }
        if max_step <= 0.0 {
            return Err(Error::InvalidWindow(format!("step must be positive, got {max_step}")));
        }
        if start == end {
            return Err(Error::InvalidWindow("window has zero length".into()));
        }
        let span = end - start;
        let steps = (span.abs() / max_step - 1e-9).ceil().max(1.0) as usize;
        Ok(TimeGrid { start, step: span / steps as f64, steps })
    }

    pub fn tau(&self, k: usize) -> f64 {
        if k == self.steps {
            return self.end();
        }
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.start + self.steps as f64 * self.step
    }

    /// Same interval, twice as many steps.
    pub fn halved(&self) -> Self {
        TimeGrid { start: self.start, step: self.step / 2.0, steps: self.steps * 2 }
    }
}

/// Propagated states on a uniform, increasing grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub states: Vec<CVector>,
    pub model: Model,
    pub control: ControlKind,
    /// Integration step (the recorded grid may be coarser).
    pub step: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &CVector {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let (header, columns) = self.table();
        write_csv(writer, &header, &columns)
    }

    /// Columns `tau, re_c1, im_c1, ...`.
    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let dim = self.model.dim();
        let mut header = vec!["tau".to_string()];
        for k in 1..=dim {
            header.push(format!("re_c{k}"));
            header.push(format!("im_c{k}"));
        }
        let mut columns = vec![self.taus.clone()];
        for k in 0..dim {
            columns.push(self.states.iter().map(|s| s[k].re).collect());
            columns.push(self.states.iter().map(|s| s[k].im).collect());
        }
        (header, columns)
    }
}

/// Writes equal-length columns as CSV with a one-line header. Floats use the
/// shortest representation that round-trips.
pub fn write_csv<W: Write>(writer: W, header: &[String], columns: &[Vec<f64>]) -> std::io::Result<()> {
    if header.len() != columns.len() || columns.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "ragged CSV table"));
    }
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(header)?;
    let rows = columns.first().map_or(0, Vec::len);
    let mut row = Vec::with_capacity(columns.len());
    for i in 0..rows {
        row.clear();
        row.extend(columns.iter().map(|c| c[i]));
        out.serialize(&row)?;
    }
    out.flush()
}

/// A real-valued observable sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with columns `tau, <name>`.
    pub fn write_csv<W: Write>(&self, writer: W, name: &str) -> std::io::Result<()> {
        write_csv(writer, &["tau".to_string(), name.to_string()], &[self.taus.clone(), self.values.clone()])
    }
}

/// Knobs for [`evolve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvolveOptions {
    /// Keep every `record_every`-th state (the final state is always kept).
    pub record_every: usize,
    /// Rerun with half the step and require the final states to agree.
    pub verify_step_halving: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { record_every: 1, verify_step_halving: false }
    }
}

/// One fourth-order Magnus step of length `h` starting at `tau`.
pub fn magnus_step<H: Hamiltonian + ?Sized>(ham: &H, tau: f64, h: f64, psi: &CVector) -> Result<CVector> {
    let offset = 3f64.sqrt() / 6.0;
    let h1 = ham.at(tau + h * (0.5 - offset))?;
    let h2 = ham.at(tau + h * (0.5 + offset))?;
    let commutator = h2.commutator(&h1);
    let generator = (h1 + h2) * (0.5 * h) + commutator * C64::new(0.0, -(3f64.sqrt() / 12.0) * h * h);
    // Apply psi + V (exp(-i lambda) - 1) V^dag psi so that rounding in the
    // eigenvectors is scaled by |lambda| rather than entering at full size.
    let dim = psi.dim();
    let frame = hermitian_eigen(&generator, tau)?;
    let mut out = *psi;
    for (v, &lambda) in frame.eigenvectors().iter().zip(frame.eigenvalues()) {
        let half = (0.5 * lambda).sin();
        let expm1 = C64::new(-2.0 * half * half, -lambda.sin());
        let amplitude = v.inner(psi) * expm1;
        for k in 0..dim {
            out[k] += v[k] * amplitude;
        }
    }
    Ok(out)
}

/// Largest `|eigenvalue|` of `H` over evenly spaced samples of the grid.
pub fn max_spectral_norm<H: Hamiltonian + ?Sized>(ham: &H, grid: &TimeGrid) -> Result<(f64, f64)> {
    let mut worst = (0.0, grid.start);
    for k in 0..STABILITY_SAMPLES {
        let tau = grid.start + (grid.end() - grid.start) * k as f64 / (STABILITY_SAMPLES - 1) as f64;
        let frame = hermitian_eigen(&ham.at(tau)?, tau)?;
        let norm = frame.eigenvalues().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > worst.0 {
            worst = (norm, tau);
        }
    }
    Ok(worst)
}

/// Integrates `psi0` along `grid`, returning the recorded times and states.
pub fn propagate<H: Hamiltonian + ?Sized>(
    ham: &H,
    psi0: &CVector,
    grid: &TimeGrid,
    record_every: usize,
) -> Result<(Vec<f64>, Vec<CVector>)> {
    if psi0.dim() != ham.dim() {
        return Err(Error::DimensionMismatch { expected: ham.dim(), got: psi0.dim() });
    }
    let deviation = psi0.norm() - 1.0;
    if deviation.abs() > INITIAL_NORM_TOLERANCE {
        return Err(Error::NotNormalized { deviation });
    }
    let (norm, at) = max_spectral_norm(ham, grid)?;
    let product = grid.step.abs() * norm;
    if product > MAX_STEP_NORM {
        return Err(Error::StepTooLarge { step: grid.step.abs(), product, tau: at });
    }

    let record_every = record_every.max(1);
    let capacity = grid.steps / record_every + 2;
    let mut taus = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut psi = *psi0;
    taus.push(grid.start);
    states.push(psi);
    for k in 0..grid.steps {
        let tau = grid.tau(k);
        psi = magnus_step(ham, tau, grid.step, &psi)?;
        let drift = (psi.norm() - 1.0).abs();
        if drift > NORM_TOLERANCE {
            return Err(Error::NormDrift { drift, tau: grid.tau(k + 1) });
        }
        if (k + 1) % record_every == 0 || k + 1 == grid.steps {
            taus.push(grid.tau(k + 1));
            states.push(psi);
        }
    }
    Ok((taus, states))
}

/// Evolves `psi0` under `H0 + H1` from `tau_start` to `tau_end`.
pub fn evolve(
    control: &ControlField,
    psi0: &CVector,
    tau_start: f64,
    tau_end: f64,
    step: f64,
    options: EvolveOptions,
) -> Result<Trajectory> {
    if !(tau_start < tau_end) {
        return Err(Error::InvalidWindow(format!("tau_start {tau_start} must be below tau_end {tau_end}")));
    }
    let grid = TimeGrid::new(tau_start, tau_end, step)?;
    let driven = Driven { control: *control };
    let (taus, states) = propagate(&driven, psi0, &grid, options.record_every)?;
    if options.verify_step_halving {
        let (_, fine) = propagate(&driven, psi0, &grid.halved(), usize::MAX)?;
        let difference = states.last().unwrap().distance(fine.last().unwrap());
        if difference > STEP_HALVING_TOLERANCE {
            return Err(Error::StepHalvingMismatch { difference, tolerance: STEP_HALVING_TOLERANCE });
        }
    }
    Ok(Trajectory { taus, states, model: *control.model(), control: control.kind(), step: grid.step })
}

/// Instantaneous eigenstate `level` (0 = ground) of `H0` at `tau`.
pub fn instantaneous_eigenstate(model: &Model, tau: f64, level: usize) -> Result<CVector> {
    Ok(*hermitian_eigen(&model.h0(tau), tau)?.eigenvector(level))
}

/// Default integration step: `0.01 min(1, delta/alpha, delta^2/(alpha eps + alpha))`,
/// further reduced if needed so that `step * |H| <= 0.05` on the window.
pub fn default_step(control: &ControlField, tau_start: f64, tau_end: f64) -> Result<f64> {
    let model = control.model();
    let alpha = model.alpha().abs();
    let delta = model.delta();
    let mut step = 0.01f64.min(0.01 / alpha);
    if delta > 0.0 {
        step = step
            .min(0.01 * delta / alpha)
            .min(0.01 * delta * delta / (alpha * model.epsilon().abs() + alpha));
    }
    let grid = TimeGrid::new(tau_start, tau_end, step)?;
    let (norm, _) = max_spectral_norm(&Driven { control: *control }, &grid)?;
    if norm > 0.0 {
        step = step.min(0.5 * MAX_STEP_NORM / norm);
    }
    Ok(step)
}

/// Default symmetric window `+-(eps/alpha + 50 max(1, delta)/alpha)`.
pub fn default_window(model: &Model) -> (f64, f64) {
    let alpha = model.alpha().abs();
    let half = model.epsilon().abs() / alpha + 50.0 * model.delta().max(1.0) / alpha;
    (-half, half)
}

/// `1 - |<Psi(tau)|psi_level(tau)>|^2` along the trajectory.
///
/// Evaluated as the summed population of the other instantaneous levels,
/// which equals the definition for a unit-norm state and avoids the
/// cancellation in `1 - (1 - small)`.
pub fn nonadiabaticity_of_level(traj: &Trajectory, level: usize) -> Result<ObservableSeries> {
    let mut values = Vec::with_capacity(traj.states.len());
    for (&tau, psi) in traj.taus.iter().zip(&traj.states) {
        let frame = hermitian_eigen(&traj.model.h0(tau), tau)?;
        let leaked = (0..frame.dim())
            .filter(|&k| k != level)
            .map(|k| frame.eigenvector(k).inner(psi).norm_sqr())
            .sum();
        values.push(leaked);
    }
    Ok(ObservableSeries { taus: traj.taus.clone(), values })
}

/// Non-adiabaticity with respect to the instantaneous ground state.
pub fn nonadiabaticity(traj: &Trajectory) -> Result<ObservableSeries> {
    nonadiabaticity_of_level(traj, 0)
}

/// `|<k|Psi(tau)>|^2` for every diabatic state `k`.
pub fn diabatic_populations(traj: &Trajectory) -> Vec<ObservableSeries> {
    (0..traj.model.dim())
        .map(|k| ObservableSeries {
            taus: traj.taus.clone(),
            values: traj.states.iter().map(|s| s[k].norm_sqr()).collect(),
        })
        .collect()
}

/// Mean over the last `fraction` of the samples.
pub fn asymptotic_value(series: &ObservableSeries, fraction: f64) -> Result<f64> {
    if series.is_empty() || !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::EmptyWindow);
    }
    let count = ((series.len() as f64 * fraction).ceil() as usize).clamp(1, series.len());
    let tail = &series.values[series.len() - count..];
    Ok(tail.iter().sum::<f64>() / count as f64)
}

/// Closed-form Rabi population `(d^2/W^2) sin^2(W t / 2)`, `W = sqrt(d^2 + detuning^2)`.
pub fn rabi_population(coupling: f64, detuning: f64, tau: f64) -> f64 {
    let w = (coupling * coupling + detuning * detuning).sqrt();
    if w == 0.0 {
        return 0.0;
    }
    (coupling / w).powi(2) * (0.5 * w * tau).sin().powi(2)
}
