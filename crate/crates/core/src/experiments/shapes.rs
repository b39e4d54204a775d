//! Spectra and control-field profiles on a `tau` grid.

use serde::Serialize;

use super::Check;
use crate::control::{cd_exact, ControlField, ControlKind};
use crate::error::{Error, Result};
use crate::models::{Model, ThreeLevelModel};
use crate::smallmat::{hermitian_eigen, C64};

/// Instantaneous eigenvalues of `H0`, one column per level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumScan {
    pub taus: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
}

impl SpectrumScan {
    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut header = vec!["tau".to_string()];
        header.extend((1..=self.levels.len()).map(|k| format!("e{k}")));
        let mut columns = vec![self.taus.clone()];
        columns.extend(self.levels.iter().cloned());
        (header, columns)
    }
}

pub fn spectrum_scan(model: &Model, taus: &[f64]) -> Result<SpectrumScan> {
    let mut levels = vec![Vec::with_capacity(taus.len()); model.dim()];
    for &tau in taus {
        let frame = hermitian_eigen(&model.h0(tau), tau)?;
        for (column, &e) in levels.iter_mut().zip(frame.eigenvalues()) {
            column.push(e);
        }
    }
    Ok(SpectrumScan { taus: taus.to_vec(), levels })
}

/// Upper-triangle entries of a control field along a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlScan {
    pub kind: ControlKind,
    pub taus: Vec<f64>,
    /// Zero-based `(row, column)` of each recorded entry.
    pub elements: Vec<(usize, usize)>,
    /// `values[e][i]` is entry `elements[e]` at `taus[i]`.
    pub values: Vec<Vec<C64>>,
}

impl ControlScan {
    pub fn element_index(&self, row: usize, col: usize) -> Option<usize> {
        self.elements.iter().position(|&e| e == (row, col))
    }

    pub fn magnitudes(&self, element: usize) -> Vec<f64> {
        self.values[element].iter().map(|z| z.norm()).collect()
    }

    /// Columns `tau, re_h12, im_h12, ...` with one-based labels.
    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut header = vec!["tau".to_string()];
        let mut columns = vec![self.taus.clone()];
        for (&(r, c), values) in self.elements.iter().zip(&self.values) {
            header.push(format!("re_h{}{}", r + 1, c + 1));
            header.push(format!("im_h{}{}", r + 1, c + 1));
            columns.push(values.iter().map(|z| z.re).collect());
            columns.push(values.iter().map(|z| z.im).collect());
        }
        (header, columns)
    }
}

pub fn control_scan(control: &ControlField, taus: &[f64]) -> Result<ControlScan> {
    let elements = match control.model().dim() {
        2 => vec![(0, 1)],
        _ => vec![(0, 1), (1, 2), (0, 2)],
    };
    let mut values = vec![Vec::with_capacity(taus.len()); elements.len()];
    for &tau in taus {
        let h1 = control.evaluate(tau)?;
        for (column, &(r, c)) in values.iter_mut().zip(&elements) {
            column.push(h1[(r, c)]);
        }
    }
    Ok(ControlScan { kind: control.kind(), taus: taus.to_vec(), elements, values })
}

/// Exact-control profiles and their peak structure.
#[derive(Clone, Debug)]
pub struct ShapeReport {
    pub scan: ControlScan,
    /// Refined location and height of the `|H12|` and `|H23|` maxima.
    pub peaks: [(f64, f64); 2],
    /// `|H12|` at the origin for the same model with `epsilon = 0`.
    pub reference_peak: f64,
    pub checks: Vec<Check>,
}

/// Scans the exact control and checks peak positions at `tau = -+eps/alpha`,
/// the halving of the peak height against `eps = 0` for well separated
/// crossings, and the sign pattern of the `(1,3)` entry.
pub fn control_shape_experiment(model: &ThreeLevelModel, taus: &[f64]) -> Result<ShapeReport> {
    if taus.len() < 3 || taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidWindow("shape grid needs at least three increasing points".into()));
    }
    let full: Model = (*model).into();
    let scan = control_scan(&ControlField::new(ControlKind::ExactCd, full)?, taus)?;

    let mut reference = *model;
    reference.epsilon = 0.0;
    let reference_peak = cd_exact(&reference.into(), 0.0)?[(0, 1)].norm();

    let crossing = model.epsilon / model.alpha;
    // Each crossing peak is searched within half the crossing separation,
    // away from the narrow indirect-crossing peak at the origin.
    let peak_of = |row: usize, col: usize, center: f64| -> Result<(f64, f64)> {
        let e = scan.element_index(row, col).expect("three-level scan");
        let mags = scan.magnitudes(e);
        let reach = 0.5 * crossing.abs();
        let candidates: Vec<usize> = (0..taus.len())
            .filter(|&i| crossing == 0.0 || (taus[i] - center).abs() < reach)
            .collect();
        let Some(&i) = candidates.iter().max_by(|&&a, &&b| mags[a].total_cmp(&mags[b])) else {
            return Err(Error::InvalidWindow(format!("shape grid does not cover tau = {center}")));
        };
        let lo = taus[i.saturating_sub(1)];
        let hi = taus[(i + 1).min(taus.len() - 1)];
        refine_maximum(|t| Ok(cd_exact(&full, t)?[(row, col)].norm()), lo, hi)
    };
    let left = peak_of(0, 1, -crossing)?;
    let right = peak_of(1, 2, crossing)?;

    let width = (model.delta / model.alpha.abs()).max(grid_spacing(taus));
    let mut checks = vec![
        Check::within("h12 peak position", left.0, -crossing, width),
        Check::within("h23 peak position", right.0, crossing, width),
    ];
    if model.epsilon == 0.0 {
        checks.push(Check::within(
            "phi rate peak",
            reference_peak * std::f64::consts::SQRT_2,
            model.alpha.abs() / model.delta,
            1e-9 * model.alpha.abs() / model.delta,
        ));
    } else if model.epsilon.abs() > 10.0 * model.delta {
        checks.push(Check::within("h12 peak ratio to eps=0", left.1 / reference_peak, 0.5, 0.05));
        let origin = cd_exact(&full, 0.0)?[(0, 1)].norm();
        checks.push(Check::within("h12 origin peak ratio to eps=0", origin / reference_peak, 1.0, 0.05));
        let center = cd_exact(&full, 0.0)?[(0, 2)].im;
        let side = cd_exact(&full, left.0)?[(0, 2)].im;
        checks.push(Check::below("h13 side-lobe sign relative to center", (side / center).signum(), 0.0));
    }
    Ok(ShapeReport { scan, peaks: [left, right], reference_peak, checks })
}

fn grid_spacing(taus: &[f64]) -> f64 {
    taus.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
fn refine_maximum(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    for _ in 0..80 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a)?;
        }
    }
    let tau = 0.5 * (lo + hi);
    Ok((tau, f(tau)?))
}
