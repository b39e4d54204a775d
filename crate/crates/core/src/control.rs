//! Counterdiabatic control Hamiltonians.
//!
//! [`cd_exact`] assembles the transitionless-driving correction
//!
//! ```text
//! H1 = i sum_{m != n} |m><m| dH0/dtau |n><n| / (E_n - E_m)
//! ```
//!
//! from the instantaneous spectral projectors of `H0`, so the result does not
//! depend on eigenvector phases. The remaining evaluators are closed forms:
//! special cases that serve as oracles for the numerical route, the separated
//! (one correction per avoided crossing) constructions, and perturbative
//! profiles used to check the tails.
//!
//! Matrix indices are zero-based in code; documentation uses the one-based
//! diabatic labels `|1>, |2>, |3>`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Hamiltonian, Model, ThreeLevelModel, TwoLevelModel};
use crate::smallmat::{hermitian_eigen, pauli_operators, spin1_operators, CMatrix, EigenFrame, C64};

/// Relative spectral gap below which the correction is refused.
pub const GAP_TOLERANCE: f64 = 1e-9;

const I: C64 = C64::new(0.0, 1.0);

/// Builds the correction from a precomputed eigenframe and `dH0/dtau`.
pub fn counterdiabatic_from_frame(frame: &EigenFrame, dh0: &CMatrix) -> Result<CMatrix> {
    let dim = frame.dim();
    let values = frame.eigenvalues();
    let range = values[dim - 1] - values[0];
    let tolerance = GAP_TOLERANCE * range;
    let gap = frame.min_gap();
    if !(gap > tolerance) {
        return Err(Error::DegenerateSpectrum { tau: frame.tau, gap, tolerance });
    }
    let vectors = frame.eigenvectors();
    let mut h1 = CMatrix::zeros(dim);
    for m in 0..dim {
        for n in 0..dim {
            if m == n {
                continue;
            }
            let coupling = vectors[m].inner(&dh0.mul_vec(&vectors[n]));
            let coefficient = I * coupling / (values[n] - values[m]);
            h1 += vectors[m].outer(&vectors[n]).scale(coefficient);
        }
    }
    Ok(h1)
}

/// Exact counterdiabatic correction for any model, evaluated numerically.
pub fn cd_exact(model: &Model, tau: f64) -> Result<CMatrix> {
    let frame = hermitian_eigen(&model.h0(tau), tau)?;
    counterdiabatic_from_frame(&frame, &model.dh0_dtau(tau))
}

/// Mixing-angle rate of the Landau-Zener model, `d theta/d tau` with
/// `tan theta = delta / (alpha tau)`. A Lorentzian of width `delta/alpha`.
pub fn lz_angle_rate(model: &TwoLevelModel, tau: f64) -> f64 {
    let w = model.omega(tau);
    -model.delta * model.alpha / (w * w + model.delta * model.delta)
}

/// `H1 = (1/2) d theta/d tau sigma_y`.
pub fn cd_two_level_analytic(model: &TwoLevelModel, tau: f64) -> CMatrix {
    let (_, sy, _) = pauli_operators();
    sy * (0.5 * lz_angle_rate(model, tau))
}

/// Area `|int_{-T}^{T} d theta/d tau dtau| = 2 arctan(|alpha| T / delta)` of the
/// Landau-Zener control pulse over a symmetric window.
pub fn pulse_area(model: &TwoLevelModel, tau_max: f64) -> f64 {
    2.0 * (model.alpha.abs() * tau_max / model.delta).atan()
}

/// Total pulse area over the whole real line: a pi pulse for any `alpha`, `delta`.
pub fn pi_pulse_integral(model: &TwoLevelModel) -> f64 {
    pulse_area(model, f64::INFINITY)
}

/// `d phi/d tau` for `tan phi = delta / (alpha tau)`.
pub fn phi_rate(model: &ThreeLevelModel, tau: f64) -> f64 {
    let w = model.omega(tau);
    -model.delta * model.alpha / (w * w + model.delta * model.delta)
}

fn require_symmetric(model: &ThreeLevelModel, what: &str) -> Result<()> {
    if model.is_symmetric() {
        Ok(())
    } else {
        Err(Error::WrongRegime(format!("{what} requires the symmetric model")))
    }
}

/// Closed form at zero separation: `H1 = (d phi/d tau) Sy`.
pub fn cd_eps0_analytic(model: &ThreeLevelModel, tau: f64) -> Result<CMatrix> {
    if model.epsilon != 0.0 {
        return Err(Error::WrongRegime(format!(
            "zero-separation closed form needs epsilon = 0, got {}",
            model.epsilon
        )));
    }
    require_symmetric(model, "zero-separation closed form")?;
    let (_, sy, _) = spin1_operators();
    Ok(sy * phi_rate(model, tau))
}

/// Closed form at `tau = 0` for any separation:
///
/// ```text
/// H1(0) = (i/sqrt2) phi'(0) | 0            -1   -sqrt2 eps/delta |
///                           | 1             0   -1               |
///                           | sqrt2 eps/delta 1  0               |
/// ```
/// with `phi'(0) = -alpha/delta`.
pub fn cd_origin_snapshot(model: &ThreeLevelModel) -> Result<CMatrix> {
    require_symmetric(model, "origin snapshot")?;
    if model.delta == 0.0 {
        return Err(Error::WrongRegime("origin snapshot needs delta > 0".into()));
    }
    let rate = -model.alpha / model.delta;
    let corner = SQRT_2 * model.epsilon / model.delta;
    let shape = CMatrix::from_real_rows(&[
        &[0.0, -1.0, -corner],
        &[1.0, 0.0, -1.0],
        &[corner, 1.0, 0.0],
    ]);
    Ok(shape * (I * (FRAC_1_SQRT_2 * rate)))
}

/// Mixing-angle rates `(theta_L', theta_R')` of the upper-left and lower-right
/// two-level blocks of `H0`.
///
/// For a block `[[a, c], [c, b]]` the angle obeys `tan theta = 2c / (a - b)`,
/// so `theta' = -2c (a' - b') / ((a - b)^2 + 4c^2)`. In the symmetric ladder
/// this is `tan theta_L = sqrt2 delta / (omega + eps)` and
/// `tan theta_R = sqrt2 delta / (omega - eps)`.
pub fn separated_angle_rates(model: &ThreeLevelModel, tau: f64) -> (f64, f64) {
    let (c12, c23) = model.couplings();
    let rate = |detuning: f64, detuning_rate: f64, c: f64| {
        -2.0 * c * detuning_rate / (detuning * detuning + 4.0 * c * c)
    };
    let left = rate(model.epsilon + model.alpha * tau, model.alpha, c12);
    let right = rate(-(model.epsilon + model.beta * tau), -model.beta, c23);
    (left, right)
}

/// Sum of the two block corrections:
///
/// ```text
/// (i/2) | 0         -theta_L'   0         |
///       | theta_L'   0         -theta_R'  |
///       | 0          theta_R'   0         |
/// ```
pub fn separated_matrix(model: &ThreeLevelModel, tau: f64) -> CMatrix {
    let (left, right) = separated_angle_rates(model, tau);
    CMatrix::from_real_rows(&[&[0.0, -left, 0.0], &[left, 0.0, -right], &[0.0, right, 0.0]])
        * (0.5 * I)
}

/// Single-field variant, `(theta_sep'/sqrt2) Sy` with `theta_sep' = theta_L' + theta_R'`.
pub fn separated_single_field(model: &ThreeLevelModel, tau: f64) -> CMatrix {
    let (left, right) = separated_angle_rates(model, tau);
    let (_, sy, _) = spin1_operators();
    sy * ((left + right) * FRAC_1_SQRT_2)
}

fn antisymmetric_imaginary(h12: f64, h23: f64, h13: f64) -> CMatrix {
    // entries i*h above the diagonal, Hermitian completion below
    CMatrix::from_real_rows(&[&[0.0, h12, h13], &[-h12, 0.0, h23], &[-h13, -h23, 0.0]]) * I
}

/// Lowest-order profiles in `delta` for the symmetric ladder, valid away from
/// the crossings (`|omega +- eps| >> delta`):
///
/// ```text
/// {H1}_12 = i omega' delta / (sqrt2 (eps + omega)^2)
/// {H1}_23 = i omega' delta / (sqrt2 (eps - omega)^2)
/// {H1}_13 = i omega' eps delta^2 (eps^2 - 5 omega^2) / (4 omega^2 (omega^2 - eps^2)^2)
/// ```
pub fn perturbative_small_delta(model: &ThreeLevelModel, tau: f64) -> Result<CMatrix> {
    require_symmetric(model, "small-delta profiles")?;
    let eps = model.epsilon;
    let w = model.omega(tau);
    let rate = model.alpha;
    if w == 0.0 || w == eps || w == -eps {
        return Err(Error::SingularPoint { tau });
    }
    let d = model.delta;
    let h12 = rate * d * FRAC_1_SQRT_2 / ((eps + w) * (eps + w));
    let h23 = rate * d * FRAC_1_SQRT_2 / ((eps - w) * (eps - w));
    let split = w * w - eps * eps;
    let h13 = rate * eps * d * d * (eps * eps - 5.0 * w * w) / (4.0 * w * w * split * split);
    Ok(antisymmetric_imaginary(h12, h23, h13))
}

/// Leading large-`|tau|` behaviour of each element.
///
/// The direct elements fall off as `tau^-2`. The indirect `{H1}_13` element is
///
/// ```text
/// i (alpha + beta) D / (2 alpha beta (alpha - beta) tau^3)
///   - i (2 alpha^2 - alpha beta + 2 beta^2) eps D / (2 alpha^2 beta^2 (alpha - beta) tau^4)
/// ```
///
/// with `D = delta (delta + delta_delta)`; the `tau^-3` term vanishes for the
/// symmetric slope `beta = -alpha`, leaving `-i 5 eps D / (4 alpha^3 tau^4)`.
pub fn perturbative_long_time(model: &ThreeLevelModel, tau: f64) -> Result<CMatrix> {
    if tau == 0.0 {
        return Err(Error::SingularPoint { tau });
    }
    let (a, b) = (model.alpha, model.beta);
    if a == b || b == 0.0 {
        return Err(Error::WrongRegime("long-time expansion needs beta != 0 and beta != alpha".into()));
    }
    let (c12, c23) = model.couplings();
    let t2 = tau * tau;
    let h12 = c12 / (a * t2);
    let h23 = -c23 / (b * t2);
    let (c3, c4) = long_time_indirect_coefficients(model);
    let h13 = c3 / (t2 * tau) + c4 / (t2 * t2);
    Ok(antisymmetric_imaginary(h12, h23, h13))
}

/// Coefficients `(c3, c4)` with `Im {H1}_13 ~ c3 tau^-3 + c4 tau^-4` at large `|tau|`.
pub fn long_time_indirect_coefficients(model: &ThreeLevelModel) -> (f64, f64) {
    let (a, b) = (model.alpha, model.beta);
    let (c12, c23) = model.couplings();
    let dd = 2.0 * c12 * c23;
    let c3 = (a + b) * dd / (2.0 * a * b * (a - b));
    let c4 = -(2.0 * a * a - a * b + 2.0 * b * b) * model.epsilon * dd / (2.0 * a * a * b * b * (a - b));
    (c3, c4)
}

/// Small-`delta_alpha` form `C1 delta_alpha / tau^3 + C2 / tau^4` of the indirect
/// tail: `C1 = delta^2 / (4 alpha^3)`, `C2 = 5 eps delta^2 / (4 alpha^3)`.
pub fn crossover_coefficients(model: &ThreeLevelModel) -> (f64, f64) {
    let a3 = model.alpha.powi(3);
    let d2 = model.delta * model.delta;
    (d2 / (4.0 * a3), 5.0 * model.epsilon * d2 / (4.0 * a3))
}

/// Time `C2 / (C1 |delta_alpha|) = 5 eps / |delta_alpha|` beyond which the
/// asymmetry-induced `tau^-3` tail dominates. Infinite for the symmetric slope.
pub fn crossover_time(model: &ThreeLevelModel) -> f64 {
    let (c1, c2) = crossover_coefficients(model);
    c2 / (c1 * model.delta_alpha().abs())
}

/// Which correction a [`ControlField`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlKind {
    #[serde(rename = "exact")]
    ExactCd,
    SeparatedMatrix,
    #[serde(rename = "separated-field")]
    SeparatedSingleField,
    PerturbativeSmallDelta,
    PerturbativeLongTime,
    None,
}

impl ControlKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlKind::ExactCd => "exact",
            ControlKind::SeparatedMatrix => "separated-matrix",
            ControlKind::SeparatedSingleField => "separated-field",
            ControlKind::PerturbativeSmallDelta => "perturbative-small-delta",
            ControlKind::PerturbativeLongTime => "perturbative-long-time",
            ControlKind::None => "none",
        }
    }
}

impl fmt::Display for ControlKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControlKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim() {
            "exact" => ControlKind::ExactCd,
            "separated-matrix" => ControlKind::SeparatedMatrix,
            "separated-field" => ControlKind::SeparatedSingleField,
            "perturbative-small-delta" => ControlKind::PerturbativeSmallDelta,
            "perturbative-long-time" => ControlKind::PerturbativeLongTime,
            "none" => ControlKind::None,
            other => {
                return Err(format!(
                    "unknown control `{other}` (expected exact, separated-matrix, separated-field or none)"
                ))
            }
        })
    }
}

/// A control Hamiltonian as a function of time for a fixed model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlField {
    kind: ControlKind,
    model: Model,
}

impl ControlField {
    pub fn new(kind: ControlKind, model: Model) -> Result<Self> {
        let three_level_only = matches!(
            kind,
            ControlKind::SeparatedMatrix
                | ControlKind::SeparatedSingleField
                | ControlKind::PerturbativeSmallDelta
                | ControlKind::PerturbativeLongTime
        );
        if three_level_only && !matches!(model, Model::ThreeLevel(_)) {
            return Err(Error::WrongRegime(format!("control `{kind}` needs the three-level model")));
        }
        Ok(ControlField { kind, model })
    }

    pub fn none(model: Model) -> Self {
        ControlField { kind: ControlKind::None, model }
    }

    pub fn kind(&self) -> ControlKind {
        self.kind
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn evaluate(&self, tau: f64) -> Result<CMatrix> {
        let three = |f: &dyn Fn(&ThreeLevelModel) -> Result<CMatrix>| match &self.model {
            Model::ThreeLevel(m) => f(m),
            Model::TwoLevel(_) => unreachable!("checked in ControlField::new"),
        };
        match self.kind {
            ControlKind::ExactCd => cd_exact(&self.model, tau),
            ControlKind::None => Ok(CMatrix::zeros(self.model.dim())),
            ControlKind::SeparatedMatrix => three(&|m| Ok(separated_matrix(m, tau))),
            ControlKind::SeparatedSingleField => three(&|m| Ok(separated_single_field(m, tau))),
            ControlKind::PerturbativeSmallDelta => three(&|m| perturbative_small_delta(m, tau)),
            ControlKind::PerturbativeLongTime => three(&|m| perturbative_long_time(m, tau)),
        }
    }
}

/// `H0 + H1`: the Hamiltonian actually applied to the system.
#[derive(Clone, Copy, Debug)]
pub struct Driven {
    pub control: ControlField,
}

impl Hamiltonian for Driven {
    fn dim(&self) -> usize {
        self.control.model().dim()
    }

    fn at(&self, tau: f64) -> Result<CMatrix> {
        let h0 = self.control.model().h0(tau);
        match self.control.kind() {
            ControlKind::None => Ok(h0),
            _ => Ok(h0 + self.control.evaluate(tau)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn three(eps: f64) -> ThreeLevelModel {
        ThreeLevelModel::symmetric(eps, 1.0, 0.5).unwrap()
    }

    #[test]
    fn two_level_at_origin() {
        let m = TwoLevelModel::new(1.0, 0.5).unwrap();
        assert_eq!(lz_angle_rate(&m, 0.0), -2.0);
        let (_, sy, _) = pauli_operators();
        let exact = cd_exact(&m.into(), 0.0).unwrap();
        assert!(exact.max_abs_diff(&(-sy)) < 1e-14);
        assert!(cd_two_level_analytic(&m, 0.0).max_abs_diff(&(-sy)) < 1e-15);
    }

    #[test]
    fn two_level_oracle_random_tau() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let m = TwoLevelModel::new(rng.gen_range(0.2..3.0), rng.gen_range(0.1..2.0)).unwrap();
            let tau = rng.gen_range(-50.0..50.0);
            let diff = cd_exact(&m.into(), tau).unwrap().max_abs_diff(&cd_two_level_analytic(&m, tau));
            assert!(diff < 1e-10, "diff {diff}");
        }
    }

    #[test]
    fn lz_pulse_decays_as_inverse_square() {
        let m = TwoLevelModel::new(1.0, 0.5).unwrap();
        let ratio = lz_angle_rate(&m, 1e4) / lz_angle_rate(&m, 2e4);
        assert!((ratio - 4.0).abs() < 1e-6);
        assert!(cd_two_level_analytic(&m, 1e12).max_abs() < 1e-23);
    }

    #[test]
    fn pulse_area_is_pi() {
        let m = TwoLevelModel::new(1.0, 0.5).unwrap();
        assert!((pi_pulse_integral(&m) - std::f64::consts::PI).abs() < 1e-12);
        let zero = TwoLevelModel::new(1.0, 0.0).unwrap();
        assert!((pi_pulse_integral(&zero) - std::f64::consts::PI).abs() < 1e-12);
        // composite Simpson over [-1e4, 1e4] against the finite-window closed form
        let t_max = 1e4;
        let n = 2_000_000;
        let h = 2.0 * t_max / n as f64;
        let mut sum = lz_angle_rate(&m, -t_max) + lz_angle_rate(&m, t_max);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * lz_angle_rate(&m, -t_max + k as f64 * h);
        }
        let quad = (sum * h / 3.0).abs();
        assert!((quad - pulse_area(&m, t_max)).abs() < 1e-9);
        let deficit = std::f64::consts::PI - quad;
        assert!((deficit - 2.0 * 0.5 / t_max).abs() < 1e-9, "deficit {deficit}");
    }

    #[test]
    fn eps0_matches_exact() {
        let m = three(0.0);
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let tau = rng.gen_range(-50.0..50.0);
            let a = cd_eps0_analytic(&m, tau).unwrap();
            assert_eq!(a[(0, 2)], C64::new(0.0, 0.0));
            let diff = cd_exact(&m.into(), tau).unwrap().max_abs_diff(&a);
            assert!(diff < 1e-10, "tau {tau}: {diff}");
        }
        assert!(matches!(cd_eps0_analytic(&three(1.0), 0.0), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn eps0_peak() {
        let m = three(0.0);
        assert_eq!(phi_rate(&m, 0.0), -2.0);
        let (_, sy, _) = spin1_operators();
        assert!(cd_eps0_analytic(&m, 0.0).unwrap().max_abs_diff(&(sy * -2.0)) < 1e-15);
    }

    #[test]
    fn origin_snapshot_matches_exact() {
        for eps in [1.0, 2.0, 5.0, 15.0] {
            let m = three(eps);
            let snap = cd_origin_snapshot(&m).unwrap();
            let diff = cd_exact(&m.into(), 0.0).unwrap().max_abs_diff(&snap);
            assert!(diff < 1e-9, "eps {eps}: {diff}");
            assert!((snap[(0, 2)].norm() - eps / 0.25).abs() < 1e-12);
        }
        let at_zero = cd_origin_snapshot(&three(0.0)).unwrap();
        assert!(at_zero.max_abs_diff(&cd_eps0_analytic(&three(0.0), 0.0).unwrap()) < 1e-15);
    }

    #[test]
    fn exact_is_hermitian_and_off_diagonal_in_adiabatic_basis() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..2000 {
            let m = ThreeLevelModel::asymmetric(
                rng.gen_range(0.0..20.0),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.1..1.5),
                rng.gen_range(-0.1..0.5),
                rng.gen_range(-0.3..0.3),
            )
            .unwrap();
            let tau = rng.gen_range(-40.0..40.0);
            let frame = hermitian_eigen(&m.h0(tau), tau).unwrap();
            let h1 = counterdiabatic_from_frame(&frame, &m.dh0_dtau(tau)).unwrap();
            assert!(h1.hermitian_defect() < 1e-12 * h1.max_abs().max(1.0));
            let u = frame.eigenvector_matrix();
            let rotated = u.adjoint() * h1 * u;
            for k in 0..3 {
                assert!(rotated[(k, k)].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_is_gauge_invariant() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..500 {
            let m = three(rng.gen_range(0.0..15.0));
            let tau = rng.gen_range(-30.0..30.0);
            let frame = hermitian_eigen(&m.h0(tau), tau).unwrap();
            let dh = m.dh0_dtau(tau);
            let reference = counterdiabatic_from_frame(&frame, &dh).unwrap();
            let rephased: Vec<_> = frame
                .eigenvectors()
                .iter()
                .map(|v| v.scale(C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))))
                .collect();
            let other = EigenFrame::from_parts(tau, frame.eigenvalues(), &rephased);
            let h1 = counterdiabatic_from_frame(&other, &dh).unwrap();
            assert!(h1.max_abs_diff(&reference) < 1e-12);
        }
    }

    #[test]
    fn degenerate_spectrum_is_rejected() {
        let m = ThreeLevelModel::symmetric(2.0, 1.0, 0.0).unwrap();
        // diabatic levels 1 and 2 cross at tau = -2 without coupling
        let err = cd_exact(&m.into(), -2.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
    }

    #[test]
    fn separated_values() {
        let m = ThreeLevelModel::symmetric(7.0, 1.0, 0.5).unwrap();
        let (l, r) = separated_angle_rates(&m, 0.0);
        assert!((l + SQRT_2 * 0.5 / 49.5).abs() < 1e-15);
        assert!((l + 0.014285).abs() < 1e-6);
        assert_eq!(l, r);
        let field = separated_single_field(&m, 0.0);
        let profile = l + r;
        assert!((profile + 0.028570).abs() < 1e-6);
        for tau in [-10.0, -7.0, -1.0, 0.0, 3.0, 7.0] {
            let s = separated_matrix(&m, tau);
            assert_eq!(s[(0, 2)], C64::new(0.0, 0.0));
            assert_eq!(s[(2, 0)], C64::new(0.0, 0.0));
            assert!(s.is_hermitian());
            assert!(separated_single_field(&m, tau).is_hermitian());
            let (a, b) = separated_angle_rates(&m, tau);
            let (c, d) = separated_angle_rates(&m, -tau);
            assert!((a + b - c - d).abs() < 1e-15);
        }
        assert!(field[(0, 2)].norm() == 0.0);
    }

    #[test]
    fn separated_single_field_at_left_crossing() {
        let (eps, a, d) = (7.0, 1.0, 0.5);
        let m = ThreeLevelModel::symmetric(eps, a, d).unwrap();
        let (l, r) = separated_angle_rates(&m, -eps / a);
        let want = -SQRT_2 * a * d / (2.0 * d * d) - SQRT_2 * a * d / (4.0 * eps * eps + 2.0 * d * d);
        assert!((l + r - want).abs() < 1e-14);
    }

    #[test]
    fn separated_blocks_are_exact_two_level_corrections() {
        // each block of the separated matrix equals the exact correction of the
        // corresponding 2x2 block of H0, computed numerically
        let m = ThreeLevelModel::asymmetric(4.0, 1.2, 0.6, 0.2, 0.1).unwrap();
        for tau in [-8.0, -3.3, 0.0, 1.7, 5.0] {
            let h = m.h0(tau);
            let dh = m.dh0_dtau(tau);
            let sep = separated_matrix(&m, tau);
            for (p, q) in [(0usize, 1usize), (1, 2)] {
                let block = CMatrix::from_rows(&[&[h[(p, p)], h[(p, q)]], &[h[(q, p)], h[(q, q)]]]);
                let dblock = CMatrix::from_rows(&[&[dh[(p, p)], dh[(p, q)]], &[dh[(q, p)], dh[(q, q)]]]);
                let frame = hermitian_eigen(&block, tau).unwrap();
                let cd = counterdiabatic_from_frame(&frame, &dblock).unwrap();
                assert!((cd[(0, 1)] - sep[(p, q)]).norm() < 1e-12, "tau {tau} block {p}{q}");
            }
        }
    }

    #[test]
    fn separated_approaches_lz_near_crossing() {
        // the (1,2) block is exactly the two-level pulse with coupling sqrt2 delta
        // centred on tau = -eps/alpha; the exact correction approaches it as O(1/eps)
        let d = 0.5;
        let two = TwoLevelModel::new(1.0, SQRT_2 * d).unwrap();
        let mut last = f64::INFINITY;
        for eps in [10.0, 20.0, 40.0, 80.0] {
            let m = ThreeLevelModel::symmetric(eps, 1.0, d).unwrap();
            let offset = 0.3;
            let lz = cd_two_level_analytic(&two, offset)[(0, 1)];
            let s = separated_matrix(&m, -eps + offset)[(0, 1)];
            assert!((s - lz).norm() < 1e-14);
            let e = cd_exact(&m.into(), -eps + offset).unwrap()[(0, 1)];
            let diff = (e - lz).norm();
            assert!(diff * eps < 1.0, "eps {eps}: {diff}");
            assert!(diff < last);
            last = diff;
        }
    }

    #[test]
    fn small_delta_profiles() {
        let m = ThreeLevelModel::symmetric(5.0, 1.0, 0.05).unwrap();
        let tau = 15.0;
        let p = perturbative_small_delta(&m, tau).unwrap();
        let e = cd_exact(&m.into(), tau).unwrap();
        for (i, j, tol) in [(0, 1, 0.05), (1, 2, 0.05), (0, 2, 0.15)] {
            let rel = ((p[(i, j)] - e[(i, j)]) / e[(i, j)]).norm();
            assert!(rel < tol, "({i},{j}) rel {rel}");
        }
        assert!(matches!(perturbative_small_delta(&m, 0.0), Err(Error::SingularPoint { .. })));
        assert!(matches!(perturbative_small_delta(&m, 5.0), Err(Error::SingularPoint { .. })));
        assert!(matches!(perturbative_small_delta(&m, -5.0), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn small_delta_scaling() {
        let m1 = ThreeLevelModel::symmetric(5.0, 1.0, 0.05).unwrap();
        let m2 = ThreeLevelModel::symmetric(5.0, 1.0, 0.1).unwrap();
        let a = perturbative_small_delta(&m1, 12.0).unwrap();
        let b = perturbative_small_delta(&m2, 12.0).unwrap();
        assert!(((b[(0, 1)] / a[(0, 1)]).re - 2.0).abs() < 1e-12);
        assert!(((b[(1, 2)] / a[(1, 2)]).re - 2.0).abs() < 1e-12);
        assert!(((b[(0, 2)] / a[(0, 2)]).re - 4.0).abs() < 1e-12);
        let flat = ThreeLevelModel::symmetric(1e-9, 1.0, 0.05).unwrap();
        assert!(perturbative_small_delta(&flat, 3.0).unwrap()[(0, 2)].norm() < 1e-12);
    }

    #[test]
    fn long_time_symmetric_structure() {
        let m = three(15.0);
        let (c3, c4) = long_time_indirect_coefficients(&m);
        assert_eq!(c3, 0.0);
        let (_, c2) = crossover_coefficients(&m);
        assert!((c4 + c2).abs() < 1e-15);
        let p = perturbative_long_time(&m, 500.0).unwrap();
        // (1,2) and (2,3) share a sign, (1,3) has the opposite one
        assert!(p[(0, 1)].im > 0.0 && p[(1, 2)].im > 0.0 && p[(0, 2)].im < 0.0);
        let e = cd_exact(&m.into(), 500.0).unwrap();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let rel = ((p[(i, j)] - e[(i, j)]) / e[(i, j)]).norm();
            assert!(rel < 0.2, "({i},{j}) rel {rel}");
        }
    }

    #[test]
    fn long_time_asymmetric_matches_exact() {
        let m = ThreeLevelModel::asymmetric(5.0, 1.0, 0.5, 0.0, 0.2).unwrap();
        for tau in [2e3, 5e3, 2e4] {
            let p = perturbative_long_time(&m, tau).unwrap();
            let e = cd_exact(&m.into(), tau).unwrap();
            let rel = ((p[(0, 2)] - e[(0, 2)]) / e[(0, 2)]).norm();
            assert!(rel < 0.02, "tau {tau}: rel {rel}");
        }
        let coupled = ThreeLevelModel::asymmetric(5.0, 1.0, 0.5, 0.25, 0.2).unwrap();
        let p = perturbative_long_time(&coupled, 1e4).unwrap();
        let e = cd_exact(&coupled.into(), 1e4).unwrap();
        assert!(((p[(0, 2)] - e[(0, 2)]) / e[(0, 2)]).norm() < 0.02);
    }

    #[test]
    fn small_asymmetry_coefficients() {
        let da = 1e-4;
        let m = ThreeLevelModel::asymmetric(5.0, 1.0, 0.5, 0.0, da).unwrap();
        let (c3, c4) = long_time_indirect_coefficients(&m);
        let (c1, c2) = crossover_coefficients(&m);
        assert!((c3 - c1 * da).abs() < 1e-3 * c1 * da);
        assert!((c4 + c2).abs() < 1e-3 * c2);
        let sym = ThreeLevelModel::asymmetric(5.0, 1.0, 0.5, 0.0, 1e-3).unwrap();
        assert!((crossover_time(&sym) - 25_000.0).abs() < 1e-6);
    }

    #[test]
    fn control_kind_parsing() {
        for k in [
            ControlKind::ExactCd,
            ControlKind::SeparatedMatrix,
            ControlKind::SeparatedSingleField,
            ControlKind::None,
        ] {
            assert_eq!(k.as_str().parse::<ControlKind>().unwrap(), k);
        }
        assert!("bogus".parse::<ControlKind>().is_err());
        let two: Model = TwoLevelModel::new(1.0, 0.5).unwrap().into();
        assert!(ControlField::new(ControlKind::SeparatedMatrix, two).is_err());
        assert!(ControlField::new(ControlKind::ExactCd, two).is_ok());
    }

    #[test]
    fn every_field_is_hermitian() {
        let mut rng = StdRng::seed_from_u64(21);
        let kinds = [
            ControlKind::ExactCd,
            ControlKind::SeparatedMatrix,
            ControlKind::SeparatedSingleField,
            ControlKind::PerturbativeSmallDelta,
            ControlKind::PerturbativeLongTime,
            ControlKind::None,
        ];
        for n in 0..10_000 {
            let model = ThreeLevelModel::symmetric(rng.gen_range(0.5..20.0), rng.gen_range(0.2..2.0), rng.gen_range(0.1..1.0))
                .unwrap();
            let tau = rng.gen_range(-60.0..60.0);
            let field = ControlField::new(kinds[n % kinds.len()], model.into()).unwrap();
            let h = field.evaluate(tau).unwrap();
            assert!(h.hermitian_defect() <= 1e-12 * h.max_abs().max(1.0));
        }
    }
}
