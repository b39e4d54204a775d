//! Hamiltonian families: the two-level Landau-Zener sweep and the symmetric
//! and asymmetric three-level ladders.
//!
//! Everything is dimensionless with `hbar = 1`; see [`DimensionlessUnits`].
//!
//! Eigenvalue labels are ascending everywhere in this crate. In the
//! three-level ladder that means index 0 is the ground state, index 1 the
//! level that sits between the other two at `tau = 0` (energy `epsilon`
//! there), and index 2 the top level.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smallmat::{pauli_operators, CMatrix};

/// Anything that supplies a Hermitian matrix at each time.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;
    fn at(&self, tau: f64) -> Result<CMatrix>;
}

/// Time dependence of the two-level detuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepProfile {
    /// `omega(tau) = alpha * tau`, constant coupling.
    LinearLz,
}

/// `H = omega(tau)/2 sigma_z + delta/2 sigma_x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelModel {
    pub alpha: f64,
    pub delta: f64,
    pub profile: SweepProfile,
}

impl TwoLevelModel {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        let m = TwoLevelModel { alpha, delta, profile: SweepProfile::LinearLz };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, value) in [("alpha", self.alpha), ("delta", self.delta)] {
            if !value.is_finite() {
                return Err(Error::InvalidModel(format!("`{key}` must be finite, got {value}")));
            }
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidModel(format!("`delta` must be >= 0, got {}", self.delta)));
        }
        if self.alpha == 0.0 {
            return Err(Error::InvalidModel("`alpha` must be nonzero for a linear sweep".into()));
        }
        Ok(())
    }

    pub fn omega(&self, tau: f64) -> f64 {
        match self.profile {
            SweepProfile::LinearLz => self.alpha * tau,
        }
    }

    pub fn h0(&self, tau: f64) -> CMatrix {
        let (sx, _, sz) = pauli_operators();
        sz * (0.5 * self.omega(tau)) + sx * (0.5 * self.delta)
    }

    pub fn dh0_dtau(&self, _tau: f64) -> CMatrix {
        let (_, _, sz) = pauli_operators();
        sz * (0.5 * self.alpha)
    }
}

/// Three diabatic levels with slopes `alpha`, `0`, `beta`, the outer two
/// offset by `epsilon`, coupled in a chain:
///
/// ```text
/// | eps + alpha tau    delta/sqrt2              0                  |
/// | delta/sqrt2        0                        (delta+dDelta)/sqrt2 |
/// | 0                  (delta+dDelta)/sqrt2     eps + beta tau     |
/// ```
///
/// The symmetric ladder has `beta = -alpha` and `delta_delta = 0`; there
/// `H = eps Sz^2 + alpha tau Sz + delta Sx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeLevelModel {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub delta_delta: f64,
}

impl ThreeLevelModel {
    pub fn symmetric(epsilon: f64, alpha: f64, delta: f64) -> Result<Self> {
        Self::asymmetric(epsilon, alpha, delta, 0.0, 0.0)
    }

    /// `beta = -(alpha + delta_alpha)`, so `delta_alpha = 0` is the symmetric slope.
    pub fn asymmetric(
        epsilon: f64,
        alpha: f64,
        delta: f64,
        delta_delta: f64,
        delta_alpha: f64,
    ) -> Result<Self> {
        let m = ThreeLevelModel { epsilon, alpha, beta: -(alpha + delta_alpha), delta, delta_delta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("epsilon", self.epsilon),
            ("alpha", self.alpha),
            ("delta_alpha", self.beta),
            ("delta", self.delta),
            ("delta_delta", self.delta_delta),
        ];
        for (key, value) in all {
            if !value.is_finite() {
                return Err(Error::InvalidModel(format!("`{key}` must be finite, got {value}")));
            }
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidModel(format!("`delta` must be >= 0, got {}", self.delta)));
        }
        if self.alpha == 0.0 {
            return Err(Error::InvalidModel("`alpha` must be nonzero".into()));
        }
        Ok(())
    }

    pub fn delta_alpha(&self) -> f64 {
        -(self.beta + self.alpha)
    }

    pub fn is_symmetric(&self) -> bool {
        self.beta == -self.alpha && self.delta_delta == 0.0
    }

    /// Sweep `omega(tau) = alpha * tau` of the symmetric ladder.
    pub fn omega(&self, tau: f64) -> f64 {
        self.alpha * tau
    }

    /// Coupling amplitudes `(H_12, H_23)`.
    pub fn couplings(&self) -> (f64, f64) {
        (self.delta * FRAC_1_SQRT_2, (self.delta + self.delta_delta) * FRAC_1_SQRT_2)
    }

    pub fn h0(&self, tau: f64) -> CMatrix {
        let (c12, c23) = self.couplings();
        CMatrix::from_real_rows(&[
            &[self.epsilon + self.alpha * tau, c12, 0.0],
            &[c12, 0.0, c23],
            &[0.0, c23, self.epsilon + self.beta * tau],
        ])
    }

    pub fn dh0_dtau(&self, _tau: f64) -> CMatrix {
        CMatrix::diag(&[self.alpha, 0.0, self.beta])
    }
}

/// Either model family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Model {
    TwoLevel(TwoLevelModel),
    ThreeLevel(ThreeLevelModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::TwoLevel(_) => 2,
            Model::ThreeLevel(_) => 3,
        }
    }

    pub fn h0(&self, tau: f64) -> CMatrix {
        match self {
            Model::TwoLevel(m) => m.h0(tau),
            Model::ThreeLevel(m) => m.h0(tau),
        }
    }

    pub fn dh0_dtau(&self, tau: f64) -> CMatrix {
        match self {
            Model::TwoLevel(m) => m.dh0_dtau(tau),
            Model::ThreeLevel(m) => m.dh0_dtau(tau),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Model::TwoLevel(m) => m.alpha,
            Model::ThreeLevel(m) => m.alpha,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Model::TwoLevel(m) => m.delta,
            Model::ThreeLevel(m) => m.delta,
        }
    }

    /// Zero for the two-level model.
    pub fn epsilon(&self) -> f64 {
        match self {
            Model::TwoLevel(_) => 0.0,
            Model::ThreeLevel(m) => m.epsilon,
        }
    }

    /// Flat key-value form: `model`, `epsilon`, `alpha`, `delta`, `delta_delta`, `delta_alpha`.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        match self {
            Model::TwoLevel(m) => {
                kv.insert("model".into(), "two-level".into());
                kv.insert("alpha".into(), m.alpha.to_string());
                kv.insert("delta".into(), m.delta.to_string());
            }
            Model::ThreeLevel(m) => {
                kv.insert("model".into(), "three-level".into());
                kv.insert("epsilon".into(), m.epsilon.to_string());
                kv.insert("alpha".into(), m.alpha.to_string());
                kv.insert("delta".into(), m.delta.to_string());
                kv.insert("delta_delta".into(), m.delta_delta.to_string());
                kv.insert("delta_alpha".into(), (m.delta_alpha() + 0.0).to_string());
            }
        }
        kv
    }

    /// Inverse of [`Model::to_kv`]. Missing asymmetry keys default to zero;
    /// `model` defaults to `three-level`.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| -> Result<Option<f64>> {
            match kv.get(key) {
                None => Ok(None),
                Some(raw) => raw
                    .trim()
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::InvalidModel(format!("key `{key}`: cannot parse `{raw}` as a number"))),
            }
        };
        let require = |key: &str| -> Result<f64> {
            get(key)?.ok_or_else(|| Error::InvalidModel(format!("missing key `{key}`")))
        };
        match kv.get("model").map(|s| s.trim()).unwrap_or("three-level") {
            "two-level" => Ok(Model::TwoLevel(TwoLevelModel::new(require("alpha")?, require("delta")?)?)),
            "three-level" => Ok(Model::ThreeLevel(ThreeLevelModel::asymmetric(
                require("epsilon")?,
                require("alpha")?,
                require("delta")?,
                get("delta_delta")?.unwrap_or(0.0),
                get("delta_alpha")?.unwrap_or(0.0),
            )?)),
            other => Err(Error::InvalidModel(format!("key `model`: unknown model `{other}`"))),
        }
    }
}

impl Hamiltonian for Model {
    fn dim(&self) -> usize {
        Model::dim(self)
    }

    fn at(&self, tau: f64) -> Result<CMatrix> {
        Ok(self.h0(tau))
    }
}

impl From<TwoLevelModel> for Model {
    fn from(m: TwoLevelModel) -> Self {
        Model::TwoLevel(m)
    }
}

impl From<ThreeLevelModel> for Model {
    fn from(m: ThreeLevelModel) -> Self {
        Model::ThreeLevel(m)
    }
}

/// Asymptotic Landau-Zener tunneling probability `exp(-pi delta^2 / (2 |alpha|))`.
pub fn lz_asymptotic_probability(model: &TwoLevelModel) -> f64 {
    if model.delta == 0.0 {
        return 1.0;
    }
    (-PI * model.delta * model.delta / (2.0 * model.alpha.abs())).exp()
}

/// Minimum splitting of the two upper levels of the symmetric ladder,
/// reached at `tau = 0`: `(eps/2)(sqrt(4 delta^2/eps^2 + 1) - 1)`.
///
/// For `delta << eps` this is `delta^2 / eps`.
pub fn effective_gap(model: &ThreeLevelModel) -> Result<f64> {
    let eps = model.epsilon;
    if eps == 0.0 {
        return Err(Error::DegenerateSeparation);
    }
    let ratio = 2.0 * model.delta / eps;
    let x2 = ratio * ratio;
    // (sqrt(1 + x^2) - 1) without cancellation
    Ok(0.5 * eps * x2 / ((1.0 + x2).sqrt() + 1.0))
}

/// Unit conventions for the dimensionless models.
///
/// Energies are measured in a characteristic energy `E_c` and times in
/// `hbar / E_c`, so `tau = E_c t / hbar`. Nothing in the crate converts
/// units; this type only records the choice alongside results.
///
/// For a spin-1 system `H = hbar D Sz^2 + g muB (Bx Sx + Bz(t) Sz)` with
/// `Bz(t) = Bz_rate * t`, choosing `E_c = g muB Bx` gives the symmetric
/// ladder with
///
/// ```text
/// epsilon = hbar D / (g muB Bx)
/// alpha   = hbar Bz_rate / (g muB Bx^2)
/// delta   = 1
/// tau     = g muB Bx t / hbar
/// ```
///
/// and the single-field separated control corresponds to an extra
/// `By(t) = Bx * dtheta_sep/dtau / sqrt(2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessUnits {
    /// Characteristic energy in whatever physical unit the caller uses.
    pub characteristic_energy: f64,
}
