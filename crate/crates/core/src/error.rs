use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^H| = {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("degenerate spectrum at tau = {tau}: gap {gap:e} below tolerance {tolerance:e}")]
    DegenerateSpectrum { tau: f64, gap: f64, tolerance: f64 },

    #[error("crossing separation epsilon must be nonzero")]
    DegenerateSeparation,

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("perturbative expression is singular at tau = {tau}")]
    SingularPoint { tau: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step {step} too large: step * |H| = {product} exceeds 0.1 at tau = {tau}")]
    StepTooLarge { step: f64, product: f64, tau: f64 },

    #[error("norm drift {drift:e} at tau = {tau} exceeds 1e-10")]
    NormDrift { drift: f64, tau: f64 },

    #[error("initial state not normalized (|psi0| - 1 = {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("step-halving check failed: final-state difference {difference:e} exceeds {tolerance:e}")]
    StepHalvingMismatch { difference: f64, tolerance: f64 },

    #[error("invalid time window: {0}")]
    InvalidWindow(String),

    #[error("averaging window is empty")]
    EmptyWindow,

    #[error("power-law fit requires strictly positive data (offending point x = {x}, y = {y})")]
    NonPositiveData { x: f64, y: f64 },

    #[error("power-law fit needs at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::SingularPoint { .. }
                | Error::StepTooLarge { .. }
                | Error::NormDrift { .. }
                | Error::StepHalvingMismatch { .. }
                | Error::NonPositiveData { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
