//! Counterdiabatic control of swept two- and three-level systems.
//!
//! The crate builds the exact counterdiabatic field `H1(tau)` that keeps every
//! instantaneous eigenstate of `H0(tau)` populated, along with its closed
//! forms, separated-crossing approximations and perturbative profiles. It
//! propagates the Schrödinger equation under any of them with a
//! fourth-order Magnus integrator and measures the resulting
//! non-adiabaticity.
//!
//! Modules, from the bottom up:
//!
//! - [`smallmat`]: 2x2 and 3x3 complex matrices, the Jacobi eigensolver, spin operators.
//! - [`models`]: the Landau-Zener sweep and the three-level ladder.
//! - [`control`]: exact and approximate control fields.
//! - [`propagate`]: time grids, the integrator, observables.
//! - [`experiments`]: scans, power-law fits, sweeps and their checks.
//! - [`cli`]: the command-line front end.
//!
//! ```
//! use superadiabatic::control::{ControlField, ControlKind};
//! use superadiabatic::models::TwoLevelModel;
//! use superadiabatic::propagate::{evolve, instantaneous_eigenstate, nonadiabaticity, EvolveOptions};
//!
//! let model = TwoLevelModel::new(1.0, 0.5)?;
//! let field = ControlField::new(ControlKind::ExactCd, model.into())?;
//! let psi0 = instantaneous_eigenstate(field.model(), -20.0, 0)?;
//! let traj = evolve(&field, &psi0, -20.0, 20.0, 0.005, EvolveOptions::default())?;
//! assert!(nonadiabaticity(&traj)?.max() < 1e-10);
//! # Ok::<(), superadiabatic::Error>(())
//! ```
//!
//! A guide with runnable examples lives in the `book/` directory.

pub mod cli;
pub mod control;
pub mod error;
pub mod experiments;
pub mod models;
pub mod propagate;
pub mod smallmat;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/eigenframes.md")]
    mod eigenframes {}
    #[doc = include_str!("../../../book/src/control.md")]
    mod control {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
