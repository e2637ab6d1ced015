//! Steady-state entanglement between two non-degenerate cavity modes coupled
//! through a laser-driven V-type three-level atom with spontaneously generated
//! coherence (SGC).
//!
//! The crate implements two independent routes to the stationary cavity state:
//!
//! * the dressed-state analytic pipeline — dressed Bloch equations for the
//!   atom, adiabatic-elimination coefficients of the reduced two-mode master
//!   equation for both coupling configurations, second-moment dynamics with
//!   the parametric stability condition, and the Duan inseparability measure
//!   Υ (entangled ⇔ Υ < 0);
//! * a brute-force oracle — direct integration of the bare-basis master
//!   equation on a truncated three-level ⊗ two-mode Fock space, used to audit
//!   the secular approximation.
//!
//! All frequencies and rates are normalized to the spontaneous emission rate
//! γ₁ of the undriven transition.

pub mod atom;
pub mod coeffs;
pub mod config;
pub mod duan;
pub mod moments;
pub mod numerics;
pub mod oracle;
pub mod sweep;

pub use atom::{AtomSteadyState, DressedBasis, Eta0Convention, SystemParams};
pub use coeffs::ModeCoefficients;
pub use duan::EntanglementReport;
pub use moments::MomentState;
pub use numerics::ComplexMatrix;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("linear propagation diverged (|x| > 1e12 at t = {t:.3})")]
    Diverged { t: f64 },
    #[error("degenerate drive: Omega = 0 and Delta_L = 0 leave the mixing angle undefined")]
    DegenerateDrive,
    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),
    #[error("{0}")]
    Domain(String),
    #[error("pole at delta = {delta}: {context}")]
    Pole { delta: f64, context: String },
    #[error("coupling configuration mismatch: {0}")]
    Configuration(String),
    #[error("moment system unstable (stability margin = {margin:.6e})")]
    Unstable { margin: f64 },
    #[error("unphysical moments: {0}")]
    Physicality(String),
    #[error("vacuum-degenerate moments: {0}")]
    VacuumDegenerate(String),
    #[error("oracle did not converge: ||drho/dt||_F = {residual:.3e} at t = {t:.1}")]
    NonConvergence { residual: f64, t: f64 },
    #[error("Fock truncation overflow: top-level population {population:.3e} exceeds 1e-3")]
    TruncationOverflow { population: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
