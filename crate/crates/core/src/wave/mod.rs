//! Nonlinear waves on the flattened domain: discretization, the map
//! `(eta, phi) -> M(lambda, eta, phi)`, Newton correction and branch
//! continuation from bifurcation points.

pub mod continuation;
pub mod elliptic;
pub mod grid;
pub mod newton;
pub mod physical;
pub mod profile;
pub mod residual;

pub use continuation::{continue_branch, Branch, BranchOptions, BranchPoint, Termination};
pub use grid::Discretization;
pub use newton::{newton_correct, Constraint, NewtonOptions, NewtonOutcome};
pub use physical::{diagnostics, reconstruct_physical, Diagnostics, PhysicalFields};
pub use residual::{WaveConfig, WaveProblem, WaveState};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fluid domain collapsed: min(d + eta) = {0:.6e}")]
    DomainCollapse(f64),
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("laminar profile: {0}")]
    Profile(String),
    #[error("bifurcation point rejected: {0}")]
    UncertifiedPoint(String),
    #[error("dispersion: {0}")]
    Dispersion(String),
}
