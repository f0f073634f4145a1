//! Entanglement measures for two-qubit states.
//!
//! The crate computes concurrence, singlet fraction, fully entangled
//! fraction and negativity for arbitrary two-qubit density matrices,
//! reproduces two analytic noise families (a controlled dephasing
//! evolution and an amplitude-damped Bell mixture), runs a two-outcome
//! local filtering protocol, and solves the semidefinite program for the
//! maximal singlet fidelity achievable under trace-preserving local
//! operations.
//!
//! Conventions used throughout: the computational basis is ordered
//! |00⟩, |01⟩, |10⟩, |11⟩ with subsystem A as the left tensor factor,
//! and σ_z|0⟩ = +|0⟩.

pub mod channels;
pub mod cli;
pub mod linalg;
pub mod maf;
pub mod measures;
pub mod states;
pub mod validate;

use thiserror::Error;

/// Crate-wide error type. The CLI maps these onto process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NonHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}x{expected}, got {found}x{found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a valid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("Bloch parameters do not describe a state (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotAState { min_eigenvalue: f64 },

    #[error("channel outcome has vanishing probability")]
    ZeroProbability,

    #[error("{name} = {value} lies outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "solver did not converge: residual {:.3e} after {} iterations",
        solution.residual,
        solution.iterations
    )]
    NotConverged { solution: Box<maf::SdpSolution> },

    #[error("filter matrix violates the feasible region by {violation:.3e}")]
    Infeasible { violation: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Render a double with 17 significant digits, enough to round-trip every
/// f64 exactly. All file output (CSV, JSON) goes through this. Negative
/// zero is folded into plain zero so output bytes stay stable across
/// algebraically equivalent ways of producing a zero.
pub(crate) fn fmt17(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Evenly spaced grid over [from, to] with exact endpoints.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1);
    if points == 1 {
        return vec![from];
    }
    let step = (to - from) / (points - 1) as f64;
    (0..points)
        .map(|i| if i == points - 1 { to } else { from + i as f64 * step })
        .collect()
}
