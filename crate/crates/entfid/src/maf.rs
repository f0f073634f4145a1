//! Maximal achievable fidelity f* = ½ − min Tr(X ρ^Γ) over filters with
//! 0 ≤ X ≤ I and −½I ≤ X^Γ ≤ ½I, solved by alternating-direction splitting
//! with spectral-box projections, plus the two known closed forms.

use std::f64::consts::SQRT_2;

use crate::linalg::{partial_transpose, spectral_clip, ComplexMatrix, Subsystem};
use crate::states::DensityMatrix;
use crate::{Error, Result};

/// Feasibility slack accepted by [`extract_protocol_fidelity`].
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Solver knobs; the defaults converge on every state family in this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Combined primal/dual residual at which iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step parameter of the splitting scheme.
    pub penalty: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 50_000,
            penalty: 1.0,
        }
    }
}

/// Converged (or best-effort) output of [`maf_sdp`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Achievable fidelity ½ − Tr(X ρ^Γ) at the returned filter.
    pub f_star: f64,
    /// Optimal filter variable: 4×4 Hermitian, 0 ≤ X ≤ I, −½I ≤ X^Γ ≤ ½I.
    pub filter: ComplexMatrix,
    pub iterations: usize,
    /// Final combined residual max(‖X^Γ − Y‖_F, t·‖ΔY‖_F).
    pub residual: f64,
}

fn check_config(cfg: &SolverConfig) -> Result<()> {
    if !(cfg.tolerance > 0.0) {
        return Err(Error::OutOfRange {
            name: "tolerance",
            value: cfg.tolerance,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    if !(cfg.penalty > 0.0) {
        return Err(Error::OutOfRange {
            name: "penalty",
            value: cfg.penalty,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    if cfg.max_iterations == 0 {
        return Err(Error::OutOfRange {
            name: "max_iterations",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Minimize Tr(X ρ^Γ) by splitting on Y = X^Γ: project X onto the [0, 1]
/// spectral box after a gradient step, project Y onto the [−½, ½] box, and
/// update the scaled dual until both residuals drop below tolerance.
/// Partial transposition preserves the Frobenius norm, so the X-step is an
/// exact box projection too. Deterministic: no randomness, fixed zero start.
pub fn maf_sdp(rho: &DensityMatrix, cfg: SolverConfig) -> Result<SdpSolution> {
    check_config(&cfg)?;
    let cost = partial_transpose(rho.matrix(), Subsystem::B);
    let step = cost.scale(1.0 / cfg.penalty);
    let mut x = ComplexMatrix::zeros(4, 4);
    let mut y = ComplexMatrix::zeros(4, 4);
    let mut dual = ComplexMatrix::zeros(4, 4);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let target = partial_transpose(&y.sub(&dual), Subsystem::B).sub(&step);
        x = spectral_clip(&target, 0.0, 1.0).expect("iterates stay Hermitian");
        let x_pt = partial_transpose(&x, Subsystem::B);
        let y_prev = y;
        y = spectral_clip(&x_pt.add(&dual), -0.5, 0.5).expect("iterates stay Hermitian");
        dual = dual.add(&x_pt).sub(&y);
        let primal = x_pt.sub(&y).frobenius_norm();
        let dual_res = cfg.penalty * y.sub(&y_prev).frobenius_norm();
        residual = primal.max(dual_res);
        if residual < cfg.tolerance {
            converged = true;
            break;
        }
    }
    let solution = SdpSolution {
        f_star: 0.5 - cost.inner_re(&x),
        filter: x,
        iterations,
        residual,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::NotConverged {
            solution: Box::new(solution),
        })
    }
}

/// Re-evaluate ½ − Tr(X ρ^Γ) for a candidate filter, first checking that X
/// sits in both spectral boxes within [`FEASIBILITY_TOL`].
pub fn extract_protocol_fidelity(rho: &DensityMatrix, filter: &ComplexMatrix) -> Result<f64> {
    if (filter.rows(), filter.cols()) != (4, 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: filter.rows().max(filter.cols()),
        });
    }
    let spec = crate::linalg::hermitian_eigensystem(filter)?;
    let mut violation: f64 = 0.0;
    violation = violation.max(-spec.min_eigenvalue());
    violation = violation.max(spec.max_eigenvalue() - 1.0);
    let pt_spec = crate::linalg::hermitian_eigensystem(&partial_transpose(filter, Subsystem::B))?;
    for &lambda in &pt_spec.eigenvalues {
        violation = violation.max(lambda.abs() - 0.5);
    }
    if violation > FEASIBILITY_TOL {
        return Err(Error::Infeasible { violation });
    }
    let cost = partial_transpose(rho.matrix(), Subsystem::B);
    Ok(0.5 - cost.inner_re(filter))
}

/// Achievable fidelity of the Bell/product mixture with weight F:
/// ½[1 + F²/(4(1−F))] below F = 2/3 and F itself above; both branches
/// meet at 2/3.
pub fn maf_closed_x_state(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange {
            name: "F",
            value: f,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if f >= 2.0 / 3.0 {
        Ok(f)
    } else {
        Ok(0.5 * (1.0 + f * f / (4.0 * (1.0 - f))))
    }
}

/// Fully entangled fraction of the damped family, shared by the middle
/// branch of the achievable fidelity.
fn damped_family_fef(p: f64) -> f64 {
    1.0 - SQRT_2 / 2.0 + p * (SQRT_2 - 1.25) + (1.0 - p).sqrt() / 2.0 * (SQRT_2 - 1.0)
}

/// Upper end of the middle branch: (√2+1)(√(7+2√2) − √2 − 1)/2 ≈ 0.870105.
fn damped_branch2_end() -> f64 {
    (SQRT_2 + 1.0) * ((7.0 + 2.0 * SQRT_2).sqrt() - SQRT_2 - 1.0) / 2.0
}

/// Achievable fidelity of the damped family: linear for p ≤ ¾, equal to the
/// fully entangled fraction on the middle interval, and
/// (1 + (3−2√2)p + 2(√2−1)p²)/(4p) beyond ≈ 0.870105.
pub fn maf_closed_damped(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let value = if p <= 0.75 {
        (-1.5 + SQRT_2) / 2.0 * p + (SQRT_2 + 3.0) / 8.0
    } else if p <= damped_branch2_end() {
        damped_family_fef(p)
    } else {
        (1.0 + (3.0 - 2.0 * SQRT_2) * p + 2.0 * (SQRT_2 - 1.0) * p * p) / (4.0 * p)
    };
    Ok(value)
}
