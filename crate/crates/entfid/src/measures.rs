//! Entanglement and fidelity measures: concurrence, singlet fraction,
//! fully entangled fraction (closed form and brute force), negativity,
//! and an audit of the inequalities that tie them together.

use std::f64::consts::PI;

use crate::linalg::{
    c, cr, hermitian_eigensystem, kron, matrix_sqrt_psd, partial_transpose, pauli_y, svd3,
    ComplexMatrix, Subsystem, C64,
};
use crate::states::{bloch_decompose, DensityMatrix};

/// Slack used when auditing analytic inequalities between measures.
pub const BOUND_SLACK: f64 = 1e-9;
/// Nelder–Mead refinement budget after the brute-force angle scan.
const REFINE_ITERS: usize = 200;

/// Spin-flip concurrence: C = max(0, λ₁ − λ₂ − λ₃ − λ₄), the λᵢ being the
/// descending square roots of the eigenvalues of √ρ·ρ̃·√ρ with the
/// spin-flipped ρ̃ = (σ_y⊗σ_y)ρ*(σ_y⊗σ_y).
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let root = matrix_sqrt_psd(m).expect("density matrices are PSD");
    let yy = kron(&pauli_y(), &pauli_y());
    let tilde = yy.mul(&m.conj()).mul(&yy);
    let prod = root.mul(&tilde).mul(&root);
    let spec = hermitian_eigensystem(&prod).expect("√ρ·ρ̃·√ρ is Hermitian");
    // The product is PSD with exact zero eigenvalues for rank-deficient
    // states; the square root would amplify eigenvalue roundoff (~1e−16)
    // to ~1e−8, so anything below a relative floor is treated as zero.
    let floor = 1e-12 * spec.max_eigenvalue().max(0.0);
    let lam: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&x| if x <= floor { 0.0 } else { x.sqrt() })
        .collect();
    (lam[3] - lam[2] - lam[1] - lam[0]).max(0.0)
}

/// Overlap with the singlet: ⟨Ψ⁻|ρ|Ψ⁻⟩ = ½(ρ₁₁ + ρ₂₂) − Re ρ₁₂.
pub fn singlet_fraction(rho: &DensityMatrix) -> f64 {
    0.5 * (rho.at(1, 1).re + rho.at(2, 2).re) - rho.at(1, 2).re
}

/// Fully entangled fraction from the diagonalized correlation matrix:
/// with descending singular values σ of T, f = ¼(1 + σ₁ + σ₂ + σ₃) when
/// det T ≤ 0 and ¼(1 + σ₁ + σ₂ − σ₃) otherwise.
pub fn fef(rho: &DensityMatrix) -> f64 {
    let b = bloch_decompose(rho);
    let (sv, det_sign) = svd3(&b.t);
    if det_sign <= 0 {
        0.25 * (1.0 + sv[0] + sv[1] + sv[2])
    } else {
        0.25 * (1.0 + sv[0] + sv[1] - sv[2])
    }
}

/// General one-qubit unitary up to global phase, parameterized by three
/// angles: U = [[cos(θ/2), −e^{iψ}sin(θ/2)], [e^{iφ}sin(θ/2), e^{i(φ+ψ)}cos(θ/2)]].
pub fn one_qubit_unitary(theta: f64, phi: f64, psi: f64) -> ComplexMatrix {
    let (sin_h, cos_h) = (0.5 * theta).sin_cos();
    ComplexMatrix::from_rows([
        [cr(cos_h), -C64::from_polar(sin_h, psi)],
        [C64::from_polar(sin_h, phi), C64::from_polar(cos_h, phi + psi)],
    ])
}

/// ⟨Φ|ρ|Φ⟩ for the maximally entangled |Φ⟩ = (I⊗U)|Φ⁺⟩.
fn entangled_overlap(rho: &DensityMatrix, angles: [f64; 3]) -> f64 {
    let u = one_qubit_unitary(angles[0], angles[1], angles[2]);
    // (I⊗U)|Φ⁺⟩ has amplitudes U_{b,a}/√2 on |ab⟩.
    let inv_sqrt2 = cr(std::f64::consts::FRAC_1_SQRT_2);
    let v = [
        u.at(0, 0) * inv_sqrt2,
        u.at(1, 0) * inv_sqrt2,
        u.at(0, 1) * inv_sqrt2,
        u.at(1, 1) * inv_sqrt2,
    ];
    let mut acc = c(0.0, 0.0);
    for (i, vi) in v.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            acc += vi.conj() * rho.at(i, j) * vj;
        }
    }
    acc.re
}

/// Maximize the simplex values of `f` for a fixed iteration budget;
/// a plain Nelder–Mead with the textbook coefficients.
fn refine_max(f: impl Fn([f64; 3]) -> f64, start: [f64; 3], step: [f64; 3]) -> f64 {
    let mut pts = [start; 4];
    for d in 0..3 {
        pts[d + 1][d] += step[d];
    }
    let mut vals: [f64; 4] = std::array::from_fn(|i| f(pts[i]));
    for _ in 0..REFINE_ITERS {
        // Order best → worst.
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
        let (best, second_worst, worst) = (order[0], order[2], order[3]);
        let mut centroid = [0.0; 3];
        for &i in &order[..3] {
            for d in 0..3 {
                centroid[d] += pts[i][d] / 3.0;
            }
        }
        let shifted = |t: f64| -> [f64; 3] {
            std::array::from_fn(|d| centroid[d] + t * (centroid[d] - pts[worst][d]))
        };
        let reflected = shifted(1.0);
        let fr = f(reflected);
        if fr > vals[best] {
            let expanded = shifted(2.0);
            let fe = f(expanded);
            if fe > fr {
                pts[worst] = expanded;
                vals[worst] = fe;
            } else {
                pts[worst] = reflected;
                vals[worst] = fr;
            }
        } else if fr > vals[second_worst] {
            pts[worst] = reflected;
            vals[worst] = fr;
        } else {
            let contracted = shifted(-0.5);
            let fc = f(contracted);
            if fc > vals[worst] {
                pts[worst] = contracted;
                vals[worst] = fc;
            } else {
                // Shrink everything toward the best vertex.
                for i in 0..4 {
                    if i == best {
                        continue;
                    }
                    for d in 0..3 {
                        pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
                    }
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    vals.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force fully entangled fraction: scan ⟨Φ⁺|(I⊗U†)ρ(I⊗U)|Φ⁺⟩ over a
/// `grid`³ angle lattice, then polish the best point. Slightly below the
/// closed form by construction; agreement within 1e−4 at grid 24.
pub fn fef_bruteforce(rho: &DensityMatrix, grid: usize) -> f64 {
    assert!(grid >= 2);
    let eval = |p: [f64; 3]| entangled_overlap(rho, p);
    let mut best_val = f64::NEG_INFINITY;
    let mut best = [0.0; 3];
    for i in 0..grid {
        let theta = PI * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let phi = 2.0 * PI * j as f64 / grid as f64;
            for k in 0..grid {
                let psi = 2.0 * PI * k as f64 / grid as f64;
                let v = eval([theta, phi, psi]);
                if v > best_val {
                    best_val = v;
                    best = [theta, phi, psi];
                }
            }
        }
    }
    let step = [
        0.5 * PI / (grid - 1) as f64,
        PI / grid as f64,
        PI / grid as f64,
    ];
    refine_max(eval, best, step).max(best_val)
}

/// Negativity N = ‖ρ^Γ‖₁ − 1 = 2·max(0, −λ_min(ρ^Γ)); a two-qubit partial
/// transpose has at most one negative eigenvalue.
pub fn negativity(rho: &DensityMatrix) -> f64 {
    let pt = partial_transpose(rho.matrix(), Subsystem::B);
    let spec = hermitian_eigensystem(&pt).expect("ρ^Γ stays Hermitian");
    2.0 * (-spec.min_eigenvalue()).max(0.0)
}

/// Outcome of checking the analytic relations between the measures,
/// each within [`BOUND_SLACK`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundAudit {
    /// f ≥ max((1 + C)/4, C).
    pub fef_lower_ok: bool,
    /// f ≤ (1 + C)/2.
    pub fef_upper_ok: bool,
    /// f* ≤ ½(1 + N); absent when no f* was supplied.
    pub maf_within_negativity_cap: Option<bool>,
    /// Whether the upper bound is met with equality.
    pub fef_upper_saturated: bool,
}

/// Audit the bound chain for one state, optionally including an
/// achievable-fidelity value f*.
pub fn audit_bounds(rho: &DensityMatrix, f_star: Option<f64>) -> BoundAudit {
    let cc = concurrence(rho);
    let f = fef(rho);
    let upper = 0.5 * (1.0 + cc);
    let lower = (0.25 * (1.0 + cc)).max(cc);
    BoundAudit {
        fef_lower_ok: f + BOUND_SLACK >= lower,
        fef_upper_ok: f <= upper + BOUND_SLACK,
        maf_within_negativity_cap: f_star
            .map(|fs| fs <= 0.5 * (1.0 + negativity(rho)) + BOUND_SLACK),
        fef_upper_saturated: (f - upper).abs() <= BOUND_SLACK,
    }
}

/// Everything the `measure` command reports for one state.
#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub concurrence: f64,
    pub singlet_fraction: f64,
    pub fef: f64,
    pub negativity: f64,
    /// Achievable fidelity, when the solver was asked for.
    pub maf: Option<f64>,
    pub bounds: BoundAudit,
}

pub fn measure_report(rho: &DensityMatrix, maf: Option<f64>) -> MeasureReport {
    MeasureReport {
        concurrence: concurrence(rho),
        singlet_fraction: singlet_fraction(rho),
        fef: fef(rho),
        negativity: negativity(rho),
        maf,
        bounds: audit_bounds(rho, maf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TraceOut;
    use crate::states::{
        bell_state, damped_state, evolved_state, random_state, x_state, Bell,
    };
    use std::f64::consts::SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn mixed() -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::identity(4).scale(0.25)).unwrap()
    }

    /// Closed-form concurrence of the damped family.
    fn damped_concurrence(p: f64) -> f64 {
        (1.0 - p).sqrt() * (SQRT_2 - 1.0)
            + (SQRT_2 - 2.0) * (SQRT_2 - 1.0).sqrt() * (p * (1.0 - p)).sqrt()
    }

    /// Closed-form fully entangled fraction of the damped family.
    fn damped_fef(p: f64) -> f64 {
        1.0 - SQRT_2 / 2.0 + p * (SQRT_2 - 1.25) + (1.0 - p).sqrt() / 2.0 * (SQRT_2 - 1.0)
    }

    #[test]
    fn concurrence_of_pure_and_trivial_states() {
        for which in [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiPlus, Bell::PsiMinus] {
            assert!(close(concurrence(&bell_state(which)), 1.0, 1e-10));
        }
        assert!(close(concurrence(&x_state(0.0).unwrap()), 0.0, 1e-10));
        assert!(close(concurrence(&mixed()), 0.0, 1e-10));
    }

    #[test]
    fn concurrence_of_the_dephasing_family_is_abs_cos() {
        for &phase in &crate::linspace(0.0, 2.0 * std::f64::consts::PI, 25) {
            let got = concurrence(&evolved_state(phase));
            assert!(
                close(got, phase.cos().abs(), 1e-10),
                "phase {phase}: got {got}"
            );
        }
    }

    #[test]
    fn concurrence_of_the_damped_family_matches_the_closed_form() {
        for &p in &crate::linspace(0.0, 1.0, 11) {
            let got = concurrence(&damped_state(p).unwrap());
            assert!(close(got, damped_concurrence(p), 1e-9), "p {p}: got {got}");
        }
    }

    #[test]
    fn concurrence_of_the_x_family_equals_the_mixing_weight() {
        for &f in &crate::linspace(0.0, 1.0, 11) {
            assert!(close(concurrence(&x_state(f).unwrap()), f, 1e-10));
        }
    }

    #[test]
    fn measures_are_invariant_under_local_unitaries() {
        for seed in 0..20u64 {
            let rho = random_state(seed);
            let ua = one_qubit_unitary(0.3 + seed as f64, 1.1, 2.3);
            let ub = one_qubit_unitary(2.0 - seed as f64, 0.4, 5.1);
            let u = kron(&ua, &ub);
            let rotated =
                DensityMatrix::new(u.mul(rho.matrix()).mul(&u.adjoint())).unwrap();
            assert!(close(concurrence(&rho), concurrence(&rotated), 1e-9));
            assert!(close(fef(&rho), fef(&rotated), 1e-9));
            assert!(close(negativity(&rho), negativity(&rotated), 1e-9));
        }
    }

    #[test]
    fn singlet_fraction_picks_out_the_singlet() {
        assert_eq!(singlet_fraction(&bell_state(Bell::PsiMinus)), 1.0);
        assert_eq!(singlet_fraction(&bell_state(Bell::PhiPlus)), 0.0);
        assert!(close(singlet_fraction(&bell_state(Bell::PsiPlus)), 0.0, 1e-15));
        assert!(close(singlet_fraction(&mixed()), 0.25, 1e-15));
    }

    #[test]
    fn singlet_fraction_of_the_dephasing_family_is_cos_squared() {
        for &phase in &crate::linspace(0.0, 2.0 * std::f64::consts::PI, 25) {
            let got = singlet_fraction(&evolved_state(phase));
            assert!(close(got, (0.5 * phase).cos().powi(2), 1e-12));
        }
    }

    #[test]
    fn fef_of_reference_states() {
        assert!(close(fef(&bell_state(Bell::PsiMinus)), 1.0, 1e-12));
        assert!(close(fef(&bell_state(Bell::PhiPlus)), 1.0, 1e-12));
        assert!(close(fef(&mixed()), 0.25, 1e-12));
        // A pure product state reaches the separable ceiling 1/2.
        assert!(close(fef(&x_state(0.0).unwrap()), 0.5, 1e-12));
    }

    #[test]
    fn fef_of_the_dephasing_family() {
        for &phase in &crate::linspace(0.0, 2.0 * std::f64::consts::PI, 25) {
            let got = fef(&evolved_state(phase));
            let want = 0.5 * (1.0 + phase.cos().abs());
            assert!(close(got, want, 1e-10), "phase {phase}");
        }
    }

    #[test]
    fn fef_of_the_damped_family() {
        for &p in &crate::linspace(0.0, 1.0, 11) {
            let got = fef(&damped_state(p).unwrap());
            assert!(close(got, damped_fef(p), 1e-9), "p {p}: got {got}");
        }
    }

    #[test]
    fn fef_of_the_x_family_is_piecewise_with_a_kink_at_one_third() {
        for &f in &crate::linspace(0.0, 1.0, 21) {
            let want = if f <= 1.0 / 3.0 { (1.0 - f) / 2.0 } else { f };
            let got = fef(&x_state(f).unwrap());
            assert!(close(got, want, 1e-10), "F {f}: got {got}");
        }
        // Both branches meet at F = 1/3.
        let at_kink = fef(&x_state(1.0 / 3.0).unwrap());
        assert!(close(at_kink, 1.0 / 3.0, 1e-10));
    }

    #[test]
    fn fef_never_drops_below_the_singlet_overlap() {
        for seed in 100..160u64 {
            let rho = random_state(seed);
            assert!(fef(&rho) + 1e-10 >= singlet_fraction(&rho));
        }
    }

    #[test]
    fn bruteforce_fef_agrees_with_the_closed_form() {
        assert!(close(fef_bruteforce(&bell_state(Bell::PsiMinus), 24), 1.0, 1e-6));
        assert!(close(fef_bruteforce(&mixed(), 24), 0.25, 1e-6));
        for rho in [x_state(0.8).unwrap(), damped_state(0.4).unwrap(), random_state(3)] {
            let exact = fef(&rho);
            let brute = fef_bruteforce(&rho, 24);
            assert!(
                (exact - brute).abs() <= 1e-4,
                "closed {exact} vs brute {brute}"
            );
        }
    }

    #[test]
    fn negativity_of_reference_states() {
        assert!(close(negativity(&bell_state(Bell::PsiMinus)), 1.0, 1e-12));
        assert!(close(negativity(&x_state(0.0).unwrap()), 0.0, 1e-12));
        assert!(close(negativity(&mixed()), 0.0, 1e-12));
    }

    #[test]
    fn negativity_of_the_x_family_matches_the_closed_form() {
        for &f in &crate::linspace(0.0, 1.0, 21) {
            let want = (f - 1.0 + (f * f + (f - 1.0) * (f - 1.0)).sqrt()).max(0.0);
            let got = negativity(&x_state(f).unwrap());
            assert!(close(got, want, 1e-10), "F {f}: got {got}");
        }
    }

    #[test]
    fn negativity_and_concurrence_vanish_together_on_random_states() {
        // For two qubits PPT is exactly separability, so the two measures
        // must agree about which states are entangled.
        for seed in 200..300u64 {
            let rho = random_state(seed);
            let n = negativity(&rho);
            let cc = concurrence(&rho);
            if cc > 1e-6 {
                assert!(n > 0.0, "seed {seed}: C = {cc}, N = {n}");
            }
            if n > 1e-6 {
                assert!(cc > 0.0, "seed {seed}: C = {cc}, N = {n}");
            }
        }
    }

    #[test]
    fn bound_audit_on_the_dephasing_family_saturates_the_upper_bound() {
        for &phase in &crate::linspace(0.0, 2.0 * std::f64::consts::PI, 13) {
            let audit = audit_bounds(&evolved_state(phase), None);
            assert!(audit.fef_lower_ok);
            assert!(audit.fef_upper_ok);
            assert!(audit.fef_upper_saturated, "phase {phase}");
            assert!(audit.maf_within_negativity_cap.is_none());
        }
    }

    #[test]
    fn bound_audit_flags_a_violating_maf_claim() {
        let rho = x_state(0.2).unwrap();
        let audit = audit_bounds(&rho, Some(0.99));
        assert_eq!(audit.maf_within_negativity_cap, Some(false));
        let honest = audit_bounds(&rho, Some(0.5));
        assert_eq!(honest.maf_within_negativity_cap, Some(true));
    }

    #[test]
    fn filter_failure_branch_states_are_separable_with_bounded_fef() {
        for &f in &crate::linspace(0.0, 2.0 / 3.0, 9) {
            let out = crate::channels::run_filter_protocol(f).unwrap();
            assert!(close(concurrence(&out.rho2), 0.0, 1e-10), "F {f}");
            let fef2 = fef(&out.rho2);
            assert!(fef2 >= 0.25 - 1e-9 && fef2 <= 0.5 + 1e-9, "F {f}: fef {fef2}");
        }
    }

    #[test]
    fn measure_report_is_internally_consistent() {
        let rho = damped_state(0.3).unwrap();
        let report = measure_report(&rho, None);
        assert!(report.singlet_fraction <= report.fef + 1e-10);
        assert!(report.bounds.fef_lower_ok && report.bounds.fef_upper_ok);
        assert!(report.maf.is_none());
        // Reduced states of the report's input stay physical.
        let red = crate::linalg::partial_trace(rho.matrix(), TraceOut::A).unwrap();
        assert!(close(red.trace().re, 1.0, 1e-12));
    }
}
