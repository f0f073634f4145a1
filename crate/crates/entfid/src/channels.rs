//! Channels acting on the two-qubit system: the controlled dephasing
//! evolution through an ancilla qubit, amplitude damping of one subsystem,
//! generic Kraus application, and the two-outcome local filter that trades
//! success probability for singlet fidelity.

use num_complex::Complex64;

use crate::linalg::{cr, kron, partial_trace, ComplexMatrix, Subsystem, TraceOut};
use crate::states::{bell_state, x_state, Bell, DensityMatrix};
use crate::{Error, Result};

/// Completeness tolerance for Kraus sets: ‖ΣK†K − I‖ (trace-preserving)
/// or the spectral excess over I (filters).
pub const KRAUS_TOL: f64 = 1e-10;
/// Outcome probabilities below this are treated as an impossible branch.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// A single-qubit channel given by 2×2 Kraus operators. Trace-preserving
/// channels satisfy ΣK†K = I; filters only need ΣK†K ≤ I.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
    trace_preserving: bool,
}

impl KrausChannel {
    pub fn new(operators: Vec<ComplexMatrix>, trace_preserving: bool) -> Result<Self> {
        assert!(!operators.is_empty());
        for op in &operators {
            assert_eq!((op.rows(), op.cols()), (2, 2), "Kraus operators act on one qubit");
        }
        let mut sum = ComplexMatrix::zeros(2, 2);
        for op in &operators {
            sum = sum.add(&op.adjoint().mul(op));
        }
        if trace_preserving {
            let defect = sum.max_abs_diff(&ComplexMatrix::identity(2));
            if defect > KRAUS_TOL {
                return Err(Error::InvalidState {
                    reason: format!("Kraus set is not trace preserving (defect {defect:.3e})"),
                });
            }
        } else {
            let spec = crate::linalg::hermitian_eigensystem(&sum)?;
            if spec.max_eigenvalue() > 1.0 + KRAUS_TOL {
                return Err(Error::InvalidState {
                    reason: format!(
                        "filter exceeds unity: max eigenvalue of ΣK†K is {:.12}",
                        spec.max_eigenvalue()
                    ),
                });
            }
        }
        Ok(Self { operators, trace_preserving })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }
}

/// Diagonal control Hamiltonian (λ/2)·σ_z⊗I⊗(|α⟩⟨α| − |β⟩⟨β|) on A⊗B⊗C,
/// with the control basis |α⟩, |β⟩ taken computational.
pub fn control_hamiltonian(lambda: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(8, 8, |row, col| {
        if row != col {
            return cr(0.0);
        }
        let a_sign = if row / 4 == 0 { 1.0 } else { -1.0 };
        let c_sign = if row % 2 == 0 { 1.0 } else { -1.0 };
        cr(0.5 * lambda * a_sign * c_sign)
    })
}

/// Evolve |Ψ⁻⟩⟨Ψ⁻| ⊗ ½I_C under the control Hamiltonian for time t and
/// trace out the control.
///
/// The Hamiltonian is diagonal, so exp(−iHt) acts entrywise as relative
/// phases. The reduced state at phase λt equals the analytic
/// cos²/sin² mixture of |Ψ⁻⟩ and |Ψ⁺⟩; a grid test pins that identity.
pub fn evolve_with_control(lambda: f64, t: f64) -> DensityMatrix {
    let h = control_hamiltonian(lambda);
    let w = kron(
        bell_state(Bell::PsiMinus).matrix(),
        &ComplexMatrix::identity(2).scale(0.5),
    );
    let evolved = ComplexMatrix::from_fn(8, 8, |j, k| {
        let gap = h.at(j, j).re - h.at(k, k).re;
        let phase = Complex64::from_polar(1.0, -gap * t);
        phase * w.at(j, k)
    });
    let reduced = partial_trace(&evolved, TraceOut::Control).expect("evolved state is 8x8");
    DensityMatrix::new(reduced).expect("unitary evolution preserves state validity")
}

/// Amplitude damping with decay probability p: K₀ = diag(1, √(1−p)),
/// K₁ = √p·|0⟩⟨1|.
pub fn amplitude_damping(p: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p, lo: 0.0, hi: 1.0 });
    }
    let k0 = ComplexMatrix::from_rows([[cr(1.0), cr(0.0)], [cr(0.0), cr((1.0 - p).sqrt())]]);
    let k1 = ComplexMatrix::from_rows([[cr(0.0), cr(p.sqrt())], [cr(0.0), cr(0.0)]]);
    KrausChannel::new(vec![k0, k1], true)
}

/// ΣKρK† lifted onto the chosen subsystem, before normalization.
/// Returns the raw output operator and its trace (the outcome probability).
fn apply_raw(
    rho: &DensityMatrix,
    channel: &KrausChannel,
    target: Subsystem,
) -> (ComplexMatrix, f64) {
    let eye = ComplexMatrix::identity(2);
    let mut out = ComplexMatrix::zeros(4, 4);
    for op in channel.operators() {
        let lifted = match target {
            Subsystem::A => kron(op, &eye),
            Subsystem::B => kron(&eye, op),
        };
        out = out.add(&lifted.mul(rho.matrix()).mul(&lifted.adjoint()));
    }
    let prob = out.trace().re;
    (out, prob)
}

/// Apply a channel to one subsystem; returns the normalized post-channel
/// state and the outcome probability (1 for trace-preserving channels).
pub fn apply_channel(
    rho: &DensityMatrix,
    channel: &KrausChannel,
    target: Subsystem,
) -> Result<(DensityMatrix, f64)> {
    let (raw, prob) = apply_raw(rho, channel, target);
    if prob < PROBABILITY_FLOOR {
        return Err(Error::ZeroProbability);
    }
    let state = DensityMatrix::new(raw.scale(1.0 / prob))?;
    Ok((state, prob))
}

/// The two filter branches for the X-shaped mixture at fidelity weight F:
/// the success branch I⊗diag(1, F/(2(1−F))) and the complementary branch
/// √(1−F²/(4(1−F)²))·I⊗|0⟩⟨1|. Together they form a two-outcome
/// instrument, ΣA†A = I.
///
/// For F ≥ 2/3 the success coefficient reaches 1 and the filter
/// degenerates to (identity, zero).
pub fn filter_operators(f: f64) -> Result<(KrausChannel, KrausChannel)> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::OutOfRange { name: "F", value: f, lo: 0.0, hi: 1.0 });
    }
    if f >= 2.0 / 3.0 {
        let identity = KrausChannel::new(vec![ComplexMatrix::identity(2)], false)?;
        let zero = KrausChannel::new(vec![ComplexMatrix::zeros(2, 2)], false)?;
        return Ok((identity, zero));
    }
    let k = f / (2.0 * (1.0 - f));
    let a1 = ComplexMatrix::from_rows([[cr(1.0), cr(0.0)], [cr(0.0), cr(k)]]);
    let a2 = ComplexMatrix::from_rows([
        [cr(0.0), cr((1.0 - k * k).sqrt())],
        [cr(0.0), cr(0.0)],
    ]);
    Ok((KrausChannel::new(vec![a1], false)?, KrausChannel::new(vec![a2], false)?))
}

/// Closed-form branch probabilities of the filter on the X-shaped mixture:
/// p₁ = F(3F² − 6F + 4)/(8(1−F)²) and p₂ = 1 − p₁.
pub fn filter_branch_probabilities(f: f64) -> (f64, f64) {
    let denom = 8.0 * (1.0 - f) * (1.0 - f);
    let p1 = f * (3.0 * f * f - 6.0 * f + 4.0) / denom;
    let p2 = (2.0 - f) * (3.0 * f * f - 8.0 * f + 4.0) / denom;
    (p1, p2)
}

/// Outcome of running the filter protocol on the X-shaped mixture.
#[derive(Debug, Clone)]
pub struct FilterProtocolResult {
    /// Probability of the fidelity-improving branch.
    pub p1: f64,
    /// Probability of the complementary branch.
    pub p2: f64,
    /// Normalized state after the success branch.
    pub rho1: DensityMatrix,
    /// Normalized state after the complementary branch (always separable).
    pub rho2: DensityMatrix,
    /// Trace-preserving average: raw success output plus (1−p₁)·|00⟩⟨00|.
    pub rho_final: DensityMatrix,
}

fn ground_projector() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m.set(0, 0, cr(1.0));
    m
}

/// Run the full filter protocol on F·|Φ⁺⟩⟨Φ⁺| + (1−F)·|01⟩⟨01|.
///
/// The interesting regime is F ∈ [0, 2/3]; above it the filter is trivial
/// and the input state is returned unchanged with p₁ = 1. A branch whose
/// probability vanishes (p₁ at F = 0, p₂ at F = 2/3) reports |00⟩⟨00| as
/// its conditional state, since conditioning on it is meaningless.
pub fn run_filter_protocol(f: f64) -> Result<FilterProtocolResult> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::OutOfRange { name: "F", value: f, lo: 0.0, hi: 1.0 });
    }
    let input = x_state(f)?;
    let ground = DensityMatrix::new(ground_projector()).expect("|00⟩⟨00| is a state");
    if f > 2.0 / 3.0 {
        return Ok(FilterProtocolResult {
            p1: 1.0,
            p2: 0.0,
            rho1: input.clone(),
            rho2: ground,
            rho_final: input,
        });
    }
    let (a1, a2) = filter_operators(f)?;
    let (raw1, p1) = apply_raw(&input, &a1, Subsystem::B);
    let (raw2, p2) = apply_raw(&input, &a2, Subsystem::B);
    let normalize = |raw: ComplexMatrix, p: f64| -> Result<DensityMatrix> {
        if p < PROBABILITY_FLOOR {
            Ok(ground.clone())
        } else {
            DensityMatrix::new(raw.scale(1.0 / p))
        }
    };
    let rho1 = normalize(raw1.clone(), p1)?;
    let rho2 = normalize(raw2, p2)?;
    let rho_final =
        DensityMatrix::new(raw1.add(&ground_projector().scale(1.0 - p1)))?;
    Ok(FilterProtocolResult { p1, p2, rho1, rho2, rho_final })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigensystem;
    use crate::states::evolved_state;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn control_hamiltonian_is_the_expected_diagonal() {
        let h = control_hamiltonian(2.0);
        let want = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { want[i] } else { 0.0 };
                assert_eq!(h.at(i, j), cr(expect));
            }
        }
    }

    #[test]
    fn control_hamiltonian_scales_linearly_in_lambda() {
        let h = control_hamiltonian(0.7);
        assert!(close(h.at(0, 0).re, 0.35, 1e-15));
        assert!(close(h.at(7, 7).re, 0.35, 1e-15));
        assert!(close(h.at(4, 4).re, -0.35, 1e-15));
    }

    #[test]
    fn evolution_starts_at_the_singlet() {
        let rho = evolve_with_control(1.0, 0.0);
        assert!(rho.matrix().max_abs_diff(bell_state(Bell::PsiMinus).matrix()) <= 1e-15);
    }

    #[test]
    fn evolution_at_a_third_of_the_period_is_the_quarter_mixture() {
        let rho = evolve_with_control(1.0, PI / 3.0);
        let want = bell_state(Bell::PsiMinus)
            .matrix()
            .scale(0.75)
            .add(&bell_state(Bell::PsiPlus).matrix().scale(0.25));
        assert!(rho.matrix().max_abs_diff(&want) <= 1e-12);
    }

    #[test]
    fn reduced_dynamics_match_the_two_bell_mixture_on_a_grid() {
        for &phase in &crate::linspace(0.0, 2.0 * PI, 37) {
            let simulated = evolve_with_control(1.0, phase);
            let analytic = evolved_state(phase);
            assert!(simulated.matrix().max_abs_diff(analytic.matrix()) <= 1e-12);
        }
        // λ and t only enter through their product.
        let a = evolve_with_control(2.5, 0.4);
        let b = evolve_with_control(1.0, 1.0);
        assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-12);
    }

    #[test]
    fn any_orthonormal_control_pair_gives_the_same_reduced_dynamics() {
        // Rotate the control basis: |α⟩ = cosθ|0⟩ + sinθ|1⟩ and its
        // orthogonal partner. The initial control state is ½I, so the
        // reduced dynamics cannot depend on θ.
        let (lambda, t, theta) = (1.3, 0.9, 0.3f64);
        let (s, co) = theta.sin_cos();
        let alpha = [cr(co), cr(s)];
        let beta = [cr(-s), cr(co)];
        let mut control_op = ComplexMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                control_op.set(
                    i,
                    j,
                    alpha[i] * alpha[j].conj() - beta[i] * beta[j].conj(),
                );
            }
        }
        let h = kron(
            &kron(&crate::linalg::pauli_z(), &ComplexMatrix::identity(2)),
            &control_op,
        )
        .scale(0.5 * lambda);
        // exp(−iHt) through the eigensystem.
        let spec = hermitian_eigensystem(&h).unwrap();
        let mut u = ComplexMatrix::zeros(8, 8);
        for k in 0..8 {
            let phase = Complex64::from_polar(1.0, -spec.eigenvalues[k] * t);
            for i in 0..8 {
                for j in 0..8 {
                    let add = phase
                        * spec.eigenvectors.at(i, k)
                        * spec.eigenvectors.at(j, k).conj();
                    u.set(i, j, u.at(i, j) + add);
                }
            }
        }
        let w = kron(
            bell_state(Bell::PsiMinus).matrix(),
            &ComplexMatrix::identity(2).scale(0.5),
        );
        let evolved = u.mul(&w).mul(&u.adjoint());
        let reduced = partial_trace(&evolved, TraceOut::Control).unwrap();
        let reference = evolve_with_control(lambda, t);
        assert!(reduced.max_abs_diff(reference.matrix()) <= 1e-10);
    }

    #[test]
    fn amplitude_damping_kraus_operators_at_three_quarters() {
        let ch = amplitude_damping(0.75).unwrap();
        let k0 = &ch.operators()[0];
        let k1 = &ch.operators()[1];
        assert_eq!(k0.at(0, 0), cr(1.0));
        assert!(close(k0.at(1, 1).re, 0.5, 1e-15));
        assert!(close(k1.at(0, 1).re, 0.75f64.sqrt(), 1e-15));
        assert_eq!(k1.at(1, 0), cr(0.0));
        assert!(ch.is_trace_preserving());
    }

    #[test]
    fn amplitude_damping_rejects_out_of_range_p() {
        assert!(matches!(amplitude_damping(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(amplitude_damping(1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn kraus_constructor_rejects_incomplete_trace_preserving_sets() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(matches!(
            KrausChannel::new(vec![half.clone()], true),
            Err(Error::InvalidState { .. })
        ));
        // As a filter the same operator is fine.
        assert!(KrausChannel::new(vec![half], false).is_ok());
        // But a filter must not exceed unity.
        let big = ComplexMatrix::identity(2).scale(1.5);
        assert!(matches!(
            KrausChannel::new(vec![big], false),
            Err(Error::InvalidState { .. })
        ));
    }

    #[test]
    fn damping_subsystem_b_walks_along_the_damped_family() {
        let start = crate::states::damped_state(0.0).unwrap();
        for p in [0.0, 0.3, 0.77, 1.0] {
            let ch = amplitude_damping(p).unwrap();
            let (out, prob) = apply_channel(&start, &ch, Subsystem::B).unwrap();
            assert!(close(prob, 1.0, 1e-12));
            let want = crate::states::damped_state(p).unwrap();
            assert!(out.matrix().max_abs_diff(want.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn apply_channel_lifts_onto_the_requested_subsystem() {
        // A bit flip on A maps |01⟩⟨01| to |11⟩⟨11|; on B it gives |00⟩⟨00|.
        let rho = x_state(0.0).unwrap();
        let flip = KrausChannel::new(vec![crate::linalg::pauli_x()], true).unwrap();
        let (on_a, _) = apply_channel(&rho, &flip, Subsystem::A).unwrap();
        assert!(close(on_a.at(3, 3).re, 1.0, 1e-15));
        let (on_b, _) = apply_channel(&rho, &flip, Subsystem::B).unwrap();
        assert!(close(on_b.at(0, 0).re, 1.0, 1e-15));
    }

    #[test]
    fn zero_filter_branch_is_reported_as_zero_probability() {
        let zero = KrausChannel::new(vec![ComplexMatrix::zeros(2, 2)], false).unwrap();
        let rho = bell_state(Bell::PhiPlus);
        assert!(matches!(
            apply_channel(&rho, &zero, Subsystem::B),
            Err(Error::ZeroProbability)
        ));
    }

    #[test]
    fn filter_coefficients_at_one_half() {
        let (a1, a2) = filter_operators(0.5).unwrap();
        let b1 = &a1.operators()[0];
        assert_eq!(b1.at(0, 0), cr(1.0));
        assert!(close(b1.at(1, 1).re, 0.5, 1e-15));
        let b2 = &a2.operators()[0];
        assert!(close(b2.at(0, 1).re, 0.75f64.sqrt(), 1e-15));
    }

    #[test]
    fn filter_edge_cases() {
        // F = 0: success branch projects B onto |0⟩, failure branch is a
        // pure lowering operator.
        let (a1, a2) = filter_operators(0.0).unwrap();
        assert_eq!(a1.operators()[0].at(1, 1), cr(0.0));
        assert_eq!(a2.operators()[0].at(0, 1), cr(1.0));
        // F = 2/3: the filter degenerates to (identity, zero).
        let (a1, a2) = filter_operators(2.0 / 3.0).unwrap();
        assert!(a1.operators()[0].max_abs_diff(&ComplexMatrix::identity(2)) == 0.0);
        assert_eq!(a2.operators()[0].max_abs(), 0.0);
        assert!(matches!(filter_operators(1.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn filter_branches_form_an_instrument() {
        for f in [0.0, 0.2, 0.4, 0.6, 2.0 / 3.0 - 1e-9] {
            let (a1, a2) = filter_operators(f).unwrap();
            let op1 = &a1.operators()[0];
            let op2 = &a2.operators()[0];
            let total = op1.adjoint().mul(op1).add(&op2.adjoint().mul(op2));
            assert!(total.max_abs_diff(&ComplexMatrix::identity(2)) <= 1e-12);
        }
    }

    #[test]
    fn success_branch_probability_at_one_half_is_seven_sixteenths() {
        let input = x_state(0.5).unwrap();
        let (a1, _) = filter_operators(0.5).unwrap();
        let (_, prob) = apply_channel(&input, &a1, Subsystem::B).unwrap();
        assert!(close(prob, 7.0 / 16.0, 1e-12));
    }

    #[test]
    fn protocol_probabilities_track_the_closed_forms() {
        for &f in &crate::linspace(0.0, 2.0 / 3.0, 9) {
            let out = run_filter_protocol(f).unwrap();
            let (p1, p2) = filter_branch_probabilities(f);
            assert!(close(out.p1, p1, 1e-10), "p1 mismatch at F = {f}");
            assert!(close(out.p2, p2, 1e-10), "p2 mismatch at F = {f}");
            assert!(close(out.p1 + out.p2, 1.0, 1e-12));
            assert!(close(out.rho_final.matrix().trace().re, 1.0, 1e-12));
        }
    }

    #[test]
    fn protocol_at_one_half_in_detail() {
        let out = run_filter_protocol(0.5).unwrap();
        assert!(close(out.p1, 7.0 / 16.0, 1e-12));
        assert!(close(out.p2, 9.0 / 16.0, 1e-12));
        // Failure branch: diag(2/3, 0, 1/3, 0), a product state with B in |0⟩.
        assert!(close(out.rho2.at(0, 0).re, 2.0 / 3.0, 1e-12));
        assert!(close(out.rho2.at(2, 2).re, 1.0 / 3.0, 1e-12));
        assert!(close(out.rho2.at(1, 1).norm(), 0.0, 1e-12));
        assert!(close(out.rho2.at(3, 3).norm(), 0.0, 1e-12));
        // Averaged output keeps the corner coherence of the success branch.
        assert!(close(out.rho_final.at(0, 3).re, 0.125, 1e-12));
        assert!(close(out.rho_final.at(0, 0).re, 13.0 / 16.0, 1e-12));
    }

    #[test]
    fn protocol_degenerate_branches_fall_back_to_the_ground_state() {
        // F = 0: the success branch has zero probability.
        let out = run_filter_protocol(0.0).unwrap();
        assert!(close(out.p1, 0.0, 1e-12));
        assert!(close(out.p2, 1.0, 1e-12));
        assert!(close(out.rho1.at(0, 0).re, 1.0, 1e-12));
        assert!(close(out.rho_final.at(0, 0).re, 1.0, 1e-12));
        // F = 2/3: the failure branch has zero probability.
        let out = run_filter_protocol(2.0 / 3.0).unwrap();
        assert!(close(out.p1, 1.0, 1e-10));
        assert!(close(out.rho2.at(0, 0).re, 1.0, 1e-12));
    }

    #[test]
    fn protocol_above_the_threshold_returns_the_input() {
        let out = run_filter_protocol(0.8).unwrap();
        assert_eq!(out.p1, 1.0);
        assert_eq!(out.p2, 0.0);
        assert!(out.rho_final.matrix().max_abs_diff(x_state(0.8).unwrap().matrix()) == 0.0);
        assert!(matches!(run_filter_protocol(1.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(run_filter_protocol(-0.2), Err(Error::OutOfRange { .. })));
    }
}
