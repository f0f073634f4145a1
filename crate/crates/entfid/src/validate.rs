//! Self-check suites behind the `validate` subcommand: each suite replays
//! the invariants its module promises, deterministically from one seed.

use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channels::{amplitude_damping, apply_channel, evolve_with_control, run_filter_protocol};
use crate::linalg::{
    c, hermitian_eigensystem, kron, partial_trace, partial_transpose, spectral_clip, svd3,
    ComplexMatrix, Subsystem, TraceOut, C64,
};
use crate::maf::{maf_closed_damped, maf_closed_x_state, maf_sdp, SolverConfig};
use crate::measures::{concurrence, fef, negativity, one_qubit_unitary, singlet_fraction};
use crate::states::{
    bell_state, bloch_compose, bloch_decompose, damped_state, evolved_state, random_state,
    state_from_json, state_to_json, x_state, Bell, DensityMatrix,
};

/// One suite per module, run in this order.
pub const SUITE_NAMES: [&str; 5] = ["kernel", "states", "channels", "measures", "maf"];

fn ensure(cond: bool, detail: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail())
    }
}

/// Compare two series point by point; the detail names the first offender.
/// `!(diff <= tol)` also trips on NaN.
fn compare_series(
    label: &str,
    params: &[f64],
    got: &[f64],
    want: &[f64],
    tol: f64,
) -> Result<(), String> {
    for ((&p, &g), &w) in params.iter().zip(got).zip(want) {
        if !((g - w).abs() <= tol) {
            return Err(format!(
                "{label}: at parameter {p}, got {g}, want {w} (tolerance {tol})"
            ));
        }
    }
    Ok(())
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let entries: Vec<C64> = (0..n * n)
        .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let g = ComplexMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    g.add(&g.adjoint()).scale(0.5)
}

/// Rotation about one axis of R³, used to scramble correlation matrices.
fn rotation3(axis: usize, angle: f64) -> [[f64; 3]; 3] {
    let (s, co) = angle.sin_cos();
    let mut r = [[0.0; 3]; 3];
    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
    r[axis][axis] = 1.0;
    r[a][a] = co;
    r[a][b] = -s;
    r[b][a] = s;
    r[b][b] = co;
    r
}

fn mat3_mul(x: &[[f64; 3]; 3], y: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, yk) in y.iter().enumerate() {
                out[i][j] += x[i][k] * yk[j];
            }
        }
    }
    out
}

fn suite_kernel(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Eigen-reconstruction ‖M − VΛV†‖_max on random Hermitian matrices.
    for n in [2usize, 3, 4, 8] {
        for trial in 0..5 {
            let m = random_hermitian(&mut rng, n);
            let spec = hermitian_eigensystem(&m).map_err(|e| e.to_string())?;
            let rebuilt = spec.reconstruct_with(|x| x);
            let err = m.max_abs_diff(&rebuilt);
            ensure(err <= 1e-10, || {
                format!("eigen-reconstruction: n={n} trial {trial} error {err:.3e}")
            })?;
        }
    }
    // Partial transposition is an exact involution on states.
    for seed in 0..20u64 {
        let rho = random_state(seed);
        let twice = partial_transpose(&partial_transpose(rho.matrix(), Subsystem::B), Subsystem::B);
        ensure(twice.max_abs_diff(rho.matrix()) == 0.0, || {
            format!("partial transpose involution broke on seed {seed}")
        })?;
    }
    // Tracing out B from a product recovers the A factor times Tr(B).
    for trial in 0..10 {
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 2);
        let red = partial_trace(&kron(&a, &b), TraceOut::B).map_err(|e| e.to_string())?;
        let want = a.scale(b.trace().re);
        let err = red.max_abs_diff(&want);
        ensure(err <= 1e-12, || {
            format!("partial trace of product: trial {trial} error {err:.3e}")
        })?;
    }
    // Singular values of a 3×3 matrix survive rotations on either side.
    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    for trial in 0..10 {
        let mut t = [[0.0; 3]; 3];
        for row in &mut t {
            for v in row {
                *v = draw(&mut rng);
            }
        }
        let left = mat3_mul(&rotation3(0, draw(&mut rng)), &rotation3(2, draw(&mut rng)));
        let right = mat3_mul(&rotation3(1, draw(&mut rng)), &rotation3(0, draw(&mut rng)));
        let rotated = mat3_mul(&left, &mat3_mul(&t, &right));
        let (sv, sign) = svd3(&t);
        let (sv_rot, sign_rot) = svd3(&rotated);
        ensure(sign == sign_rot, || {
            format!("svd3 determinant sign changed under rotation, trial {trial}")
        })?;
        for i in 0..3 {
            ensure((sv[i] - sv_rot[i]).abs() <= 1e-9, || {
                format!(
                    "svd3 rotation invariance: trial {trial} σ{i} {} vs {}",
                    sv[i], sv_rot[i]
                )
            })?;
        }
    }
    // Spectral clipping is an idempotent, 1-Lipschitz projection.
    for trial in 0..10 {
        let a = random_hermitian(&mut rng, 4);
        let b = random_hermitian(&mut rng, 4);
        let pa = spectral_clip(&a, -0.5, 0.5).map_err(|e| e.to_string())?;
        let pb = spectral_clip(&b, -0.5, 0.5).map_err(|e| e.to_string())?;
        let twice = spectral_clip(&pa, -0.5, 0.5).map_err(|e| e.to_string())?;
        ensure(twice.max_abs_diff(&pa) <= 1e-12, || {
            format!("spectral_clip not idempotent on trial {trial}")
        })?;
        let contraction = pa.sub(&pb).frobenius_norm() <= a.sub(&b).frobenius_norm() + 1e-12;
        ensure(contraction, || {
            format!("spectral_clip expanded a pair on trial {trial}")
        })?;
    }
    Ok(())
}

fn suite_states(seed: u64) -> Result<(), String> {
    // Bloch round trip on families and random states.
    let mut pool: Vec<(String, DensityMatrix)> = vec![
        ("singlet".into(), bell_state(Bell::PsiMinus)),
        ("phi+".into(), bell_state(Bell::PhiPlus)),
    ];
    for &p in &crate::linspace(0.0, 1.0, 11) {
        pool.push((format!("damped({p})"), damped_state(p).map_err(|e| e.to_string())?));
        pool.push((format!("xstate({p})"), x_state(p).map_err(|e| e.to_string())?));
    }
    for s in 0..20u64 {
        pool.push((format!("random({})", seed ^ s), random_state(seed ^ s)));
    }
    for (name, rho) in &pool {
        let b = bloch_decompose(rho);
        let back = bloch_compose(&b).map_err(|e| format!("{name}: {e}"))?;
        let err = back.matrix().max_abs_diff(rho.matrix());
        ensure(err <= 1e-12, || {
            format!("Bloch round trip on {name}: error {err:.3e}")
        })?;
        let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        ensure(norm(b.r) <= 1.0 + 1e-9 && norm(b.s) <= 1.0 + 1e-9, || {
            format!("Bloch local vector out of the unit ball on {name}")
        })?;
        let t_max = b
            .t
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        ensure(t_max <= 1.0 + 1e-9, || {
            format!("correlation entry beyond 1 on {name}")
        })?;
    }
    // The dephasing family is 2π-periodic and even in its phase.
    for &phase in &crate::linspace(0.0, 2.0 * PI, 37) {
        let base = evolved_state(phase);
        let shifted = evolved_state(phase + 2.0 * PI);
        let mirrored = evolved_state(-phase);
        ensure(base.matrix().max_abs_diff(shifted.matrix()) <= 1e-12, || {
            format!("dephasing family not 2π-periodic at phase {phase}")
        })?;
        ensure(base.matrix().max_abs_diff(mirrored.matrix()) <= 1e-12, || {
            format!("dephasing family not even at phase {phase}")
        })?;
    }
    // Dense-grid admissibility of both parametric families.
    for &p in &crate::linspace(0.0, 1.0, 1001) {
        let rho = damped_state(p).map_err(|e| e.to_string())?;
        let spec = hermitian_eigensystem(rho.matrix()).map_err(|e| e.to_string())?;
        ensure(spec.min_eigenvalue() >= -1e-12, || {
            format!("damped({p}) eigenvalue {:.3e}", spec.min_eigenvalue())
        })?;
        let xs = x_state(p).map_err(|e| e.to_string())?;
        let trace = xs.matrix().trace().re;
        ensure((trace - 1.0).abs() <= 1e-12, || {
            format!("xstate({p}) trace {trace}")
        })?;
        let spec = hermitian_eigensystem(xs.matrix()).map_err(|e| e.to_string())?;
        ensure(spec.min_eigenvalue() >= -1e-12, || {
            format!("xstate({p}) eigenvalue {:.3e}", spec.min_eigenvalue())
        })?;
    }
    // JSON serialization round trips exactly.
    for s in 0..5u64 {
        let rho = random_state(seed.wrapping_add(s));
        let back = state_from_json(&state_to_json(&rho)).map_err(|e| e.to_string())?;
        ensure(back.matrix().max_abs_diff(rho.matrix()) == 0.0, || {
            format!("JSON round trip changed state for seed offset {s}")
        })?;
    }
    Ok(())
}

fn suite_channels(_seed: u64) -> Result<(), String> {
    // Three-party simulation against the closed-form two-qubit family.
    for i in 0..360 {
        let phase = 2.0 * PI * i as f64 / 359.0;
        let simulated = evolve_with_control(1.25, phase / 1.25);
        let err = simulated.matrix().max_abs_diff(evolved_state(phase).matrix());
        ensure(err <= 1e-12, || {
            format!("control simulation vs closed form at phase {phase}: {err:.3e}")
        })?;
    }
    // Damping the pristine state walks the damped family.
    let start = damped_state(0.0).map_err(|e| e.to_string())?;
    for &p in &crate::linspace(0.0, 1.0, 101) {
        let channel = amplitude_damping(p).map_err(|e| e.to_string())?;
        let (evolved, prob) =
            apply_channel(&start, &channel, Subsystem::B).map_err(|e| e.to_string())?;
        ensure((prob - 1.0).abs() <= 1e-12, || {
            format!("trace-preserving damping lost weight at p = {p}")
        })?;
        let want = damped_state(p).map_err(|e| e.to_string())?;
        let err = evolved.matrix().max_abs_diff(want.matrix());
        ensure(err <= 1e-12, || {
            format!("damping reconstruction at p = {p}: {err:.3e}")
        })?;
    }
    // Filter protocol bookkeeping.
    for &f in &crate::linspace(0.0, 2.0 / 3.0, 21) {
        let out = run_filter_protocol(f).map_err(|e| e.to_string())?;
        ensure((out.p1 + out.p2 - 1.0).abs() <= 1e-12, || {
            format!("branch probabilities at F = {f} sum to {}", out.p1 + out.p2)
        })?;
        let c2 = concurrence(&out.rho2);
        ensure(c2 <= 1e-10, || {
            format!("failure branch at F = {f} has concurrence {c2:.3e}")
        })?;
        let before = concurrence(&x_state(f).map_err(|e| e.to_string())?);
        let after = concurrence(&out.rho_final);
        ensure(after <= before + 1e-10, || {
            format!("protocol increased concurrence at F = {f}: {before} → {after}")
        })?;
    }
    Ok(())
}

fn suite_measures(seed: u64) -> Result<(), String> {
    // Local-unitary invariance.
    for trial in 0..25u64 {
        let rho = random_state(seed.wrapping_add(1000 + trial));
        let t = trial as f64;
        let u = kron(
            &one_qubit_unitary(0.37 * t, 1.1 + 0.2 * t, 2.9 - 0.15 * t),
            &one_qubit_unitary(2.2 - 0.31 * t, 0.45 * t, 1.7 + 0.1 * t),
        );
        let rotated = DensityMatrix::new(u.mul(rho.matrix()).mul(&u.adjoint()))
            .map_err(|e| e.to_string())?;
        for (label, a, b) in [
            ("concurrence", concurrence(&rho), concurrence(&rotated)),
            ("fef", fef(&rho), fef(&rotated)),
            ("negativity", negativity(&rho), negativity(&rotated)),
        ] {
            ensure((a - b).abs() <= 1e-9, || {
                format!("{label} moved under local unitaries on trial {trial}: {a} vs {b}")
            })?;
        }
    }
    // Bound chain on the random ensemble.
    for s in 0..1000u64 {
        let rho = random_state(seed.wrapping_add(10_000 + s));
        let cv = concurrence(&rho);
        let fv = fef(&rho);
        let fs = singlet_fraction(&rho);
        ensure(fv + 1e-10 >= fs, || {
            format!("fef below singlet fraction on draw {s}: {fv} < {fs}")
        })?;
        ensure(fv + 1e-6 >= (0.25 * (1.0 + cv)).max(cv), || {
            format!("lower fidelity bound failed on draw {s}")
        })?;
        ensure(fv <= 0.5 * (1.0 + cv) + 1e-6, || {
            format!("upper fidelity bound failed on draw {s}")
        })?;
    }
    // Separable failure-branch states stay in the separable fidelity band.
    for &f in &crate::linspace(0.0, 2.0 / 3.0, 9) {
        let out = run_filter_protocol(f).map_err(|e| e.to_string())?;
        let fv = fef(&out.rho2);
        ensure((0.25 - 1e-9..=0.5 + 1e-9).contains(&fv), || {
            format!("failure-branch fef {fv} outside [¼, ½] at F = {f}")
        })?;
    }
    // Concurrence of the X family is its mixing weight, densely.
    let grid = crate::linspace(0.0, 1.0, 1001);
    let mut got = Vec::with_capacity(grid.len());
    for &f in &grid {
        got.push(concurrence(&x_state(f).map_err(|e| e.to_string())?));
    }
    compare_series("xstate concurrence", &grid, &got, &grid, 1e-10)?;
    Ok(())
}

fn suite_maf(seed: u64) -> Result<(), String> {
    let cfg = SolverConfig::default();
    // Closed-form agreement along both families.
    let f_grid: Vec<f64> = (0..67).map(|i| i as f64 / 67.0).collect();
    for &f in &f_grid {
        let sol = maf_sdp(&x_state(f).map_err(|e| e.to_string())?, cfg)
            .map_err(|e| format!("xstate({f}): {e}"))?;
        let want = maf_closed_x_state(f).map_err(|e| e.to_string())?;
        ensure((sol.f_star - want).abs() <= 1e-5, || {
            format!("achievable fidelity at F = {f}: {} vs {want}", sol.f_star)
        })?;
    }
    for &p in &crate::linspace(0.0, 1.0, 101) {
        let sol = maf_sdp(&damped_state(p).map_err(|e| e.to_string())?, cfg)
            .map_err(|e| format!("damped({p}): {e}"))?;
        let want = maf_closed_damped(p).map_err(|e| e.to_string())?;
        ensure((sol.f_star - want).abs() <= 1e-5, || {
            format!("achievable fidelity at p = {p}: {} vs {want}", sol.f_star)
        })?;
    }
    // Random-ensemble inequalities: doing nothing is feasible, and the
    // achievable fidelity stays under both monotone caps.
    for s in 0..500u64 {
        let rho = random_state(seed.wrapping_add(50_000 + s));
        let sol = maf_sdp(&rho, cfg).map_err(|e| format!("draw {s}: {e}"))?;
        ensure(sol.f_star >= fef(&rho) - 1e-6, || {
            format!("solver fell below the passive fidelity on draw {s}")
        })?;
        ensure(sol.f_star <= 0.5 * (1.0 + negativity(&rho)) + 1e-6, || {
            format!("negativity cap failed on draw {s}")
        })?;
        ensure(sol.f_star <= 0.5 * (1.0 + concurrence(&rho)) + 1e-6, || {
            format!("concurrence cap failed on draw {s}")
        })?;
    }
    // Bitwise determinism.
    let rho = damped_state(0.3).map_err(|e| e.to_string())?;
    let a = maf_sdp(&rho, cfg).map_err(|e| e.to_string())?;
    let b = maf_sdp(&rho, cfg).map_err(|e| e.to_string())?;
    ensure(
        a.f_star.to_bits() == b.f_star.to_bits()
            && a.iterations == b.iterations
            && a.filter.max_abs_diff(&b.filter) == 0.0,
        || "solver is not deterministic".to_string(),
    )?;
    // The tangency point where the passive and achievable fidelities meet.
    let p_star = 2.0 * SQRT_2 - 2.0;
    let rho = damped_state(p_star).map_err(|e| e.to_string())?;
    let bound = 0.5 * (1.0 + concurrence(&rho));
    ensure((fef(&rho) - bound).abs() <= 1e-9, || {
        format!("fidelity bound not tight at p = {p_star}")
    })?;
    Ok(())
}

/// Run every suite; returns the printable report and whether all passed.
/// The report text is identical across runs for a fixed seed.
pub fn run_all(seed: u64) -> (String, bool) {
    let suites: [(&str, fn(u64) -> Result<(), String>); 5] = [
        ("kernel", suite_kernel),
        ("states", suite_states),
        ("channels", suite_channels),
        ("measures", suite_measures),
        ("maf", suite_maf),
    ];
    let mut report = String::new();
    let mut all_pass = true;
    for (name, suite) in suites {
        match suite(seed) {
            Ok(()) => report.push_str(&format!("PASS {name}\n")),
            Err(detail) => {
                all_pass = false;
                report.push_str(&format!("FAIL {name}: {detail}\n"));
            }
        }
    }
    (report, all_pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_comparison_flags_the_first_corrupted_entry() {
        let params = [0.0, 0.5, 1.0];
        let want = [1.0, 2.0, 3.0];
        let mut got = want;
        assert!(compare_series("demo", &params, &got, &want, 1e-12).is_ok());
        got[1] += 1e-3;
        let err = compare_series("demo", &params, &got, &want, 1e-12).unwrap_err();
        assert!(err.contains("parameter 0.5"), "unexpected detail: {err}");
        assert!(err.contains("demo"));
        // NaN never passes.
        got[1] = f64::NAN;
        assert!(compare_series("demo", &params, &got, &want, 1e-12).is_err());
    }

    #[test]
    fn full_validation_passes_and_is_deterministic() {
        let (report, ok) = run_all(7);
        assert!(ok, "validation failed:\n{report}");
        for name in SUITE_NAMES {
            assert!(report.contains(&format!("PASS {name}\n")));
        }
        let (again, ok_again) = run_all(7);
        assert!(ok_again);
        assert_eq!(report, again);
    }
}
