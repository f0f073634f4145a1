//! Two-qubit density matrices: validation, Bell states, the analytic state
//! families studied by this crate, the Bloch–Fano decomposition, seeded
//! random states, and a small JSON interchange format.

use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::linalg::{
    self, c, cr, hermitian_eigensystem, kron, paulis, C64, ComplexMatrix,
};
use crate::{Error, Result};

/// Hermiticity and unit-trace tolerance for a valid density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// A validated two-qubit density matrix: 4×4, Hermitian within
/// [`STATE_TOL`], unit trace within [`STATE_TOL`], eigenvalues no lower
/// than the roundoff floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::validated(mat, linalg::PSD_SOFT_FLOOR)
    }

    /// Validation with a caller-chosen eigenvalue floor; `bloch_compose`
    /// uses the looser hard floor because it reports near-misses itself.
    pub(crate) fn validated(mat: ComplexMatrix, eig_floor: f64) -> Result<Self> {
        let fail = |reason: String| Err(Error::InvalidState { reason });
        if mat.rows() != 4 || mat.cols() != 4 {
            return fail(format!("expected a 4x4 matrix, got {}x{}", mat.rows(), mat.cols()));
        }
        for i in 0..4 {
            for j in 0..4 {
                let v = mat.at(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return fail(format!("non-finite entry at ({i}, {j})"));
                }
            }
        }
        let asym = mat.asymmetry();
        if asym > STATE_TOL {
            return fail(format!("not Hermitian (asymmetry {asym:.3e})"));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return fail(format!("trace {:.12} + {:.3e}i is not 1", tr.re, tr.im));
        }
        let spec = hermitian_eigensystem(&mat).expect("hermiticity was just checked");
        let min = spec.min_eigenvalue();
        if min < eig_floor {
            return fail(format!("negative eigenvalue {min:.3e}"));
        }
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.mat.at(i, j)
    }
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bell {
    /// (|00⟩ + |11⟩)/√2
    PhiPlus,
    /// (|00⟩ − |11⟩)/√2
    PhiMinus,
    /// (|01⟩ + |10⟩)/√2
    PsiPlus,
    /// (|01⟩ − |10⟩)/√2
    PsiMinus,
}

pub fn bell_vector(which: Bell) -> [C64; 4] {
    let h = cr(1.0 / SQRT_2);
    match which {
        Bell::PhiPlus => [h, cr(0.0), cr(0.0), h],
        Bell::PhiMinus => [h, cr(0.0), cr(0.0), -h],
        Bell::PsiPlus => [cr(0.0), h, h, cr(0.0)],
        Bell::PsiMinus => [cr(0.0), h, -h, cr(0.0)],
    }
}

pub fn bell_state(which: Bell) -> DensityMatrix {
    // Build from the unnormalized ±1 amplitudes and halve at the end, so
    // every entry is exactly ±1/2 rather than (1/√2)² = 1/2 − ulp.
    let signs: [f64; 4] = match which {
        Bell::PhiPlus => [1.0, 0.0, 0.0, 1.0],
        Bell::PhiMinus => [1.0, 0.0, 0.0, -1.0],
        Bell::PsiPlus => [0.0, 1.0, 1.0, 0.0],
        Bell::PsiMinus => [0.0, 1.0, -1.0, 0.0],
    };
    let mat = ComplexMatrix::from_fn(4, 4, |i, j| cr(0.5 * signs[i] * signs[j]));
    DensityMatrix::new(mat).expect("Bell projectors are valid states")
}

/// State of the dephasing-control family at dimensionless time λt:
/// cos²(λt/2)·|Ψ⁻⟩⟨Ψ⁻| + sin²(λt/2)·|Ψ⁺⟩⟨Ψ⁺|.
pub fn evolved_state(phase: f64) -> DensityMatrix {
    let half = 0.5 * phase;
    let w_minus = half.cos().powi(2);
    let w_plus = half.sin().powi(2);
    let minus = bell_state(Bell::PsiMinus);
    let plus = bell_state(Bell::PsiPlus);
    let mat = minus.matrix().scale(w_minus).add(&plus.matrix().scale(w_plus));
    DensityMatrix::new(mat).expect("a convex mix of Bell states is a state")
}

/// State of the amplitude-damped family at damping strength p ∈ [0, 1].
///
/// The p = 0 member is the optimally prepared mixture whose off-diagonal
/// coherence sits between |01⟩ and |10⟩; damping drains subsystem B toward
/// |0⟩ and redistributes the populations as written here.
pub fn damped_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p, lo: 0.0, hi: 1.0 });
    }
    let a = 1.5 - SQRT_2;
    let mut m = ComplexMatrix::zeros(4, 4);
    m.set(0, 0, cr(p * a));
    m.set(1, 1, cr((1.0 - p) * a));
    m.set(2, 2, cr(0.5 + p * (SQRT_2 - 1.0)));
    m.set(3, 3, cr((1.0 - p) * (SQRT_2 - 1.0)));
    let coherence = (1.0 - p).sqrt() * (0.5 - SQRT_2 / 2.0);
    m.set(1, 2, cr(coherence));
    m.set(2, 1, cr(coherence));
    DensityMatrix::new(m)
}

/// Rank-two X-shaped mixture F·|Φ⁺⟩⟨Φ⁺| + (1−F)·|01⟩⟨01| for F ∈ [0, 1].
pub fn x_state(f: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange { name: "F", value: f, lo: 0.0, hi: 1.0 });
    }
    let phi = bell_state(Bell::PhiPlus);
    let mut m = phi.matrix().scale(f);
    m.set(1, 1, m.at(1, 1) + cr(1.0 - f));
    DensityMatrix::new(m)
}

/// Hilbert–Schmidt random state ρ = GG†/Tr(GG†) with G a 4×4 Ginibre
/// matrix drawn from a seeded, reproducible generator.
pub fn random_state(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let g = {
        let mut g = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                g.set(i, j, c(draw(), draw()));
            }
        }
        g
    };
    let gg = g.mul(&g.adjoint());
    let mat = gg.scale(1.0 / gg.trace().re);
    DensityMatrix::new(mat).expect("GG†/Tr(GG†) is a valid state")
}

/// Bloch–Fano parameters of a two-qubit state: local vectors r⃗ (subsystem
/// A), s⃗ (subsystem B) and the 3×3 correlation matrix T.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochForm {
    pub r: [f64; 3],
    pub s: [f64; 3],
    pub t: [[f64; 3]; 3],
}

/// r_n = Tr(ρ·σ_n⊗I), s_m = Tr(ρ·I⊗σ_m), T_nm = Tr(ρ·σ_n⊗σ_m).
pub fn bloch_decompose(rho: &DensityMatrix) -> BlochForm {
    let sigma = paulis();
    let eye = ComplexMatrix::identity(2);
    let overlap = |op: &ComplexMatrix| rho.matrix().mul(op).trace().re;
    let mut b = BlochForm { r: [0.0; 3], s: [0.0; 3], t: [[0.0; 3]; 3] };
    for n in 0..3 {
        b.r[n] = overlap(&kron(&sigma[n], &eye));
        b.s[n] = overlap(&kron(&eye, &sigma[n]));
        for m in 0..3 {
            b.t[n][m] = overlap(&kron(&sigma[n], &sigma[m]));
        }
    }
    b
}

/// Rebuild ¼(I + r⃗·σ⃗⊗I + I⊗s⃗·σ⃗ + Σ T_nm σ_n⊗σ_m).
///
/// Not every parameter set is a state; a reconstruction with an eigenvalue
/// below the hard floor is rejected rather than silently clipped.
pub fn bloch_compose(b: &BlochForm) -> Result<DensityMatrix> {
    let sigma = paulis();
    let eye = ComplexMatrix::identity(2);
    let mut m = ComplexMatrix::identity(4);
    for n in 0..3 {
        m = m.add(&kron(&sigma[n], &eye).scale(b.r[n]));
        m = m.add(&kron(&eye, &sigma[n]).scale(b.s[n]));
        for k in 0..3 {
            m = m.add(&kron(&sigma[n], &sigma[k]).scale(b.t[n][k]));
        }
    }
    m = m.scale(0.25);
    let spec = hermitian_eigensystem(&m).expect("composed matrix is Hermitian");
    let min = spec.min_eigenvalue();
    if min < linalg::PSD_HARD_FLOOR {
        return Err(Error::NotAState { min_eigenvalue: min });
    }
    DensityMatrix::validated(m, linalg::PSD_HARD_FLOOR)
}

#[derive(Deserialize)]
struct EntryJson {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct StateJson {
    matrix: Vec<Vec<EntryJson>>,
}

/// Serialize a state as `{"matrix": [[{"re": …, "im": …}, …], …]}` with
/// 17-significant-digit floats, enough to round-trip any double exactly.
pub fn state_to_json(rho: &DensityMatrix) -> String {
    let entry = |i: usize, j: usize| {
        let v = rho.at(i, j);
        format!("{{\"re\": {}, \"im\": {}}}", crate::fmt17(v.re), crate::fmt17(v.im))
    };
    let rows: Vec<String> = (0..4)
        .map(|i| {
            let cells: Vec<String> = (0..4).map(|j| entry(i, j)).collect();
            format!("    [{}]", cells.join(", "))
        })
        .collect();
    format!("{{\n  \"matrix\": [\n{}\n  ]\n}}\n", rows.join(",\n"))
}

/// Parse and validate a state written by [`state_to_json`] (or by hand).
pub fn state_from_json(text: &str) -> Result<DensityMatrix> {
    let parsed: StateJson =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if parsed.matrix.len() != 4 || parsed.matrix.iter().any(|row| row.len() != 4) {
        return Err(Error::Parse("\"matrix\" must be 4 rows of 4 entries".into()));
    }
    let mat = ComplexMatrix::from_fn(4, 4, |i, j| {
        let e = &parsed.matrix[i][j];
        c(e.re, e.im)
    });
    DensityMatrix::new(mat)
}
