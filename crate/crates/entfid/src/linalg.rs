//! Dense complex linear algebra for the small dimensions this crate needs
//! (2, 3, 4 and 8): tensor products, a Hermitian eigensolver, partial
//! transpose and trace, and spectral projections.
//!
//! Everything is hand-rolled on purpose: the matrices are tiny, the call
//! sites need bit-for-bit deterministic results, and the eigensolver sits
//! inside the fidelity solver's inner loop.

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Off-diagonal Frobenius norm below which the Jacobi iteration stops.
pub const JACOBI_OFF_TOL: f64 = 1e-13;
/// Hard cap on Jacobi sweeps; quadratic convergence needs far fewer.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Asymmetry ‖m − m†‖_max above which a matrix is rejected as non-Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Eigenvalues below this are a genuine positivity violation.
pub const PSD_HARD_FLOOR: f64 = -1e-8;
/// Eigenvalues in [PSD_SOFT_FLOOR, 0) are treated as exact zeros.
pub const PSD_SOFT_FLOOR: f64 = -1e-10;

/// Dense complex matrix with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, cr(1.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                debug_assert!(v.re.is_finite() && v.im.is_finite());
                m.set(i, j, v);
            }
        }
        m
    }

    /// Build from a fixed-size nested array, mostly for literals in tests.
    pub fn from_rows<const R: usize, const C: usize>(rows: [[C64; C]; R]) -> Self {
        Self::from_fn(R, C, |i, j| rows[i][j])
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { cr(diag[i]) } else { cr(0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) + other.at(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) - other.at(i, j))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) * a)
    }

    pub fn scale_c(&self, a: C64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j) * a)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == cr(0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.at(i, j) + a * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j).conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// ‖m − m†‖_max; zero for an exactly Hermitian matrix.
    pub fn asymmetry(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Real part of ⟨self, other⟩ = Tr(self† · other) without forming the product.
    pub fn inner_re(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Kronecker product a ⊗ b; the left factor carries the slower index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a.at(i / br, j / bc) * b.at(i % br, j % bc)
    })
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows([[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows([[cr(0.0), c(0.0, -1.0)], [c(0.0, 1.0), cr(0.0)]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows([[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]])
}

/// σ_1, σ_2, σ_3.
pub fn paulis() -> [ComplexMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// One of the two qubit factors of a 4-dimensional bipartite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Which tensor factor `partial_trace` discards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOut {
    A,
    B,
    /// Third qubit of an 8-dimensional A⊗B⊗C space.
    Control,
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in ascending
/// order and the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Rebuild V·diag(f(λ))·V† from the decomposition.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.dim();
        let mut scaled = v.clone();
        for j in 0..n {
            let w = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled.set(i, j, v.at(i, j) * w);
            }
        }
        scaled.mul(&v.adjoint())
    }
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut sum = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            sum += m.at(p, q).norm_sqr();
        }
    }
    (2.0 * sum).sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Input asymmetry up to [`HERMITICITY_TOL`] is symmetrized away; anything
/// larger is an error. The sweep order is fixed, so identical inputs give
/// bit-identical output.
pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<Spectrum> {
    assert_eq!(m.rows(), m.cols(), "eigensystem needs a square matrix");
    let n = m.dim();
    let asymmetry = m.asymmetry();
    if asymmetry > HERMITICITY_TOL {
        return Err(Error::NonHermitian { asymmetry });
    }
    // Work on the Hermitian average so roundoff-level asymmetry cannot leak
    // into complex eigenvalues.
    let mut a = m.add(&m.adjoint()).scale(0.5);
    let mut v = ComplexMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a.at(p, q);
                let abs_g = g.norm();
                if abs_g == 0.0 {
                    continue;
                }
                // Phase that makes the pivot real, then a real Jacobi
                // rotation that annihilates it.
                let phase = g / abs_g;
                let tau = (a.at(q, q).re - a.at(p, p).re) / (2.0 * abs_g);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else {
                    tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt())
                };
                let cth = 1.0 / (t * t + 1.0).sqrt();
                let sth = t * cth;
                // Column p of the plane unitary is (c, -s·conj(phase)),
                // column q is (s, c·conj(phase)).
                let upp = cr(cth);
                let upq = cr(sth);
                let uqp = -phase.conj() * sth;
                let uqq = phase.conj() * cth;

                // a ← u† a u, applied as column then row updates.
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, akp * upp + akq * uqp);
                    a.set(k, q, akp * upq + akq * uqq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, upp.conj() * apk + uqp.conj() * aqk);
                    a.set(q, k, upq.conj() * apk + uqq.conj() * aqk);
                }
                // The pivot is zero by construction; store it exactly.
                a.set(p, q, cr(0.0));
                a.set(q, p, cr(0.0));
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, vkp * upp + vkq * uqp);
                    v.set(k, q, vkp * upq + vkq * uqq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap().then(i.cmp(&j)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v.at(i, order[j]));
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn det3(t: &[[f64; 3]; 3]) -> f64 {
    t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1])
        - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
        + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])
}

/// Singular values of a real 3×3 matrix in descending order, plus the sign
/// of its determinant (0 for an exactly singular determinant).
///
/// Computed from the eigenvalues of tᵀt, which is all the correlation-matrix
/// work in this crate needs.
pub fn svd3(t: &[[f64; 3]; 3]) -> ([f64; 3], i8) {
    let tt = ComplexMatrix::from_fn(3, 3, |i, j| {
        cr((0..3).map(|k| t[k][i] * t[k][j]).sum::<f64>())
    });
    let spec = hermitian_eigensystem(&tt).expect("tᵀt is symmetric by construction");
    let sv = |idx: usize| spec.eigenvalues[idx].max(0.0).sqrt();
    let singular = [sv(2), sv(1), sv(0)];
    let det = det3(t);
    let det_sign = if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    };
    (singular, det_sign)
}

/// Partial transpose of a two-qubit operator over one subsystem.
///
/// Transposing over B maps entry ((i,j),(k,l)) to ((i,l),(k,j)); the two
/// choices of subsystem give unitarily equivalent results.
pub fn partial_transpose(m: &ComplexMatrix, sub: Subsystem) -> ComplexMatrix {
    assert_eq!(m.rows(), 4, "partial transpose is defined on 4x4 operators");
    assert_eq!(m.cols(), 4);
    ComplexMatrix::from_fn(4, 4, |row, col| {
        let (i, j) = (row / 2, row % 2);
        let (k, l) = (col / 2, col % 2);
        match sub {
            Subsystem::B => m.at(2 * i + l, 2 * k + j),
            Subsystem::A => m.at(2 * k + j, 2 * i + l),
        }
    })
}

/// Trace out one tensor factor: A or B of a 4×4 operator, or the third
/// qubit of an 8×8 operator.
pub fn partial_trace(m: &ComplexMatrix, out: TraceOut) -> Result<ComplexMatrix> {
    let need = match out {
        TraceOut::Control => 8,
        TraceOut::A | TraceOut::B => 4,
    };
    if m.rows() != need || m.cols() != need {
        return Err(Error::DimensionMismatch {
            expected: need,
            found: m.rows(),
        });
    }
    Ok(match out {
        TraceOut::Control => ComplexMatrix::from_fn(4, 4, |row, col| {
            m.at(2 * row, 2 * col) + m.at(2 * row + 1, 2 * col + 1)
        }),
        TraceOut::A => ComplexMatrix::from_fn(2, 2, |b, bp| {
            m.at(b, bp) + m.at(2 + b, 2 + bp)
        }),
        TraceOut::B => ComplexMatrix::from_fn(2, 2, |a, ap| {
            m.at(2 * a, 2 * ap) + m.at(2 * a + 1, 2 * ap + 1)
        }),
    })
}

/// Frobenius-nearest Hermitian matrix whose eigenvalues lie in [lo, hi]:
/// eigendecompose, clamp the spectrum, rebuild.
pub fn spectral_clip(m: &ComplexMatrix, lo: f64, hi: f64) -> Result<ComplexMatrix> {
    assert!(lo <= hi);
    let spec = hermitian_eigensystem(m)?;
    Ok(spec.reconstruct_with(|x| x.clamp(lo, hi)))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in [[`PSD_SOFT_FLOOR`], 0) count as roundoff zeros; anything
/// below [`PSD_HARD_FLOOR`] is a real positivity violation and is rejected.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spec = hermitian_eigensystem(m)?;
    let min = spec.min_eigenvalue();
    if min < PSD_HARD_FLOOR {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    Ok(spec.reconstruct_with(|x| x.max(0.0).sqrt()))
}
