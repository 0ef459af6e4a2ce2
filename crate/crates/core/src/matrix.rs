//! Dense complex linear algebra kernel.
//!
//! Everything in the workbench runs on small (n ≤ 64) square complex
//! matrices, so the kernel is a plain row-major `Vec<Complex64>` with
//! partial-pivoted elimination for inverses and modified Gram–Schmidt for
//! numerical rank. Tolerances are explicit: a matrix counts as zero
//! relative to the largest Frobenius norm among the summands that
//! produced it, never relative to its own (possibly cancelled) norm.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Index, Mul, Sub};
use thiserror::Error;

/// Errors raised by the linear algebra kernel.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e} at elimination step {step}")]
    Singular {
        step: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("family of matrices is empty")]
    EmptyFamily,
}

/// Absolute floor plus relative threshold for zero tests.
///
/// The effective threshold for comparing a matrix to zero is
/// `max(abs_floor, rel * scale)` where `scale` is the largest Frobenius
/// norm among the summands that produced the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_floor: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_floor: 1e-12,
            rel: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_floor: f64, rel: f64) -> Self {
        assert!(abs_floor >= 0.0 && rel >= 0.0, "tolerances must be nonnegative");
        Tolerance { abs_floor, rel }
    }

    /// Effective zero threshold at the given scale.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs_floor.max(self.rel * scale)
    }
}

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        ComplexMatrix {
            n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::ONE;
        }
        m
    }

    /// Scalar multiple of the identity.
    pub fn scalar(n: usize, c: Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from real entries, row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self::from_fn(n, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    /// Takes ownership of a row-major entry buffer of length n².
    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != n * n {
            return Err(LinalgError::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(ComplexMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius inner product ⟨A, B⟩ = Σᵢⱼ Aᵢⱼ·conj(Bᵢⱼ), linear in A.
    pub fn frobenius_inner(&self, rhs: &Self) -> Complex64 {
        assert_eq!(self.n, rhs.n, "inner product needs equal dimensions");
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// k-th power by repeated multiplication.
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.n);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Kronecker product: block (i, j) of the result is `self[(i, j)]·rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (na, nb) = (self.n, rhs.n);
        let n = na * nb;
        let mut out = Self::zeros(n);
        for i in 0..na {
            for j in 0..na {
                let a = self[(i, j)];
                if a == Complex64::ZERO {
                    continue;
                }
                for k in 0..nb {
                    for l in 0..nb {
                        out.data[(i * nb + k) * n + (j * nb + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal sum diag(self, rhs).
    pub fn direct_sum(&self, rhs: &Self) -> Self {
        let (na, nb) = (self.n, rhs.n);
        let n = na + nb;
        let mut out = Self::zeros(n);
        for i in 0..na {
            for j in 0..na {
                out.data[i * n + j] = self[(i, j)];
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                out.data[(na + i) * n + (na + j)] = rhs[(i, j)];
            }
        }
        out
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    ///
    /// Fails with `Singular` when the pivot magnitude drops below the
    /// tolerance threshold at scale ‖A‖_F.
    pub fn inverse(&self, tol: &Tolerance) -> Result<Self, LinalgError> {
        let n = self.n;
        let threshold = tol.threshold(self.frobenius_norm());
        let mut a = self.data.clone();
        let mut inv = Self::identity(n);

        for col in 0..n {
            // partial pivot: largest magnitude on or below the diagonal
            let mut pivot_row = col;
            let mut pivot_mag = a[col * n + col].norm();
            for row in (col + 1)..n {
                let mag = a[row * n + col].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = row;
                }
            }
            if pivot_mag <= threshold {
                return Err(LinalgError::Singular {
                    step: col,
                    pivot: pivot_mag,
                    threshold,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                    inv.data.swap(col * n + j, pivot_row * n + j);
                }
            }
            let pivot = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= pivot;
                inv.data[col * n + j] /= pivot;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[row * n + col];
                if factor == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let upper = a[col * n + j];
                    a[row * n + j] -= factor * upper;
                    let upper = inv.data[col * n + j];
                    inv.data[row * n + j] -= factor * upper;
                }
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "matrix addition needs equal dimensions");
        ComplexMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "matrix subtraction needs equal dimensions");
        ComplexMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "matrix product needs equal dimensions");
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self[(i, j)];
                write!(f, "{:+.3}{:+.3}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Outcome of projecting one vector against an orthonormal basis.
pub(crate) struct Projection {
    /// Coefficients with respect to the basis as it stood before the call.
    pub coeffs: Vec<Complex64>,
    /// Norm of the residual after two projection passes.
    pub residual: f64,
    /// Whether the normalized residual was appended to the basis.
    pub appended: bool,
}

/// Incremental modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Shared by the numerical rank, the Krylov minimal-polynomial search and
/// the factorized tensor-defect norm.
pub(crate) struct GramSchmidt {
    dim: usize,
    basis: Vec<Vec<Complex64>>,
}

impl GramSchmidt {
    pub fn new(dim: usize) -> Self {
        GramSchmidt { dim, basis: Vec::new() }
    }

    /// Projects `v` onto the span of the basis; appends the normalized
    /// residual when its norm exceeds `drop_threshold`.
    pub fn project_and_push(&mut self, v: &[Complex64], drop_threshold: f64) -> Projection {
        assert_eq!(v.len(), self.dim, "vector length must match basis dimension");
        let mut r = v.to_vec();
        let mut coeffs = vec![Complex64::ZERO; self.basis.len()];
        // two MGS passes; the second mops up what cancellation left behind
        for _ in 0..2 {
            for (a, q) in self.basis.iter().enumerate() {
                let h: Complex64 = r.iter().zip(q.iter()).map(|(x, y)| x * y.conj()).sum();
                coeffs[a] += h;
                for (x, y) in r.iter_mut().zip(q.iter()) {
                    *x -= h * y;
                }
            }
        }
        let residual = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let appended = residual > drop_threshold;
        if appended {
            for x in r.iter_mut() {
                *x /= Complex64::new(residual, 0.0);
            }
            self.basis.push(r);
        }
        Projection {
            coeffs,
            residual,
            appended,
        }
    }
}

/// Numerical rank of a family of equally sized matrices.
///
/// Each matrix is vectorized; a member counts as dependent when its
/// residual after projection onto the earlier ones is at most
/// `max(abs_floor, rel · largest input vector norm)`.
pub fn rank_of_family(family: &[ComplexMatrix], tol: &Tolerance) -> Result<usize, LinalgError> {
    let first = family.first().ok_or(LinalgError::EmptyFamily)?;
    let n = first.dim();
    for m in family {
        if m.dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: m.dim(),
            });
        }
    }
    let max_norm = family
        .iter()
        .map(|m| m.frobenius_norm())
        .fold(0.0_f64, f64::max);
    let threshold = tol.threshold(max_norm);
    let mut gs = GramSchmidt::new(n * n);
    let mut rank = 0;
    for m in family {
        if gs.project_and_push(m.entries(), threshold).appended {
            rank += 1;
        }
    }
    Ok(rank)
}
