//! Commuting d-tuples of operators and the pair constructions applied to
//! them: commutation validation, tensor product (d²-tuple), product tuple,
//! summed operator and gauge scaling.

use crate::matrix::{ComplexMatrix, Tolerance};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TupleError {
    #[error("tuple must contain at least one operator")]
    EmptyTuple,
    #[error("operator dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tuple arity mismatch: left has {left} entries, right has {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("tuples do not cross-commute: max commutator norm {max_norm:.3e} exceeds {threshold:.3e} at pair ({i},{j})")]
    NotCrossCommuting {
        max_norm: f64,
        threshold: f64,
        i: usize,
        j: usize,
    },
    #[error("scalar must be nonzero")]
    ZeroScalar,
}

/// Result of a commutation check: the worst commutator and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationReport {
    pub max_commutator_norm: f64,
    /// Indices attaining the maximum (0-based; (0, 0) for trivial tuples).
    pub worst_pair: (usize, usize),
    pub threshold: f64,
    pub commuting: bool,
}

/// Ordered list of d same-size operators; 𝔸 = (A₁, …, A_d).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTuple {
    entries: Vec<ComplexMatrix>,
    validated: bool,
}

impl OperatorTuple {
    pub fn new(entries: Vec<ComplexMatrix>) -> Result<Self, TupleError> {
        let first = entries.first().ok_or(TupleError::EmptyTuple)?;
        let n = first.dim();
        for e in &entries {
            if e.dim() != n {
                return Err(TupleError::DimensionMismatch {
                    expected: n,
                    got: e.dim(),
                });
            }
        }
        Ok(OperatorTuple {
            entries,
            validated: false,
        })
    }

    pub fn single(op: ComplexMatrix) -> Self {
        OperatorTuple {
            entries: vec![op],
            validated: true,
        }
    }

    /// Number of operators d.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructors reject empty tuples
    }

    /// Common operator dimension n.
    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn entries(&self) -> &[ComplexMatrix] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &ComplexMatrix {
        &self.entries[i]
    }

    /// Whether internal commutation has been checked and confirmed.
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// Max pairwise commutator norm ‖AᵢAⱼ − AⱼAᵢ‖_F and the attaining pair.
    ///
    /// The threshold scale is the largest product norm among the summands
    /// forming the commutators.
    pub fn validate_commuting(&self, tol: &Tolerance) -> CommutationReport {
        let mut max_norm = 0.0_f64;
        let mut worst = (0, 0);
        let mut scale = 0.0_f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let ab = self.entry(i) * self.entry(j);
                let ba = self.entry(j) * self.entry(i);
                scale = scale.max(ab.frobenius_norm()).max(ba.frobenius_norm());
                let norm = (&ab - &ba).frobenius_norm();
                if norm > max_norm {
                    max_norm = norm;
                    worst = (i, j);
                }
            }
        }
        let threshold = tol.threshold(scale);
        CommutationReport {
            max_commutator_norm: max_norm,
            worst_pair: worst,
            threshold,
            commuting: max_norm <= threshold,
        }
    }

    /// Runs the commutation check and stamps the persistent flag on success.
    pub fn into_validated(mut self, tol: &Tolerance) -> Result<Self, TupleError> {
        let report = self.validate_commuting(tol);
        if !report.commuting {
            return Err(TupleError::NotCrossCommuting {
                max_norm: report.max_commutator_norm,
                threshold: report.threshold,
                i: report.worst_pair.0,
                j: report.worst_pair.1,
            });
        }
        self.validated = true;
        Ok(self)
    }

    /// Entrywise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        OperatorTuple {
            entries: self.entries.iter().map(|a| a.adjoint()).collect(),
            validated: self.validated,
        }
    }

    /// Entrywise scalar multiple.
    pub fn scaled(&self, c: Complex64) -> Self {
        OperatorTuple {
            entries: self.entries.iter().map(|a| a.scaled(c)).collect(),
            validated: self.validated,
        }
    }

    /// Entrywise Kronecker product with the dim2-dimensional identity.
    pub fn tensor_with_identity(&self, dim2: usize) -> Self {
        let id = ComplexMatrix::identity(dim2);
        OperatorTuple {
            entries: self.entries.iter().map(|a| a.kron(&id)).collect(),
            validated: self.validated,
        }
    }
}

/// Max cross-commutator ‖AᵢBⱼ − BⱼAᵢ‖_F over all i, j, with verdict.
pub fn cross_commutes(
    t1: &OperatorTuple,
    t2: &OperatorTuple,
    tol: &Tolerance,
) -> Result<CommutationReport, TupleError> {
    if t1.dim() != t2.dim() {
        return Err(TupleError::DimensionMismatch {
            expected: t1.dim(),
            got: t2.dim(),
        });
    }
    let mut max_norm = 0.0_f64;
    let mut worst = (0, 0);
    let mut scale = 0.0_f64;
    for i in 0..t1.len() {
        for j in 0..t2.len() {
            let ab = t1.entry(i) * t2.entry(j);
            let ba = t2.entry(j) * t1.entry(i);
            scale = scale.max(ab.frobenius_norm()).max(ba.frobenius_norm());
            let norm = (&ab - &ba).frobenius_norm();
            if norm > max_norm {
                max_norm = norm;
                worst = (i, j);
            }
        }
    }
    let threshold = tol.threshold(scale);
    Ok(CommutationReport {
        max_commutator_norm: max_norm,
        worst_pair: worst,
        threshold,
        commuting: max_norm <= threshold,
    })
}

/// Tensor product of two d-tuples: the d²-tuple whose entry (i·d + k) is
/// Aᵢ ⊗ Bₖ — outer index over `t1`, inner index over `t2`.
pub fn tensor_tuple(t1: &OperatorTuple, t2: &OperatorTuple) -> Result<OperatorTuple, TupleError> {
    if t1.len() != t2.len() {
        return Err(TupleError::ArityMismatch {
            left: t1.len(),
            right: t2.len(),
        });
    }
    let mut entries = Vec::with_capacity(t1.len() * t2.len());
    for a in t1.entries() {
        for b in t2.entries() {
            entries.push(a.kron(b));
        }
    }
    Ok(OperatorTuple {
        entries,
        validated: t1.validated && t2.validated,
    })
}

/// Product tuple: the d²-tuple whose entry (i·d + k) is Aᵢ·Bₖ, in the same
/// ordering as `tensor_tuple`. Requires the tuples to cross-commute.
pub fn product_tuple(
    t1: &OperatorTuple,
    t2: &OperatorTuple,
    tol: &Tolerance,
) -> Result<OperatorTuple, TupleError> {
    if t1.len() != t2.len() {
        return Err(TupleError::ArityMismatch {
            left: t1.len(),
            right: t2.len(),
        });
    }
    let report = cross_commutes(t1, t2, tol)?;
    if !report.commuting {
        return Err(TupleError::NotCrossCommuting {
            max_norm: report.max_commutator_norm,
            threshold: report.threshold,
            i: report.worst_pair.0,
            j: report.worst_pair.1,
        });
    }
    let mut entries = Vec::with_capacity(t1.len() * t2.len());
    for a in t1.entries() {
        for b in t2.entries() {
            entries.push(a * b);
        }
    }
    Ok(OperatorTuple {
        entries,
        validated: t1.validated && t2.validated,
    })
}

/// Σᵢ Aᵢ — the summed operator the symmetric defect depends on.
pub fn sum_operator(t: &OperatorTuple) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(t.dim());
    for a in t.entries() {
        acc = &acc + a;
    }
    acc
}

/// An ordered pair (𝔸, 𝔹) of tuples of equal arity and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TuplePair {
    left: OperatorTuple,
    right: OperatorTuple,
}

impl TuplePair {
    pub fn new(left: OperatorTuple, right: OperatorTuple) -> Result<Self, TupleError> {
        if left.len() != right.len() {
            return Err(TupleError::ArityMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        if left.dim() != right.dim() {
            return Err(TupleError::DimensionMismatch {
                expected: left.dim(),
                got: right.dim(),
            });
        }
        Ok(TuplePair { left, right })
    }

    /// d = 1 pair from two single operators.
    pub fn from_single(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self, TupleError> {
        Self::new(OperatorTuple::single(a), OperatorTuple::single(b))
    }

    pub fn left(&self) -> &OperatorTuple {
        &self.left
    }

    pub fn right(&self) -> &OperatorTuple {
        &self.right
    }

    pub fn d(&self) -> usize {
        self.left.len()
    }

    pub fn dim(&self) -> usize {
        self.left.dim()
    }
}

/// Gauge scaling: (𝔸, 𝔹) ↦ (𝔸, c·𝔹).
pub fn scale_pair(p: &TuplePair, c: Complex64) -> Result<TuplePair, TupleError> {
    if c == Complex64::ZERO {
        return Err(TupleError::ZeroScalar);
    }
    Ok(TuplePair {
        left: p.left.clone(),
        right: p.right.scaled(c),
    })
}

/// Hilbert-space pair (𝔸*, 𝔸): realizes the adjoint-based defect of a
/// single tuple through the pair calculus.
pub fn hilbert_pair(t: &OperatorTuple) -> TuplePair {
    TuplePair {
        left: t.adjoint(),
        right: t.clone(),
    }
}

/// Entrywise tensor pair ((𝔸₁ ⊗ 𝔸₂), (𝔹₁ ⊗ 𝔹₂)).
pub fn tensor_pair(p1: &TuplePair, p2: &TuplePair) -> Result<TuplePair, TupleError> {
    let left = tensor_tuple(&p1.left, &p2.left)?;
    let right = tensor_tuple(&p1.right, &p2.right)?;
    TuplePair::new(left, right)
}

/// Entrywise product pair ((𝔸₁𝔸₂), (𝔹₁𝔹₂)); both products must cross-commute.
pub fn product_pair(p1: &TuplePair, p2: &TuplePair, tol: &Tolerance) -> Result<TuplePair, TupleError> {
    let left = product_tuple(&p1.left, &p2.left, tol)?;
    let right = product_tuple(&p1.right, &p2.right, tol)?;
    TuplePair::new(left, right)
}
