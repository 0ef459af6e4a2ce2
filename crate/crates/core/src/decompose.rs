//! Inverse problem for tensor-product pairs: given factor pairs whose
//! tensor pair is strict m-isometric (or strict m-symmetric with
//! invertible summed left operators), recover the gauge scalar c and the
//! factor orders m₁, m₂ with m = m₁ + m₂ − 1, and certify the result.
//!
//! Strictness pins the minimal polynomial of the superoperator E of the
//! first factor on the cyclic subspace generated by I to (x − c)^{m₁}:
//! Δ^{m₁} of the gauge-corrected pair equals c^{−m₁}(c·Id − E)^{m₁}(I).
//! So c falls out of a Krylov search — the mean of the repeated root —
//! and no general eigensolver is needed.

use crate::defect::{
    binomial_coefficient, defect_scaled, strictness_order, tensor_defect_norm, DefectError, DefectKind,
    ORDER_CAP,
};
use crate::matrix::{ComplexMatrix, GramSchmidt, Tolerance};
use crate::tuple::{scale_pair, sum_operator, tensor_pair, TupleError, TuplePair};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DecomposeError {
    #[error("degree budget exceeded: no Krylov dependency found up to degree {max_deg}")]
    DegreeBudgetExceeded { max_deg: u32 },
    #[error("minimal polynomial of degree {degree} has distinct roots: max coefficient deviation {max_deviation:.3e} exceeds {threshold:.3e}")]
    NotARepeatedRoot {
        degree: u32,
        max_deviation: f64,
        threshold: f64,
    },
    #[error("tensor pair has no strict order up to {max_order}")]
    NotStrictTensor { max_order: u32 },
    #[error("summed left operator of factor {factor} is not invertible")]
    NotInvertible { factor: usize },
    #[error("recovered scalar is numerically zero")]
    ZeroScalar,
    #[error("first factor order {factor_order} exceeds the tensor order {tensor_order}")]
    FactorOrderExceedsTensor { factor_order: u32, tensor_order: u32 },
    #[error("factor certification failed: residuals {residual1:.3e} (threshold {threshold1:.3e}) and {residual2:.3e} (threshold {threshold2:.3e})")]
    CertificationFailed {
        residual1: f64,
        residual2: f64,
        threshold1: f64,
        threshold2: f64,
    },
    #[error("factorized tensor order {factorized} disagrees with materialized order {materialized:?}")]
    TensorOrderMismatch {
        factorized: u32,
        materialized: Option<u32>,
    },
    #[error(transparent)]
    Defect(#[from] DefectError),
    #[error(transparent)]
    Tuple(#[from] TupleError),
}

/// Monic polynomial, coefficients ascending by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPoly {
    /// c₀, c₁, …, c_k with c_k = 1.
    pub coeffs: Vec<Complex64>,
    /// Least-squares residual of the dependency that terminated the search.
    pub residual: f64,
}

impl MinPoly {
    pub fn new(coeffs: Vec<Complex64>, residual: f64) -> Self {
        assert!(
            coeffs.len() >= 2 && coeffs.last() == Some(&Complex64::ONE),
            "minimal polynomial must be monic of degree at least 1"
        );
        MinPoly { coeffs, residual }
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }
}

/// Minimal polynomial of E on the cyclic subspace generated by I.
///
/// Iterates vₖ = vec(Eᵏ(I)) and stops at the first k whose residual after
/// projection onto the earlier iterates drops below `tol.rel` times the
/// largest Krylov vector norm; the dependency coefficients give the monic
/// polynomial xᵏ − Σⱼ cⱼ xʲ.
pub fn krylov_min_poly(
    p: &TuplePair,
    max_deg: u32,
    tol: &Tolerance,
) -> Result<MinPoly, DecomposeError> {
    if max_deg == 0 || max_deg > ORDER_CAP {
        return Err(DefectError::OrderTooLarge {
            order: max_deg,
            cap: ORDER_CAP,
        }
        .into());
    }
    let n = p.dim();
    let mut gs = GramSchmidt::new(n * n);
    // column j holds the coefficients of vⱼ in the orthonormal basis
    let mut columns: Vec<Vec<Complex64>> = Vec::new();
    let mut v = ComplexMatrix::identity(n);
    let mut max_norm = 0.0_f64;
    for k in 0..=max_deg {
        if k > 0 {
            v = crate::defect::apply_e(p, &v)?;
        }
        max_norm = max_norm.max(v.frobenius_norm());
        let threshold = tol.threshold(max_norm);
        let proj = gs.project_and_push(v.entries(), threshold);
        if !proj.appended {
            if k == 0 {
                // only possible when rel ≥ 1 swallows the identity itself
                return Err(DefectError::PreconditionFailed(
                    "identity falls below the dependency threshold; relative tolerance too large"
                        .into(),
                )
                .into());
            }
            let deps = solve_upper_triangular(&columns, &proj.coeffs);
            let mut coeffs: Vec<Complex64> = deps.iter().map(|c| -c).collect();
            coeffs.push(Complex64::ONE);
            return Ok(MinPoly::new(coeffs, proj.residual));
        }
        let mut col = proj.coeffs;
        col.push(Complex64::new(proj.residual, 0.0));
        columns.push(col);
    }
    Err(DecomposeError::DegreeBudgetExceeded { max_deg })
}

/// Back substitution for R·c = rhs where column j of R has j + 1 entries.
fn solve_upper_triangular(columns: &[Vec<Complex64>], rhs: &[Complex64]) -> Vec<Complex64> {
    let k = columns.len();
    let mut c = vec![Complex64::ZERO; k];
    for a in (0..k).rev() {
        let mut s = rhs[a];
        for j in (a + 1)..k {
            s -= columns[j][a] * c[j];
        }
        c[a] = s / columns[a][a];
    }
    c
}

/// Root of a presumed (x − c)^k polynomial: the mean of the roots,
/// accepted only when the coefficients match the binomial expansion of
/// (x − c)^k within tolerance, coefficient-wise with binomial scaling.
pub fn extract_repeated_root(mp: &MinPoly, tol: &Tolerance) -> Result<Complex64, DecomposeError> {
    let k = mp.degree();
    let c = -mp.coeffs[(k - 1) as usize] / Complex64::new(k as f64, 0.0);
    let mut max_deviation = 0.0_f64;
    let mut max_threshold = tol.abs_floor;
    let mut accepted = true;
    for i in 0..k {
        let bin = binomial_coefficient(k, i) as f64;
        let expected = (-c).powu(k - i) * Complex64::new(bin, 0.0);
        let scale = bin * c.norm().max(1.0).powi((k - i) as i32);
        let threshold = tol.threshold(scale);
        let deviation = (mp.coeffs[i as usize] - expected).norm();
        if deviation > max_deviation {
            max_deviation = deviation;
            max_threshold = threshold;
        }
        if deviation > threshold {
            accepted = false;
        }
    }
    if !accepted {
        return Err(DecomposeError::NotARepeatedRoot {
            degree: k,
            max_deviation,
            threshold: max_threshold,
        });
    }
    Ok(c)
}

// Confirmation probes past a detected zero, mirroring strictness_order.
const CONFIRM_PROBES: u32 = 2;

/// Strict order of the tensor pair of `p1` and `p2`, probed through the
/// factorized defect norms; when the tensor dimension is at most 64 the
/// order is cross-checked against the materialized tensor pair.
pub fn tensor_strict_order(
    p1: &TuplePair,
    p2: &TuplePair,
    kind: DefectKind,
    tol: &Tolerance,
) -> Result<u32, DecomposeError> {
    let mut strict: Option<u32> = None;
    let mut m = 1;
    while m <= ORDER_CAP {
        let (norm, scale) = tensor_defect_norm(p1, p2, kind, m)?;
        let threshold = tol.threshold(scale);
        match strict {
            None => {
                if norm <= threshold {
                    strict = Some(m);
                }
            }
            Some(zero_at) => {
                if norm > threshold {
                    return Err(DefectError::ToleranceAnomaly {
                        zero_at,
                        nonzero_at: m,
                        norm,
                        threshold,
                    }
                    .into());
                }
                if m >= zero_at + CONFIRM_PROBES {
                    break;
                }
            }
        }
        m += 1;
    }
    let factorized = strict.ok_or(DecomposeError::NotStrictTensor {
        max_order: ORDER_CAP,
    })?;

    if p1.dim() * p2.dim() <= 64 {
        let tp = tensor_pair(p1, p2)?;
        let report = strictness_order(&tp, kind, ORDER_CAP, tol)?;
        if report.strict_order != Some(factorized) {
            return Err(DecomposeError::TensorOrderMismatch {
                factorized,
                materialized: report.strict_order,
            });
        }
    }
    Ok(factorized)
}

/// Recovered gauge scalar and factor orders, with the certification
/// residuals of the two gauge-corrected factor pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub c: Complex64,
    pub m1: u32,
    pub m2: u32,
    /// Strict order of the tensor pair; always m1 + m2 − 1.
    pub tensor_order: u32,
    /// ‖defect_{m1} of (𝔸₁, (1/c)𝔹₁)‖_F.
    pub residual1: f64,
    /// ‖defect_{m2} of (𝔸₂, c𝔹₂)‖_F.
    pub residual2: f64,
    pub strict1: bool,
    pub strict2: bool,
}

/// Solves the isometric inverse problem for the tensor pair of `p1`, `p2`.
pub fn decompose_iso(
    p1: &TuplePair,
    p2: &TuplePair,
    tol: &Tolerance,
) -> Result<DecompositionResult, DecomposeError> {
    decompose(p1, p2, DefectKind::Isometric, tol)
}

/// Solves the symmetric inverse problem; requires the summed left
/// operators of both factors to be invertible.
pub fn decompose_sym(
    p1: &TuplePair,
    p2: &TuplePair,
    tol: &Tolerance,
) -> Result<DecompositionResult, DecomposeError> {
    decompose(p1, p2, DefectKind::Symmetric, tol)
}

fn decompose(
    p1: &TuplePair,
    p2: &TuplePair,
    kind: DefectKind,
    tol: &Tolerance,
) -> Result<DecompositionResult, DecomposeError> {
    // For the symmetric kind the Krylov search runs on the auxiliary
    // isometric pair ((σS₁)⁻¹, σT₁): with σS invertible,
    // δᵐ(I) = σSᵐ · Δᵐ_{(σS)⁻¹, σT}(I), so the gauge structure carries over.
    let krylov_source = match kind {
        DefectKind::Isometric => p1.clone(),
        DefectKind::Symmetric => {
            let s1 = sum_operator(p1.left());
            let s1_inv = s1
                .inverse(tol)
                .map_err(|_| DecomposeError::NotInvertible { factor: 1 })?;
            sum_operator(p2.left())
                .inverse(tol)
                .map_err(|_| DecomposeError::NotInvertible { factor: 2 })?;
            TuplePair::from_single(s1_inv, sum_operator(p1.right()))?
        }
    };

    let tensor_order = tensor_strict_order(p1, p2, kind, tol)?;
    let mp = krylov_min_poly(&krylov_source, ORDER_CAP, tol)?;
    let c = extract_repeated_root(&mp, tol)?;
    if c.norm() <= tol.abs_floor {
        return Err(DecomposeError::ZeroScalar);
    }
    let m1 = mp.degree();
    if m1 > tensor_order {
        return Err(DecomposeError::FactorOrderExceedsTensor {
            factor_order: m1,
            tensor_order,
        });
    }
    let m2 = tensor_order - m1 + 1;

    let q1 = scale_pair(p1, Complex64::ONE / c)?;
    let q2 = scale_pair(p2, c)?;
    let (residual1, threshold1, strict1) = certify(&q1, kind, m1, tol)?;
    let (residual2, threshold2, strict2) = certify(&q2, kind, m2, tol)?;
    if residual1 > threshold1 || residual2 > threshold2 {
        return Err(DecomposeError::CertificationFailed {
            residual1,
            residual2,
            threshold1,
            threshold2,
        });
    }
    Ok(DecompositionResult {
        c,
        m1,
        m2,
        tensor_order,
        residual1,
        residual2,
        strict1,
        strict2,
    })
}

/// Defect norm of the pair at order m plus strictness at order m − 1.
fn certify(
    p: &TuplePair,
    kind: DefectKind,
    m: u32,
    tol: &Tolerance,
) -> Result<(f64, f64, bool), DecomposeError> {
    let identity = ComplexMatrix::identity(p.dim());
    let (defect, scale) = defect_scaled(p, kind, m, &identity)?;
    let residual = defect.frobenius_norm();
    let threshold = tol.threshold(scale);
    let (prev, prev_scale) = defect_scaled(p, kind, m - 1, &identity)?;
    let strict = prev.frobenius_norm() > tol.threshold(prev_scale);
    Ok((residual, threshold, strict))
}
