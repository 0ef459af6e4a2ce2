//! The hereditary defect calculus.
//!
//! For a pair (𝔸, 𝔹) of d-tuples the elementary superoperator is
//! E(X) = Σᵢ AᵢXBᵢ. The isometric defect is Δᵐ(X) = (Id − E)ᵐ(X), expanded
//! binomially over iterates of E; the symmetric defect is
//! δⁿ(X) = (L_𝔸 − R_𝔹)ⁿ(X), which depends only on the summed operators
//! σ𝔸 = ΣᵢAᵢ and σ𝔹 = ΣᵢBᵢ. The multi-index route of the defining
//! equation, with multinomial weights j!/α!, is kept as an independent
//! oracle for the recursion route.
//!
//! Superoperators are never materialized as n²×n² matrices; E acts by
//! d-term sandwich sums, so every defect costs O(d·m·n³).

use crate::matrix::{rank_of_family, ComplexMatrix, GramSchmidt, LinalgError, Tolerance};
use crate::tuple::{sum_operator, TuplePair};
use num_complex::Complex64;
use thiserror::Error;

/// Largest defect order accepted anywhere; C(30, 15) still fits exactly
/// in 64-bit integers and in an f64 mantissa.
pub const ORDER_CAP: u32 = 30;

/// Largest exponent accepted by the expansion identity (binomials C(n, j)
/// stay exact in integer arithmetic).
pub const EXPANSION_CAP: u32 = 60;

/// Budget for multi-index enumeration.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DefectError {
    #[error("order {order} exceeds the cap {cap}")]
    OrderTooLarge { order: u32, cap: u32 },
    #[error("operand dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multi-index enumeration needs {terms} terms, budget is {budget}")]
    EnumerationBudgetExceeded { terms: u128, budget: u128 },
    #[error("tolerance anomaly: defect vanished at order {zero_at} but has norm {norm:.3e} > {threshold:.3e} at order {nonzero_at}")]
    ToleranceAnomaly {
        zero_at: u32,
        nonzero_at: u32,
        norm: f64,
        threshold: f64,
    },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which defect a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    Isometric,
    Symmetric,
}

impl DefectKind {
    pub fn label(&self) -> &'static str {
        match self {
            DefectKind::Isometric => "isometric",
            DefectKind::Symmetric => "symmetric",
        }
    }
}

/// Defect norms per probed order plus the detected strictness order.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub kind: DefectKind,
    /// (order k, ‖defect_k(I)‖_F) for the detection ascent: k = 1 up to
    /// the strict order, or up to max_m when none was found.
    pub probes: Vec<(u32, f64)>,
    /// Least m with ‖defect_m(I)‖ ≤ τ and ‖defect_{m−1}(I)‖ > τ, if found.
    pub strict_order: Option<u32>,
    /// Largest order whose defect was evaluated, including the
    /// monotonicity guard probes past a detected order.
    pub max_order_searched: u32,
}

/// Exact binomial coefficient; callers keep n ≤ 60.
pub fn binomial_coefficient(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 1..=(k as i128) {
        acc = acc * (n as i128 - k as i128 + i) / i;
    }
    acc
}

/// Exact multinomial coefficient |α|! / (α₁!⋯α_d!).
pub(crate) fn multinomial(alpha: &[u32]) -> i128 {
    let mut acc: i128 = 1;
    let mut partial = 0u32;
    for &a in alpha {
        partial += a;
        acc *= binomial_coefficient(partial, a);
    }
    acc
}

fn check_operand(p: &TuplePair, x: &ComplexMatrix) -> Result<(), DefectError> {
    if x.dim() != p.dim() {
        return Err(DefectError::DimensionMismatch {
            expected: p.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

fn check_order(m: u32) -> Result<(), DefectError> {
    if m > ORDER_CAP {
        return Err(DefectError::OrderTooLarge {
            order: m,
            cap: ORDER_CAP,
        });
    }
    Ok(())
}

/// One step of the floor-bracket recursion: E(X) = Σᵢ AᵢXBᵢ.
pub fn apply_e(p: &TuplePair, x: &ComplexMatrix) -> Result<ComplexMatrix, DefectError> {
    check_operand(p, x)?;
    let mut acc = ComplexMatrix::zeros(p.dim());
    for (a, b) in p.left().entries().iter().zip(p.right().entries()) {
        acc = &acc + &(&(a * x) * b);
    }
    Ok(acc)
}

/// n-fold iteration of E starting from X; order 0 returns X itself.
pub fn floor_power(p: &TuplePair, x: &ComplexMatrix, n: u32) -> Result<ComplexMatrix, DefectError> {
    check_operand(p, x)?;
    let mut acc = x.clone();
    for _ in 0..n {
        acc = apply_e(p, &acc)?;
    }
    Ok(acc)
}

/// Isometric defect Δᵐ(X) together with the largest term norm of the
/// alternating sum (the scale a zero test must use).
pub fn iso_defect_scaled(
    p: &TuplePair,
    m: u32,
    x: &ComplexMatrix,
) -> Result<(ComplexMatrix, f64), DefectError> {
    check_order(m)?;
    check_operand(p, x)?;
    let mut acc = ComplexMatrix::zeros(p.dim());
    let mut power = x.clone();
    let mut scale = 0.0_f64;
    for j in 0..=m {
        if j > 0 {
            power = apply_e(p, &power)?;
        }
        let coeff = binomial_coefficient(m, j) as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = power.scaled(Complex64::new(coeff, 0.0));
        scale = scale.max(term.frobenius_norm());
        acc = &acc + &term;
    }
    Ok((acc, scale))
}

/// Isometric defect Δᵐ(X) = Σⱼ (−1)ʲ C(m,j) Eʲ(X).
pub fn iso_defect(p: &TuplePair, m: u32, x: &ComplexMatrix) -> Result<ComplexMatrix, DefectError> {
    iso_defect_scaled(p, m, x).map(|(d, _)| d)
}

/// Enumerates all α ∈ ℕ^d with |α| = total.
fn for_each_composition(total: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(rest: u32, idx: usize, alpha: &mut [u32], f: &mut impl FnMut(&[u32])) {
        if idx == alpha.len() - 1 {
            alpha[idx] = rest;
            f(alpha);
            return;
        }
        for v in 0..=rest {
            alpha[idx] = v;
            rec(rest - v, idx + 1, alpha, f);
        }
    }
    let mut alpha = vec![0u32; parts];
    rec(total, 0, &mut alpha, f);
}

/// Number of multi-indices with |α| = j over d slots: C(j + d − 1, d − 1).
fn composition_count(j: u32, d: usize) -> u128 {
    binomial_coefficient(j + d as u32 - 1, d as u32 - 1) as u128
}

/// Direct multi-index evaluation of Δᵐ(I):
/// Σⱼ (−1)ʲ C(m,j) Σ_{|α|=j} (j!/α!) 𝔸^α 𝔹^α.
///
/// Independent oracle for `iso_defect`; the two agree exactly when both
/// tuples are internally commuting.
pub fn multi_index_defect(p: &TuplePair, m: u32) -> Result<ComplexMatrix, DefectError> {
    check_order(m)?;
    let d = p.d();
    let n = p.dim();

    let mut terms: u128 = 0;
    for j in 0..=m {
        terms += composition_count(j, d);
        if terms >= ENUMERATION_BUDGET {
            return Err(DefectError::EnumerationBudgetExceeded {
                terms,
                budget: ENUMERATION_BUDGET,
            });
        }
    }

    // memoized powers of each entry
    let pow_table = |ops: &[ComplexMatrix]| -> Vec<Vec<ComplexMatrix>> {
        ops.iter()
            .map(|op| {
                let mut powers = Vec::with_capacity(m as usize + 1);
                powers.push(ComplexMatrix::identity(n));
                for k in 1..=m {
                    powers.push(&powers[(k - 1) as usize] * op);
                }
                powers
            })
            .collect()
    };
    let left_pows = pow_table(p.left().entries());
    let right_pows = pow_table(p.right().entries());

    let mut acc = ComplexMatrix::zeros(n);
    for j in 0..=m {
        let outer = binomial_coefficient(m, j) as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
        let mut level = ComplexMatrix::zeros(n);
        for_each_composition(j, d, &mut |alpha| {
            let weight = multinomial(alpha) as f64;
            let mut left = left_pows[0][alpha[0] as usize].clone();
            for i in 1..d {
                left = &left * &left_pows[i][alpha[i] as usize];
            }
            let mut term = left;
            for i in 0..d {
                term = &term * &right_pows[i][alpha[i] as usize];
            }
            level = &level + &term.scaled(Complex64::new(weight, 0.0));
        });
        acc = &acc + &level.scaled(Complex64::new(outer, 0.0));
    }
    Ok(acc)
}

/// Symmetric defect δⁿ(X) with the largest term norm of the sum.
///
/// Computed through the summed operators: Σⱼ (−1)ʲ C(n,j) σ𝔸^{n−j} X σ𝔹ʲ.
pub fn sym_defect_scaled(
    p: &TuplePair,
    n: u32,
    x: &ComplexMatrix,
) -> Result<(ComplexMatrix, f64), DefectError> {
    check_order(n)?;
    check_operand(p, x)?;
    let dim = p.dim();
    let sa = sum_operator(p.left());
    let sb = sum_operator(p.right());
    let mut sa_pows = Vec::with_capacity(n as usize + 1);
    let mut sb_pows = Vec::with_capacity(n as usize + 1);
    sa_pows.push(ComplexMatrix::identity(dim));
    sb_pows.push(ComplexMatrix::identity(dim));
    for k in 1..=n {
        sa_pows.push(&sa_pows[(k - 1) as usize] * &sa);
        sb_pows.push(&sb_pows[(k - 1) as usize] * &sb);
    }
    let mut acc = ComplexMatrix::zeros(dim);
    let mut scale = 0.0_f64;
    for j in 0..=n {
        let coeff = binomial_coefficient(n, j) as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
        let sandwich = &(&sa_pows[(n - j) as usize] * x) * &sb_pows[j as usize];
        let term = sandwich.scaled(Complex64::new(coeff, 0.0));
        scale = scale.max(term.frobenius_norm());
        acc = &acc + &term;
    }
    Ok((acc, scale))
}

/// Symmetric defect δⁿ(X) = (L_𝔸 − R_𝔹)ⁿ(X).
pub fn sym_defect(p: &TuplePair, n: u32, x: &ComplexMatrix) -> Result<ComplexMatrix, DefectError> {
    sym_defect_scaled(p, n, x).map(|(d, _)| d)
}

/// Defect of the given kind at order k, with its zero-test scale.
pub fn defect_scaled(
    p: &TuplePair,
    kind: DefectKind,
    k: u32,
    x: &ComplexMatrix,
) -> Result<(ComplexMatrix, f64), DefectError> {
    match kind {
        DefectKind::Isometric => iso_defect_scaled(p, k, x),
        DefectKind::Symmetric => sym_defect_scaled(p, k, x),
    }
}

// Extra orders probed past a detected strict order before stopping; a
// nonzero probe after a zero one is a tolerance anomaly, not a result.
const CONFIRM_PROBES: u32 = 2;

/// Ascending search for the strict order: the least k ≤ max_m with
/// ‖defect_k(I)‖ ≤ τ (the previous probe being nonzero by construction).
pub fn strictness_order(
    p: &TuplePair,
    kind: DefectKind,
    max_m: u32,
    tol: &Tolerance,
) -> Result<DefectReport, DefectError> {
    if max_m == 0 {
        return Err(DefectError::PreconditionFailed(
            "max_m must be at least 1".into(),
        ));
    }
    check_order(max_m)?;
    let identity = ComplexMatrix::identity(p.dim());
    let mut probes = Vec::new();
    let mut strict_order: Option<u32> = None;
    let mut searched = 0;
    for k in 1..=max_m {
        let (defect, scale) = defect_scaled(p, kind, k, &identity)?;
        let norm = defect.frobenius_norm();
        let threshold = tol.threshold(scale);
        probes.push((k, norm));
        searched = k;
        if norm <= threshold {
            strict_order = Some(k);
            break;
        }
    }
    // monotonicity guard: a nonzero probe after the detected zero is an
    // anomaly of the tolerance, not a strict order
    if let Some(zero_at) = strict_order {
        for k in (zero_at + 1)..=max_m.min(zero_at + CONFIRM_PROBES) {
            let (defect, scale) = defect_scaled(p, kind, k, &identity)?;
            let norm = defect.frobenius_norm();
            let threshold = tol.threshold(scale);
            searched = k;
            if norm > threshold {
                return Err(DefectError::ToleranceAnomaly {
                    zero_at,
                    nonzero_at: k,
                    norm,
                    threshold,
                });
            }
        }
    }
    Ok(DefectReport {
        kind,
        probes,
        strict_order,
        max_order_searched: searched,
    })
}

/// Sign choice in the E^{t±r} exponents of the independence families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentSign {
    Plus,
    Minus,
}

/// Ranks of the independence families built from a strict pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRankReport {
    pub strict_order: u32,
    pub expected_rank: usize,
    /// One rank per family: a single family for the isometric kind,
    /// the left and right families for the symmetric kind.
    pub ranks: Vec<usize>,
}

impl LemmaRankReport {
    pub fn all_match(&self) -> bool {
        self.ranks.iter().all(|&r| r == self.expected_rank)
    }
}

/// Builds the independence families of a strict pair and returns their
/// numerical ranks; the predicted rank is the strict order m.
///
/// Isometric: {E^{t±r} Δʳ(I)} for r = 0..m−1 (the sign picks t+r or t−r;
/// t ≥ m−1 keeps every exponent nonnegative). Symmetric: {σ𝔸ʳ·δʳ(I)} and
/// {δʳ(I)·σ𝔹ʳ}, guarded by ‖σ𝔸^{m−1}·δ^{m−1}(I)‖ > τ; `t` and `sign` are
/// not used.
pub fn lemma_independence_rank(
    p: &TuplePair,
    kind: DefectKind,
    t: u32,
    sign: ExponentSign,
    tol: &Tolerance,
) -> Result<LemmaRankReport, DefectError> {
    let report = strictness_order(p, kind, ORDER_CAP, tol)?;
    let m = report.strict_order.ok_or_else(|| {
        DefectError::PreconditionFailed(format!(
            "no strict order up to {ORDER_CAP} detected for the {} defect",
            kind.label()
        ))
    })?;
    let identity = ComplexMatrix::identity(p.dim());

    let ranks = match kind {
        DefectKind::Isometric => {
            if t + 1 < m {
                return Err(DefectError::PreconditionFailed(format!(
                    "t = {t} must be at least m − 1 = {}",
                    m - 1
                )));
            }
            let mut family = Vec::with_capacity(m as usize);
            for r in 0..m {
                let exponent = match sign {
                    ExponentSign::Plus => t + r,
                    ExponentSign::Minus => t - r,
                };
                let defect = iso_defect(p, r, &identity)?;
                family.push(floor_power(p, &defect, exponent)?);
            }
            vec![rank_of_family(&family, tol)?]
        }
        DefectKind::Symmetric => {
            let sa = sum_operator(p.left());
            let sb = sum_operator(p.right());
            let top_defect = sym_defect(p, m - 1, &identity)?;
            let sa_top = sa.pow(m - 1);
            let guard = &sa_top * &top_defect;
            let guard_scale = sa_top.frobenius_norm() * top_defect.frobenius_norm();
            if guard.frobenius_norm() <= tol.threshold(guard_scale) {
                return Err(DefectError::PreconditionFailed(format!(
                    "σ𝔸^{}·δ^{}(I) vanishes; the symmetric lemma hypothesis fails",
                    m - 1,
                    m - 1
                )));
            }
            let mut left_family = Vec::with_capacity(m as usize);
            let mut right_family = Vec::with_capacity(m as usize);
            for r in 0..m {
                let defect = sym_defect(p, r, &identity)?;
                left_family.push(&sa.pow(r) * &defect);
                right_family.push(&defect * &sb.pow(r));
            }
            vec![
                rank_of_family(&left_family, tol)?,
                rank_of_family(&right_family, tol)?,
            ]
        }
    };

    Ok(LemmaRankReport {
        strict_order: m,
        expected_rank: m as usize,
        ranks,
    })
}

/// Residual of the finite expansion identity together with the largest
/// summand norm the tolerance must be scaled by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCheck {
    pub residual: f64,
    pub scale: f64,
}

/// Checks Eⁿ(I) = Σ_{j<m} C(n,j) ∇ʲ(I) for an m-isometric pair, where
/// ∇ = E − Id so that ∇ʲ(I) = (−1)ʲ Δʲ(I). Returns the Frobenius residual
/// and the largest summand norm.
pub fn forward_expansion_residual(
    p: &TuplePair,
    m: u32,
    n: u32,
    tol: &Tolerance,
) -> Result<ExpansionCheck, DefectError> {
    if m == 0 {
        return Err(DefectError::PreconditionFailed("m must be positive".into()));
    }
    check_order(m)?;
    if n < m {
        return Err(DefectError::PreconditionFailed(format!(
            "n = {n} must be at least m = {m}"
        )));
    }
    if n > EXPANSION_CAP {
        return Err(DefectError::OrderTooLarge {
            order: n,
            cap: EXPANSION_CAP,
        });
    }
    let identity = ComplexMatrix::identity(p.dim());
    let (defect_m, defect_scale) = iso_defect_scaled(p, m, &identity)?;
    if defect_m.frobenius_norm() > tol.threshold(defect_scale) {
        return Err(DefectError::PreconditionFailed(format!(
            "pair is not {m}-isometric: ‖Δ^{m}(I)‖ = {:.3e}",
            defect_m.frobenius_norm()
        )));
    }

    let lhs = floor_power(p, &identity, n)?;
    let mut scale = lhs.frobenius_norm();
    let mut rhs = ComplexMatrix::zeros(p.dim());
    for j in 0..m {
        let nabla_sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = binomial_coefficient(n, j) as f64 * nabla_sign;
        let term = iso_defect(p, j, &identity)?.scaled(Complex64::new(coeff, 0.0));
        scale = scale.max(term.frobenius_norm());
        rhs = &rhs + &term;
    }
    Ok(ExpansionCheck {
        residual: (&lhs - &rhs).frobenius_norm(),
        scale,
    })
}

/// Frobenius norm (and zero-test scale) of the order-m defect of the
/// tensor pair of `p1` and `p2`, computed in factorized form.
///
/// The defect is Σⱼ cⱼ Xⱼ⊗Yⱼ with small factors Xⱼ, Yⱼ, so the left
/// factors are orthonormalized and the right factors recombined per basis
/// direction: ‖Σⱼ cⱼ Xⱼ⊗Yⱼ‖² = Σₐ ‖Σⱼ cⱼ R_{aj} Yⱼ‖². No matrix of
/// dimension n₁·n₂ is ever formed, and cancellation stays entrywise.
pub fn tensor_defect_norm(
    p1: &TuplePair,
    p2: &TuplePair,
    kind: DefectKind,
    m: u32,
) -> Result<(f64, f64), DefectError> {
    check_order(m)?;
    let n1 = p1.dim();
    let id1 = ComplexMatrix::identity(n1);
    let id2 = ComplexMatrix::identity(p2.dim());

    let mut lefts = Vec::with_capacity(m as usize + 1);
    let mut rights = Vec::with_capacity(m as usize + 1);
    match kind {
        DefectKind::Isometric => {
            let mut x = id1;
            let mut y = id2;
            for j in 0..=m {
                if j > 0 {
                    x = apply_e(p1, &x)?;
                    y = apply_e(p2, &y)?;
                }
                lefts.push(x.clone());
                rights.push(y.clone());
            }
        }
        DefectKind::Symmetric => {
            let sa1 = sum_operator(p1.left());
            let sb1 = sum_operator(p1.right());
            let sa2 = sum_operator(p2.left());
            let sb2 = sum_operator(p2.right());
            for j in 0..=m {
                lefts.push(&sa1.pow(m - j) * &sb1.pow(j));
                rights.push(&sa2.pow(m - j) * &sb2.pow(j));
            }
        }
    }

    let mut scale = 0.0_f64;
    let mut gs = GramSchmidt::new(n1 * n1);
    let mut combined: Vec<ComplexMatrix> = Vec::new();
    for (j, (x, y)) in lefts.iter().zip(rights.iter()).enumerate() {
        let coeff = binomial_coefficient(m, j as u32) as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
        scale = scale.max(coeff.abs() * x.frobenius_norm() * y.frobenius_norm());
        let proj = gs.project_and_push(x.entries(), 0.0);
        for (a, &r) in proj.coeffs.iter().enumerate() {
            let w = r * Complex64::new(coeff, 0.0);
            combined[a] = &combined[a] + &y.scaled(w);
        }
        if proj.appended {
            combined.push(y.scaled(Complex64::new(coeff * proj.residual, 0.0)));
        }
    }
    let norm_sq: f64 = combined
        .iter()
        .map(|z| {
            let n = z.frobenius_norm();
            n * n
        })
        .sum();
    Ok((norm_sq.sqrt(), scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::{hilbert_pair, scale_pair, tensor_pair, OperatorTuple};

    fn nilpotent(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |i, j| {
            if j == i + 1 {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        })
    }

    fn unipotent(n: usize) -> ComplexMatrix {
        &ComplexMatrix::identity(n) + &nilpotent(n)
    }

    fn jordan_pair(m: usize) -> TuplePair {
        TuplePair::from_single(unipotent(m), ComplexMatrix::identity(m)).unwrap()
    }

    /// The ⊕-block tuple pairs built from a d = 1 base pair (A, B).
    fn block_pairs(a: &ComplexMatrix, b: &ComplexMatrix, d: usize) -> (TuplePair, TuplePair) {
        let id = ComplexMatrix::identity(a.dim());
        let s = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mk = |m: &ComplexMatrix| {
            OperatorTuple::new(vec![m.scaled(s); d]).unwrap()
        };
        let p1 = TuplePair::new(mk(&a.direct_sum(&id)), mk(&b.direct_sum(&id))).unwrap();
        let p2 = TuplePair::new(mk(&id.direct_sum(a)), mk(&id.direct_sum(b))).unwrap();
        (p1, p2)
    }

    #[test]
    fn binomials_are_exact() {
        assert_eq!(binomial_coefficient(0, 0), 1);
        assert_eq!(binomial_coefficient(5, 2), 10);
        assert_eq!(binomial_coefficient(30, 15), 155_117_520);
        assert_eq!(binomial_coefficient(60, 30), 118_264_581_564_861_424);
        assert_eq!(binomial_coefficient(4, 7), 0);
    }

    #[test]
    fn multinomial_weights_sum_to_power() {
        // Σ_{|α|=2, d=3} 2!/α! = 3² = 9
        let mut total = 0i128;
        for_each_composition(2, 3, &mut |alpha| total += multinomial(alpha));
        assert_eq!(total, 9);
    }

    #[test]
    fn apply_e_identity_pair_is_identity_map() {
        let p = TuplePair::from_single(ComplexMatrix::identity(2), ComplexMatrix::identity(2))
            .unwrap();
        let x = ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
        assert_eq!((&apply_e(&p, &x).unwrap() - &x).frobenius_norm(), 0.0);
    }

    #[test]
    fn apply_e_two_term_sum() {
        // d = 2, p = ((N₂, I), (I, N₂)), X = I → N + N = 2N
        let n2 = nilpotent(2);
        let i2 = ComplexMatrix::identity(2);
        let p = TuplePair::new(
            OperatorTuple::new(vec![n2.clone(), i2.clone()]).unwrap(),
            OperatorTuple::new(vec![i2.clone(), n2.clone()]).unwrap(),
        )
        .unwrap();
        let out = apply_e(&p, &i2).unwrap();
        assert_eq!((&out - &n2.scaled(Complex64::new(2.0, 0.0))).frobenius_norm(), 0.0);
    }

    #[test]
    fn apply_e_rejects_wrong_operand() {
        let p = jordan_pair(2);
        match apply_e(&p, &ComplexMatrix::identity(3)) {
            Err(DefectError::DimensionMismatch { .. }) => {}
            other => panic!("expected DimensionMismatch, got {other:?}"),
        }
    }

    #[test]
    fn floor_power_order_zero_is_operand() {
        let p = jordan_pair(3);
        let x = ComplexMatrix::from_fn(3, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!((&floor_power(&p, &x, 0).unwrap() - &x).frobenius_norm(), 0.0);
    }

    #[test]
    fn floor_power_singleton_is_sandwich_power() {
        // d = 1: ⌊AB⌋ⁿ = AⁿXBⁿ at X = I
        let a = unipotent(3);
        let b = ComplexMatrix::from_real_rows(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 2.0]]);
        let p = TuplePair::from_single(a.clone(), b.clone()).unwrap();
        let i3 = ComplexMatrix::identity(3);
        for n in 0..5u32 {
            let lhs = floor_power(&p, &i3, n).unwrap();
            let rhs = &a.pow(n) * &b.pow(n);
            assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * rhs.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn floor_power_factorizes_over_tensor_pairs() {
        let p1 = TuplePair::from_single(unipotent(2), nilpotent(2).adjoint()).unwrap();
        let p2 = TuplePair::from_single(
            ComplexMatrix::from_real_rows(&[&[0.5, 1.0], &[0.0, -0.5]]),
            unipotent(2),
        )
        .unwrap();
        let tp = tensor_pair(&p1, &p2).unwrap();
        let i2 = ComplexMatrix::identity(2);
        let i4 = ComplexMatrix::identity(4);
        for j in 0..=4u32 {
            let lhs = floor_power(&tp, &i4, j).unwrap();
            let rhs = floor_power(&p1, &i2, j)
                .unwrap()
                .kron(&floor_power(&p2, &i2, j).unwrap());
            assert!(
                (&lhs - &rhs).frobenius_norm() <= 1e-12 * rhs.frobenius_norm().max(1.0),
                "order {j}"
            );
        }
    }

    #[test]
    fn iso_defect_of_identity_pair_vanishes_at_order_one() {
        let p = TuplePair::from_single(ComplexMatrix::identity(2), ComplexMatrix::identity(2))
            .unwrap();
        let d = iso_defect(&p, 1, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(d.frobenius_norm(), 0.0);
    }

    #[test]
    fn iso_defect_of_unipotent_jordan_three() {
        let p = jordan_pair(3);
        let i3 = ComplexMatrix::identity(3);
        let n3 = nilpotent(3);
        let d2 = iso_defect(&p, 2, &i3).unwrap();
        assert!((&d2 - &(&n3 * &n3)).frobenius_norm() <= 1e-14);
        let d3 = iso_defect(&p, 3, &i3).unwrap();
        assert!(d3.frobenius_norm() <= 1e-14);
    }

    #[test]
    fn iso_defect_of_block_pair_vanishes_at_base_order() {
        // (A, B) strict 2-isometric base → Δ²_{𝔸₁,𝔹₁}(I₂) = 0, Δ¹ ≠ 0
        let (p1, _) = block_pairs(&unipotent(2), &ComplexMatrix::identity(2), 2);
        let i4 = ComplexMatrix::identity(4);
        let d2 = iso_defect(&p1, 2, &i4).unwrap();
        assert!(d2.frobenius_norm() <= 1e-13);
        let d1 = iso_defect(&p1, 1, &i4).unwrap();
        assert!(d1.frobenius_norm() > 0.5);
    }

    #[test]
    fn multi_index_matches_recursion_for_singletons() {
        let p = TuplePair::from_single(
            ComplexMatrix::from_real_rows(&[&[1.0, 0.3], &[-0.2, 0.8]]),
            ComplexMatrix::from_real_rows(&[&[0.9, -0.1], &[0.4, 1.1]]),
        )
        .unwrap();
        let i2 = ComplexMatrix::identity(2);
        for m in 0..=4u32 {
            let a = iso_defect(&p, m, &i2).unwrap();
            let b = multi_index_defect(&p, m).unwrap();
            assert!((&a - &b).frobenius_norm() <= 1e-12, "order {m}");
        }
    }

    #[test]
    fn multi_index_matches_recursion_for_shift_pair() {
        // d = 2, m = 2, p = ((N₂, I), (I, N₂)); both routes give I − 4N
        let n2 = nilpotent(2);
        let i2 = ComplexMatrix::identity(2);
        let p = TuplePair::new(
            OperatorTuple::new(vec![n2.clone(), i2.clone()]).unwrap(),
            OperatorTuple::new(vec![i2.clone(), n2.clone()]).unwrap(),
        )
        .unwrap();
        let via_recursion = iso_defect(&p, 2, &i2).unwrap();
        let via_enumeration = multi_index_defect(&p, 2).unwrap();
        assert!((&via_recursion - &via_enumeration).frobenius_norm() <= 1e-12);
        let expected = &i2 - &n2.scaled(Complex64::new(4.0, 0.0));
        assert!((&via_recursion - &expected).frobenius_norm() <= 1e-14);
    }

    #[test]
    fn sym_defect_of_equal_pair_vanishes() {
        let m = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[0.0, -1.0]]);
        let p = TuplePair::from_single(m.clone(), m).unwrap();
        let d = sym_defect(&p, 1, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(d.frobenius_norm(), 0.0);
    }

    #[test]
    fn sym_defect_of_unipotent_jordan_two() {
        let p = jordan_pair(2);
        let i2 = ComplexMatrix::identity(2);
        let d1 = sym_defect(&p, 1, &i2).unwrap();
        assert!((&d1 - &nilpotent(2)).frobenius_norm() <= 1e-14);
        let d2 = sym_defect(&p, 2, &i2).unwrap();
        assert!(d2.frobenius_norm() <= 1e-14);
    }

    #[test]
    fn sym_defect_of_block_pair_is_base_defect_padded() {
        // strict m-symmetric base → δᵐ(I₂) = δᵐ_{A,B}(I) ⊕ 0 = 0
        let (p1, _) = block_pairs(&unipotent(3), &ComplexMatrix::identity(3), 2);
        let i6 = ComplexMatrix::identity(6);
        let d3 = sym_defect(&p1, 3, &i6).unwrap();
        assert!(d3.frobenius_norm() <= 1e-12);
        let d2 = sym_defect(&p1, 2, &i6).unwrap();
        assert!(d2.frobenius_norm() > 0.5);
    }

    #[test]
    fn hilbert_pair_defects() {
        let tol = Tolerance::default();
        // unitary diagonal → 1-isometric
        let theta = [0.3, -1.2];
        let u = ComplexMatrix::from_fn(2, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, theta[i])
            } else {
                Complex64::ZERO
            }
        });
        let p = hilbert_pair(&OperatorTuple::single(u));
        let report = strictness_order(&p, DefectKind::Isometric, 3, &tol).unwrap();
        assert_eq!(report.strict_order, Some(1));

        // t = (2I): Δ¹(I) = I − 4I = −3I
        let p = hilbert_pair(&OperatorTuple::single(
            ComplexMatrix::identity(2).scaled(Complex64::new(2.0, 0.0)),
        ));
        let d1 = iso_defect(&p, 1, &ComplexMatrix::identity(2)).unwrap();
        let expected = ComplexMatrix::identity(2).scaled(Complex64::new(-3.0, 0.0));
        assert!((&d1 - &expected).frobenius_norm() <= 1e-14);

        // real symmetric A → 1-symmetric
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, -0.5]]);
        let p = hilbert_pair(&OperatorTuple::single(a));
        let d1 = sym_defect(&p, 1, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(d1.frobenius_norm(), 0.0);
    }

    #[test]
    fn strictness_of_identity_pair() {
        let tol = Tolerance::default();
        let p = TuplePair::from_single(ComplexMatrix::identity(2), ComplexMatrix::identity(2))
            .unwrap();
        let report = strictness_order(&p, DefectKind::Isometric, 5, &tol).unwrap();
        assert_eq!(report.strict_order, Some(1));
        // probes stop at the detected order; the guard probes only extend
        // max_order_searched
        assert_eq!(report.probes, vec![(1, 0.0)]);
        assert_eq!(report.max_order_searched, 3);
    }

    #[test]
    fn defect_order_cap_is_enforced() {
        let p = jordan_pair(2);
        let i2 = ComplexMatrix::identity(2);
        match iso_defect(&p, 31, &i2) {
            Err(DefectError::OrderTooLarge { order: 31, cap: 30 }) => {}
            other => panic!("expected OrderTooLarge, got {other:?}"),
        }
        assert!(sym_defect(&p, 31, &i2).is_err());
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        // d = 8 at order 30 needs more than 10^7 multi-indices
        let one = ComplexMatrix::identity(1);
        let t = OperatorTuple::new(vec![one.clone(); 8]).unwrap();
        let p = TuplePair::new(t.clone(), t).unwrap();
        match multi_index_defect(&p, 30) {
            Err(DefectError::EnumerationBudgetExceeded { .. }) => {}
            other => panic!("expected EnumerationBudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_lemma_guard_rejects_vanishing_product() {
        // ((N₂), (0)): strict 2-symmetric, but σ𝔸·δ¹(I) = N² = 0
        let tol = Tolerance::default();
        let p = TuplePair::from_single(nilpotent(2), ComplexMatrix::zeros(2)).unwrap();
        match lemma_independence_rank(&p, DefectKind::Symmetric, 1, ExponentSign::Plus, &tol) {
            Err(DefectError::PreconditionFailed(_)) => {}
            other => panic!("expected PreconditionFailed, got {other:?}"),
        }
    }

    #[test]
    fn strictness_of_jordan_three() {
        let tol = Tolerance::default();
        let report = strictness_order(&jordan_pair(3), DefectKind::Isometric, 10, &tol).unwrap();
        assert_eq!(report.strict_order, Some(3));
        assert!(report.probes[0].1 > 0.5 && report.probes[1].1 > 0.5);
        assert!(report.probes[2].1 <= 1e-12);
    }

    #[test]
    fn strictness_of_block_product_pair_stays_at_base_order() {
        // product of the two strict 2-isometric block pairs is strict
        // 2-isometric, not strict 3-isometric
        let tol = Tolerance::default();
        let (p1, p2) = block_pairs(&unipotent(2), &ComplexMatrix::identity(2), 2);
        let prod = crate::tuple::product_pair(&p1, &p2, &tol).unwrap();
        let report = strictness_order(&prod, DefectKind::Isometric, 5, &tol).unwrap();
        assert_eq!(report.strict_order, Some(2));
    }

    #[test]
    fn strictness_reports_no_order_when_probes_stay_nonzero() {
        let tol = Tolerance::default();
        let p = TuplePair::from_single(
            ComplexMatrix::identity(2).scaled(Complex64::new(2.0, 0.0)),
            ComplexMatrix::identity(2),
        )
        .unwrap();
        let report = strictness_order(&p, DefectKind::Isometric, 6, &tol).unwrap();
        assert_eq!(report.strict_order, None);
        assert_eq!(report.max_order_searched, 6);
    }

    #[test]
    fn strictness_flags_tolerance_anomaly() {
        // diag(1, 3) with a huge absolute floor: ‖Δ¹‖ = 2 ≤ 3 reads as
        // zero, ‖Δ²‖ = 4 > 3 contradicts monotonicity
        let tol = Tolerance::new(3.0, 1e-9);
        let p = TuplePair::from_single(
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 3.0]]),
            ComplexMatrix::identity(2),
        )
        .unwrap();
        match strictness_order(&p, DefectKind::Isometric, 6, &tol) {
            Err(DefectError::ToleranceAnomaly {
                zero_at: 1,
                nonzero_at: 2,
                ..
            }) => {}
            other => panic!("expected ToleranceAnomaly, got {other:?}"),
        }
    }

    #[test]
    fn lemma_rank_of_identity_pair() {
        let tol = Tolerance::default();
        let p = TuplePair::from_single(ComplexMatrix::identity(2), ComplexMatrix::identity(2))
            .unwrap();
        let report =
            lemma_independence_rank(&p, DefectKind::Isometric, 1, ExponentSign::Plus, &tol)
                .unwrap();
        assert_eq!(report.strict_order, 1);
        assert_eq!(report.ranks, vec![1]);
    }

    #[test]
    fn lemma_rank_of_jordan_three_both_signs() {
        let tol = Tolerance::default();
        let p = jordan_pair(3);
        for sign in [ExponentSign::Plus, ExponentSign::Minus] {
            let report = lemma_independence_rank(&p, DefectKind::Isometric, 2, sign, &tol).unwrap();
            assert_eq!(report.strict_order, 3);
            assert_eq!(report.ranks, vec![3], "sign {sign:?}");
        }
    }

    #[test]
    fn lemma_rank_symmetric_families() {
        let tol = Tolerance::default();
        let p = jordan_pair(3);
        let report =
            lemma_independence_rank(&p, DefectKind::Symmetric, 2, ExponentSign::Plus, &tol)
                .unwrap();
        assert_eq!(report.strict_order, 3);
        assert_eq!(report.ranks, vec![3, 3]);
    }

    #[test]
    fn lemma_rank_rejects_small_t() {
        let tol = Tolerance::default();
        let p = jordan_pair(3);
        match lemma_independence_rank(&p, DefectKind::Isometric, 1, ExponentSign::Minus, &tol) {
            Err(DefectError::PreconditionFailed(_)) => {}
            other => panic!("expected PreconditionFailed, got {other:?}"),
        }
    }

    #[test]
    fn expansion_identity_for_identity_pair() {
        let tol = Tolerance::default();
        let p = TuplePair::from_single(ComplexMatrix::identity(2), ComplexMatrix::identity(2))
            .unwrap();
        let check = forward_expansion_residual(&p, 1, 7, &tol).unwrap();
        assert!(check.residual <= 1e-14);
    }

    #[test]
    fn expansion_identity_for_jordan_pairs() {
        let tol = Tolerance::default();
        // (I+N₂, I), m = 2, n = 5: (I+N)⁵ = C(5,0)∇⁰ + C(5,1)∇¹
        let check = forward_expansion_residual(&jordan_pair(2), 2, 5, &tol).unwrap();
        assert!(check.residual <= 1e-12 * check.scale.max(1.0));
        let check = forward_expansion_residual(&jordan_pair(3), 3, 7, &tol).unwrap();
        assert!(check.residual <= 1e-10 * check.scale.max(1.0));
    }

    #[test]
    fn expansion_identity_rejects_non_isometric_pair() {
        let tol = Tolerance::default();
        let p = TuplePair::from_single(
            ComplexMatrix::identity(2).scaled(Complex64::new(2.0, 0.0)),
            ComplexMatrix::identity(2),
        )
        .unwrap();
        match forward_expansion_residual(&p, 2, 4, &tol) {
            Err(DefectError::PreconditionFailed(_)) => {}
            other => panic!("expected PreconditionFailed, got {other:?}"),
        }
    }

    #[test]
    fn factorized_tensor_norm_matches_materialized_defect() {
        let p1 = TuplePair::from_single(
            unipotent(2),
            ComplexMatrix::identity(2).scaled(Complex64::new(2.0, 0.0)),
        )
        .unwrap();
        let p2 = TuplePair::from_single(
            unipotent(3),
            ComplexMatrix::identity(3).scaled(Complex64::new(0.5, 0.0)),
        )
        .unwrap();
        let tp = tensor_pair(&p1, &p2).unwrap();
        let i6 = ComplexMatrix::identity(6);
        for m in 1..=5u32 {
            let (norm, scale) = tensor_defect_norm(&p1, &p2, DefectKind::Isometric, m).unwrap();
            let (mat, mat_scale) = iso_defect_scaled(&tp, m, &i6).unwrap();
            assert!(
                (norm - mat.frobenius_norm()).abs() <= 1e-11 * mat_scale.max(1.0),
                "order {m}: factorized {norm}, materialized {}",
                mat.frobenius_norm()
            );
            assert!((scale - mat_scale).abs() <= 1e-9 * mat_scale.max(1.0), "order {m} scale");
        }
        // the planted tensor pair is strict 4-isometric
        let (n4, s4) = tensor_defect_norm(&p1, &p2, DefectKind::Isometric, 4).unwrap();
        assert!(n4 <= 1e-12 * s4.max(1.0));
        let (n3, _) = tensor_defect_norm(&p1, &p2, DefectKind::Isometric, 3).unwrap();
        assert!(n3 > 0.5);
    }

    #[test]
    fn factorized_tensor_norm_symmetric_route() {
        let p1 = TuplePair::from_single(
            unipotent(2),
            ComplexMatrix::identity(2).scaled(Complex64::new(3.0, 0.0)),
        )
        .unwrap();
        let p2 = TuplePair::from_single(
            unipotent(3),
            ComplexMatrix::identity(3).scaled(Complex64::new(1.0 / 3.0, 0.0)),
        )
        .unwrap();
        let tp = tensor_pair(&p1, &p2).unwrap();
        let i6 = ComplexMatrix::identity(6);
        for m in 1..=5u32 {
            let (norm, scale) = tensor_defect_norm(&p1, &p2, DefectKind::Symmetric, m).unwrap();
            let (mat, mat_scale) = sym_defect_scaled(&tp, m, &i6).unwrap();
            assert!(
                (norm - mat.frobenius_norm()).abs() <= 1e-11 * mat_scale.max(1.0),
                "order {m}"
            );
            let _ = scale;
        }
        let (n4, s4) = tensor_defect_norm(&p1, &p2, DefectKind::Symmetric, 4).unwrap();
        assert!(n4 <= 1e-12 * s4.max(1.0));
    }

    #[test]
    fn gauge_cancels_in_tensor_defects() {
        let p1 = jordan_pair(2);
        let p2 = jordan_pair(3);
        let c = Complex64::new(0.7, -1.3);
        let q1 = scale_pair(&p1, Complex64::ONE / c).unwrap();
        let q2 = scale_pair(&p2, c).unwrap();
        for m in 1..=4u32 {
            let (a, s) = tensor_defect_norm(&p1, &p2, DefectKind::Isometric, m).unwrap();
            let (b, _) = tensor_defect_norm(&q1, &q2, DefectKind::Isometric, m).unwrap();
            assert!((a - b).abs() <= 1e-10 * s.max(1.0), "order {m}");
        }
    }
}
