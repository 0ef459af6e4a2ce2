//! Property tests for the algebraic identities the library is built on:
//! Kronecker laws, defect recursion and commutation identities, the
//! enumeration oracle, the symmetric-to-isometric bridge, tensor defect
//! factorization and the inverse-problem round trip.

use defectcalc_core::decompose::{decompose_iso, extract_repeated_root, MinPoly};
use defectcalc_core::defect::{
    apply_e, binomial_coefficient, floor_power, iso_defect, iso_defect_scaled,
    multi_index_defect, strictness_order, sym_defect, DefectKind,
};
use defectcalc_core::factory::{gen_jordan_iso, gen_random_commuting, random_similarity};
use defectcalc_core::matrix::{rank_of_family, ComplexMatrix, Tolerance};
use defectcalc_core::tuple::{
    scale_pair, sum_operator, tensor_pair, OperatorTuple, TuplePair,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    })
}

/// Two internally commuting tuples sharing nothing (independent bases).
fn random_pair(seed: u64, d: usize, n: usize) -> TuplePair {
    let left = gen_random_commuting(seed, d, n, 2).unwrap();
    let right = gen_random_commuting(seed.wrapping_add(0x5DEECE66D), d, n, 2).unwrap();
    TuplePair::new(left, right).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_mixed_product_law(seed in any::<u64>(), na in 1usize..=4, nb in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, na);
        let b = random_matrix(&mut rng, nb);
        let c = random_matrix(&mut rng, na);
        let d = random_matrix(&mut rng, nb);
        let lhs = &a.kron(&b) * &c.kron(&d);
        let rhs = (&a * &c).kron(&(&b * &d));
        let scale = lhs.frobenius_norm().max(rhs.frobenius_norm()).max(1.0);
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * scale);
    }

    #[test]
    fn inverse_roundtrips_when_it_succeeds(seed in any::<u64>(), n in 1usize..=5) {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_matrix(&mut rng, n);
        let norm = raw.frobenius_norm();
        prop_assume!(norm > 1e-6);
        let a = &ComplexMatrix::identity(n) + &raw.scaled(Complex64::new(0.5 / norm, 0.0));
        let inv = a.inverse(&tol).unwrap();
        let id = ComplexMatrix::identity(n);
        let tau = tol.threshold(a.frobenius_norm() * inv.frobenius_norm());
        prop_assert!((&(&a * &inv) - &id).frobenius_norm() <= tau);
        prop_assert!((&(&inv * &a) - &id).frobenius_norm() <= tau);
    }

    #[test]
    fn rank_is_permutation_and_scaling_invariant(seed in any::<u64>(), n in 1usize..=3) {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, n);
        let b = random_matrix(&mut rng, n);
        let combo = &a.scaled(Complex64::new(0.5, -1.0)) + &b;
        let family = vec![a.clone(), b.clone(), combo];
        let base = rank_of_family(&family, &tol).unwrap();

        let permuted = vec![family[2].clone(), family[0].clone(), family[1].clone()];
        prop_assert_eq!(rank_of_family(&permuted, &tol).unwrap(), base);

        let c = Complex64::new(rng.random_range(0.1..3.0), rng.random_range(-2.0..2.0));
        let scaled = vec![family[0].scaled(c), family[1].clone(), family[2].clone()];
        prop_assert_eq!(rank_of_family(&scaled, &tol).unwrap(), base);
    }

    #[test]
    fn sum_operator_is_linear(seed in any::<u64>(), d in 1usize..=3, n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<_> = (0..d).map(|_| random_matrix(&mut rng, n)).collect();
        let t = OperatorTuple::new(entries).unwrap();
        let c = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = sum_operator(&t.scaled(c));
        let rhs = sum_operator(&t).scaled(c);
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * rhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn recursion_consistency(seed in any::<u64>(), d in 1usize..=3, n in 2usize..=4, m in 1u32..=4) {
        // Δᵐ(X) = Δ^{m−1}(X) − E(Δ^{m−1}(X))
        let p = random_pair(seed, d, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let x = random_matrix(&mut rng, n);
        let (full, scale) = iso_defect_scaled(&p, m, &x).unwrap();
        let prev = iso_defect(&p, m - 1, &x).unwrap();
        let step = &prev - &apply_e(&p, &prev).unwrap();
        prop_assert!((&full - &step).frobenius_norm() <= 1e-11 * scale.max(1.0));
    }

    #[test]
    fn defect_commutes_with_e(seed in any::<u64>(), d in 1usize..=3, n in 2usize..=4, k in 1u32..=3) {
        let p = random_pair(seed, d, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1234);
        let x = random_matrix(&mut rng, n);
        let lhs = apply_e(&p, &iso_defect(&p, k, &x).unwrap()).unwrap();
        let rhs = iso_defect(&p, k, &apply_e(&p, &x).unwrap()).unwrap();
        let scale = lhs.frobenius_norm().max(rhs.frobenius_norm()).max(1.0);
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-11 * scale);
    }

    #[test]
    fn enumeration_oracle_matches_recursion(seed in any::<u64>(), d in 1usize..=3, n in 2usize..=4, m in 1u32..=4) {
        let p = random_pair(seed, d, n);
        let identity = ComplexMatrix::identity(n);
        let (via_recursion, scale) = iso_defect_scaled(&p, m, &identity).unwrap();
        let via_enumeration = multi_index_defect(&p, m).unwrap();
        prop_assert!(
            (&via_recursion - &via_enumeration).frobenius_norm() <= 1e-10 * scale.max(1.0)
        );
    }

    #[test]
    fn symmetric_isometric_bridge(seed in any::<u64>(), d in 1usize..=3, n in 2usize..=4, m in 1u32..=4) {
        // δᵐ(I) = σ𝔸ᵐ · Δᵐ for the pair ((σ𝔸)⁻¹, σ𝔹), when σ𝔸 is invertible
        let tol = Tolerance::default();
        let p = random_pair(seed, d, n);
        let sa = sum_operator(p.left());
        let Ok(sa_inv) = sa.inverse(&tol) else {
            return Ok(()); // singular σ𝔸: bridge hypothesis not met
        };
        prop_assume!(sa.frobenius_norm() * sa_inv.frobenius_norm() / n as f64 <= 50.0);
        let sb = sum_operator(p.right());
        let aux = TuplePair::from_single(sa_inv, sb).unwrap();
        let identity = ComplexMatrix::identity(n);
        let (delta, scale) = defectcalc_core::defect::sym_defect_scaled(&p, m, &identity).unwrap();
        let bridged = &sa.pow(m) * &iso_defect(&aux, m, &identity).unwrap();
        prop_assert!((&delta - &bridged).frobenius_norm() <= 1e-8 * scale.max(1.0));
    }

    #[test]
    fn tensor_defect_factorizes(seed in any::<u64>(), d in 1usize..=2, n1 in 2usize..=3, n2 in 2usize..=3, m in 1u32..=3) {
        // Δᵐ of the tensor pair at 𝕀 = Σⱼ (−1)ʲ C(m,j) · E₁ʲ(I)⊗E₂ʲ(I)
        let p1 = random_pair(seed, d, n1);
        let p2 = random_pair(seed ^ 0xF00D, d, n2);
        let tp = tensor_pair(&p1, &p2).unwrap();
        let big_identity = ComplexMatrix::identity(n1 * n2);
        let (lhs, scale) = iso_defect_scaled(&tp, m, &big_identity).unwrap();
        let id1 = ComplexMatrix::identity(n1);
        let id2 = ComplexMatrix::identity(n2);
        let mut rhs = ComplexMatrix::zeros(n1 * n2);
        for j in 0..=m {
            let coeff = binomial_coefficient(m, j) as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
            let x = floor_power(&p1, &id1, j).unwrap();
            let y = floor_power(&p2, &id2, j).unwrap();
            rhs = &rhs + &x.kron(&y).scaled(Complex64::new(coeff, 0.0));
        }
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn repeated_root_extraction_inverts_expansion(k in 1u32..=30, re in -10.0f64..10.0, im in -10.0f64..10.0) {
        let c = Complex64::new(re, im);
        prop_assume!(c.norm() >= 0.1 && c.norm() <= 10.0);
        // coefficients of (x − c)^k, ascending
        let mut coeffs = vec![Complex64::ZERO; k as usize + 1];
        for i in 0..=k {
            coeffs[i as usize] =
                (-c).powu(k - i) * Complex64::new(binomial_coefficient(k, i) as f64, 0.0);
        }
        let tol = Tolerance::default();
        let recovered = extract_repeated_root(&MinPoly::new(coeffs, 0.0), &tol).unwrap();
        prop_assert!((recovered - c).norm() <= 1e-9 * c.norm().max(1.0));
    }

    #[test]
    fn monotonicity_past_the_strict_order(m in 2u32..=4, seed in any::<u64>()) {
        // once the defect vanishes it stays vanished at every larger probed order
        let tol = Tolerance::default();
        let pair = gen_jordan_iso(m, Some(seed)).unwrap();
        let identity = ComplexMatrix::identity(m as usize);
        for k in m..=(m + 3) {
            let (defect, scale) = iso_defect_scaled(&pair, k, &identity).unwrap();
            prop_assert!(defect.frobenius_norm() <= tol.threshold(scale), "order {}", k);
            let (sym, sym_scale) = defectcalc_core::defect::sym_defect_scaled(&pair, k, &identity).unwrap();
            prop_assert!(sym.frobenius_norm() <= tol.threshold(sym_scale), "sym order {}", k);
        }
    }

    #[test]
    fn eigen_relation_at_and_below_the_strict_order(m in 2u32..=4, seed in any::<u64>()) {
        // ‖Δᵏ(I)‖ ≤ τ  ⟺  ‖E(Δ^{k−1}(I)) − Δ^{k−1}(I)‖ ≤ τ
        let tol = Tolerance::default();
        let pair = gen_jordan_iso(m, Some(seed)).unwrap();
        let identity = ComplexMatrix::identity(m as usize);
        for k in 1..=(m + 1) {
            let (defect, scale) = iso_defect_scaled(&pair, k, &identity).unwrap();
            let zero = defect.frobenius_norm() <= tol.threshold(scale);
            let prev = iso_defect(&pair, k - 1, &identity).unwrap();
            let fixed_point = (&apply_e(&pair, &prev).unwrap() - &prev).frobenius_norm()
                <= tol.threshold(scale);
            prop_assert_eq!(zero, fixed_point, "order {}", k);
            prop_assert_eq!(zero, k >= m, "order {}", k);
        }
    }

    #[test]
    fn decomposition_is_similarity_invariant(seed in any::<u64>(), m1 in 1u32..=3, m2 in 1u32..=3) {
        // conjugating a factor pair changes nothing the solver reports
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Complex64::new(rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0));
        let build = |order: u32, gauge: Complex64| {
            let n = order as usize;
            let nilpotent = ComplexMatrix::from_fn(n, |i, j| {
                if j == i + 1 { Complex64::ONE } else { Complex64::ZERO }
            });
            let left = &ComplexMatrix::identity(n) + &nilpotent;
            TuplePair::from_single(left, ComplexMatrix::scalar(n, gauge)).unwrap()
        };
        let p1 = build(m1, c);
        let p2 = build(m2, Complex64::ONE / c);
        let base = decompose_iso(&p1, &p2, &tol).unwrap();

        let (p, p_inv) = random_similarity(rng.random(), m1 as usize);
        let conj = |m: &ComplexMatrix| &(&p * m) * &p_inv;
        let q1 = TuplePair::from_single(conj(p1.left().entry(0)), conj(p1.right().entry(0))).unwrap();
        let conjugated = decompose_iso(&q1, &p2, &tol).unwrap();

        prop_assert!((base.c - conjugated.c).norm() <= 1e-8 * base.c.norm());
        prop_assert_eq!(base.m1, conjugated.m1);
        prop_assert_eq!(base.m2, conjugated.m2);
    }

    #[test]
    fn strictness_detection_matches_plants(m in 2u32..=5, seed in any::<u64>()) {
        let tol = Tolerance::default();
        let pair = gen_jordan_iso(m, Some(seed)).unwrap();
        let report = strictness_order(&pair, DefectKind::Isometric, m + 2, &tol).unwrap();
        prop_assert_eq!(report.strict_order, Some(m));
        let report = strictness_order(&pair, DefectKind::Symmetric, m + 2, &tol).unwrap();
        prop_assert_eq!(report.strict_order, Some(m));
    }

    #[test]
    fn gauge_round_trip_through_scale_pair(seed in any::<u64>()) {
        let p = random_pair(seed, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
        let c = Complex64::new(rng.random_range(0.2..3.0), rng.random_range(-2.0..2.0));
        let there = scale_pair(&p, c).unwrap();
        let back = scale_pair(&there, Complex64::ONE / c).unwrap();
        let diff: f64 = back
            .right()
            .entries()
            .iter()
            .zip(p.right().entries())
            .map(|(a, b)| (a - b).frobenius_norm())
            .sum();
        prop_assert!(diff <= 1e-12);
    }

    #[test]
    fn compositions_of_commuting_tuples_commute(seed in any::<u64>(), d in 1usize..=3, n in 2usize..=3) {
        // tensor and product tuples of validated, cross-commuting tuples
        // pass the commutation check themselves
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = {
            let raw = random_matrix(&mut rng, n);
            let norm = raw.frobenius_norm();
            prop_assume!(norm > 1e-6);
            raw.scaled(Complex64::new(1.0 / norm, 0.0))
        };
        let mut poly_tuple = || {
            let entries: Vec<_> = (0..d)
                .map(|_| {
                    let c0 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let c1 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let c2 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let mut acc = ComplexMatrix::scalar(n, c0);
                    acc = &acc + &base.scaled(c1);
                    acc = &acc + &(&base * &base).scaled(c2);
                    acc
                })
                .collect();
            OperatorTuple::new(entries).unwrap().into_validated(&tol).unwrap()
        };
        let t1 = poly_tuple();
        let t2 = poly_tuple();
        prop_assert!(defectcalc_core::tuple::cross_commutes(&t1, &t2, &tol).unwrap().commuting);
        let tensored = defectcalc_core::tuple::tensor_tuple(&t1, &t2).unwrap();
        prop_assert!(tensored.validate_commuting(&tol).commuting);
        let product = defectcalc_core::tuple::product_tuple(&t1, &t2, &tol).unwrap();
        prop_assert!(product.validate_commuting(&tol).commuting);
    }

    #[test]
    fn symmetric_defect_depends_only_on_sums(seed in any::<u64>(), d in 2usize..=3, n in 2usize..=4, m in 1u32..=4) {
        // replacing a tuple by the single-entry tuple of its sum leaves δ unchanged
        let p = random_pair(seed, d, n);
        let collapsed = TuplePair::from_single(sum_operator(p.left()), sum_operator(p.right())).unwrap();
        let identity = ComplexMatrix::identity(n);
        let (a, scale) = defectcalc_core::defect::sym_defect_scaled(&p, m, &identity).unwrap();
        let b = sym_defect(&collapsed, m, &identity).unwrap();
        prop_assert!((&a - &b).frobenius_norm() <= 1e-11 * scale.max(1.0));
    }
}
