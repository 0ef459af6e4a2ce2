//! Finite-dimensional workbench for the hereditary defect calculus of
//! m-isometric and m-symmetric pairs of commuting operator tuples:
//! defect operators, strictness orders, tensor/product constructions,
//! block counterexamples and the inverse problem of recovering the gauge
//! scalar and factor orders from tensor-product pairs.

pub mod decompose;
pub mod defect;
pub mod factory;
pub mod matrix;
pub mod tuple;

pub use decompose::{
    decompose_iso, decompose_sym, extract_repeated_root, krylov_min_poly, DecomposeError,
    DecompositionResult, MinPoly,
};
pub use defect::{
    binomial_coefficient,
    apply_e, defect_scaled, floor_power, forward_expansion_residual, iso_defect,
    iso_defect_scaled, lemma_independence_rank, multi_index_defect, strictness_order, sym_defect,
    sym_defect_scaled, tensor_defect_norm, DefectError, DefectKind, DefectReport, ExpansionCheck,
    ExponentSign, LemmaRankReport, ORDER_CAP,
};
pub use factory::{
    gen_block_tuples, gen_jordan_iso, gen_jordan_sym, gen_random_commuting, gen_tensor_lift,
    run_suite, FactoryError, SuiteFailure, SuiteReport,
};
pub use matrix::{rank_of_family, ComplexMatrix, LinalgError, Tolerance};
pub use tuple::{
    cross_commutes, hilbert_pair, product_pair, product_tuple, scale_pair, sum_operator,
    tensor_pair, tensor_tuple, CommutationReport, OperatorTuple, TupleError, TuplePair,
};
