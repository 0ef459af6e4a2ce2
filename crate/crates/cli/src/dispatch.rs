//! Subcommand dispatch with a stable exit-code contract:
//! 0 = success / verdict true, 1 = verdict false, 2 = usage error,
//! 3 = input error, 4 = numerical failure. Failures are emitted as
//! one-line JSON on the error stream; `--json` guarantees the primary
//! stream carries nothing but JSON.

use crate::document::{parse_pair, serialize_pair, IoError, PairDocument};
use crate::report::{
    serialize_check, serialize_decomposition, serialize_defect_report, serialize_error,
    serialize_lemma_report, serialize_matrix, serialize_suite_report, sign_label,
};
use clap::{Parser, Subcommand, ValueEnum};
use defectcalc_core::decompose::{decompose_iso, decompose_sym, DecomposeError};
use defectcalc_core::defect::{
    defect_scaled, lemma_independence_rank, strictness_order, DefectError, DefectKind,
    ExponentSign,
};
use defectcalc_core::factory::{
    gen_block_tuples, gen_jordan_iso, gen_jordan_sym, gen_random_commuting, gen_tensor_lift,
    run_suite, FactoryError,
};
use defectcalc_core::matrix::{ComplexMatrix, LinalgError, Tolerance};
use defectcalc_core::tuple::{product_pair, scale_pair, tensor_pair, TupleError, TuplePair};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser)]
#[command(
    name = "defectcalc",
    about = "Defect calculus workbench for pairs of commuting operator tuples",
    version
)]
struct Cli {
    /// Emit machine-readable JSON on the primary output stream
    #[arg(long, global = true)]
    json: bool,
    /// Relative tolerance (overrides DEFECTCALC_TOL_REL)
    #[arg(long, global = true, value_name = "FLOAT")]
    tol_rel: Option<f64>,
    /// Absolute tolerance floor
    #[arg(long, global = true, value_name = "FLOAT")]
    tol_abs: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Iso,
    Sym,
}

impl KindArg {
    fn kind(self) -> DefectKind {
        match self {
            KindArg::Iso => DefectKind::Isometric,
            KindArg::Sym => DefectKind::Symmetric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

impl SignArg {
    fn sign(self) -> ExponentSign {
        match self {
            SignArg::Plus => ExponentSign::Plus,
            SignArg::Minus => ExponentSign::Minus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    /// Strict m-isometric Jordan pair (I+N_m, I)
    JordanIso,
    /// Strict m-symmetric Jordan pair (same seed family)
    JordanSym,
    /// First ⊕-block tuple pair (1/√d)(A⊕I, …)
    Block1,
    /// Second ⊕-block tuple pair (1/√d)(I⊕A, …)
    Block2,
    /// Entrywise tensor with an identity of dimension --dim2
    TensorLift,
    /// Pair of random commuting tuples (polynomials in a seeded matrix)
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Verdict: does the defect of the given order vanish at I?
    Check {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        pair: PathBuf,
    },
    /// Detect the strict order by ascending probes
    Order {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value_t = 10)]
        max: u32,
    },
    /// Print the defect matrix at a given order
    Defect {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tensor pair of two pair files
    Tensor {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Product pair of two pair files (factors must cross-commute)
    Product {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the gauge scalar and factor orders from two factor pairs
    Decompose {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Independence ranks of the defect families of a strict pair
    LemmaRank {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        t: u32,
        #[arg(long, value_enum, default_value = "plus")]
        sign: SignArg,
    },
    /// Run a named verification suite
    Suite {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 25)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate fixture pair files
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Jordan/base order for the jordan-* and block-* families
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2)]
        dim2: usize,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Multiply every right-tuple entry by a complex scalar "re,im"
        #[arg(long)]
        scale_right: Option<String>,
        /// Input pair file (tensor-lift family)
        #[arg(long)]
        pair: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    exit: i32,
    code: String,
    path: Option<String>,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            exit: EXIT_USAGE,
            code: "UsageError".into(),
            path: None,
            message: message.into(),
        }
    }

    fn coded(exit: i32, code: &str, message: impl Into<String>) -> Self {
        Failure {
            exit,
            code: code.into(),
            path: None,
            message: message.into(),
        }
    }
}

fn from_doc_error(e: IoError) -> Failure {
    Failure {
        exit: EXIT_INPUT,
        code: e.code().into(),
        path: Some(e.path().to_string()),
        message: e.to_string(),
    }
}

fn from_read_error(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        exit: EXIT_INPUT,
        code: "IoError".into(),
        path: Some(path.display().to_string()),
        message: e.to_string(),
    }
}

fn from_linalg(e: &LinalgError) -> Failure {
    match e {
        LinalgError::Singular { .. } => Failure::coded(EXIT_NUMERIC, "Singular", e.to_string()),
        LinalgError::DimensionMismatch { .. } | LinalgError::EmptyFamily => {
            Failure::coded(EXIT_INPUT, "DimensionMismatch", e.to_string())
        }
    }
}

fn from_tuple(e: &TupleError) -> Failure {
    match e {
        TupleError::EmptyTuple
        | TupleError::DimensionMismatch { .. }
        | TupleError::ArityMismatch { .. } => {
            Failure::coded(EXIT_INPUT, "ShapeMismatch", e.to_string())
        }
        TupleError::NotCrossCommuting { .. } => {
            Failure::coded(EXIT_NUMERIC, "NotCrossCommuting", e.to_string())
        }
        TupleError::ZeroScalar => Failure::usage(e.to_string()),
    }
}

fn from_defect(e: &DefectError) -> Failure {
    match e {
        DefectError::OrderTooLarge { .. } => Failure::usage(e.to_string()),
        DefectError::DimensionMismatch { .. } => {
            Failure::coded(EXIT_INPUT, "DimensionMismatch", e.to_string())
        }
        DefectError::EnumerationBudgetExceeded { .. } => {
            Failure::coded(EXIT_NUMERIC, "EnumerationBudgetExceeded", e.to_string())
        }
        DefectError::ToleranceAnomaly { .. } => {
            Failure::coded(EXIT_NUMERIC, "ToleranceAnomaly", e.to_string())
        }
        DefectError::PreconditionFailed(_) => {
            Failure::coded(EXIT_NUMERIC, "PreconditionFailed", e.to_string())
        }
        DefectError::Linalg(inner) => from_linalg(inner),
    }
}

fn from_decompose(e: &DecomposeError) -> Failure {
    match e {
        DecomposeError::Defect(inner) => from_defect(inner),
        DecomposeError::Tuple(inner) => from_tuple(inner),
        DecomposeError::DegreeBudgetExceeded { .. } => {
            Failure::coded(EXIT_NUMERIC, "DegreeBudgetExceeded", e.to_string())
        }
        DecomposeError::NotARepeatedRoot { .. } => {
            Failure::coded(EXIT_NUMERIC, "NotARepeatedRoot", e.to_string())
        }
        DecomposeError::NotStrictTensor { .. } => {
            Failure::coded(EXIT_NUMERIC, "NotStrictTensor", e.to_string())
        }
        DecomposeError::NotInvertible { .. } => {
            Failure::coded(EXIT_NUMERIC, "NotInvertible", e.to_string())
        }
        DecomposeError::ZeroScalar => Failure::coded(EXIT_NUMERIC, "ZeroScalar", e.to_string()),
        DecomposeError::FactorOrderExceedsTensor { .. }
        | DecomposeError::CertificationFailed { .. }
        | DecomposeError::TensorOrderMismatch { .. } => {
            Failure::coded(EXIT_NUMERIC, "CertificationFailed", e.to_string())
        }
    }
}

fn from_factory(e: &FactoryError) -> Failure {
    match e {
        FactoryError::OrderOutOfRange { .. } | FactoryError::InvalidParameter(_) => {
            Failure::usage(e.to_string())
        }
        FactoryError::UnknownSuite(_) => Failure::usage(e.to_string()),
        FactoryError::Defect(inner) => from_defect(inner),
        FactoryError::Tuple(inner) => from_tuple(inner),
        FactoryError::Decompose(inner) => from_decompose(inner),
        FactoryError::Linalg(inner) => from_linalg(inner),
    }
}

fn load_pair(path: &Path) -> Result<PairDocument, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| from_read_error(path, e))?;
    parse_pair(&text).map_err(from_doc_error)
}

fn resolve_tolerance(tol_abs: Option<f64>, tol_rel: Option<f64>) -> Result<Tolerance, Failure> {
    let mut tol = Tolerance::default();
    if let Ok(raw) = std::env::var("DEFECTCALC_TOL_REL") {
        if let Ok(x) = raw.parse::<f64>() {
            if x.is_finite() && x >= 0.0 {
                tol.rel = x;
            }
        }
    }
    if let Some(x) = tol_rel {
        if !x.is_finite() || x < 0.0 {
            return Err(Failure::usage("--tol-rel must be a nonnegative finite number"));
        }
        tol.rel = x;
    }
    if let Some(x) = tol_abs {
        if !x.is_finite() || x < 0.0 {
            return Err(Failure::usage("--tol-abs must be a nonnegative finite number"));
        }
        tol.abs_floor = x;
    }
    Ok(tol)
}

fn parse_scalar(raw: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = raw.split(',').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Failure::usage(format!("invalid scalar component \"{s}\"")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
        _ => Err(Failure::usage(format!(
            "scalar \"{raw}\" must be \"re\" or \"re,im\""
        ))),
    }
}

fn write_or_print(
    text: &str,
    out: Option<&Path>,
    json: bool,
    what: &str,
) -> Result<(String, i32), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| from_read_error(path, e))?;
            if json {
                Ok((String::new(), EXIT_OK))
            } else {
                Ok((format!("wrote {what} to {}", path.display()), EXIT_OK))
            }
        }
        None => Ok((text.to_string(), EXIT_OK)),
    }
}

fn run(cli: Cli) -> Result<(String, i32), Failure> {
    let tol = resolve_tolerance(cli.tol_abs, cli.tol_rel)?;
    let json = cli.json;
    match cli.command {
        Command::Check { kind, m, pair } => {
            let doc = load_pair(&pair)?;
            let kind = kind.kind();
            let identity = ComplexMatrix::identity(doc.pair.dim());
            let (defect, scale) =
                defect_scaled(&doc.pair, kind, m, &identity).map_err(|e| from_defect(&e))?;
            let norm = defect.frobenius_norm();
            let threshold = tol.threshold(scale);
            let verdict = norm <= threshold;
            let text = if json {
                serialize_check(kind, m, norm, threshold, verdict)
            } else {
                format!(
                    "{} defect at order {m}: norm {norm:.3e} vs threshold {threshold:.3e} -> {}",
                    kind.label(),
                    if verdict { "vanishes" } else { "does not vanish" }
                )
            };
            Ok((text, if verdict { EXIT_OK } else { EXIT_FALSE }))
        }
        Command::Order { kind, pair, max } => {
            let doc = load_pair(&pair)?;
            let kind = kind.kind();
            let report =
                strictness_order(&doc.pair, kind, max, &tol).map_err(|e| from_defect(&e))?;
            let exit = if report.strict_order.is_some() {
                EXIT_OK
            } else {
                EXIT_FALSE
            };
            let text = if json {
                serialize_defect_report(&report)
            } else {
                match report.strict_order {
                    Some(m) => format!(
                        "strict order: {m} ({}, probed to {} of max {max})",
                        kind.label(),
                        report.max_order_searched
                    ),
                    None => format!(
                        "no strict order up to {} ({})",
                        report.max_order_searched,
                        kind.label()
                    ),
                }
            };
            Ok((text, exit))
        }
        Command::Defect { kind, m, pair, out } => {
            let doc = load_pair(&pair)?;
            let kind = kind.kind();
            let identity = ComplexMatrix::identity(doc.pair.dim());
            let (defect, _) =
                defect_scaled(&doc.pair, kind, m, &identity).map_err(|e| from_defect(&e))?;
            let text = serialize_matrix(&defect);
            write_or_print(&text, out.as_deref(), json, "defect matrix")
        }
        Command::Tensor { left, right, out } => {
            let a = load_pair(&left)?;
            let b = load_pair(&right)?;
            let pair = tensor_pair(&a.pair, &b.pair).map_err(|e| from_tuple(&e))?;
            let mut metadata = BTreeMap::new();
            metadata.insert("construction".to_string(), "tensor".to_string());
            let text = serialize_pair(&PairDocument::with_metadata(pair, metadata));
            write_or_print(&text, out.as_deref(), json, "tensor pair")
        }
        Command::Product { left, right, out } => {
            let a = load_pair(&left)?;
            let b = load_pair(&right)?;
            let pair = product_pair(&a.pair, &b.pair, &tol).map_err(|e| from_tuple(&e))?;
            let mut metadata = BTreeMap::new();
            metadata.insert("construction".to_string(), "product".to_string());
            let text = serialize_pair(&PairDocument::with_metadata(pair, metadata));
            write_or_print(&text, out.as_deref(), json, "product pair")
        }
        Command::Decompose { kind, left, right } => {
            let a = load_pair(&left)?;
            let b = load_pair(&right)?;
            let result = match kind {
                KindArg::Iso => decompose_iso(&a.pair, &b.pair, &tol),
                KindArg::Sym => decompose_sym(&a.pair, &b.pair, &tol),
            }
            .map_err(|e| from_decompose(&e))?;
            let text = if json {
                serialize_decomposition(&result)
            } else {
                format!(
                    "c = {} + {}i, m1 = {}, m2 = {} (tensor order {}); residuals {:.3e} / {:.3e}; strict: {}/{}",
                    result.c.re,
                    result.c.im,
                    result.m1,
                    result.m2,
                    result.tensor_order,
                    result.residual1,
                    result.residual2,
                    result.strict1,
                    result.strict2
                )
            };
            Ok((text, EXIT_OK))
        }
        Command::LemmaRank {
            kind,
            pair,
            t,
            sign,
        } => {
            let doc = load_pair(&pair)?;
            let kind_v = kind.kind();
            let sign_v = sign.sign();
            let report = lemma_independence_rank(&doc.pair, kind_v, t, sign_v, &tol)
                .map_err(|e| from_defect(&e))?;
            let exit = if report.all_match() { EXIT_OK } else { EXIT_FALSE };
            let text = if json {
                serialize_lemma_report(&report, kind_v, t, sign_v)
            } else {
                format!(
                    "strict order {}; family ranks {:?} (expected {}; t = {t}, sign {})",
                    report.strict_order,
                    report.ranks,
                    report.expected_rank,
                    sign_label(sign_v)
                )
            };
            Ok((text, exit))
        }
        Command::Suite {
            name,
            trials,
            seed,
        } => {
            let report = run_suite(&name, trials, seed, &tol).map_err(|e| from_factory(&e))?;
            let exit = if report.all_passed() { EXIT_OK } else { EXIT_FALSE };
            let text = if json {
                serialize_suite_report(&report)
            } else {
                let mut lines = format!(
                    "suite {}: {}/{} passed",
                    report.suite_name, report.passes, report.trials
                );
                for f in &report.failures {
                    lines.push_str(&format!(
                        "\n  trial {} (seed {}): {} [residual {:.3e}]",
                        f.trial, f.seed, f.description, f.residual
                    ));
                }
                lines
            };
            Ok((text, exit))
        }
        Command::Gen {
            family,
            m,
            d,
            n,
            seed,
            dim2,
            degree,
            scale_right,
            pair,
            out,
        } => {
            let need_m = || m.ok_or_else(|| Failure::usage("--m is required for this family"));
            let mut metadata = BTreeMap::new();
            let generated = match family {
                FamilyArg::JordanIso => {
                    let m = need_m()?;
                    metadata.insert("family".into(), "jordan-iso".into());
                    metadata.insert("m".into(), m.to_string());
                    gen_jordan_iso(m, seed).map_err(|e| from_factory(&e))?
                }
                FamilyArg::JordanSym => {
                    let m = need_m()?;
                    metadata.insert("family".into(), "jordan-sym".into());
                    metadata.insert("m".into(), m.to_string());
                    gen_jordan_sym(m, seed).map_err(|e| from_factory(&e))?
                }
                FamilyArg::Block1 | FamilyArg::Block2 => {
                    let m = need_m()?;
                    let base = gen_jordan_iso(m, seed).map_err(|e| from_factory(&e))?;
                    let (p1, p2) = gen_block_tuples(&base, d).map_err(|e| from_factory(&e))?;
                    let (label, picked) = match family {
                        FamilyArg::Block1 => ("block-1", p1),
                        _ => ("block-2", p2),
                    };
                    metadata.insert("family".into(), label.into());
                    metadata.insert("m".into(), m.to_string());
                    metadata.insert("d".into(), d.to_string());
                    picked
                }
                FamilyArg::TensorLift => {
                    let input = pair
                        .ok_or_else(|| Failure::usage("--pair is required for tensor-lift"))?;
                    let doc = load_pair(&input)?;
                    metadata.insert("family".into(), "tensor-lift".into());
                    metadata.insert("dim2".into(), dim2.to_string());
                    gen_tensor_lift(&doc.pair, dim2)
                }
                FamilyArg::Random => {
                    let seed = seed.unwrap_or(0);
                    let left = gen_random_commuting(seed, d, n, degree)
                        .map_err(|e| from_factory(&e))?;
                    let right = gen_random_commuting(seed ^ 0x9E37_79B9_7F4A_7C15, d, n, degree)
                        .map_err(|e| from_factory(&e))?;
                    metadata.insert("family".into(), "random".into());
                    metadata.insert("seed".into(), seed.to_string());
                    TuplePair::new(left, right).map_err(|e| from_tuple(&e))?
                }
            };
            let generated = match scale_right {
                Some(raw) => {
                    let c = parse_scalar(&raw)?;
                    scale_pair(&generated, c).map_err(|e| from_tuple(&e))?
                }
                None => generated,
            };
            let text = serialize_pair(&PairDocument::with_metadata(generated, metadata));
            write_or_print(&text, out.as_deref(), json, "pair document")
        }
    }
}

/// Runs one invocation; `argv` includes the program name. Reports go to
/// `stdout`, error JSON to `stderr`; the return value is the exit code.
pub fn dispatch(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = writeln!(
                stderr,
                "{}",
                serialize_error("UsageError", None, &e.to_string())
            );
            return EXIT_USAGE;
        }
    };
    match run(cli) {
        Ok((text, exit)) => {
            if !text.is_empty() {
                let _ = writeln!(stdout, "{text}");
            }
            exit
        }
        Err(failure) => {
            let _ = writeln!(
                stderr,
                "{}",
                serialize_error(&failure.code, failure.path.as_deref(), &failure.message)
            );
            failure.exit
        }
    }
}
