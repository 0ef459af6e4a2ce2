//! Deterministic JSON rendering of reports: fixed key order, complex
//! numbers as [re, im] pairs, floats with 17 significant digits. Two
//! identical runs produce byte-identical output (suite wall-clock time is
//! deliberately not serialized).

use crate::document::fmt_f64;
use defectcalc_core::decompose::{DecompositionResult, MinPoly};
use defectcalc_core::defect::{DefectKind, DefectReport, ExponentSign, LemmaRankReport};
use defectcalc_core::factory::SuiteReport;
use defectcalc_core::matrix::ComplexMatrix;
use num_complex::Complex64;

pub fn fmt_complex(z: Complex64) -> String {
    format!("[{},{}]", fmt_f64(z.re), fmt_f64(z.im))
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

pub fn kind_label(kind: DefectKind) -> &'static str {
    kind.label()
}

pub fn sign_label(sign: ExponentSign) -> &'static str {
    match sign {
        ExponentSign::Plus => "plus",
        ExponentSign::Minus => "minus",
    }
}

pub fn serialize_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::from("{\"n\":");
    out.push_str(&m.dim().to_string());
    out.push_str(",\"data\":[");
    for (k, z) in m.entries().iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&fmt_complex(*z));
    }
    out.push_str("]}");
    out
}

pub fn serialize_defect_report(r: &DefectReport) -> String {
    let mut out = String::from("{\"kind\":");
    out.push_str(json_string(kind_label(r.kind)).as_str());
    out.push_str(",\"strict_order\":");
    match r.strict_order {
        Some(m) => out.push_str(&m.to_string()),
        None => out.push_str("null"),
    }
    out.push_str(",\"probes\":[");
    for (i, (order, norm)) in r.probes.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("[{order},{}]", fmt_f64(*norm)));
    }
    out.push_str("],\"max_order_searched\":");
    out.push_str(&r.max_order_searched.to_string());
    out.push('}');
    out
}

pub fn serialize_check(kind: DefectKind, m: u32, norm: f64, threshold: f64, verdict: bool) -> String {
    format!(
        "{{\"kind\":{},\"m\":{m},\"norm\":{},\"threshold\":{},\"verdict\":{verdict}}}",
        json_string(kind_label(kind)),
        fmt_f64(norm),
        fmt_f64(threshold),
    )
}

pub fn serialize_decomposition(r: &DecompositionResult) -> String {
    format!(
        "{{\"c\":{},\"m1\":{},\"m2\":{},\"tensor_order\":{},\"residual1\":{},\"residual2\":{},\"strict1\":{},\"strict2\":{}}}",
        fmt_complex(r.c),
        r.m1,
        r.m2,
        r.tensor_order,
        fmt_f64(r.residual1),
        fmt_f64(r.residual2),
        r.strict1,
        r.strict2,
    )
}

pub fn serialize_min_poly(mp: &MinPoly) -> String {
    let mut out = String::from("{\"degree\":");
    out.push_str(&mp.degree().to_string());
    out.push_str(",\"coeffs\":[");
    for (i, c) in mp.coeffs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_complex(*c));
    }
    out.push_str("],\"residual\":");
    out.push_str(&fmt_f64(mp.residual));
    out.push('}');
    out
}

pub fn serialize_lemma_report(
    r: &LemmaRankReport,
    kind: DefectKind,
    t: u32,
    sign: ExponentSign,
) -> String {
    let ranks: Vec<String> = r.ranks.iter().map(|x| x.to_string()).collect();
    format!(
        "{{\"kind\":{},\"t\":{t},\"sign\":{},\"strict_order\":{},\"expected_rank\":{},\"ranks\":[{}]}}",
        json_string(kind_label(kind)),
        json_string(sign_label(sign)),
        r.strict_order,
        r.expected_rank,
        ranks.join(","),
    )
}

pub fn serialize_suite_report(r: &SuiteReport) -> String {
    let mut out = String::from("{\"suite\":");
    out.push_str(&json_string(&r.suite_name));
    out.push_str(",\"trials\":");
    out.push_str(&r.trials.to_string());
    out.push_str(",\"passes\":");
    out.push_str(&r.passes.to_string());
    out.push_str(",\"failures\":[");
    for (i, f) in r.failures.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"trial\":{},\"seed\":{},\"description\":{},\"residual\":{}}}",
            f.trial,
            f.seed,
            json_string(&f.description),
            fmt_f64(f.residual),
        ));
    }
    out.push_str("]}");
    out
}

pub fn serialize_error(code: &str, path: Option<&str>, message: &str) -> String {
    let path_json = match path {
        Some(p) => json_string(p),
        None => "null".to_string(),
    };
    format!(
        "{{\"error\":{},\"path\":{},\"message\":{}}}",
        json_string(code),
        path_json,
        json_string(message),
    )
}
