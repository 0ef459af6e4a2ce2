//! Pair-document persistence: a versioned JSON schema for tuple pairs.
//!
//! Schema (version 1):
//! ```json
//! {
//!   "schema_version": 1,
//!   "left":  [ { "n": 2, "data": [[re, im], …] }, … ],
//!   "right": [ … ],
//!   "metadata": { "key": "value" }
//! }
//! ```
//! `data` is the flat row-major entry list with exactly n² `[re, im]`
//! pairs. Parsing rejects non-finite entries, shape mismatches and
//! unknown schema versions, reporting the path of the offending field;
//! serialization is canonical (fixed key order, 17-significant-digit
//! floats), so serialize ∘ parse is the identity on canonical documents.

use defectcalc_core::matrix::ComplexMatrix;
use defectcalc_core::tuple::{OperatorTuple, TuplePair};
use num_complex::Complex64;
use serde_json::Value;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IoError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Parse { .. } => "ParseError",
            IoError::Schema { .. } => "SchemaError",
        }
    }

    pub fn path(&self) -> &str {
        match self {
            IoError::Parse { path, .. } | IoError::Schema { path, .. } => path,
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// A tuple pair plus free-form string metadata (empty map = absent).
#[derive(Debug, Clone, PartialEq)]
pub struct PairDocument {
    pub pair: TuplePair,
    pub metadata: BTreeMap<String, String>,
}

impl PairDocument {
    pub fn new(pair: TuplePair) -> Self {
        PairDocument {
            pair,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(pair: TuplePair, metadata: BTreeMap<String, String>) -> Self {
        PairDocument { pair, metadata }
    }
}

pub fn parse_pair(text: &str) -> Result<PairDocument, IoError> {
    let value: Value = serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let root = value
        .as_object()
        .ok_or_else(|| schema("$", "document must be a JSON object"))?;

    match root.get("schema_version") {
        None => return Err(schema("schema_version", "missing field")),
        Some(v) => match v.as_u64() {
            Some(1) => {}
            Some(other) => {
                return Err(schema(
                    "schema_version",
                    format!("unknown schema_version {other}"),
                ))
            }
            None => return Err(schema("schema_version", "must be the integer 1")),
        },
    }

    let left = parse_side(root, "left")?;
    let right = parse_side(root, "right")?;
    if left.len() != right.len() {
        return Err(schema(
            "right",
            format!(
                "left has {} entries, right has {}",
                left.len(),
                right.len()
            ),
        ));
    }
    let n = left[0].dim();
    for (side, mats) in [("left", &left), ("right", &right)] {
        for (i, m) in mats.iter().enumerate() {
            if m.dim() != n {
                return Err(schema(
                    format!("{side}[{i}].n"),
                    format!("dimension {} differs from {}", m.dim(), n),
                ));
            }
        }
    }

    let metadata = match root.get("metadata") {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(Value::Object(map)) => {
            let mut out = BTreeMap::new();
            for (key, v) in map {
                let s = v
                    .as_str()
                    .ok_or_else(|| schema(format!("metadata.{key}"), "must be a string"))?;
                out.insert(key.clone(), s.to_string());
            }
            out
        }
        Some(_) => return Err(schema("metadata", "must be an object of strings")),
    };

    let left = OperatorTuple::new(left).map_err(|e| schema("left", e.to_string()))?;
    let right = OperatorTuple::new(right).map_err(|e| schema("right", e.to_string()))?;
    let pair = TuplePair::new(left, right).map_err(|e| schema("$", e.to_string()))?;
    Ok(PairDocument { pair, metadata })
}

fn parse_side(
    root: &serde_json::Map<String, Value>,
    side: &str,
) -> Result<Vec<ComplexMatrix>, IoError> {
    let arr = root
        .get(side)
        .ok_or_else(|| schema(side, "missing field"))?
        .as_array()
        .ok_or_else(|| schema(side, "must be an array of matrices"))?;
    if arr.is_empty() {
        return Err(schema(side, "must be nonempty"));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| parse_matrix(v, &format!("{side}[{i}]")))
        .collect()
}

fn parse_matrix(v: &Value, path: &str) -> Result<ComplexMatrix, IoError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(path, "must be an object"))?;
    let n = obj
        .get("n")
        .ok_or_else(|| schema(format!("{path}.n"), "missing field"))?
        .as_u64()
        .filter(|&n| n >= 1)
        .ok_or_else(|| schema(format!("{path}.n"), "must be a positive integer"))?
        as usize;
    let data = obj
        .get("data")
        .ok_or_else(|| schema(format!("{path}.data"), "missing field"))?
        .as_array()
        .ok_or_else(|| schema(format!("{path}.data"), "must be an array"))?;
    if data.len() != n * n {
        return Err(schema(
            format!("{path}.data"),
            format!("expected {} entries for n = {n}, got {}", n * n, data.len()),
        ));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (k, e) in data.iter().enumerate() {
        let parts = e
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| schema(format!("{path}.data[{k}]"), "must be an [re, im] pair"))?;
        let mut comps = [0.0_f64; 2];
        for (c, part) in parts.iter().enumerate() {
            let x = part.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
                schema(format!("{path}.data[{k}][{c}]"), "must be a finite number")
            })?;
            comps[c] = x;
        }
        entries.push(Complex64::new(comps[0], comps[1]));
    }
    ComplexMatrix::from_vec(n, entries).map_err(|e| schema(format!("{path}.data"), e.to_string()))
}

/// Lossless float formatting: 17 significant digits in scientific
/// notation, a valid JSON number that round-trips every finite double.
pub fn fmt_f64(x: f64) -> String {
    debug_assert!(x.is_finite(), "non-finite value in serialized output");
    format!("{x:.16e}")
}

fn write_matrix(out: &mut String, m: &ComplexMatrix) {
    out.push_str("{\"n\":");
    out.push_str(&m.dim().to_string());
    out.push_str(",\"data\":[");
    for (k, z) in m.entries().iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push('[');
        out.push_str(&fmt_f64(z.re));
        out.push(',');
        out.push_str(&fmt_f64(z.im));
        out.push(']');
    }
    out.push_str("]}");
}

fn write_side(out: &mut String, tuple: &OperatorTuple) {
    out.push('[');
    for (i, m) in tuple.entries().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_matrix(out, m);
    }
    out.push(']');
}

/// Canonical serialization; parse ∘ serialize is the identity and
/// serialize ∘ parse fixes every canonical document byte for byte.
pub fn serialize_pair(doc: &PairDocument) -> String {
    let mut out = String::from("{\"schema_version\":1,\"left\":");
    write_side(&mut out, doc.pair.left());
    out.push_str(",\"right\":");
    write_side(&mut out, doc.pair.right());
    if !doc.metadata.is_empty() {
        out.push_str(",\"metadata\":{");
        for (i, (k, v)) in doc.metadata.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&serde_json::to_string(k).expect("string serialization"));
            out.push(':');
            out.push_str(&serde_json::to_string(v).expect("string serialization"));
        }
        out.push('}');
    }
    out.push('}');
    out
}
