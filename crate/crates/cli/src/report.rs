//! Report documents, the determinism hash and the CSV projection.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_SCHEMA: &str = "# symcap-csv v1: series,x,y,y_err";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: String,
    /// Spec echo: the body (if any) and every resolved input.
    pub body: Option<String>,
    pub params: Value,
    pub seed: u64,
    pub n_samples: usize,
    pub results: Value,
    pub timing_ms: u64,
    pub version: String,
    pub determinism_hash: String,
}

impl ReportDocument {
    pub fn new(command: &str, body: Option<String>, params: Value, seed: u64, n_samples: usize, results: Value) -> Self {
        let mut doc = ReportDocument {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            body,
            params,
            seed,
            n_samples,
            results,
            timing_ms: 0,
            version: env!("CARGO_PKG_VERSION").to_string(),
            determinism_hash: String::new(),
        };
        doc.determinism_hash = doc.compute_hash();
        doc
    }

    /// SHA-256 of the compact JSON without `timing_ms` and the hash itself.
    /// serde_json maps keep keys sorted, so the serialisation is canonical.
    pub fn compute_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialise");
        let obj = v.as_object_mut().expect("object");
        obj.remove("timing_ms");
        obj.remove("determinism_hash");
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }
}

/// One plot point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub y_err: Option<f64>,
}

impl CsvRow {
    pub fn new(series: impl Into<String>, x: f64, y: f64, y_err: Option<f64>) -> Self {
        CsvRow {
            series: series.into(),
            x,
            y,
            y_err,
        }
    }
}

pub fn to_csv(rows: &[CsvRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8");
    format!("{CSV_SCHEMA}\n{body}")
}

/// `{estimate, std_error, n_samples}` as plain JSON.
pub fn est(e: &symcap_core::EstimatorResult) -> Value {
    json!({ "estimate": e.estimate, "std_error": e.std_error, "n_samples": e.n_samples })
}
