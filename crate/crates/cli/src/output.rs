//! Serializable reports and deterministic JSON/CSV emission.  Output never
//! contains timestamps, so a given config reproduces files byte for byte.

#[cfg(test)]
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qbhatt::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub model: String,
    pub g: Option<String>,
    pub estimator: Option<String>,
    pub k: usize,
    pub dim: usize,
    pub dim_b: usize,
    pub grid: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub meta: Meta,
    pub rows: Vec<R>,
    pub summary: Vec<SummaryLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub invariant: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub param: [f64; 2],
    pub k: usize,
    pub flavor: String,
    pub bound: f64,
    pub condition_number: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub param: [f64; 2],
    pub bias_symbolic: [f64; 2],
    pub bias_numeric: [f64; 2],
    pub v1: f64,
    pub v2: f64,
    pub bound: f64,
    pub gap: f64,
    pub normality_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JmatrixRow {
    pub row: usize,
    pub col: usize,
    pub row_label: String,
    pub col_label: String,
    pub re: f64,
    pub im: f64,
    pub closed_form_re: Option<f64>,
    pub closed_form_im: Option<f64>,
    pub delta: Option<f64>,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Per-row CSV projection; every schema starts with the shared meta columns.
pub trait CsvRow {
    fn header() -> Vec<&'static str>;
    fn record(&self) -> Vec<String>;
}

impl CsvRow for BoundsRow {
    fn header() -> Vec<&'static str> {
        vec![
            "param_re",
            "param_im",
            "k",
            "flavor",
            "bound",
            "condition_number",
            "source",
        ]
    }
    fn record(&self) -> Vec<String> {
        vec![
            fmt(self.param[0]),
            fmt(self.param[1]),
            self.k.to_string(),
            self.flavor.clone(),
            fmt(self.bound),
            fmt(self.condition_number),
            self.source.clone(),
        ]
    }
}

impl CsvRow for VerifyRow {
    fn header() -> Vec<&'static str> {
        vec![
            "param_re",
            "param_im",
            "bias_symbolic_re",
            "bias_symbolic_im",
            "bias_numeric_re",
            "bias_numeric_im",
            "v1",
            "v2",
            "bound",
            "gap",
            "normality_residual",
        ]
    }
    fn record(&self) -> Vec<String> {
        vec![
            fmt(self.param[0]),
            fmt(self.param[1]),
            fmt(self.bias_symbolic[0]),
            fmt(self.bias_symbolic[1]),
            fmt(self.bias_numeric[0]),
            fmt(self.bias_numeric[1]),
            fmt(self.v1),
            fmt(self.v2),
            fmt(self.bound),
            fmt(self.gap),
            fmt(self.normality_residual),
        ]
    }
}

impl CsvRow for JmatrixRow {
    fn header() -> Vec<&'static str> {
        vec![
            "row",
            "col",
            "row_label",
            "col_label",
            "re",
            "im",
            "closed_form_re",
            "closed_form_im",
            "delta",
        ]
    }
    fn record(&self) -> Vec<String> {
        vec![
            self.row.to_string(),
            self.col.to_string(),
            self.row_label.clone(),
            self.col_label.clone(),
            fmt(self.re),
            fmt(self.im),
            fmt_opt(self.closed_form_re),
            fmt_opt(self.closed_form_im),
            fmt_opt(self.delta),
        ]
    }
}

pub fn to_json<R: Serialize>(report: &Report<R>) -> Result<String, Error> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
pub fn from_json<R: DeserializeOwned>(text: &str) -> Result<Report<R>, Error> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("bad report JSON: {e}")))
}

pub fn to_csv<R: CsvRow>(report: &Report<R>) -> Result<String, Error> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(vec![]);
    let io_err = |e: csv::Error| Error::Parse(format!("CSV write failed: {e}"));
    w.write_record(["schema_version", &report.meta.schema_version.to_string()])
        .map_err(io_err)?;
    w.write_record(R::header()).map_err(io_err)?;
    for row in &report.rows {
        w.write_record(row.record()).map_err(io_err)?;
    }
    for line in &report.summary {
        w.write_record([
            "summary",
            &line.invariant,
            if line.pass { "PASS" } else { "FAIL" },
            &line.detail,
        ])
        .map_err(io_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Parse(format!("CSV write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(format!("CSV not UTF-8: {e}")))
}
