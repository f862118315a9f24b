//! Writing experiment records as JSON or CSV.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::experiment::ResultsRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "acc,f1,nmi,pur,iters,feasibility,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultsFormat {
    Json,
    Csv,
}

impl ResultsFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(ResultsFormat::Json),
            "csv" => Some(ResultsFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for ResultsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ResultsFormat::Json),
            "csv" => Ok(ResultsFormat::Csv),
            other => Err(Error::param("format", format!("unknown results format `{other}`"))),
        }
    }
}

pub fn to_json(record: &ResultsRecord) -> Result<String> {
    serde_json::to_string_pretty(record).map_err(|e| Error::Config(e.to_string()))
}

pub fn from_json(text: &str) -> Result<ResultsRecord> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per repetition of the solver, then a row of means. Metric cells are
/// empty when metrics were disabled.
pub fn to_csv(record: &ResultsRecord) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (rep, seconds) in record.repetitions.iter().zip(&record.timing.per_repetition) {
        let m = rep.ronmf.metrics.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cell(m.map(|m| m.acc)),
            cell(m.map(|m| m.f1)),
            cell(m.map(|m| m.nmi)),
            cell(m.map(|m| m.pur)),
            rep.ronmf.iterations,
            rep.ronmf.feasibility,
            seconds
        );
    }
    let s = &record.summary.ronmf;
    let m = s.metrics.as_ref();
    let reps = record.timing.per_repetition.len().max(1) as f64;
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        cell(m.map(|m| m.acc.mean)),
        cell(m.map(|m| m.f1.mean)),
        cell(m.map(|m| m.nmi.mean)),
        cell(m.map(|m| m.pur.mean)),
        s.iterations.mean,
        s.feasibility.mean,
        record.timing.per_repetition.iter().sum::<f64>() / reps
    );
    out
}

pub fn emit_results(record: &ResultsRecord, path: &Path, format: ResultsFormat) -> Result<()> {
    let text = match format {
        ResultsFormat::Json => to_json(record)?,
        ResultsFormat::Csv => to_csv(record),
    };
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
