//! CSV and `rawf64` matrix files. Rows are features and columns are samples.
//!
//! `rawf64` layout, all little-endian:
//!
//! | offset | size  | field                                   |
//! |--------|-------|-----------------------------------------|
//! | 0      | 4     | magic `RONM`                            |
//! | 4      | 4     | `d` (u32)                               |
//! | 8      | 4     | `n` (u32)                               |
//! | 12     | 4     | flags (u32), bit 0 = labels follow      |
//! | 16     | 8·d·n | values (f64), column-major              |
//! | …      | 4·n   | labels (i32, −1 = unlabeled), if flagged|

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::data::{DataMatrix, UNLABELED};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RONM";
pub const HEADER_LEN: usize = 16;
pub const FLAG_LABELS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    Csv,
    Rawf64,
}

impl MatrixFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" | "txt" => Some(MatrixFormat::Csv),
            "rawf64" | "bin" | "ronm" => Some(MatrixFormat::Rawf64),
            _ => None,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "rawf64" => Ok(MatrixFormat::Rawf64),
            other => Err(Error::param("format", format!("unknown matrix format `{other}`"))),
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Rawf64 => "rawf64",
        })
    }
}

fn classes_of(labels: &[i32]) -> usize {
    labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
}

fn finish(values: DMatrix<f64>, labels: Option<Vec<i32>>) -> Result<DataMatrix, FormatError> {
    let classes = labels.as_deref().map_or(0, classes_of);
    DataMatrix::new(values, labels, classes).map_err(|report| FormatError::Structure(report.to_string()))
}

fn check_value(value: f64, at: impl FnOnce(String) -> FormatError) -> Result<f64, FormatError> {
    if value.is_nan() || value.is_infinite() {
        Err(at(format!("non-finite value {value}")))
    } else if value < 0.0 {
        Err(at(format!("negative entry {value}")))
    } else {
        Ok(value)
    }
}

fn check_label(label: i32, at: impl FnOnce(String) -> FormatError) -> Result<i32, FormatError> {
    if label < UNLABELED {
        Err(at(format!("label {label} is below the unlabeled marker {UNLABELED}")))
    } else {
        Ok(label)
    }
}

/// Parses comma-separated text. Blank lines are skipped; a final row whose
/// first field is `labels` carries one integer label per sample.
pub fn parse_csv(text: &str) -> Result<DataMatrix, FormatError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = None;
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if labels.is_some() {
            return Err(FormatError::Text {
                line,
                field: 1,
                detail: "data after the labels row".into(),
            });
        }
        let mut fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let is_labels = fields[0].eq_ignore_ascii_case("labels");
        if is_labels {
            fields.remove(0);
        }
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(FormatError::Text {
                line,
                field: fields.len().min(expected) + 1,
                detail: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let offset = usize::from(is_labels);
        if is_labels {
            let parsed = fields
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let at = |detail| FormatError::Text {
                        line,
                        field: j + 1 + offset,
                        detail,
                    };
                    let label = f.parse::<i32>().map_err(|e| at(format!("bad label `{f}`: {e}")))?;
                    check_label(label, at)
                })
                .collect::<Result<Vec<_>, _>>()?;
            labels = Some(parsed);
        } else {
            let parsed = fields
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let at = |detail| FormatError::Text {
                        line,
                        field: j + 1,
                        detail,
                    };
                    let value = f.parse::<f64>().map_err(|e| at(format!("bad number `{f}`: {e}")))?;
                    check_value(value, at)
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(parsed);
        }
    }
    let d = rows.len();
    let n = width.unwrap_or(0);
    if d == 0 {
        return Err(FormatError::Structure("no data rows".into()));
    }
    let values = DMatrix::from_fn(d, n, |i, j| rows[i][j]);
    finish(values, labels)
}

/// Writes the CSV layout read by [`parse_csv`]. Values use the shortest
/// representation that reads back to the same bits.
pub fn write_csv(data: &DataMatrix) -> String {
    let mut out = String::new();
    for row in data.values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    if let Some(labels) = &data.labels {
        out.push_str("labels");
        for l in labels {
            out.push(',');
            out.push_str(&l.to_string());
        }
        out.push('\n');
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], FormatError> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| FormatError::Binary {
            offset: self.pos,
            detail: format!("truncated {what}: need {N} bytes, {} left", self.bytes.len() - self.pos),
        })?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice has length N"))
    }
}

/// Decodes a `rawf64` buffer.
pub fn decode_rawf64(bytes: &[u8]) -> Result<DataMatrix, FormatError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take::<4>("magic")?;
    if &magic != MAGIC {
        return Err(FormatError::Binary {
            offset: 0,
            detail: format!("bad magic {magic:02x?}"),
        });
    }
    let d = u32::from_le_bytes(r.take::<4>("feature count")?) as usize;
    let n = u32::from_le_bytes(r.take::<4>("sample count")?) as usize;
    let flags = u32::from_le_bytes(r.take::<4>("flags")?);
    if flags & !FLAG_LABELS != 0 {
        return Err(FormatError::Binary {
            offset: 12,
            detail: format!("unknown flag bits {flags:#x}"),
        });
    }
    let has_labels = flags & FLAG_LABELS != 0;
    let expected = d
        .checked_mul(n)
        .and_then(|dn| dn.checked_mul(8))
        .and_then(|v| v.checked_add(if has_labels { n.checked_mul(4)? } else { 0 }))
        .and_then(|v| v.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(FormatError::Binary {
            offset: bytes.len().min(HEADER_LEN),
            detail: format!(
                "{}x{} matrix{} needs {} bytes, file has {}",
                d,
                n,
                if has_labels { " with labels" } else { "" },
                expected.map_or_else(|| "overflowing".to_string(), |e| e.to_string()),
                bytes.len()
            ),
        });
    }
    let mut data = Vec::with_capacity(d * n);
    for _ in 0..d * n {
        let offset = r.pos;
        let value = f64::from_le_bytes(r.take::<8>("values")?);
        data.push(check_value(value, |detail| FormatError::Binary { offset, detail })?);
    }
    let labels = if has_labels {
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let offset = r.pos;
            let label = i32::from_le_bytes(r.take::<4>("labels")?);
            labels.push(check_label(label, |detail| FormatError::Binary { offset, detail })?);
        }
        Some(labels)
    } else {
        None
    };
    finish(DMatrix::from_vec(d, n, data), labels)
}

/// Encodes `data` as `rawf64`.
pub fn encode_rawf64(data: &DataMatrix) -> Result<Vec<u8>> {
    let (d, n) = data.values.shape();
    let to_u32 = |v: usize, what: &'static str| {
        u32::try_from(v).map_err(|_| Error::param(what, format!("{v} does not fit in 32 bits")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * d * n + 4 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&to_u32(d, "features")?.to_le_bytes());
    out.extend_from_slice(&to_u32(n, "samples")?.to_le_bytes());
    let flags = if data.labels.is_some() { FLAG_LABELS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for v in data.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(labels) = &data.labels {
        for l in labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
    }
    Ok(out)
}

/// Labels as integers separated by commas or whitespace.
pub fn parse_labels(text: &str) -> Result<Vec<i32>, FormatError> {
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty());
        for (j, f) in fields.enumerate() {
            let at = |detail| FormatError::Text {
                line: idx + 1,
                field: j + 1,
                detail,
            };
            let label = f.parse::<i32>().map_err(|e| at(format!("bad label `{f}`: {e}")))?;
            labels.push(check_label(label, at)?);
        }
    }
    Ok(labels)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DataMatrix> {
    let bytes = read(path)?;
    let data = match format {
        MatrixFormat::Csv => {
            let text = std::str::from_utf8(&bytes).map_err(|e| FormatError::Binary {
                offset: e.valid_up_to(),
                detail: "invalid UTF-8".into(),
            })?;
            parse_csv(text)?
        }
        MatrixFormat::Rawf64 => decode_rawf64(&bytes)?,
    };
    Ok(data)
}

pub fn save_matrix(data: &DataMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write(path, write_csv(data).as_bytes()),
        MatrixFormat::Rawf64 => write(path, &encode_rawf64(data)?),
    }
}

pub fn load_labels(path: &Path) -> Result<Vec<i32>> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(parse_labels(&text)?)
}

/// Divides every entry by the largest one (no-op on an all-zero matrix).
pub fn normalize_maxabs(data: &mut DataMatrix) {
    let max = data.values.amax();
    if max > 0.0 {
        data.values /= max;
    }
}
