//! Iteration history and its CSV / JSON serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::RunEcho;
use crate::stopping::StoppingRule;

pub const CSV_HEADER: &str =
    "k,residual_norm,reg_value,error_to_pinv,error_to_rmin,error_to_exact_limit";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub k: usize,
    pub residual_norm: f64,
    pub reg_value: f64,
    pub error_to_pinv: Option<f64>,
    pub error_to_rmin: Option<f64>,
    pub error_to_exact_limit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopStatus {
    Fired,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopMetadata {
    pub rule: StoppingRule,
    /// Iteration index at which the rule fired, if it did.
    pub fired_index: Option<usize>,
    pub final_k: usize,
    pub status: StopStatus,
}

impl StopMetadata {
    pub fn is_flagged(&self) -> bool {
        self.status == StopStatus::BudgetExhausted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub rows: Vec<RecordRow>,
    pub stop: StopMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunEcho>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid(format!("unknown output format '{other}'"))),
        }
    }
}

fn push_float(out: &mut String, v: f64) {
    // 17 significant digits round-trip any f64.
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

fn push_optional(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        push_float(out, v);
    }
}

pub fn to_csv(rows: &[RecordRow]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        write!(out, "{},", row.k).unwrap();
        push_float(&mut out, row.residual_norm);
        out.push(',');
        push_float(&mut out, row.reg_value);
        out.push(',');
        push_optional(&mut out, row.error_to_pinv);
        out.push(',');
        push_optional(&mut out, row.error_to_rmin);
        out.push(',');
        push_optional(&mut out, row.error_to_exact_limit);
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<RecordRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::invalid(
            "CSV header does not match the record layout",
        ));
    }
    let float = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::invalid(format!("bad float '{s}': {e}")))
    };
    let optional = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            float(s).map(Some)
        }
    };
    lines
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(Error::invalid(format!(
                    "expected 6 CSV columns, got {}",
                    cells.len()
                )));
            }
            Ok(RecordRow {
                k: cells[0]
                    .parse()
                    .map_err(|e| Error::invalid(format!("bad iteration index: {e}")))?,
                residual_norm: float(cells[1])?,
                reg_value: float(cells[2])?,
                error_to_pinv: optional(cells[3])?,
                error_to_rmin: optional(cells[4])?,
                error_to_exact_limit: optional(cells[5])?,
            })
        })
        .collect()
}

pub fn to_json(record: &ExperimentRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("records always serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `record` to `path` in the requested format. CSV carries only the
/// rows; JSON carries rows, stop metadata and the config echo.
pub fn emit(record: &ExperimentRecord, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(&record.rows),
        Format::Json => to_json(record),
    };
    write_file(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn metadata() -> StopMetadata {
        StopMetadata {
            rule: StoppingRule::max_iter(10).unwrap(),
            fired_index: Some(10),
            final_k: 10,
            status: StopStatus::Fired,
        }
    }

    fn row(k: usize) -> RecordRow {
        RecordRow {
            k,
            residual_norm: 0.1,
            reg_value: 1.0 / 3.0,
            error_to_pinv: Some(2.5e-7),
            error_to_rmin: None,
            error_to_exact_limit: Some(0.0),
        }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_is_two_lines() {
        let csv = to_csv(&[row(3)]);
        assert_eq!(csv.lines().count(), 2);
        assert!(!csv.contains('\r'));
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "3,1.0000000000000001e-1,3.3333333333333331e-1,2.4999999999999999e-7,,0.0000000000000000e0"
        );
        assert_eq!(parse_csv(&csv).unwrap(), vec![row(3)]);
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let record = ExperimentRecord {
            rows: vec![],
            stop: metadata(),
            config: None,
        };
        let err = emit(&record, Format::Csv, &blocker.join("out.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    proptest! {
        #[test]
        fn json_and_csv_round_trip_bit_exactly(
            vals in prop::collection::vec((any::<f64>(), any::<f64>(), prop::option::of(any::<f64>())), 0..20)
        ) {
            let rows: Vec<RecordRow> = vals
                .iter()
                .enumerate()
                .filter(|(_, (a, b, c))| a.is_finite() && b.is_finite() && c.is_none_or(f64::is_finite))
                .map(|(k, &(a, b, c))| RecordRow {
                    k,
                    residual_norm: a,
                    reg_value: b,
                    error_to_pinv: c,
                    error_to_rmin: None,
                    error_to_exact_limit: c,
                })
                .collect();
            let record = ExperimentRecord { rows: rows.clone(), stop: metadata(), config: None };
            let back: ExperimentRecord = serde_json::from_str(&to_json(&record)).unwrap();
            for (a, b) in back.rows.iter().zip(&rows) {
                prop_assert_eq!(a.residual_norm.to_bits(), b.residual_norm.to_bits());
                prop_assert_eq!(a.reg_value.to_bits(), b.reg_value.to_bits());
            }
            prop_assert_eq!(&back, &record);
            let parsed = parse_csv(&to_csv(&rows)).unwrap();
            for (a, b) in parsed.iter().zip(&rows) {
                prop_assert_eq!(a.residual_norm.to_bits(), b.residual_norm.to_bits());
                prop_assert_eq!(a.error_to_pinv.map(f64::to_bits), b.error_to_pinv.map(f64::to_bits));
            }
        }
    }
}
