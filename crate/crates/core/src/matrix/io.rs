//! Matrix files: JSON `{"d": int, "entries": [[...], ...]}` or plain CSV with
//! `d` rows of `d` comma-separated values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CandidateMatrix, MatrixError, Mode, ValidatedMatrix, ValidationError};

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON parse error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("CSV parse error at line {line}, column {column}: {message}")]
    Csv {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("declared d = {declared} but entries have {actual} rows")]
    DimensionMismatch { declared: usize, actual: usize },
    #[error(transparent)]
    Shape(#[from] MatrixError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixJson {
    d: usize,
    entries: Vec<Vec<f64>>,
}

/// Parses the JSON matrix format without validating.
pub fn parse_json(text: &str) -> Result<CandidateMatrix, ReadError> {
    let raw: MatrixJson = serde_json::from_str(text).map_err(|e| ReadError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.entries.len() != raw.d {
        return Err(ReadError::DimensionMismatch {
            declared: raw.d,
            actual: raw.entries.len(),
        });
    }
    Ok(CandidateMatrix::from_rows(raw.entries)?)
}

/// Parses the CSV matrix format without validating. Blank lines are skipped.
pub fn parse_csv(text: &str) -> Result<CandidateMatrix, ReadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            ReadError::Csv {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, field)| {
                field.parse::<f64>().map_err(|e| ReadError::Csv {
                    line,
                    column: k + 1,
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(CandidateMatrix::from_rows(rows)?)
}

/// Parses either format, choosing JSON when the first non-blank byte is `{`.
pub fn parse_matrix(text: &str) -> Result<CandidateMatrix, ReadError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

/// Reads and validates a matrix file.
pub fn read_matrix(path: &Path, mode: Mode) -> Result<ValidatedMatrix, ReadError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_matrix(&text)?.validate(mode)?)
}

/// Serializes in the JSON matrix format.
pub fn to_json(m: &CandidateMatrix) -> String {
    serde_json::to_string(&MatrixJson {
        d: m.d(),
        entries: m.rows(),
    })
    .expect("matrix serializes")
}

/// Serializes as CSV.
pub fn to_csv(m: &CandidateMatrix) -> String {
    m.rows()
        .iter()
        .map(|r| r.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let m = CandidateMatrix::from_fn(3, |i, j| if i == j { 1.0 } else { 1.0 / 3.0 }).unwrap();
        assert_eq!(parse_matrix(&to_json(&m)).unwrap(), m);
        assert_eq!(parse_matrix(&to_csv(&m)).unwrap(), m);
    }

    #[test]
    fn csv_error_reports_position() {
        match parse_csv("1,0\n0,x\n") {
            Err(ReadError::Csv { line: 2, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_error_reports_position() {
        match parse_json("{\"d\": 2,\n \"entries\": [[1, 0], [0 1]]}") {
            Err(ReadError::Json { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_json(r#"{"d": 3, "entries": [[1]]}"#),
            Err(ReadError::DimensionMismatch { declared: 3, actual: 1 })
        ));
    }

    #[test]
    fn validation_runs_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "1,1.2\n1.2,1\n").unwrap();
        assert!(matches!(read_matrix(&path, Mode::Tdm), Err(ReadError::Invalid(_))));
    }
}
