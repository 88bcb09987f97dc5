//! CSV ingest and export for series and anomaly ranges.
//!
//! Series files carry a header naming their columns. Accepted layouts are
//! `timestamp,value`, `timestamp,value,label`, `value` and `value,label`;
//! the timestamp column is ignored. Range files use the header `start,end`
//! with inclusive zero-based indices.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::series::{Role, TimeSeries};
use crate::error::{CntsError, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CntsError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> CntsError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => CntsError::io(path, e),
        kind => CntsError::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

fn series_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string())
}

/// Reads a univariate series; labels are parsed when a `label` column is present.
pub fn load_series_csv(path: impl AsRef<Path>, role: Role) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(CntsError::Validation(format!(
            "{} is empty",
            path.display()
        )));
    }
    let value_col = column(&headers, "value").ok_or_else(|| {
        CntsError::Validation(format!(
            "{}: header must contain a `value` column",
            path.display()
        ))
    })?;
    let label_col = column(&headers, "label");

    let mut values = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| {
            record.get(idx).ok_or_else(|| CntsError::Parse {
                line,
                message: format!("missing column {idx}"),
            })
        };
        let raw = field(value_col)?;
        let value: f64 = raw.parse().map_err(|_| CntsError::Parse {
            line,
            message: format!("value {raw:?} is not a number"),
        })?;
        if !value.is_finite() {
            return Err(CntsError::Validation(format!(
                "line {line}: value {raw:?} is not finite"
            )));
        }
        values.push(value);
        if let (Some(idx), Some(labels)) = (label_col, labels.as_mut()) {
            let raw = field(idx)?;
            let label: f64 = raw.parse().map_err(|_| CntsError::Parse {
                line,
                message: format!("label {raw:?} is not a number"),
            })?;
            let label = if label == 0.0 {
                0u8
            } else if label == 1.0 {
                1u8
            } else {
                return Err(CntsError::Validation(format!(
                    "line {line}: label {raw:?} is not 0 or 1"
                )));
            };
            labels.push(label);
        }
    }
    if values.is_empty() {
        return Err(CntsError::Validation(format!(
            "{} holds no data rows",
            path.display()
        )));
    }
    TimeSeries::new(series_name(path), values, labels, role)
}

/// Writes `timestamp,value[,label]` with the point index as timestamp.
pub fn write_series_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CntsError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| CntsError::io(path, e);
    match series.labels() {
        Some(labels) => {
            writeln!(out, "timestamp,value,label").map_err(io)?;
            for (i, (v, l)) in series.values().iter().zip(labels).enumerate() {
                writeln!(out, "{i},{v},{l}").map_err(io)?;
            }
        }
        None => {
            writeln!(out, "timestamp,value").map_err(io)?;
            for (i, v) in series.values().iter().enumerate() {
                writeln!(out, "{i},{v}").map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

/// Reads inclusive `start,end` anomaly ranges.
pub fn load_ranges_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let (start_col, end_col) = match (column(&headers, "start"), column(&headers, "end")) {
        (Some(s), Some(e)) => (s, e),
        _ => {
            return Err(CntsError::Validation(format!(
                "{}: header must be `start,end`",
                path.display()
            )))
        }
    };
    let mut ranges = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse = |idx: usize| -> Result<usize> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse().map_err(|_| CntsError::Parse {
                line,
                message: format!("index {raw:?} is not a non-negative integer"),
            })
        };
        ranges.push((parse(start_col)?, parse(end_col)?));
    }
    Ok(ranges)
}

pub fn write_ranges_csv(ranges: &[(usize, usize)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut body = String::from("start,end\n");
    for (s, e) in ranges {
        body.push_str(&format!("{s},{e}\n"));
    }
    std::fs::write(path, body).map_err(|e| CntsError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn plain_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "value\n1.0\n2.0\n3.0\n");
        let s = load_series_csv(&p, Role::Train).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert!(s.labels().is_none());
        assert_eq!(s.name(), "a");
        assert_eq!(s.role(), Role::Train);
    }

    #[test]
    fn nab_layout_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            "timestamp,value,label\n2014-04-01 00:00:00,10.5,0\n2014-04-01 00:05:00,99,1\n",
        );
        let s = load_series_csv(&p, Role::Test).unwrap();
        assert_eq!(s.values(), &[10.5, 99.0]);
        assert_eq!(s.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "value,label\n5,abc\n");
        match load_series_csv(&p, Role::Test) {
            Err(CntsError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let p = write(&dir, "d.csv", "value\n1\nxyz\n");
        match load_series_csv(&p, Role::Test) {
            Err(CntsError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn label_out_of_range_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "value,label\n5,2\n");
        assert!(matches!(
            load_series_csv(&p, Role::Test),
            Err(CntsError::Validation(_))
        ));
    }

    #[test]
    fn empty_file_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "f.csv", "");
        assert!(matches!(
            load_series_csv(&p, Role::Test),
            Err(CntsError::Validation(_))
        ));
        let p = write(&dir, "g.csv", "value\n");
        assert!(matches!(
            load_series_csv(&p, Role::Test),
            Err(CntsError::Validation(_))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_series_csv("/nonexistent/x.csv", Role::Test),
            Err(CntsError::Io { .. })
        ));
    }

    #[test]
    fn ranges_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_ranges_csv(&[(1, 4), (9, 9)], &p).unwrap();
        assert_eq!(load_ranges_csv(&p).unwrap(), vec![(1, 4), (9, 9)]);
    }
}
