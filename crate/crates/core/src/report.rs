//! CSV and JSON emission.
//!
//! CSV floats are written with 17 significant digits. JSON uses the shortest
//! representation that parses back to the same `f64`, which is just as
//! lossless.

use crate::error::{Error, Result};
use crate::mc::{StudyReport, ThreeLimits};
use serde::Serialize;
use std::io::Write;

/// Header of the CDF table.
pub const CDF_HEADER: [&str; 2] = ["x", "value"];
/// Header of the quantile table.
pub const QUANTILE_HEADER: [&str; 3] = ["alpha", "u", "quantile"];

/// JSON Schema for [`StudyReport`].
pub const STUDY_REPORT_SCHEMA: &str = include_str!("../schema/study_report.schema.json");

/// 17 significant digits, round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::domain(format!("cannot write table: {e}"))
}

/// Write pre-formatted rows under `header`.
pub fn write_rows<W: Write, R: AsRef<[String]>>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.as_ref()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::domain(format!("cannot write table: {e}")))
}

/// Write a table of floats with the given header.
pub fn write_table<W: Write, const K: usize>(out: W, header: [&str; K], rows: &[[f64; K]]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()).collect();
    write_rows(out, &header, &rows)
}

pub fn write_cdf_csv<W: Write>(out: W, rows: &[[f64; 2]]) -> Result<()> {
    write_table(out, CDF_HEADER, rows)
}

pub fn write_quantile_csv<W: Write>(out: W, rows: &[[f64; 3]]) -> Result<()> {
    write_table(out, QUANTILE_HEADER, rows)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::domain(format!("cannot serialize: {e}")))
}

pub fn study_json(report: &StudyReport) -> Result<String> {
    to_json(report)
}

pub fn demo_json(demo: &ThreeLimits) -> Result<String> {
    to_json(demo)
}

/// One row per study `n`, with empty cells for orders that were not run.
pub fn write_study_csv<W: Write>(out: W, report: &StudyReport) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![r.n.to_string(), fmt_f64(r.g_n), opt(r.d_limit), opt(r.d_first), opt(r.d_second), r.n_star_zero.to_string()]
        })
        .collect();
    write_rows(out, &["n", "g_n", "d_limit", "d_first", "d_second", "n_star_zero"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn cdf_table_layout() {
        let mut buf = Vec::new();
        write_cdf_csv(&mut buf, &[[-1.0, 0.25], [0.0, 0.5]]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines[2], "0.0000000000000000e0,5.0000000000000000e-1");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn schema_is_valid_json() {
        let v: serde_json::Value = serde_json::from_str(STUDY_REPORT_SCHEMA).unwrap();
        assert_eq!(v["type"], "object");
    }
}
