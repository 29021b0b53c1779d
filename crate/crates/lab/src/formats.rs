//! On-disk formats: trajectory CSV, curve CSV and stepsize lists.

use std::io::Write;
use std::path::Path;

use ratelab_core::engine::{LimitKind, Record, Trajectory};
use ratelab_core::lab::{CurveStats, Grid};
use ratelab_core::rate_kernel::DescentConstants;

use crate::error::{LabError, Result};

pub const TRAJECTORY_HEADER: [&str; 8] = ["k", "h", "g", "step_sq", "alpha", "index", "z", "A"];
pub const CURVE_HEADER: [&str; 5] = ["A", "mean", "q05", "q50", "q95"];

/// Shortest representation that parses back to the same bits; scientific
/// notation outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&m) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_err(e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => LabError::Io {
            path: Default::default(),
            source,
        },
        other => LabError::Config(format!("{other:?}")),
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.g),
            fmt_f64(r.step_sq),
            fmt_f64(r.alpha),
            r.index.map(|i| i.to_string()).unwrap_or_default(),
            (r.z as u8).to_string(),
            fmt_f64(r.a),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| LabError::Io {
        path: Default::default(),
        source,
    })
}

pub fn trajectory_csv_string(records: &[Record]) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ASCII")
}

fn schema(path: &Path, message: impl Into<String>) -> LabError {
    LabError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_float(path: &Path, row: usize, col: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| schema(path, format!("row {row}, column {col}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(schema(path, format!("row {row}, column {col}: value must be finite")));
    }
    Ok(v)
}

/// Reads and validates a trajectory CSV in the export schema.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Record>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => LabError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => schema(path, format!("{other:?}")),
        })?;
    let header = rdr
        .headers()
        .map_err(|e| schema(path, format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(schema(path, "file is empty"));
    }
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(schema(
            path,
            format!(
                "header must be `{}`, found `{}`",
                TRAJECTORY_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut records: Vec<Record> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| schema(path, format!("row {line}: {e}")))?;
        let k: u64 = row[0].trim().parse().map_err(|_| {
            schema(
                path,
                format!("row {line}, column k: `{}` is not an iteration index", &row[0]),
            )
        })?;
        if let Some(prev) = records.last() {
            if k <= prev.k {
                return Err(schema(path, format!("row {line}: k must be strictly increasing")));
            }
        }
        let index = match row[5].trim() {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|_| schema(path, format!("row {line}, column index: `{s}` is not a block index")))?,
            ),
        };
        let z = match row[6].trim() {
            "0" => false,
            "1" => true,
            s => {
                return Err(schema(
                    path,
                    format!("row {line}, column z: expected 0 or 1, found `{s}`"),
                ))
            }
        };
        let alpha = parse_float(path, line, "alpha", &row[4])?;
        if !(alpha > 0.0) {
            return Err(schema(
                path,
                format!("row {line}, column alpha: stepsize must be positive"),
            ));
        }
        records.push(Record {
            k,
            h: parse_float(path, line, "h", &row[1])?,
            g: parse_float(path, line, "g", &row[2])?,
            step_sq: parse_float(path, line, "step_sq", &row[3])?,
            alpha,
            index,
            z,
            a: parse_float(path, line, "A", &row[7])?,
        });
    }
    if records.is_empty() {
        return Err(schema(path, "no data rows"));
    }
    Ok(records)
}

/// Stepsizes, one per line; blank lines and `#` comments are skipped.
pub fn read_alpha_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let v = parse_float(path, i + 1, "alpha", s)?;
        if !(v > 0.0) {
            return Err(schema(path, format!("line {}: stepsize must be positive", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

/// Wraps externally produced rows so the auditor can run on them.
pub fn replay_trajectory(problem: &str, records: Vec<Record>, constants: DescentConstants) -> Trajectory {
    let first = records[0];
    let last = *records.last().expect("validated non-empty");
    Trajectory {
        problem: problem.to_string(),
        seed: 0,
        stream: 0,
        p: constants.p(),
        constants,
        h0: first.h,
        budget: last.k,
        terminated: false,
        termination_k: None,
        records,
        final_iterate: Vec::new(),
        limit: Vec::new(),
        limit_kind: LimitKind::NotApplicable,
        states: Vec::new(),
    }
}

pub fn curve_csv_string(grid: &Grid, stats: &CurveStats) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).expect("in-memory write");
    for j in 0..grid.len() {
        w.write_record([
            fmt_f64(grid.a[j]),
            fmt_f64(stats.mean[j]),
            fmt_f64(stats.q05[j]),
            fmt_f64(stats.q50[j]),
            fmt_f64(stats.q95[j]),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is ASCII")
}
