//! Field CSV files and JSON reports.
//!
//! A field file has the header `t,alpha,x,value` followed by one row per
//! grid point in time-major, then cluster, then space order. Numbers use
//! the shortest representation that parses back to the same `f64`, so a
//! written field reloads exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{GmfgError, Result};
use crate::field::ClusterField;
use crate::graphon::AlphaGrid;
use crate::grid::{TimeGrid, TorusGrid};

pub const CSV_HEADER: &str = "t,alpha,x,value";

pub fn field_to_csv(grid: &TorusGrid, tgrid: &TimeGrid, alpha: &AlphaGrid, field: &ClusterField) -> Result<String> {
    crate::error::check_len(tgrid.levels(), field.levels())?;
    crate::error::check_len(alpha.len(), field.clusters())?;
    crate::error::check_len(grid.n(), field.n())?;
    let mut out = String::with_capacity(field.as_slice().len() * 40);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..field.levels() {
        let t = tgrid.time(k);
        for j in 0..field.clusters() {
            let a = alpha.node(j);
            for (i, v) in field.slice(k, j).iter().enumerate() {
                writeln!(out, "{t},{a},{},{v}", grid.node(i)).expect("writing to a String");
            }
        }
    }
    Ok(out)
}

pub fn write_field_csv(path: &Path, grid: &TorusGrid, tgrid: &TimeGrid, alpha: &AlphaGrid, field: &ClusterField) -> Result<()> {
    let csv = field_to_csv(grid, tgrid, alpha, field)?;
    std::fs::write(path, csv).map_err(|e| GmfgError::io(path, e))
}

/// A field read back from CSV with its coordinate axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvField {
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub xs: Vec<f64>,
    pub values: ClusterField,
}

/// Parses a field CSV, checking that rows form a complete tensor grid in
/// the documented order.
pub fn parse_field_csv(src: &str) -> Result<CsvField> {
    let mut lines = src.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(GmfgError::Parse {
                line: 1,
                message: format!("expected header {CSV_HEADER:?}"),
            })
        }
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(GmfgError::Parse {
                line: ln + 1,
                message: format!("expected 4 columns, found {}", parts.len()),
            });
        }
        let mut row = [0.0; 4];
        for (slot, p) in row.iter_mut().zip(&parts) {
            *slot = p.trim().parse().map_err(|_| GmfgError::Parse {
                line: ln + 1,
                message: format!("not a number: {p:?}"),
            })?;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GmfgError::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let distinct = |col: usize, stride: usize, count_limit: usize| -> Vec<f64> {
        let mut v = Vec::new();
        for r in rows.iter().step_by(stride).take(count_limit) {
            if v.last() != Some(&r[col]) {
                v.push(r[col]);
            }
        }
        v
    };
    let n = rows.iter().take_while(|r| r[0] == rows[0][0] && r[1] == rows[0][1]).count();
    let xs: Vec<f64> = rows[..n].iter().map(|r| r[2]).collect();
    let per_level = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
    if per_level % n != 0 {
        return Err(GmfgError::Parse {
            line: per_level + 2,
            message: "time level does not contain whole spatial slices".into(),
        });
    }
    let alphas = distinct(1, n, per_level / n);
    let m = alphas.len();
    if !rows.len().is_multiple_of(m * n) {
        return Err(GmfgError::Parse {
            line: rows.len() + 1,
            message: "incomplete final time level".into(),
        });
    }
    let times = distinct(0, m * n, usize::MAX);
    let levels = rows.len() / (m * n);
    if times.len() != levels {
        return Err(GmfgError::Parse {
            line: 2,
            message: "time column is not constant within levels".into(),
        });
    }
    for (idx, r) in rows.iter().enumerate() {
        let (k, rest) = (idx / (m * n), idx % (m * n));
        let (j, i) = (rest / n, rest % n);
        if r[0] != times[k] || r[1] != alphas[j] || r[2] != xs[i] {
            return Err(GmfgError::Parse {
                line: idx + 2,
                message: "rows are not in t, alpha, x order on a tensor grid".into(),
            });
        }
    }
    let values = ClusterField::from_vec(levels, m, n, rows.iter().map(|r| r[3]).collect())?;
    Ok(CsvField { times, alphas, xs, values })
}

pub fn read_field_csv(path: &Path) -> Result<CsvField> {
    let src = std::fs::read_to_string(path).map_err(|e| GmfgError::io(path, e))?;
    parse_field_csv(&src)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| GmfgError::InvalidInput(format!("serialising report: {e}")))?;
    std::fs::write(path, s + "\n").map_err(|e| GmfgError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (TorusGrid, TimeGrid, AlphaGrid, ClusterField) {
        let grid = TorusGrid::new(5).unwrap();
        let tgrid = TimeGrid::new(0.3, 3).unwrap();
        let alpha = AlphaGrid::new(2).unwrap();
        let f = ClusterField::from_fn(4, 2, 5, |k, j, i| (k as f64 + 0.1).sin() * (j as f64 + 1.0) / (i as f64 + 3.0));
        (grid, tgrid, alpha, f)
    }

    #[test]
    fn layout_and_exact_round_trip() {
        let (grid, tgrid, alpha, f) = sample();
        let csv = field_to_csv(&grid, &tgrid, &alpha, &f).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 4 * 2 * 5);
        assert!(lines[1].starts_with("0,0.25,0,"));
        assert!(lines[6].starts_with("0,0.75,0,"));
        let back = parse_field_csv(&csv).unwrap();
        assert_eq!(back.values, f);
        assert_eq!(back.alphas, alpha.nodes());
        assert_eq!(back.xs, grid.nodes());
        assert_eq!(back.times.len(), 4);
    }

    #[test]
    fn malformed_files() {
        assert!(parse_field_csv("a,b,c\n").is_err());
        assert!(parse_field_csv("t,alpha,x,value\n").is_err());
        let err = parse_field_csv("t,alpha,x,value\n0,0.5,0,1\n0,0.5,0.5,oops\n").unwrap_err();
        assert!(matches!(err, GmfgError::Parse { line: 3, .. }), "{err}");
        assert!(parse_field_csv("t,alpha,x,value\n0,0.5,0,1\n0,0.5,0.5,2\n1,0.5,0,1\n").is_err());
        assert!(parse_field_csv("t,alpha,x,value\n0,0.5,0,1\n0,0.5,0.5,2\n1,0.5,0.5,1\n1,0.5,0,1\n").is_err());
    }

    #[test]
    fn json_writer() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_json(&p, &serde_json::json!({"a": 1})).unwrap();
        let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(back["a"], 1);
    }
}
