//! Closed-loop log as CSV.
//!
//! Column schema (stable): `t, x0..x{n-1}, u0..u{m-1}, r0..r{q-1},
//! rbar0..rbar{q-1}, e_norm, cost, feasible, margin`. Floats print in
//! shortest round-trip form; `feasible` is 0/1; an infeasible step's cost is
//! `NaN`.

use crate::sim::SimLog;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Malformed(String),
}

pub fn header(n: usize, m: usize, q: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("x{i}")));
    cols.extend((0..m).map(|i| format!("u{i}")));
    cols.extend((0..q).map(|i| format!("r{i}")));
    cols.extend((0..q).map(|i| format!("rbar{i}")));
    cols.push("e_norm".into());
    cols.push("cost".into());
    cols.push("feasible".into());
    cols.push("margin".into());
    cols.join(",")
}

pub fn write(log: &SimLog, n: usize, m: usize, q: usize) -> String {
    let mut out = header(n, m, q);
    out.push('\n');
    for rec in &log.steps {
        let mut fields: Vec<String> = vec![rec.t.to_string()];
        fields.extend(rec.x.iter().map(|v| v.to_string()));
        fields.extend(rec.u.iter().map(|v| v.to_string()));
        fields.extend(rec.r.iter().map(|v| v.to_string()));
        fields.extend(rec.rbar.iter().map(|v| v.to_string()));
        fields.push(rec.e_norm().to_string());
        fields.push(rec.cost.to_string());
        fields.push(if rec.feasible { "1".into() } else { "0".into() });
        fields.push(rec.margin.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parsed CSV row, used by the round-trip reader.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub rbar: Vec<f64>,
    pub e_norm: f64,
    pub cost: f64,
    pub feasible: bool,
    pub margin: f64,
}

/// Round-trip reader for the schema above; dimensions are recovered from the
/// header.
pub fn read(text: &str) -> Result<Vec<CsvRow>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CsvError::Malformed("missing header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let count = |prefix: &str| cols.iter().filter(|c| c.starts_with(prefix) && c[prefix.len()..].parse::<usize>().is_ok()).count();
    let n = count("x");
    let m = count("u");
    let q = cols.iter().filter(|c| c.starts_with('r') && !c.starts_with("rbar") && c[1..].parse::<usize>().is_ok()).count();
    let expected = 1 + n + m + 2 * q + 4;
    if cols.len() != expected {
        return Err(CsvError::Malformed(format!(
            "header has {} columns, expected {expected}",
            cols.len()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != expected {
            return Err(CsvError::Malformed(format!(
                "line {}: {} fields, expected {expected}",
                lineno + 2,
                f.len()
            )));
        }
        let num = |s: &str| -> Result<f64, CsvError> {
            s.parse::<f64>().map_err(|_| CsvError::Malformed(format!("line {}: bad number `{s}`", lineno + 2)))
        };
        let mut idx = 0;
        let t = f[idx].parse::<usize>().map_err(|_| CsvError::Malformed(format!("line {}: bad t", lineno + 2)))?;
        idx += 1;
        let take = |len: usize, idx: &mut usize| -> Result<Vec<f64>, CsvError> {
            let out: Result<Vec<f64>, _> = f[*idx..*idx + len].iter().map(|s| num(s)).collect();
            *idx += len;
            out
        };
        let x = take(n, &mut idx)?;
        let u = take(m, &mut idx)?;
        let r = take(q, &mut idx)?;
        let rbar = take(q, &mut idx)?;
        let e_norm = num(f[idx])?;
        let cost = num(f[idx + 1])?;
        let feasible = f[idx + 2] == "1";
        let margin = num(f[idx + 3])?;
        rows.push(CsvRow { t, x, u, r, rbar, e_norm, cost, feasible, margin });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{SimLog, StepRecord};

    #[test]
    fn roundtrip_preserves_values() {
        let mut log = SimLog::default();
        log.steps.push(StepRecord {
            t: 0,
            x: vec![0.1, -0.25],
            u: vec![1.5e-13],
            r: vec![2.0, 0.0],
            rbar: vec![1.9999999999, 0.0],
            v0: vec![0.0],
            cost: 42.125,
            feasible: true,
            e: vec![0.3, -0.4],
            margin: -1e-9,
            rfm_member: true,
            candidate_violation: None,
        });
        log.steps.push(StepRecord {
            t: 1,
            x: vec![0.0, 0.0],
            u: vec![0.0],
            r: vec![0.0, 0.0],
            rbar: vec![0.0, 0.0],
            v0: vec![0.0],
            cost: f64::NAN,
            feasible: false,
            e: vec![0.0, 0.0],
            margin: 0.5,
            rfm_member: false,
            candidate_violation: Some(0.1),
        });
        let text = write(&log, 2, 1, 2);
        let rows = read(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].x, vec![0.1, -0.25]);
        assert_eq!(rows[0].u, vec![1.5e-13]);
        assert_eq!(rows[0].cost, 42.125);
        assert!(rows[0].feasible);
        assert_eq!(rows[0].margin, -1e-9);
        assert!((rows[0].e_norm - 0.5).abs() < 1e-15);
        assert!(rows[1].cost.is_nan());
        assert!(!rows[1].feasible);
    }

    #[test]
    fn empty_log_is_header_only() {
        let text = write(&SimLog::default(), 3, 2, 4);
        assert_eq!(text.lines().count(), 1);
        assert!(read(&text).unwrap().is_empty());
    }
}
