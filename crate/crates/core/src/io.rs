//! CSV output. Numbers use the shortest exponent form that round-trips; NaN
//! (undefined samples) is written as an empty cell.

use crate::ed::BathRecord;
use crate::energetics::{EnergyLedger, LEDGER_COLUMNS};
use crate::error::{DynamoError, Result};
use crate::model::{FieldTrajectory, SpinTrajectory};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

pub fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| DynamoError::Argument(format!("not a number: {s:?}")))
}

/// Columns of equal length, one header each.
pub fn write_csv(path: &Path, headers: &[String], columns: &[&[f64]]) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(DynamoError::Argument("header and column counts differ".into()));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(DynamoError::Argument("columns of unequal length".into()));
    }
    let mut out = String::with_capacity(n * columns.len() * 24);
    out.push_str(&headers.join(","));
    out.push('\n');
    for i in 0..n {
        for (k, c) in columns.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format_value(c[i]));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .ok_or_else(|| DynamoError::Argument(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for (ln, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != headers.len() {
            return Err(DynamoError::Argument(format!("{}: row {} has {} cells", path.display(), ln + 2, cells.len())));
        }
        for (c, s) in columns.iter_mut().zip(cells) {
            c.push(parse_value(s)?);
        }
    }
    Ok(Table { headers, columns })
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// t, sx, sy, sz, sz_dot (empty when unavailable) and any extra columns.
pub fn write_trajectory(path: &Path, traj: &SpinTrajectory, extra: &[(&str, &[f64])]) -> Result<()> {
    let t = traj.grid.times();
    let sd = traj.sz_dot.clone().unwrap_or_else(|| vec![f64::NAN; traj.len()]);
    let mut headers = names(&["t", "sx", "sy", "sz", "sz_dot"]);
    let mut cols: Vec<&[f64]> = vec![&t, &traj.sx, &traj.sy, &traj.sz, &sd];
    for (h, c) in extra {
        headers.push(h.to_string());
        cols.push(c);
    }
    write_csv(path, &headers, &cols)
}

pub fn write_field(path: &Path, field: &FieldTrajectory) -> Result<()> {
    let t = field.grid.times();
    let nan = vec![f64::NAN; t.len()];
    let part = |o: &Option<Vec<f64>>| o.clone().unwrap_or_else(|| nan.clone());
    let (hf, ha, hd) = (part(&field.h_free), part(&field.h_ad), part(&field.h_dyn));
    write_csv(path, &names(&["t", "h_total", "h_free", "h_ad", "h_dyn"]), &[&t, &field.h_total, &hf, &ha, &hd])
}

pub fn write_ledger(path: &Path, ledger: &EnergyLedger) -> Result<()> {
    let t = ledger.grid.times();
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(ledger.columns());
    write_csv(path, &names(&LEDGER_COLUMNS), &cols)
}

/// Per mode k: Re b_k, Im b_k (lab frame), ⟨n_k⟩ and its field h_k; `mode_fields` is `[mode][time]`.
pub fn write_bath_record(path: &Path, rec: &BathRecord, mode_fields: &[Vec<f64>]) -> Result<()> {
    let t = rec.grid.times();
    let k_modes = rec.b.first().map_or(0, |b| b.len());
    let mut headers = vec!["t".to_string()];
    let mut owned: Vec<Vec<f64>> = Vec::new();
    for k in 0..k_modes {
        headers.push(format!("re_b{k}"));
        headers.push(format!("im_b{k}"));
        headers.push(format!("n{k}"));
        headers.push(format!("h{k}"));
        owned.push(rec.b.iter().map(|b| b[k].re).collect());
        owned.push(rec.b.iter().map(|b| b[k].im).collect());
        owned.push(rec.n.iter().map(|n| n[k]).collect());
        owned.push(mode_fields[k].clone());
    }
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(owned.iter().map(|c| c.as_slice()));
    write_csv(path, &headers, &cols)
}

/// `key = value` lines.
pub fn write_report(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    fs::write(path, s)?;
    Ok(())
}
