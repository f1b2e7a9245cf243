//! CSV formats for coefficient tables and interlacing spectra.
//!
//! Coefficient tables have header `n,a,b`: one row per site `n`, with `a(n)`
//! and `b(n)`; either cell may be empty where the window does not use it.
//! Spectra files have header `mu,nu` with one list per column; the shorter
//! column is padded with empty cells.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::krein::InterlacedSpectra;
use crate::lattice::{CoefficientModel, LatticeWindow};
use crate::spectra::format_17;

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn cell(x: Option<f64>) -> String {
    x.map(format_17).unwrap_or_default()
}

fn parse_cell(s: &str, line: u64) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| Error::Format(format!("line {line}: {s:?}: {e}")))
}

/// Rows `left ..= right`: `a` on `[left, right−1]`, `b` on the interior.
pub fn write_coefficients_csv(model: &CoefficientModel, window: &LatticeWindow, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "a", "b"]).map_err(csv_err)?;
    for n in window.left..=window.right {
        let a = (n < window.right).then(|| model.a(n)).transpose()?;
        let b = window.is_interior(n).then(|| model.b(n)).transpose()?;
        w.write_record([n.to_string(), cell(a), cell(b)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_coefficients_csv`]. Sites must be
/// consecutive; `a` and `b` each have to form one contiguous run.
pub fn read_coefficients_csv(input: impl Read) -> Result<CoefficientModel> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["n", "a", "b"] {
        return Err(Error::Format(format!("expected header n,a,b, found {headers:?}")));
    }
    let mut a: (Option<i64>, Vec<f64>) = (None, Vec::new());
    let mut b: (Option<i64>, Vec<f64>) = (None, Vec::new());
    let mut prev: Option<i64> = None;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let n: i64 = rec[0]
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("line {line}: site {:?}: {e}", &rec[0])))?;
        if prev.is_some_and(|p| p + 1 != n) {
            return Err(Error::Format(format!("line {line}: site {n} is not consecutive")));
        }
        prev = Some(n);
        for (col, run) in [(1, &mut a), (2, &mut b)] {
            if let Some(v) = parse_cell(&rec[col], line)? {
                let start = *run.0.get_or_insert(n);
                if start + run.1.len() as i64 != n {
                    return Err(Error::Format(format!("line {line}: gap in column {col}")));
                }
                run.1.push(v);
            }
        }
    }
    CoefficientModel::table(a.0.unwrap_or(0), a.1, b.0.unwrap_or(0), b.1)
}

pub fn write_spectra_csv(spectra: &InterlacedSpectra, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu", "nu"]).map_err(csv_err)?;
    for i in 0..spectra.mu.len().max(spectra.nu.len()) {
        w.write_record([cell(spectra.mu.get(i).copied()), cell(spectra.nu.get(i).copied())])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw `(mu, nu)` columns; interlacing is checked by the caller through
/// [`InterlacedSpectra::new`].
pub fn read_spectra_csv(input: impl Read) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["mu", "nu"] {
        return Err(Error::Format(format!("expected header mu,nu, found {headers:?}")));
    }
    let mut mu = Vec::new();
    let mut nu = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if let Some(v) = parse_cell(&rec[0], line)? {
            mu.push(v);
        }
        if let Some(v) = parse_cell(&rec[1], line)? {
            nu.push(v);
        }
    }
    Ok((mu, nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_round_trip() {
        let m = CoefficientModel::table(-1, vec![0.7, 1.0 / 3.0, 2.5, 1.0], 0, vec![0.1, -0.2, 1e-17]).unwrap();
        let w = LatticeWindow::new(-1, 3).unwrap();
        let mut buf = Vec::new();
        write_coefficients_csv(&m, &w, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,a,b\n-1,"));
        let back = read_coefficients_csv(text.as_bytes()).unwrap();
        assert_eq!(back, m.tabulate(&w).unwrap());
    }

    #[test]
    fn coefficient_errors_carry_lines() {
        let err = read_coefficients_csv("n,a,b\n0,1,\n1,x,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(read_coefficients_csv("n,a\n0,1\n".as_bytes()).is_err());
        assert!(read_coefficients_csv("n,a,b\n0,1,\n2,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn spectra_round_trip() {
        let s = InterlacedSpectra::new(vec![0.0], vec![-1.0, 1.0], 3, true).unwrap();
        let mut buf = Vec::new();
        write_spectra_csv(&s, &mut buf).unwrap();
        let (mu, nu) = read_spectra_csv(buf.as_slice()).unwrap();
        assert_eq!((mu, nu), (s.mu, s.nu));
    }
}
