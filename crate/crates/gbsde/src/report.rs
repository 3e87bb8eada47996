//! CSV tables and the run manifest.
//!
//! Reals are serialized with 17 significant digits so identical runs can be
//! compared byte for byte; rows are rejected if any value is non-finite.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any f64.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> Result<String> {
        match self {
            Cell::Int(v) => Ok(v.to_string()),
            Cell::Real(v) => {
                if !v.is_finite() {
                    return Err(Error::numerical(0, format!("non-finite value {v} in CSV row")));
                }
                Ok(format_real(*v))
            }
            Cell::Text(s) => Ok(s.clone()),
        }
    }
}

/// Rectangular table with a header row, comma separators and LF endings.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: Vec<S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<Cell>) -> Result<()> {
        if cells.len() != self.header.len() {
            return Err(Error::invalid(format!(
                "row has {} cells, header has {}",
                cells.len(),
                self.header.len()
            )));
        }
        self.rows.push(cells);
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let rendered: Result<Vec<String>> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", rendered?.join(","));
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let body = self.to_csv_string()?;
        fs::write(path, body).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Plain `key = value` manifest, one line per entry, in the given order.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_rectangular_and_lf_terminated() {
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push_row(vec![Cell::Int(1), Cell::Real(0.5)]).unwrap();
        let s = t.to_csv_string().unwrap();
        assert_eq!(s, "a,b\n1,5.0000000000000000e-1\n");
        assert!(t.push_row(vec![Cell::Int(1)]).is_err());
    }

    #[test]
    fn non_finite_reals_are_defects() {
        let mut t = CsvTable::new(vec!["x"]);
        t.push_row(vec![Cell::Real(f64::NAN)]).unwrap();
        assert!(t.to_csv_string().is_err());
    }

    #[test]
    fn real_formatting_round_trips() {
        for v in [0.1, -3.25e-17, 1.0 / 3.0, 123456.789, f64::MIN_POSITIVE] {
            let s = format_real(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
