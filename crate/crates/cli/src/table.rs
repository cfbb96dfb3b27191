//! Tables printed at fixed precision and written to CSV at full precision
//! from the same cells, so the two never disagree beyond rounding.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Three decimals, the layout of the published tables.
    Fixed,
    /// Scientific notation, for residuals and tolerances.
    Sci,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    fn display(&self, format: Format) -> String {
        match self {
            Cell::Num(v) => match format {
                Format::Fixed => fixed3(*v),
                Format::Sci => format!("{v:.1e}"),
            },
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Three decimals; values that round to zero print unsigned.
pub fn fixed3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    formats: Vec<Format>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, Format)]) -> Self {
        Self {
            headers: columns.iter().map(|(h, _)| h.to_string()).collect(),
            formats: columns.iter().map(|&(_, f)| f).collect(),
            rows: Vec::new(),
        }
    }

    /// Like [`Table::new`] with owned header names.
    pub fn with_headers(columns: Vec<(String, Format)>) -> Self {
        Self {
            headers: columns.iter().map(|(h, _)| h.clone()).collect(),
            formats: columns.iter().map(|&(_, f)| f).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&self.formats)
                    .map(|(c, &f)| c.display(f))
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain([self.headers[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.headers);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        for r in &self.rows {
            let parts: Vec<String> = r.iter().map(Cell::csv).collect();
            out.push_str(&parts.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), Failure> {
        fs::write(path, self.to_csv())
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
    }
}
