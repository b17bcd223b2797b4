//! CSV tables and JSON reports.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use semiclassical_core::Complex64;
use serde::{Serialize, Serializer};

use crate::error::RunError;

/// Round-trip formatting with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// Serializes non-finite floats as the strings `inf`, `-inf`, `nan`.
pub fn serialize_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_f64(*v))
    }
}

pub fn serialize_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_f64(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Numeric values of column `name`.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// `prefix_0, …` style headers for the real and imaginary parts of a vector.
pub fn complex_headers(name: &str, modes: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(2 * modes);
    for k in 0..modes {
        out.push(format!("re_{name}_{k}"));
        out.push(format!("im_{name}_{k}"));
    }
    out
}

pub fn complex_cells(v: &[Complex64]) -> Vec<Cell> {
    v.iter().flat_map(|z| [Cell::Num(z.re), Cell::Num(z.im)]).collect()
}

pub fn scalar_headers(name: &str) -> [String; 2] {
    [format!("re_{name}"), format!("im_{name}")]
}

pub fn scalar_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

/// `[re, im]` in JSON.
pub fn complex_json(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    File::create(path)
        .and_then(|mut f| f.write_all(contents.as_bytes()))
        .map_err(|source| RunError::Io { stage: "write", source })
}
