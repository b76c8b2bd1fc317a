//! Tabular reports rendered as CSV or JSON.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so every value
//! round-trips exactly. Non-finite floats are written as `inf`, `-inf` or `NaN`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Float(x) if x.is_finite() => format_float(*x),
            Cell::Float(x) => quote(&format_float(*x)),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Empty => "null".into(),
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Rows sharing one header, kept in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

pub fn render(table: &Table, format: Format) -> io::Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.into_inner().map_err(|e| e.into_error())
        }
        Format::Json => {
            let mut out = String::from("[");
            for (i, row) in table.rows.iter().enumerate() {
                out.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
                for (k, (key, cell)) in table.header.iter().zip(row).enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{}: {}", quote(key), cell.json());
                }
                out.push('}');
            }
            out.push_str(if table.rows.is_empty() { "]\n" } else { "\n]\n" });
            Ok(out.into_bytes())
        }
    }
}

/// Writes the table to `path`, or to standard output when `path` is `None`.
pub fn emit_report(table: &Table, format: Format, path: Option<&Path>) -> io::Result<()> {
    let bytes = render(table, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["name", "x", "k", "ok", "note"]);
        t.push(vec!["a,b".into(), 0.1.into(), 3usize.into(), true.into(), Cell::Empty]);
        t.push(vec!["q\"t".into(), f64::INFINITY.into(), 0usize.into(), false.into(), "n".into()]);
        t
    }

    #[test]
    fn empty_csv_is_header_only() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(render(&t, Format::Csv).unwrap(), b"a,b\n");
        assert_eq!(render(&t, Format::Json).unwrap(), b"[]\n");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, -7.5e12] {
            assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_quotes_and_orders() {
        let text = String::from_utf8(render(&sample(), Format::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "name,x,k,ok,note");
        assert_eq!(lines[1], "\"a,b\",1.0000000000000001e-1,3,true,");
        assert_eq!(lines[2], "\"q\"\"t\",inf,0,false,n");
    }

    #[test]
    fn json_matches_csv_fields() {
        let text = String::from_utf8(render(&sample(), Format::Json).unwrap()).unwrap();
        assert!(text.contains(r#"{"name": "a,b", "x": 1.0000000000000001e-1, "k": 3, "ok": true, "note": null}"#));
        assert!(text.contains(r#""name": "q\"t", "x": "inf""#));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(render(&sample(), Format::Json).unwrap(), render(&sample(), Format::Json).unwrap());
    }
}
