//! Typed tabular reports and their deterministic text, CSV and JSON forms.

pub mod svg;
pub mod tables;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Decimal places for floating-point cells in every output format.
pub const FLOAT_DECIMALS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Text,
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Text(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Fixed-precision rendering; negative zero prints as zero.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let s = format!("{x:.FLOAT_DECIMALS$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Empty => serde_json::Value::Null,
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Int(n) => serde_json::Value::from(*n),
            Cell::Float(x) if x.is_finite() => {
                let rounded: f64 = format_float(*x).parse().expect("formatted float parses");
                serde_json::Value::from(rounded)
            }
            Cell::Float(_) => serde_json::Value::Null,
            Cell::Bool(b) => serde_json::Value::Bool(*b),
        }
    }
}

/// One analysis result as a table plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub kind: String,
    /// File stem; unique within one run.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl AnalysisReport {
    pub fn new(kind: &str, name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the schema of {}", self.name);
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// RFC 4180 with CRLF line ends. Metadata is not part of the CSV form.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        write_csv(&self.columns, &rows)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| serde_json::Value::Array(r.iter().map(Cell::to_json).collect()))
            .collect();
        #[derive(Serialize)]
        struct Out<'a> {
            kind: &'a str,
            name: &'a str,
            columns: &'a [String],
            rows: Vec<serde_json::Value>,
            metadata: &'a BTreeMap<String, String>,
        }
        let mut s = serde_json::to_string_pretty(&Out {
            kind: &self.kind,
            name: &self.name,
            columns: &self.columns,
            rows,
            metadata: &self.metadata,
        })
        .expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned columns: text left-aligned, numbers right-aligned.
    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.render().replace(['\r', '\n'], " ")).collect())
            .collect();
        let mut width: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for r in &cells {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|j| {
                self.rows.iter().all(|r| matches!(r[j], Cell::Int(_) | Cell::Float(_) | Cell::Empty))
                    && !self.rows.is_empty()
            })
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "# {} ({})", self.name, self.kind);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let line = |vals: &[String], out: &mut String| {
            let parts: Vec<String> = vals
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let pad = width[j] - v.chars().count();
                    if numeric[j] {
                        format!("{}{v}", " ".repeat(pad))
                    } else {
                        format!("{v}{}", " ".repeat(pad))
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&self.columns, &mut out);
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, &mut out);
        for r in &cells {
            line(r, &mut out);
        }
        out
    }
}

pub fn write_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input gives utf-8 output")
}

/// Parse CSV written by [`write_csv`] back into header and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), csv::Error> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AnalysisReport {
        let mut r = AnalysisReport::new("demo", "demo", &["name", "rho", "n", "note"]);
        r.push(vec!["Univ, \"A\"".into(), 0.123456789.into(), 3usize.into(), Cell::Empty]);
        r.push(vec!["B".into(), (-0.0).into(), 10usize.into(), "multi\nline".into()]);
        r.meta("input", "abc");
        r
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = AnalysisReport::new("x", "x", &["a", "b"]);
        assert_eq!(r.to_csv(), "a,b\r\n");
        let (h, rows) = parse_csv(&r.to_csv()).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert!(rows.is_empty());
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let csv = sample().to_csv();
        let (h, rows) = parse_csv(&csv).unwrap();
        assert_eq!(write_csv(&h, &rows), csv);
        assert!(csv.contains("0.123457"));
        assert!(csv.contains(",0.000000,"));
    }

    #[test]
    fn json_has_stable_layout() {
        let j = sample().to_json();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["rows"][0][1], serde_json::json!(0.123457));
        assert!(v["rows"][0][3].is_null());
        let keys: Vec<usize> = ["\"kind\"", "\"name\"", "\"columns\"", "\"rows\"", "\"metadata\""]
            .iter()
            .map(|k| j.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn text_is_aligned() {
        let t = sample().to_text();
        let lines: Vec<&str> = t.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(lines[0].starts_with("name"));
        assert!(lines[1].starts_with("---"));
    }
}
