use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Rows plus a summary object; rendered as CSV (rows) or JSON (summary).
pub struct Artifact {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
}

impl Artifact {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new(), summary: json!({}) }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, config: &Value) -> String {
        let version = env!("CARGO_PKG_VERSION");
        match format {
            Format::Csv => {
                let mut out = String::new();
                writeln!(out, "# lgpolymer {version}").unwrap();
                writeln!(out, "# config: {config}").unwrap();
                writeln!(out, "# summary: {}", self.summary).unwrap();
                writeln!(out, "{}", self.header.join(",")).unwrap();
                for row in &self.rows {
                    writeln!(out, "{}", row.join(",")).unwrap();
                }
                out
            }
            Format::Json => {
                let v = json!({ "version": version, "config": config, "summary": self.summary });
                let mut s = serde_json::to_string_pretty(&v).unwrap();
                s.push('\n');
                s
            }
        }
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Shortest round-trip float formatting keeps CSVs byte-stable.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_metadata_then_header() {
        let mut a = Artifact::new(vec!["x", "y"]);
        a.push(vec!["1".into(), num(0.5)]);
        a.summary = json!({ "n": 1 });
        let text = a.render(Format::Csv, &json!({ "seed": 3 }));
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# lgpolymer "));
        assert_eq!(lines[1], "# config: {\"seed\":3}");
        assert_eq!(lines[3], "x,y");
        assert_eq!(lines[4], "1,0.5");
    }

    #[test]
    fn json_is_one_object() {
        let a = Artifact::new(vec!["x"]);
        let v: Value = serde_json::from_str(&a.render(Format::Json, &json!({}))).unwrap();
        assert!(v.get("summary").is_some() && v.get("config").is_some());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
