//! Deterministic CSV and JSON writers.
//!
//! Floats in CSV carry 17 significant digits; JSON uses the shortest string
//! that round-trips. Every file states ħ = 1 and e² = 1.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const GENERATOR: &str = concat!("sip-effmass ", env!("CARGO_PKG_VERSION"));

/// A float with 17 significant digits, or empty for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub struct CsvTable {
    comments: Vec<String>,
    header: Vec<&'static str>,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            comments: vec![GENERATOR.to_string(), "units: hbar = 1, e^2 = 1".to_string()],
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        // one physical line per comment
        self.comments.push(line.into().replace('\n', " "));
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{r}");
        }
        s
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    generator: &'static str,
    units: Units,
    #[serde(flatten)]
    context: &'a serde_json::Value,
    result: &'a T,
}

#[derive(Serialize)]
struct Units {
    hbar: f64,
    e2: f64,
}

/// Pretty JSON with generator, units and the run context next to the result.
pub fn json_document<T: Serialize>(context: &serde_json::Value, result: &T) -> Result<String, CliError> {
    let env = Envelope { generator: GENERATOR, units: Units { hbar: 1.0, e2: 1.0 }, context, result };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::numerical(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(8.0), "8.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "");
        let v = 1.0 / 3.0;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(&["n", "E"]);
        t.comment("family: ho\nextra");
        t.row(&["0".into(), fmt_f64(0.0)]);
        let s = t.render();
        assert!(s.starts_with("# sip-effmass"));
        assert!(s.contains("# family: ho extra\nn,E\n0,0.0000000000000000e0\n"));
    }
}
