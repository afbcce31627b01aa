//! Output plumbing shared by all subcommands.
//!
//! Every run produces one document: a JSON envelope with a stable field
//! order (`schema_version`, `command`, `scenario_echo`, `results`) or a
//! CSV table with a mandatory header row. Floats are written with Rust's
//! shortest round-trip formatting in both formats, so reruns of the same
//! scenario produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::scenario::ScenarioEcho;
use crate::CliError;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    scenario_echo: &'a ScenarioEcho,
    results: &'a R,
}

/// Render the JSON envelope for one command run.
pub fn render_json<R: Serialize>(
    command: &str,
    echo: &ScenarioEcho,
    results: &R,
) -> Result<String, CliError> {
    let envelope = Envelope {
        schema_version: OUTPUT_SCHEMA_VERSION,
        command,
        scenario_echo: echo,
        results,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CliError::Config(format!("serialize: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// A CSV table: one header row, then data rows. Cells are plain numbers or
/// bare words, so no quoting is ever needed.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: Vec<S>) -> Self {
        CsvTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Shortest round-trip decimal form, the same digits `Display` prints.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Write to the given path, or stdout when no path was given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
        }
    }
}

/// Machine-readable error report on stderr. Solver failures attach the
/// bisection trace so a failed bracket can be inspected without rerunning.
pub fn report_error(err: &CliError) {
    let (code, kind) = (err.exit_code(), err.kind());
    let mut body = serde_json::json!({
        "error": {
            "code": code,
            "kind": kind,
            "message": err.to_string(),
        }
    });
    if let CliError::Solver(esamp_core::Error::Convergence { trace, .. }) = err {
        if let Ok(steps) = serde_json::to_value(trace) {
            body["error"]["bracket_trace"] = steps;
        }
    }
    eprintln!("{body}");
}

/// Pull a named field out of a JSON object, with a path-aware error.
pub fn require_field<'v>(value: &'v Value, field: &str) -> Result<&'v Value, CliError> {
    value
        .get(field)
        .ok_or_else(|| CliError::Config(format!("missing field {field:?} in schedule input")))
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_join_with_commas_and_end_with_newlines() {
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push_row(vec!["1".into(), "2.5".into()]);
        assert_eq!(t.render(), "a,b\n1,2.5\n");
    }

    #[test]
    fn float_formatting_is_shortest_round_trip() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0), "1");
        let x = 0.588_829_967_827_407_3_f64;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn envelope_opens_with_version_then_command() {
        let scenario = crate::scenario::Scenario::from_toml(
            "schema_version = 1\n[distribution]\nfamily = \"rayleigh\"\nmean = 1.0\n[weights]\nalpha = 1.0\nbeta = 21.0\n",
        )
        .unwrap();
        let echo = scenario.echo();
        let text = render_json("solve", &echo, &serde_json::json!({"t1_star": 0.5})).unwrap();
        assert!(text.starts_with("{\n  \"schema_version\": 1,\n  \"command\": \"solve\""));
        assert!(text.ends_with("\n"));
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["scenario_echo"]["beta"], 21.0);
        assert_eq!(parsed["results"]["t1_star"], 0.5);
    }
}
