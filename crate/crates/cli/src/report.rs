//! Report envelope and serialization. Every run emits
//! `{config, command, results, assertions[, timestamp]}`; JSON renders
//! every real at 17 significant digits so doubles round-trip exactly, and
//! key order is fixed by struct declaration, so identical configs produce
//! byte-identical output.

use std::io::{self, Write};

use serde::Serialize;
use siegellab_core::ConstantsConfig;

/// The fully resolved run configuration, embedded in every report.
/// Execution-only knobs (the thread cap) are deliberately not part of the
/// embedded config: they cannot affect any reported value, and reports
/// must be byte-identical across thread counts.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub sieve_limit: u64,
    pub x: Option<u64>,
    pub q: Option<u64>,
    pub d: Option<i64>,
    pub n: Option<i64>,
    pub k: Option<i64>,
    pub qmax: Option<u64>,
    pub dmax: Option<u64>,
    pub kind: Option<String>,
    pub beta: Option<f64>,
    pub step: Option<f64>,
    pub constants: ConstantsConfig,
    pub format: String,
    pub output: Option<String>,
    pub no_timestamp: bool,
}

/// One named check performed during a run. A report with any failed
/// assertion makes the process exit with code 1.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Assertions(pub Vec<Assertion>);

impl Assertions {
    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(Assertion {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.0.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Serialize)]
pub struct Report<R: Serialize> {
    pub config: ResolvedConfig,
    pub command: String,
    pub results: R,
    pub assertions: Vec<Assertion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// Tabular payload for the scan commands; `csv` output is only offered
/// where one of these exists.
pub struct CsvTable {
    pub header: &'static str,
    pub rows: Vec<String>,
}

/// Formats a real at 17 significant digits (exact f64 round-trip).
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "non-finite real in report",
            ));
        }
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a report to JSON with deterministic float rendering.
pub fn to_json<R: Serialize>(report: &Report<R>) -> io::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    report
        .serialize(&mut ser)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serializer emits utf-8"))
}

/// Human-readable rendering: dotted key paths, long arrays elided.
pub fn to_text<R: Serialize>(report: &Report<R>) -> io::Result<String> {
    let value = serde_json::to_value(report)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let mut lines = Vec::new();
    flatten("", &value, &mut lines);
    let mut out = String::new();
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

const TEXT_ARRAY_CAP: usize = 24;

fn flatten(prefix: &str, value: &serde_json::Value, out: &mut Vec<String>) {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            for (key, sub) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(&path, sub, out);
            }
        }
        Value::Array(items) => {
            for (i, sub) in items.iter().take(TEXT_ARRAY_CAP).enumerate() {
                flatten(&format!("{prefix}[{i}]"), sub, out);
            }
            if items.len() > TEXT_ARRAY_CAP {
                out.push(format!(
                    "{prefix}[...] = ({} more entries; use --format json)",
                    items.len() - TEXT_ARRAY_CAP
                ));
            }
        }
        scalar => out.push(format!("{prefix} = {scalar}")),
    }
}

pub fn to_csv(table: &CsvTable) -> String {
    let mut out = String::with_capacity(table.rows.len() * 32 + 64);
    out.push_str(table.header);
    out.push('\n');
    for row in &table.rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy_config() -> ResolvedConfig {
        ResolvedConfig {
            command: "test".into(),
            sieve_limit: 100,
            x: None,
            q: None,
            d: None,
            n: None,
            k: None,
            qmax: None,
            dmax: None,
            kind: None,
            beta: None,
            step: None,
            constants: ConstantsConfig::default(),
            format: "json".into(),
            output: None,
            no_timestamp: true,
        }
    }

    #[derive(Serialize)]
    struct Payload {
        value: f64,
        count: u64,
    }

    #[test]
    fn floats_render_at_17_digits() {
        let report = Report {
            config: dummy_config(),
            command: "test".into(),
            results: Payload {
                value: std::f64::consts::PI / 4.0,
                count: 3,
            },
            assertions: vec![],
            timestamp: None,
        };
        let json = to_json(&report).unwrap();
        assert!(json.contains("7.8539816339744828e-1"), "{json}");
        assert!(!json.contains("\"timestamp\""));

        // exact round trip back to the same bits
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let back = parsed["results"]["value"].as_f64().unwrap();
        assert_eq!(back.to_bits(), (std::f64::consts::PI / 4.0).to_bits());
    }

    #[test]
    fn text_flattens_and_elides() {
        let report = Report {
            config: dummy_config(),
            command: "test".into(),
            results: serde_json::json!({"xs": (0..40).collect::<Vec<u32>>()}),
            assertions: vec![Assertion {
                name: "a".into(),
                passed: true,
                detail: "ok".into(),
            }],
            timestamp: None,
        };
        let text = to_text(&report).unwrap();
        assert!(text.contains("results.xs[0] = 0"));
        assert!(text.contains("16 more entries"));
        assert!(text.contains("assertions[0].passed = true"));
    }
}
