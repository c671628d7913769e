use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Top-level JSON document shared by every command.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub run: &'a C,
    #[serde(flatten)]
    pub result: &'a R,
}

pub fn render<C: Serialize, R: Serialize>(command: &str, run: &C, result: &R) -> Result<String> {
    let doc = Envelope {
        tool: "medmark",
        version: medmark_core::VERSION,
        command,
        run,
        result,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Prints the JSON, or writes it to `report` and prints a flat table derived
/// from it.
pub fn emit(json: &str, report: Option<&Path>) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match report {
        None => out.write_all(json.as_bytes())?,
        Some(path) => {
            std::fs::write(path, json)
                .with_context(|| format!("writing report {}", path.display()))?;
            let value: Value = serde_json::from_str(json)?;
            for (key, v) in flatten(&value) {
                writeln!(out, "{key:<40} {v}")?;
            }
        }
    }
    Ok(())
}

pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, child, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), child, out);
                }
            }
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}
