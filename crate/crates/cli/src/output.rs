use std::io::Write;

use clap::ValueEnum;
use raodp::accountant::{to_exact_json, Budget};
use serde_json::Value;

use crate::commands::CliError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

/// What a command prints on success.
pub enum Output {
    /// A record rendered as aligned `key value` lines or as a JSON object.
    Record(Value),
    /// Text printed verbatim in every format.
    Raw(String),
}

impl Output {
    pub fn record<T: serde::Serialize>(value: &T) -> Self {
        Output::Record(serde_json::to_value(value).expect("command reports are plain data"))
    }

    pub fn print(self, format: OutputFormat) -> Result<(), CliError> {
        let text = match (self, format) {
            (Output::Raw(s), _) => s,
            (Output::Record(v), OutputFormat::Json) => {
                to_exact_json(&v).expect("finite report values")
            }
            (Output::Record(v), OutputFormat::Table) => table(&v),
        };
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::new(1, format!("cannot write output: {e}")))
    }
}

fn table(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            if let Ok(b) = serde_json::from_value::<Budget>(v.clone()) {
                rows.push((prefix.to_string(), b.to_string()));
                return;
            }
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, rows);
            }
        }
        Value::Null => {}
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}
