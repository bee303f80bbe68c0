//! The output envelope, JSON/CSV rendering and reproducer files.

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use apdecay::report::LemmaReport;
use clap::ValueEnum;
use serde::Deserialize;
use serde_json::{json, Value};

/// Version of the envelope layout; bumped on incompatible changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub struct Emitter {
    pub format: Format,
    pub output: Option<PathBuf>,
    pub reproducer: Option<PathBuf>,
    pub timestamp: bool,
    pub seed: u64,
}

/// Drops every `wall_time_ms` field, the only run-dependent part of a report.
pub fn strip_wall_time(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            Value::Object(m.into_iter().filter(|(k, _)| k != "wall_time_ms").map(|(k, v)| (k, strip_wall_time(v))).collect())
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(strip_wall_time).collect()),
        other => other,
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, rows)),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, rows)),
        Value::String(s) => rows.push((prefix.into(), s.clone())),
        other => rows.push((prefix.into(), other.to_string())),
    }
}

impl Emitter {
    fn envelope(&self, command: &str, result: &Value) -> Value {
        let mut doc = json!({
            "schema_version": SCHEMA_VERSION,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": self.seed,
            "result": result,
        });
        if self.timestamp {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            doc["generated_at_unix"] = json!(now);
            doc
        } else {
            strip_wall_time(doc)
        }
    }

    fn csv(&self, doc: &Value, report: Option<&LemmaReport>) -> Result<Vec<u8>, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| e.to_string();
        match report {
            // one row for the worst margin, then one per recorded violation
            Some(r) => {
                w.write_record(["lemma_id", "kind", "margin", "checks", "violation_count", "location"]).map_err(err)?;
                let worst = r.worst_margin.map(|m| m.to_string()).unwrap_or_default();
                let (checks, count) = (r.checks.to_string(), r.violation_count.to_string());
                let argmin = r.argmin_location.to_string();
                w.write_record([r.lemma_id.as_str(), "worst", &worst, &checks, &count, &argmin]).map_err(err)?;
                for v in &r.violations {
                    let (m, loc) = (v.margin.to_string(), v.location.to_string());
                    w.write_record([r.lemma_id.as_str(), "violation", &m, "", "", &loc]).map_err(err)?;
                }
            }
            None => {
                let mut rows = Vec::new();
                flatten("", doc, &mut rows);
                w.write_record(["path", "value"]).map_err(err)?;
                for (k, v) in rows {
                    w.write_record([k, v]).map_err(err)?;
                }
            }
        }
        w.into_inner().map_err(|e| e.to_string())
    }

    /// Writes `result` in its envelope; campaign reports also render as margin rows in CSV.
    pub fn emit(&self, command: &str, result: &Value, report: Option<&LemmaReport>) -> Result<(), String> {
        let doc = self.envelope(command, result);
        let bytes = match self.format {
            Format::Json => {
                let mut b = serde_json::to_vec_pretty(&doc).map_err(|e| e.to_string())?;
                b.push(b'\n');
                b
            }
            Format::Csv => {
                let stripped = report.map(|r| {
                    let mut r = r.clone();
                    if !self.timestamp {
                        r.wall_time_ms = None;
                    }
                    r
                });
                self.csv(&doc, stripped.as_ref())?
            }
        };
        match &self.output {
            Some(path) => std::fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
            None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
        }
    }

    /// The reproducer goes to `--reproducer`, else next to `--output`, else the working directory.
    pub fn write_reproducer(&self, detail: &Value) -> Result<PathBuf, String> {
        let path = match (&self.reproducer, &self.output) {
            (Some(p), _) => p.clone(),
            (None, Some(out)) => {
                let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
                name.push(".reproducer.json");
                out.with_file_name(name)
            }
            (None, None) => PathBuf::from(format!("apdecay-reproducer-{}.json", self.seed)),
        };
        let doc = json!({ "schema_version": SCHEMA_VERSION, "tool_version": env!("CARGO_PKG_VERSION"), "reproducer": detail });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
        std::fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_time_is_stripped_at_every_depth() {
        let v = json!({ "wall_time_ms": 3, "a": [{ "wall_time_ms": 1, "b": 2 }] });
        assert_eq!(strip_wall_time(v), json!({ "a": [{ "b": 2 }] }));
    }

    #[test]
    fn flatten_uses_dotted_paths() {
        let mut rows = Vec::new();
        flatten("", &json!({ "a": { "b": [1, "x"] } }), &mut rows);
        assert_eq!(rows, vec![("a.b.0".into(), "1".into()), ("a.b.1".into(), "x".into())]);
    }
}
