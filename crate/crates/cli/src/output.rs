//! Report serialisation and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters and provenance of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub artifact_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, params: &impl Serialize, out: Option<&Path>) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            params: serde_json::to_value(params)?,
            artifact_version: ARTIFACT_VERSION.to_string(),
            outputs: out.map(|p| p.display().to_string()).into_iter().collect(),
        })
    }

    /// Write `<out>.manifest.json`, the only place a timestamp appears.
    pub fn write_sidecar(&self, out: &Path) -> anyhow::Result<PathBuf> {
        let mut v = serde_json::to_value(self)?;
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        v.as_object_mut().expect("manifest is an object").insert("created_unix".into(), Value::from(secs));
        let mut path = out.as_os_str().to_owned();
        path.push(".manifest.json");
        let path = PathBuf::from(path);
        fs::write(&path, to_json(&v)).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn write_number(n: &serde_json::Number, out: &mut String) {
    if n.is_f64() {
        let x = n.as_f64().expect("f64 number");
        // 17 significant digits.
        let _ = write!(out, "{x:.16e}");
    } else {
        let _ = write!(out, "{n}");
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            // Short numeric arrays stay on one line.
            if a.len() <= 16 && a.iter().all(|x| x.is_number()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(indent + 2, out);
                write_value(x, indent + 2, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(x, indent + 2, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and floats printed to 17 significant digits.
pub fn to_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, 0, &mut s);
    s.push('\n');
    s
}

/// Emit a JSON report with the manifest embedded under `"manifest"`.
pub fn emit_report(report: &impl Serialize, manifest: &RunManifest, out: Option<&Path>) -> anyhow::Result<()> {
    let mut v = serde_json::to_value(report)?;
    let obj: &mut Map<String, Value> = v.as_object_mut().context("report must be a JSON object")?;
    obj.insert("manifest".into(), serde_json::to_value(manifest)?);
    let text = to_json(&v);
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            manifest.write_sidecar(path)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&json!({"b": 0.1, "a": [1, 2.5], "c": "5/9"}));
        assert_eq!(s, "{\n  \"a\": [1, 2.5000000000000000e0],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": \"5/9\"\n}\n");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }
}
