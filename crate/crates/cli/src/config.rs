//! Parameter resolution: flags over config file over defaults.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

fn overlay(base: &mut Value, top: Value) {
    if let (Some(b), Value::Object(t)) = (base.as_object_mut(), top) {
        for (k, v) in t {
            b.insert(k, v);
        }
    }
}

/// Resolve the parameters of `command`. A config file may hold the
/// parameters directly or under a key named after the subcommand.
pub fn resolve<P>(command: &str, config: Option<&Path>, flags: &impl Serialize) -> Result<P, CliError>
where
    P: Default + Serialize + DeserializeOwned,
{
    let mut v = serde_json::to_value(P::default()).map_err(|e| CliError::Runtime(e.into()))?;
    if let Some(path) = config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        if !file.is_object() {
            return Err(CliError::Usage("config file must hold a JSON object".into()));
        }
        let section = match file.get(command) {
            Some(s) if s.is_object() => s.clone(),
            _ => file,
        };
        overlay(&mut v, section);
    }
    overlay(&mut v, serde_json::to_value(flags).map_err(|e| CliError::Runtime(e.into()))?);
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("invalid parameters for {command}: {e}")))
}
