//! TOML config files merged with command-line flags.
//!
//! A config file holds the same keys as the flags (without the leading `--`).
//! If the file has a table named after the subcommand (e.g. `[kam-sample]`) only that
//! table is read; otherwise its top-level keys are. Flags override the file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub fn load(path: Option<&Path>) -> Result<Option<toml::Table>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Some(table))
}

fn to_json(v: toml::Value) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))
}

/// File keys for `section`, then every non-null flag on top.
pub fn resolve<T: Serialize + DeserializeOwned>(file: Option<&toml::Table>, section: &str, flags: &T) -> Result<T, CliError> {
    let Value::Object(cli) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? else {
        unreachable!("argument structs serialize to objects")
    };
    let mut merged = Map::new();
    if let Some(table) = file {
        let scoped = match table.get(section) {
            Some(toml::Value::Table(t)) => t.clone(),
            _ => table.clone(),
        };
        for (k, v) in scoped {
            if matches!(v, toml::Value::Table(_)) {
                continue;
            }
            if !cli.contains_key(&k) {
                return Err(CliError::Config(format!("unknown key `{k}` for {section}")));
            }
            merged.insert(k, to_json(v)?);
        }
    }
    for (k, v) in cli {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("config: {e}")))
}

/// A value that must come from a flag or the config file.
pub fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Missing(key.to_string()))
}
