//! `key = value` configuration: one TOML section per subcommand, with
//! `--set key=value` overrides applied on top.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use toml::{Table, Value};

/// Loads `[section]` from `path` (if given) and applies the overrides.
pub fn section(path: Option<&Path>, section: &str, overrides: &[String]) -> Result<Table> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let mut doc: Table = text.parse().with_context(|| format!("parsing config {}", p.display()))?;
            match doc.remove(section) {
                Some(Value::Table(t)) => t,
                Some(_) => bail!("config section [{section}] is not a table"),
                None => Table::new(),
            }
        }
        None => Table::new(),
    };
    for item in overrides {
        let (key, raw) = item.split_once('=').with_context(|| format!("override `{item}` is not key=value"))?;
        table.insert(key.trim().to_string(), parse_value(raw.trim()));
    }
    Ok(table)
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn take_f64(table: &mut Table, key: &str, default: f64) -> Result<f64> {
    match table.remove(key) {
        None => Ok(default),
        Some(Value::Float(v)) => Ok(v),
        Some(Value::Integer(v)) => Ok(v as f64),
        Some(other) => bail!("`{key}` must be a number (got {other})"),
    }
}

pub fn into<T: DeserializeOwned>(table: Table) -> Result<T> {
    Ok(Value::Table(table).try_into()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_over_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[profile]\na = 2.0\nnodes = 11\n[grow]\nn = 3\n").unwrap();
        let t = section(Some(&path), "profile", &["a=-1.5".into(), "label=abc".into()]).unwrap();
        assert_eq!(t["a"], Value::Float(-1.5));
        assert_eq!(t["nodes"], Value::Integer(11));
        assert_eq!(t["label"], Value::String("abc".into()));
    }

    #[test]
    fn missing_section_is_empty() {
        let t = section(None, "sturm", &[]).unwrap();
        assert!(t.is_empty());
    }
}
