//! Key-value config file plus flag/file/environment precedence.
//!
//! The config file is plain `key = value` lines with `#` comments. Every key
//! can also be supplied as an environment variable named `TTT_<KEY>` in
//! upper snake case. Resolution order is: command-line flag, then config
//! file, then environment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected `key = value`, got {raw:?}", path.display(), i + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves one setting: flag beats config file beats `TTT_*` environment.
pub fn resolve<T>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    let parse = |source: &str, raw: &str| -> Result<T> {
        raw.parse::<T>().map_err(|e| {
            anyhow::anyhow!("invalid value {raw:?} for {key} (from {source}): {e}")
        })
    };
    if let Some(raw) = file.get(key) {
        return Ok(Some(parse("config file", raw)?));
    }
    let env_key = format!("TTT_{}", key.to_uppercase());
    if let Ok(raw) = std::env::var(&env_key) {
        return Ok(Some(parse(&env_key, &raw)?));
    }
    Ok(None)
}
