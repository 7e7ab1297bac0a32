//! Flat `key = value` run configuration files.
//!
//! Keys are the long flag names without the leading dashes. Blank lines and
//! lines starting with `#` are ignored. Command-line flags take precedence.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got {raw:?}", n + 1))?;
            let key = key.trim().trim_start_matches("--").to_string();
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(format!("line {}: duplicate key {key:?}", n + 1));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Parsed value of `key`, if present.
    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }
}
