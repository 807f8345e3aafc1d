//! Flat `key = value` configuration files. Keys are the long flag names
//! without the leading dashes; flags given on the command line win.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    source: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config file {}", path.display()), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{source}:{line_no}: expected `key = value`, got {line:?}")))?;
            let key = key.trim().trim_start_matches("--").to_string();
            if key.is_empty() {
                return Err(CliError::Usage(format!("{source}:{line_no}: empty key")));
            }
            let value = value.trim().trim_matches('"').to_string();
            if let Some((_, first)) = entries.insert(key.clone(), (value, line_no)) {
                return Err(CliError::Usage(format!(
                    "{source}:{line_no}: key {key:?} already set on line {first}"
                )));
            }
        }
        Ok(Self { source: source.to_string(), entries })
    }

    /// Removes `key` and parses its value.
    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((value, line)) => value.parse().map(Some).map_err(|e| {
                CliError::Usage(format!("{}:{line}: invalid value {value:?} for {key}: {e}", self.source))
            }),
        }
    }

    /// Flag value if present, otherwise the file value. The key is consumed
    /// either way.
    pub fn merge<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let file = self.take(key)?;
        Ok(flag.or(file))
    }

    pub fn merge_bool(&mut self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.take::<bool>(key)?.unwrap_or(false))
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (_, line))) => {
                Err(CliError::Usage(format!("{}:{line}: unknown config key {key:?}", self.source)))
            }
        }
    }
}
