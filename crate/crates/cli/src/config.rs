//! Flat key-value configuration and parameter resolution
//! (flag, then config file, then default).

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Comma-separated list flag, e.g. `--n 64,128,256`.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("bad list entry {p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            CliError::usage(format!("config is not valid TOML: {}", e.message()))
        })?;
        let mut entries = BTreeMap::new();
        for (k, v) in table {
            entries.insert(k.replace('-', "_"), scalar_text(&k, &v)?);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }
}

fn scalar_text(key: &str, v: &toml::Value) -> Result<String, CliError> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => {
            let parts = items.iter().map(|i| scalar_text(key, i)).collect::<Result<Vec<_>, _>>()?;
            parts.join(",")
        }
        _ => return Err(CliError::usage(format!("config key {key:?} must be a scalar or a list"))),
    })
}

/// Resolves parameters and remembers the effective values for the manifest.
pub struct Params<'a> {
    config: &'a Config,
    pub used: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    pub fn new(config: &'a Config) -> Self {
        Self { config, used: BTreeMap::new() }
    }

    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.config.get(key) {
                Some(text) => Some(
                    text.parse::<T>().map_err(|e| CliError::usage(format!("config key {key}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.used.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.used.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| CliError::usage(format!("missing required parameter --{}", key.replace('_', "-"))))
    }

    pub fn flag(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let on = flag || self.opt::<bool>(key, None)?.unwrap_or(false);
        self.used.insert(key.to_string(), on.to_string());
        Ok(on)
    }

    /// Config keys that no parameter asked for are most likely typos.
    pub fn check_unused(&self, global: &[&str]) -> Result<(), CliError> {
        match self.config.keys().find(|k| !self.used.contains_key(*k) && !global.contains(&k.as_str())) {
            Some(k) => Err(CliError::usage(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }
}
