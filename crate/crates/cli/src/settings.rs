//! Flat `key = value` config files merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

pub const SEED_ENV: &str = "GREX_SEED";

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    effective: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("E-IO", format!("{}: {e}", path.display())))?;
        Ok(Settings {
            file: parse(&text)
                .map_err(|m| CliError::new("E-CONFIG", format!("{}: {m}", path.display())))?,
            effective: BTreeMap::new(),
        })
    }

    fn raw<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.file
            .get(key)
            .map(|v| {
                v.parse().map_err(|e| {
                    CliError::usage(format!("config key {key}: cannot parse {v:?}: {e}"))
                })
            })
            .transpose()
    }

    /// Flag value, else file value, else `None`.
    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => self.raw(key)?,
        };
        if let Some(v) = &value {
            self.effective.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn get<T>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: impl FnOnce() -> T,
    ) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match self.opt(key, flag)? {
            Some(v) => v,
            None => default(),
        };
        self.effective.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| {
            CliError::usage(format!(
                "missing required option --{}",
                key.replace('_', "-")
            ))
        })
    }

    /// Comma-separated list; repeated flags are joined.
    pub fn list<T>(&mut self, key: &str, flags: &[String]) -> Result<Option<Vec<T>>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let joined = if flags.is_empty() {
            match self.file.get(key) {
                Some(v) => v.clone(),
                None => return Ok(None),
            }
        } else {
            flags.join(",")
        };
        let items = joined
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|e| {
                    CliError::usage(format!("--{}: {s:?}: {e}", key.replace('_', "-")))
                })
            })
            .collect::<Result<Vec<T>, CliError>>()?;
        self.effective.insert(key.to_string(), joined);
        Ok(Some(items))
    }

    /// `--seed`, else the config file, else `GREX_SEED`, else 0.
    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64, CliError> {
        let env = match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| CliError::usage(format!("{SEED_ENV}={v:?}: {e}")))?,
            ),
            Err(_) => None,
        };
        self.get("seed", flag, || env.unwrap_or(0))
    }

    /// Keys present in the file that the command never asked for.
    pub fn check_unknown(&self) -> Result<(), CliError> {
        match self.file.keys().find(|k| !self.effective.contains_key(*k)) {
            Some(k) => Err(CliError::new(
                "E-CONFIG",
                format!("unknown config key {k:?}"),
            )),
            None => Ok(()),
        }
    }

    /// Effective configuration as `key = value` lines.
    pub fn render(&self, command: &str) -> String {
        let mut out = format!("command = {command}\n");
        for (k, v) in &self.effective {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key {key}", i + 1));
        }
    }
    Ok(out)
}
