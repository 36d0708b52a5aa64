use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::CliError;
use crate::io::{normalize_key, parse_config, read_to_string};

/// Flat key/value settings merged from an optional config file and the
/// command-line flags, flags taking precedence.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Merges `file` (if any) with `flags` and rejects keys outside
    /// `allowed`.
    pub fn resolve(
        file: Option<&Path>,
        flags: Vec<(&'static str, String)>,
        allowed: &[&str],
    ) -> Result<Self, CliError> {
        let mut entries = match file {
            Some(path) => {
                let text = read_to_string(path)?;
                parse_config(&text, &path.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        for key in entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::input_key(key, "unknown configuration key"));
            }
        }
        for (key, value) in flags {
            entries.insert(normalize_key(key), value);
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::input_key(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| CliError::input_key(key, "required but not given"))
    }

    /// A finite float satisfying `check`, with `what` describing the bound.
    pub fn float(
        &self,
        key: &str,
        default: Option<f64>,
        check: impl Fn(f64) -> bool,
        what: &str,
    ) -> Result<f64, CliError> {
        let v = match (self.get::<f64>(key)?, default) {
            (Some(v), _) => v,
            (None, Some(d)) => d,
            (None, None) => return Err(CliError::input_key(key, "required but not given")),
        };
        if !v.is_finite() || !check(v) {
            return Err(CliError::input_key(key, format!("must be {what}, got {v}")));
        }
        Ok(v)
    }

    pub fn optional_float(
        &self,
        key: &str,
        check: impl Fn(f64) -> bool,
        what: &str,
    ) -> Result<Option<f64>, CliError> {
        match self.entries.contains_key(key) {
            true => self.float(key, None, check, what).map(Some),
            false => Ok(None),
        }
    }
}
