//! Scenario parameters read from a TOML or JSON file plus `key=value`
//! overrides. Every lookup records the value actually used, so the resolved
//! set (defaults included) can be echoed into outputs and manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Keys the runner itself consumes; they are never scenario parameters.
const RESERVED: [&str; 2] = ["scenario", "seed"];

#[derive(Debug, Clone, Default)]
pub struct Params {
    raw: BTreeMap<String, Value>,
    resolved: Map<String, Value>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(map) = value else {
            return Err(config_err("config must be a table of key/value pairs"));
        };
        Ok(Self {
            raw: map.into_iter().collect(),
            resolved: Map::new(),
        })
    }

    /// Reads a `.toml` or `.json` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let value = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => {
                let t: toml::Value =
                    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                serde_json::to_value(t).map_err(|e| config_err(e.to_string()))?
            }
            Some("json") => {
                serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
            }
            _ => return Err(config_err(format!("{}: config must end in .toml or .json", path.display()))),
        };
        Self::from_value(value)
    }

    /// Applies a `key=value` override. The value is read as JSON when it
    /// parses (numbers, lists, booleans) and as a bare string otherwise.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (key, text) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(format!("expected key=value, got `{assignment}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_err(format!("empty key in `{assignment}`")));
        }
        let text = text.trim();
        let value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()));
        self.raw.insert(key.to_string(), value);
        Ok(())
    }

    /// Removes a reserved key such as `scenario` or `seed`.
    pub fn take_reserved(&mut self, key: &str) -> Option<Value> {
        debug_assert!(RESERVED.contains(&key));
        self.raw.remove(key)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.raw.remove(key)
    }

    fn record(&mut self, key: &str, value: Value) {
        self.resolved.insert(key.to_string(), value);
    }

    fn as_f64(key: &str, v: &Value) -> Result<f64> {
        let x = v
            .as_f64()
            .ok_or_else(|| config_err(format!("`{key}` must be a number, got {v}")))?;
        if !x.is_finite() {
            return Err(config_err(format!("`{key}` must be finite")));
        }
        Ok(x)
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let x = match self.take(key) {
            Some(v) => Self::as_f64(key, &v)?,
            None => default.ok_or_else(|| config_err(format!("missing required key `{key}`")))?,
        };
        self.record(key, Value::from(x));
        Ok(x)
    }

    pub fn f64(&mut self, key: &str) -> Result<f64> {
        self.number(key, None)
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        self.number(key, Some(default))
    }

    /// Optional number; absence (or an explicit `null`) is recorded as `null`.
    pub fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        let x = self
            .take(key)
            .filter(|v| !v.is_null())
            .map(|v| Self::as_f64(key, &v))
            .transpose()?;
        self.record(key, x.map_or(Value::Null, Value::from));
        Ok(x)
    }

    fn integer(&mut self, key: &str, default: Option<u64>) -> Result<u64> {
        let n = match self.take(key) {
            Some(v) => v
                .as_u64()
                .ok_or_else(|| config_err(format!("`{key}` must be a nonnegative integer, got {v}")))?,
            None => default.ok_or_else(|| config_err(format!("missing required key `{key}`")))?,
        };
        self.record(key, Value::from(n));
        Ok(n)
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        self.integer(key, Some(default))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        let n = self.integer(key, Some(default as u64))?;
        usize::try_from(n).map_err(|_| config_err(format!("`{key}` is too large")))
    }

    pub fn u32_or(&mut self, key: &str, default: u32) -> Result<u32> {
        let n = self.integer(key, Some(u64::from(default)))?;
        u32::try_from(n).map_err(|_| config_err(format!("`{key}` is too large")))
    }

    /// A string drawn from `choices`.
    pub fn choice(&mut self, key: &str, choices: &[&str], default: Option<&str>) -> Result<String> {
        let s = match self.take(key) {
            Some(Value::String(s)) => s,
            Some(v) => return Err(config_err(format!("`{key}` must be a string, got {v}"))),
            None => default
                .map(str::to_string)
                .ok_or_else(|| config_err(format!("missing required key `{key}` (one of {})", choices.join(", "))))?,
        };
        if !choices.contains(&s.as_str()) {
            return Err(config_err(format!("`{key}` must be one of {}, got `{s}`", choices.join(", "))));
        }
        self.record(key, Value::from(s.clone()));
        Ok(s)
    }

    /// A list of numbers given as a list, a single number, or the three keys
    /// `<key>_min`, `<key>_max`, `<key>_points` (inclusive linear grid).
    fn list(&mut self, key: &str, default: Option<Vec<f64>>) -> Result<Vec<f64>> {
        let range_keys = [format!("{key}_min"), format!("{key}_max"), format!("{key}_points")];
        let has_range = range_keys.iter().any(|k| self.raw.contains_key(k));
        let values = match (self.take(key), has_range) {
            (Some(_), true) => {
                return Err(config_err(format!("give either `{key}` or its _min/_max/_points range, not both")));
            }
            (Some(Value::Array(items)), false) => items
                .iter()
                .map(|v| Self::as_f64(key, v))
                .collect::<Result<Vec<_>>>()?,
            (Some(v), false) => vec![Self::as_f64(key, &v)?],
            (None, true) => {
                let mut get = |k: &str| {
                    self.take(k)
                        .ok_or_else(|| config_err(format!("range for `{key}` needs `{k}`")))
                };
                let lo = Self::as_f64(&range_keys[0], &get(&range_keys[0])?)?;
                let hi = Self::as_f64(&range_keys[1], &get(&range_keys[1])?)?;
                let n = get(&range_keys[2])?
                    .as_u64()
                    .filter(|n| *n >= 2)
                    .ok_or_else(|| config_err(format!("`{}` must be an integer >= 2", range_keys[2])))?;
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
            (None, false) => default.ok_or_else(|| config_err(format!("missing required key `{key}`")))?,
        };
        if values.is_empty() {
            return Err(config_err(format!("`{key}` must not be empty")));
        }
        self.record(key, Value::from(values.clone()));
        Ok(values)
    }

    pub fn grid(&mut self, key: &str) -> Result<Vec<f64>> {
        self.list(key, None)
    }

    pub fn grid_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.list(key, Some(default.to_vec()))
    }

    /// Fails on any key no scenario lookup consumed, and returns the
    /// resolved parameters in lookup order.
    pub fn finish(self) -> Result<Map<String, Value>> {
        if !self.raw.is_empty() {
            let keys: Vec<&str> = self.raw.keys().map(String::as_str).collect();
            return Err(config_err(format!("unknown key(s): {}", keys.join(", "))));
        }
        Ok(self.resolved)
    }
}
