//! Flat key-value run configuration.
//!
//! Sources, lowest precedence first: a JSON file (nested objects are
//! flattened to dotted keys; a report file is accepted and its embedded
//! manifest config is used), named flags, `--set key=value` pairs. The
//! worker count can also come from the `POWERDIV_WORKERS` variable, which
//! beats everything else.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const WORKERS_ENV: &str = "POWERDIV_WORKERS";

pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "bound",
    "scheme.kind",
    "scheme.r",
    "scheme.a",
    "scheme.file",
    "scheme.probs",
    "n",
    "lambda",
    "m",
    "eta",
    "replicates",
    "seed",
    "target",
    "generalized.h",
    "generalized.var_r",
    "grid.n",
    "grid.r",
    "grid.a",
    "grid.lambda",
    "grid.coupling",
    "output.path",
    "output.format",
    "output.samples",
    "workers",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, Value>,
    /// defaults that were actually consulted
    defaults: RefCell<BTreeMap<String, Value>>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn flatten(prefix: &str, obj: &Map<String, Value>, out: &mut BTreeMap<String, Value>) {
    for (k, v) in obj {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

/// Parses a real number; accepts fractions such as `2/3`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num.trim().parse().ok()?;
        let den: f64 = den.trim().parse().ok()?;
        return (den != 0.0).then(|| num / den);
    }
    s.parse().ok()
}

fn real_of(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Number(x) => x.as_f64(),
        Value::String(s) => parse_real(s),
        _ => None,
    }
    .ok_or_else(|| config_err(format!("{key}: expected a number, got {v}")))
}

fn count_of(key: &str, v: &Value) -> Result<u64> {
    if let Some(x) = v.as_u64() {
        return Ok(x);
    }
    if let Some(x) = v.as_str().and_then(|s| s.trim().parse::<u64>().ok()) {
        return Ok(x);
    }
    let x = real_of(key, v)?;
    if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(config_err(format!("{key}: expected a non-negative integer, got {v}")))
    }
}

fn list_of(key: &str, v: &Value) -> Result<Vec<Value>> {
    match v {
        Value::Array(items) => Ok(items.clone()),
        Value::String(s) if s.trim().is_empty() => Ok(Vec::new()),
        Value::String(s) => Ok(s.split(',').map(|p| Value::String(p.trim().to_owned())).collect()),
        Value::Number(_) => Ok(vec![v.clone()]),
        _ => Err(config_err(format!("{key}: expected a list, got {v}"))),
    }
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a JSON document. A report (anything with a `manifest` object)
    /// yields the config recorded in its manifest.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| config_err(format!("invalid JSON: {e}")))?;
        let Value::Object(obj) = doc else {
            return Err(config_err("config document must be a JSON object"));
        };
        let source = match obj.get("manifest") {
            Some(Value::Object(manifest)) => match manifest.get("config") {
                Some(Value::Object(cfg)) => cfg.clone(),
                _ => return Err(config_err("manifest has no config object")),
            },
            _ => obj,
        };
        let mut flat = BTreeMap::new();
        flatten("", &source, &mut flat);
        let mut cfg = Self::new();
        for (k, v) in flat {
            cfg.set(&k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_err(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_owned(), value);
        Ok(())
    }

    /// `key=value`; the value is read as JSON when it parses, as a string otherwise.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| config_err(format!("expected key=value, got `{pair}`")))?;
        self.set_text(k.trim(), v)
    }

    /// Sets `key` from command-line text, read as JSON when it parses.
    pub fn set_text(&mut self, key: &str, text: &str) -> Result<()> {
        let text = text.trim();
        let value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_owned()));
        self.set(key, value)
    }

    /// Values from `other` replace ours.
    pub fn merge(&mut self, other: Config) {
        self.values.extend(other.values);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    /// Explicit values plus every default that was consulted.
    pub fn resolved(&self) -> BTreeMap<String, Value> {
        let mut out = self.defaults.borrow().clone();
        out.extend(self.values.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    fn record_default(&self, key: &str, v: Value) {
        self.defaults.borrow_mut().insert(key.to_owned(), v);
    }

    fn missing(key: &str) -> CliError {
        config_err(format!("missing required key `{key}`"))
    }

    pub fn str_opt(&self, key: &str) -> Result<Option<String>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(config_err(format!("{key}: expected a string, got {v}"))),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.str_opt(key)? {
            Some(s) => Ok(s),
            None => {
                self.record_default(key, Value::String(default.to_owned()));
                Ok(default.to_owned())
            }
        }
    }

    pub fn real_opt(&self, key: &str) -> Result<Option<f64>> {
        self.values.get(key).map(|v| real_of(key, v)).transpose()
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        self.real_opt(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.real_opt(key)? {
            Some(x) => Ok(x),
            None => {
                self.record_default(key, Value::from(default));
                Ok(default)
            }
        }
    }

    pub fn count_opt(&self, key: &str) -> Result<Option<u64>> {
        self.values.get(key).map(|v| count_of(key, v)).transpose()
    }

    pub fn count(&self, key: &str) -> Result<u64> {
        self.count_opt(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn count_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.count_opt(key)? {
            Some(x) => Ok(x),
            None => {
                self.record_default(key, Value::from(default));
                Ok(default)
            }
        }
    }

    pub fn real_list_opt(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.values.get(key) else { return Ok(None) };
        list_of(key, v)?.iter().map(|x| real_of(key, x)).collect::<Result<_>>().map(Some)
    }

    pub fn count_list_opt(&self, key: &str) -> Result<Option<Vec<u64>>> {
        let Some(v) = self.values.get(key) else { return Ok(None) };
        list_of(key, v)?.iter().map(|x| count_of(key, x)).collect::<Result<_>>().map(Some)
    }

    /// Worker threads for simulations: environment, then `workers`, then
    /// the rayon default.
    pub fn workers(&self) -> Result<Option<usize>> {
        if let Ok(raw) = std::env::var(WORKERS_ENV) {
            let w: usize = raw
                .trim()
                .parse()
                .map_err(|_| config_err(format!("{WORKERS_ENV}: expected a positive integer, got `{raw}`")))?;
            return Ok(Some(w.max(1)));
        }
        Ok(self.count_opt("workers")?.map(|w| (w as usize).max(1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_objects_flatten() {
        let cfg = Config::from_json_str(r#"{"scheme": {"kind": "uniform", "r": 300}, "n": 5}"#).unwrap();
        assert_eq!(cfg.string("scheme.kind", "x").unwrap(), "uniform");
        assert_eq!(cfg.count("scheme.r").unwrap(), 300);
        assert_eq!(cfg.count("n").unwrap(), 5);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(Config::from_json_str(r#"{"nn": 5}"#), Err(CliError::Config(_))));
        assert!(Config::new().set_pair("scheme.q=1").is_err());
    }

    #[test]
    fn fractions_and_lists() {
        let mut cfg = Config::new();
        cfg.set_pair("lambda=2/3").unwrap();
        cfg.set_pair("grid.n=20,40,80").unwrap();
        cfg.set_pair("grid.lambda=[1, -0.5]").unwrap();
        assert_eq!(cfg.real("lambda").unwrap(), 2.0 / 3.0);
        assert_eq!(cfg.count_list_opt("grid.n").unwrap().unwrap(), vec![20, 40, 80]);
        assert_eq!(cfg.real_list_opt("grid.lambda").unwrap().unwrap(), vec![1.0, -0.5]);
        cfg.set_pair("n=1e4").unwrap();
        assert_eq!(cfg.count("n").unwrap(), 10_000);
        cfg.set_pair("n=2.5").unwrap();
        assert!(cfg.count("n").is_err());
    }

    #[test]
    fn manifest_config_is_reused() {
        let cfg = Config::from_json_str(r#"{"manifest": {"config": {"n": 7, "bound": "uniform"}}, "result": {}}"#).unwrap();
        assert_eq!(cfg.count("n").unwrap(), 7);
        assert_eq!(cfg.str_opt("bound").unwrap().as_deref(), Some("uniform"));
    }

    #[test]
    fn consulted_defaults_are_resolved() {
        let mut cfg = Config::new();
        cfg.set_pair("n=5").unwrap();
        cfg.real_or("lambda", 1.0).unwrap();
        let r = cfg.resolved();
        assert_eq!(r["lambda"], Value::from(1.0));
        assert_eq!(r["n"], Value::from(5));
        assert!(!r.contains_key("seed"));
    }
}
