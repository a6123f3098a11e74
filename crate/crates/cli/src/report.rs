use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, Result};

/// Everything needed to reproduce a report from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub version: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(CliError::Config(format!("output.format: unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub manifest: RunManifest,
    pub result: Value,
    pub text: String,
    pub csv: String,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_json(&self) -> String {
        let doc = json!({ "manifest": self.manifest, "result": self.result });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    /// The rendering in `format`. Files also carry the manifest: JSON
    /// embeds it, text and CSV start with a `# manifest:` comment line.
    pub fn render(&self, format: Format, for_file: bool) -> String {
        let header = || {
            let m = serde_json::to_string(&self.manifest).expect("manifest serializes");
            format!("# manifest: {m}\n")
        };
        match format {
            Format::Json => self.to_json(),
            Format::Text if for_file => header() + &self.text,
            Format::Text => self.text.clone(),
            Format::Csv if for_file => header() + &self.csv,
            Format::Csv => self.csv.clone(),
        }
    }

    pub fn write(&self, format: Format, path: &Path) -> Result<()> {
        fs::write(path, self.render(format, true))?;
        Ok(())
    }
}

/// JSON number for finite values; `"inf"`, `"-inf"` or `"NaN"` otherwise.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("NaN")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

/// Reads the manifest back from a report file written in any format.
pub fn read_manifest(text: &str) -> Result<RunManifest> {
    let bad = |e: serde_json::Error| CliError::Config(format!("invalid manifest: {e}"));
    if let Some(rest) = text.strip_prefix("# manifest: ") {
        let line = rest.lines().next().unwrap_or_default();
        return serde_json::from_str(line).map_err(bad);
    }
    let doc: Value = serde_json::from_str(text).map_err(bad)?;
    serde_json::from_value(doc.get("manifest").cloned().unwrap_or(Value::Null)).map_err(bad)
}
