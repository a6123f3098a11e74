mod bound;
mod sweep;
mod table1;
mod verify;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{SecondsFormat, Utc};
use powerdiv_core::bounds::BoundBreakdown;
use powerdiv_core::scheme::SchemeDescriptor;
use powerdiv_core::{fmt_scalar, Config as StatConfig, Descriptor, Scheme};
use serde_json::Value;

pub use table1::{TABLE1_N, TABLE1_R};

use crate::config::Config;
use crate::error::{CliError, Classify, Result};
use crate::report::{Report, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bound,
    Table1,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bound => "bound",
            Self::Table1 => "table1",
            Self::Verify => "verify",
            Self::Sweep => "sweep",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bound" => Ok(Self::Bound),
            "table1" => Ok(Self::Table1),
            "verify" => Ok(Self::Verify),
            "sweep" => Ok(Self::Sweep),
            other => Err(CliError::Config(format!("unknown command `{other}`"))),
        }
    }
}

/// What a command produces before it is wrapped in a [`Report`].
pub(crate) struct Body {
    pub result: Value,
    pub text: String,
    pub csv: String,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

impl Body {
    fn ok(result: Value, text: String, csv: String, warnings: Vec<String>) -> Self {
        Self { result, text, csv, warnings, exit_code: 0 }
    }
}

pub(crate) fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs `command` against `cfg`. Output files requested through
/// `output.samples` are written here; the report itself is left to the caller.
pub fn execute(command: Command, cfg: &mut Config) -> Result<Report> {
    if let Some(declared) = cfg.str_opt("command")? {
        if declared != command.name() {
            return Err(CliError::Config(format!(
                "config is for `{declared}` but `{}` was requested",
                command.name()
            )));
        }
    } else {
        cfg.set("command", Value::from(command.name()))?;
    }
    let started_at = now();
    let body = match command {
        Command::Bound => bound::run(cfg)?,
        Command::Table1 => table1::run(cfg)?,
        Command::Verify => verify::run(cfg)?,
        Command::Sweep => sweep::run(cfg)?,
    };
    let outputs = ["output.path", "output.samples"]
        .iter()
        .filter_map(|k| cfg.str_opt(k).ok().flatten())
        .collect();
    let seed = if command == Command::Verify { Some(cfg.count_or("seed", verify::DEFAULT_SEED)?) } else { None };
    let manifest = RunManifest {
        command: command.name().to_owned(),
        config: cfg.resolved(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed,
        started_at,
        finished_at: now(),
        outputs,
    };
    Ok(Report {
        manifest,
        result: body.result,
        text: body.text,
        csv: body.csv,
        warnings: body.warnings,
        exit_code: body.exit_code,
    })
}

/// Scheme descriptor from `scheme.*` keys.
pub(crate) fn descriptor(cfg: &Config) -> Result<Descriptor> {
    let kind = cfg.string("scheme.kind", "uniform")?;
    match kind.as_str() {
        "uniform" => Ok(SchemeDescriptor::Uniform { r: cfg.count("scheme.r")? as usize }),
        "power" => Ok(SchemeDescriptor::Power { a: cfg.real("scheme.a")?, r: cfg.count("scheme.r")? as usize }),
        "explicit" => {
            if let Some(probs) = cfg.real_list_opt("scheme.probs")? {
                return Ok(SchemeDescriptor::Explicit(probs));
            }
            let path = cfg
                .str_opt("scheme.file")?
                .ok_or_else(|| CliError::Config("explicit scheme needs scheme.probs or scheme.file".into()))?;
            Ok(SchemeDescriptor::Explicit(read_probs(&PathBuf::from(path))?))
        }
        other => Err(CliError::Config(format!("scheme.kind: unknown kind `{other}`"))),
    }
}

/// One probability per line; blank lines and `#` comments are skipped.
pub fn read_probs(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|_| CliError::Config(format!("{}:{}: not a number: `{l}`", path.display(), i + 1)))
        })
        .collect()
}

pub(crate) fn scheme(cfg: &Config) -> Result<(Descriptor, Scheme)> {
    let d = descriptor(cfg)?;
    let s = Scheme::build(d.clone()).config()?;
    Ok((d, s))
}

pub(crate) fn stat_config(cfg: &Config, n: u64) -> Result<StatConfig> {
    StatConfig::new(cfg.real_or("lambda", 1.0)?, n).config()
}

pub(crate) fn breakdown_value(b: &BoundBreakdown<f64>) -> Value {
    serde_json::to_value(b).expect("breakdown serializes")
}

pub(crate) fn breakdown_text(name: &str, b: &BoundBreakdown<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<16}{name}", "bound");
    for (label, v) in [
        ("term_occupancy", b.term_occupancy),
        ("term_c", b.term_c),
        ("term_triple", b.term_triple),
        ("term_d", b.term_d),
        ("mu", b.mu),
        ("c_lambda", b.c_lambda_val),
        ("d_lambda", b.d_lambda_val),
    ] {
        let _ = writeln!(s, "{label:<16}{}", fmt_scalar(v));
    }
    let _ = writeln!(s, "{:<16}{} ({:.4})", "total", fmt_scalar(b.total), b.total);
    let _ = writeln!(s, "{:<16}{}", "valid", b.valid);
    s
}

pub(crate) fn validity_warnings(name: &str, b: &BoundBreakdown<f64>) -> Vec<String> {
    if b.valid {
        Vec::new()
    } else {
        vec![format!("{name}: valid=false, violated assumptions: {}", b.violated.join("; "))]
    }
}
