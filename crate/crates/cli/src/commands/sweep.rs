use std::fmt::Write as _;

use powerdiv_core::bounds::BoundBreakdown;
use powerdiv_core::fmt_scalar;
use serde_json::{json, Value};

use super::bound::{breakdown, BREAKDOWN_BOUNDS, DEFAULT_BOUND};
use super::{breakdown_value, Body};
use crate::config::Config;
use crate::error::{CliError, Result};
use crate::report::num;

/// `r = C * n^K` from strings such as `r=n^2`, `r=3*n^2`, `r=100*n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub coef: f64,
    pub power: f64,
}

impl Coupling {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("grid.coupling: cannot parse `{s}` (expected r=C*n^K)"));
        let rhs = s.trim().strip_prefix("r").map(str::trim_start).and_then(|t| t.strip_prefix('=')).ok_or_else(bad)?;
        let rhs: String = rhs.chars().filter(|c| !c.is_whitespace()).collect();
        let (coef, term) = match rhs.rsplit_once('*') {
            Some((c, t)) => (c.parse::<f64>().map_err(|_| bad())?, t.to_owned()),
            None => (1.0, rhs.clone()),
        };
        let power = match term.strip_prefix('n').ok_or_else(bad)? {
            "" => 1.0,
            rest => rest.strip_prefix('^').and_then(|k| k.parse::<f64>().ok()).ok_or_else(bad)?,
        };
        if !(coef > 0.0) || !power.is_finite() {
            return Err(bad());
        }
        Ok(Self { coef, power })
    }

    pub fn r(&self, n: u64) -> Result<usize> {
        let r = (self.coef * (n as f64).powf(self.power)).round();
        if r >= 1.0 && r < usize::MAX as f64 {
            Ok(r as usize)
        } else {
            Err(CliError::Config(format!("grid.coupling gives r = {r} at n = {n}")))
        }
    }
}

fn axis<T: Copy>(list: Option<Vec<T>>, single: Option<T>, key: &str) -> Result<Vec<Option<T>>> {
    match list {
        Some(v) if v.is_empty() => Err(CliError::Config(format!("{key}: empty grid"))),
        Some(v) => Ok(v.into_iter().map(Some).collect()),
        None => Ok(vec![single]),
    }
}

pub const COLUMNS: &str = "n,r,a,lambda";

pub(crate) fn run(cfg: &Config) -> Result<Body> {
    let kind = cfg.string("bound", DEFAULT_BOUND)?;
    if !BREAKDOWN_BOUNDS.contains(&kind.as_str()) || kind == "generalized" {
        return Err(CliError::Config(format!("sweep: unsupported bound `{kind}`")));
    }
    let coupling = cfg.str_opt("grid.coupling")?.map(|s| Coupling::parse(&s)).transpose()?;
    if coupling.is_some() && cfg.contains("grid.r") {
        return Err(CliError::Config("grid.r and grid.coupling are mutually exclusive".into()));
    }
    let ns = axis(cfg.count_list_opt("grid.n")?, cfg.count_opt("n")?, "grid.n")?;
    let rs = if coupling.is_some() {
        vec![None]
    } else {
        axis(cfg.count_list_opt("grid.r")?, cfg.count_opt("scheme.r")?, "grid.r")?
    };
    let a_axis = axis(cfg.real_list_opt("grid.a")?, cfg.real_opt("scheme.a")?, "grid.a")?;
    let lambda_axis = axis(cfg.real_list_opt("grid.lambda")?, Some(cfg.real_or("lambda", 1.0)?), "grid.lambda")?;
    if ns.iter().any(Option::is_none) {
        return Err(CliError::Config("sweep needs grid.n or n".into()));
    }

    let mut csv = format!("{COLUMNS},{},ratio\n", BoundBreakdown::<f64>::CSV_HEADER);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &a in &a_axis {
        for &lambda in &lambda_axis {
            for &r_fixed in &rs {
                let mut prev_total: Option<f64> = None;
                for &n in &ns {
                    let n = n.expect("checked above");
                    let r = match (coupling, r_fixed) {
                        (Some(c), _) => c.r(n)?,
                        (None, Some(r)) => r as usize,
                        (None, None) => return Err(CliError::Config("sweep needs grid.r, scheme.r or grid.coupling".into())),
                    };
                    let mut point = cfg.clone();
                    point.set("n", Value::from(n))?;
                    point.set("scheme.r", Value::from(r))?;
                    if let Some(a) = a {
                        point.set("scheme.a", num(a))?;
                    }
                    if let Some(l) = lambda {
                        point.set("lambda", num(l))?;
                    }
                    let (b, note) = breakdown(&point, &kind)?;
                    if let Some(note) = note {
                        if !warnings.contains(&note) {
                            warnings.push(note);
                        }
                    }
                    let ratio = prev_total.map(|p| b.total / p);
                    prev_total = Some(b.total);
                    let a_cell = a.map(fmt_scalar).unwrap_or_default();
                    let l_cell = lambda.map(fmt_scalar).unwrap_or_default();
                    let ratio_cell = ratio.map(fmt_scalar).unwrap_or_default();
                    let _ = writeln!(csv, "{n},{r},{a_cell},{l_cell},{},{ratio_cell}", b.csv_row());
                    rows.push(json!({
                        "n": n,
                        "r": r,
                        "a": a.map(num),
                        "lambda": lambda.map(num),
                        "breakdown": breakdown_value(&b),
                        "ratio": ratio.map(num),
                    }));
                }
            }
        }
    }
    let result = json!({ "bound": kind, "rows": rows });
    Ok(Body::ok(result, csv.clone(), csv, warnings))
}
