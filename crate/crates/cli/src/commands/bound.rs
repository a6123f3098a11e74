use std::fmt::Write as _;

use powerdiv_core::bounds::{
    self, dpd_bound, gaussian_bound, generalized_bound, llr_bound, occupancy_bound, occupancy_violations,
    remark1_extra, theorem1_bound, uniform_breakdown, uniform_gaussian_bound, BoundBreakdown, GeneralizedSpec,
};
use powerdiv_core::{fmt_scalar, Scheme};
use serde_json::{json, Value};

use super::{breakdown_text, breakdown_value, scheme, stat_config, validity_warnings, Body};
use crate::config::Config;
use crate::error::{CliError, Classify, Result};
use crate::report::num;

pub(crate) const DEFAULT_BOUND: &str = "theorem1";

/// Bounds that come out as a four-term breakdown.
pub(crate) const BREAKDOWN_BOUNDS: &[&str] = &["theorem1", "llr", "uniform", "dpd", "generalized"];

/// Evaluates one of [`BREAKDOWN_BOUNDS`]. The second value is a note on
/// how the bound was evaluated, if it deviates from the plain reading.
pub(crate) fn breakdown(cfg: &Config, kind: &str) -> Result<(BoundBreakdown<f64>, Option<String>)> {
    let n = cfg.count("n")?;
    match kind {
        "uniform" => Ok((uniform_breakdown(n, cfg.count("scheme.r")? as usize), None)),
        "theorem1" => {
            let (_, s) = scheme(cfg)?;
            Ok((theorem1_bound(&s, &stat_config(cfg, n)?), None))
        }
        "llr" => {
            let (_, s) = scheme(cfg)?;
            Ok((llr_bound(&s, n).config()?, None))
        }
        "dpd" => {
            let r = cfg.count("scheme.r")? as usize;
            let a = cfg.real("scheme.a")?;
            let stat = stat_config(cfg, n)?;
            let power = Scheme::power(a, r).config()?;
            if stat.lambda() > 0.0 {
                Ok((dpd_bound(n, r, a, stat.lambda()).precondition()?, None))
            } else {
                let note = "lambda <= 0: theorem1 evaluated on the power scheme".to_owned();
                Ok((theorem1_bound(&power, &stat), Some(note)))
            }
        }
        "generalized" => {
            let (_, s) = scheme(cfg)?;
            let spec = generalized_spec(cfg, &s, n)?;
            Ok((generalized_bound(&spec, &s, n).precondition()?, None))
        }
        other => Err(CliError::Config(format!("bound: `{other}` has no term breakdown"))),
    }
}

fn generalized_spec(cfg: &Config, s: &Scheme, n: u64) -> Result<GeneralizedSpec<f64>> {
    let m = cfg.count_or("m", 2)?;
    let named = match cfg.get("generalized.h") {
        None => Some("power"),
        Some(Value::String(name)) if name == "power" || name == "flat" => Some(name.as_str()),
        Some(_) => None,
    };
    match named {
        Some("power") => {
            if m != 2 {
                return Err(CliError::Config("generalized.h=power requires m = 2".into()));
            }
            GeneralizedSpec::power_divergence(s, &stat_config(cfg, n)?).config()
        }
        Some(_) => GeneralizedSpec::flat(s.r(), m, cfg.real("generalized.var_r")?).config(),
        None => {
            let values = cfg.real_list_opt("generalized.h")?.unwrap_or_default();
            GeneralizedSpec::new(m, values, cfg.real("generalized.var_r")?).config()
        }
    }
}

pub(crate) fn run(cfg: &Config) -> Result<Body> {
    let kind = cfg.string("bound", DEFAULT_BOUND)?;
    match kind.as_str() {
        "gaussian" => return gaussian(cfg),
        "occupancy" => return occupancy(cfg),
        k if BREAKDOWN_BOUNDS.contains(&k) => {}
        other => return Err(CliError::Config(format!("bound: unknown bound `{other}`"))),
    }
    let (b, note) = breakdown(cfg, &kind)?;
    let mut warnings = validity_warnings(&kind, &b);
    let mut result = json!({ "bound": kind, "breakdown": breakdown_value(&b) });
    let mut text = breakdown_text(&kind, &b);
    if let Some(note) = note {
        let _ = writeln!(text, "{:<16}{note}", "note");
        result["note"] = Value::from(note.clone());
        warnings.push(note);
    }
    if let Some(eta) = cfg.real_opt("eta")? {
        if !(eta >= 0.0) {
            return Err(CliError::Config("eta must be non-negative".into()));
        }
        let extra = remark1_extra(b.mu, eta);
        result["eta"] = num(eta);
        result["remark1_extra"] = num(extra);
        result["total_with_eta"] = num(b.total + extra);
        let _ = writeln!(text, "{:<16}{}", "eta_extra", fmt_scalar(extra));
        let _ = writeln!(text, "{:<16}{} ({:.4})", "total_with_eta", fmt_scalar(b.total + extra), b.total + extra);
    }
    let csv = format!("bound,{}\n{kind},{}\n", BoundBreakdown::<f64>::CSV_HEADER, b.csv_row());
    Ok(Body::ok(result, text, csv, warnings))
}

fn gaussian(cfg: &Config) -> Result<Body> {
    let n = cfg.count("n")?;
    let (_, s) = scheme(cfg)?;
    let g = gaussian_bound(&s, &stat_config(cfg, n)?).precondition()?;
    let mut result = json!({ "bound": "gaussian", "theorem": serde_json::to_value(&g).expect("serializes") });
    let mut text = String::new();
    let _ = writeln!(text, "{:<20}gaussian", "bound");
    let _ = writeln!(text, "{:<20}{}", "poisson_total", fmt_scalar(g.poisson.total));
    let _ = writeln!(text, "{:<20}{}", "berry_esseen_term", fmt_scalar(g.berry_esseen_term));
    let _ = writeln!(text, "{:<20}{} ({:.4})", "theorem_total", fmt_scalar(g.total), g.total);
    let mut csv_head = "bound,poisson_total,berry_esseen_term,theorem_total".to_owned();
    let mut csv_row = format!(
        "gaussian,{},{},{}",
        fmt_scalar(g.poisson.total),
        fmt_scalar(g.berry_esseen_term),
        fmt_scalar(g.total)
    );
    if s.is_uniform() {
        let closed = uniform_gaussian_bound::<f64>(n, s.r());
        result["uniform_closed_form"] = num(closed);
        let _ = writeln!(text, "{:<20}{} ({:.4})", "uniform_closed_form", fmt_scalar(closed), closed);
        csv_head.push_str(",uniform_closed_form");
        let _ = write!(csv_row, ",{}", fmt_scalar(closed));
    }
    let _ = writeln!(text, "{:<20}{}", "valid", g.poisson.valid);
    let csv = format!("{csv_head}\n{csv_row}\n");
    Ok(Body::ok(result, text, csv, validity_warnings("gaussian", &g.poisson)))
}

fn occupancy(cfg: &Config) -> Result<Body> {
    let n = cfg.count("n")?;
    let (_, s) = scheme(cfg)?;
    let value = occupancy_bound(&s, n).precondition()?;
    let mu = bounds::mu(&s, n, 2).precondition()?;
    let violated = occupancy_violations(&s, n);
    let valid = violated.is_empty();
    let result = json!({
        "bound": "occupancy",
        "value": num(value),
        "mu": num(mu),
        "valid": valid,
        "violated": violated,
    });
    let text = format!(
        "{:<16}occupancy\n{:<16}{}\n{:<16}{} ({:.4})\n{:<16}{valid}\n",
        "bound",
        "mu",
        fmt_scalar(mu),
        "total",
        fmt_scalar(value),
        value,
        "valid"
    );
    let csv = format!("bound,total,mu,valid\noccupancy,{},{},{valid}\n", fmt_scalar(value), fmt_scalar(mu));
    let warnings = if valid {
        Vec::new()
    } else {
        vec![format!("occupancy: valid=false, violated assumptions: {}", violated.join("; "))]
    };
    Ok(Body::ok(result, text, csv, warnings))
}
