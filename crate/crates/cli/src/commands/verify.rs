use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;

use powerdiv_core::bounds::{self, gaussian_bound, occupancy_bound, occupancy_violations, uniform_gaussian_bound};
use powerdiv_core::fmt_scalar;
use powerdiv_core::montecarlo::{empirical_dk, simulate, simulate_with_workers, ExperimentConfig, Reference, Target};
use serde_json::json;

use super::bound::breakdown;
use super::{breakdown_value, scheme, stat_config, validity_warnings, Body};
use crate::config::Config;
use crate::error::{CliError, Classify, Result};
use crate::report::num;

pub(crate) const DEFAULT_SEED: u64 = 42;

fn parse_target(cfg: &Config) -> Result<Target> {
    let raw = cfg.string("target", "t_tilde")?;
    let level = |digits: &str| {
        digits
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("target: bad occupancy level in `{raw}`")))
    };
    match raw.as_str() {
        "t_tilde" => Ok(Target::TTilde),
        "occupancy" => Ok(Target::Occupancy(cfg.count_or("m", 2)?)),
        other => {
            if let Some(m) = other.strip_prefix("occupancy_") {
                Ok(Target::Occupancy(level(m)?))
            } else if let Some(m) = other.strip_prefix("occupancy(").and_then(|s| s.strip_suffix(')')) {
                Ok(Target::Occupancy(level(m)?))
            } else {
                Err(CliError::Config(format!("target: unknown target `{other}`")))
            }
        }
    }
}

pub(crate) fn run(cfg: &Config) -> Result<Body> {
    let target = parse_target(cfg)?;
    let (descriptor, s) = scheme(cfg)?;
    let default_bound = match target {
        Target::Occupancy(_) => "occupancy",
        Target::TTilde if s.is_uniform() => "uniform",
        Target::TTilde => "theorem1",
    };
    let bound_name = cfg.string("bound", default_bound)?;
    let n = cfg.count("n")?;
    let stat = stat_config(cfg, n)?;
    let replicates = cfg.count_or("replicates", 10_000)?;
    let seed = cfg.count_or("seed", DEFAULT_SEED)?;

    let mut warnings = Vec::new();
    // (bound value, bound detail, compare standardized samples with Normal)
    let (bound, detail, gaussian) = match (bound_name.as_str(), target) {
        ("occupancy", Target::Occupancy(2)) => {
            let value = occupancy_bound(&s, n).precondition()?;
            let violated = occupancy_violations(&s, n);
            if !violated.is_empty() {
                warnings.push(format!("occupancy: valid=false, violated assumptions: {}", violated.join("; ")));
            }
            (value, json!({ "value": num(value), "violated": violated }), false)
        }
        ("occupancy", _) => {
            return Err(CliError::Config("bound=occupancy pairs with target occupancy at m = 2".into()));
        }
        ("gaussian", Target::TTilde) => {
            if s.is_uniform() {
                let value = uniform_gaussian_bound::<f64>(n, s.r());
                (value, json!({ "uniform_closed_form": num(value) }), true)
            } else {
                let g = gaussian_bound(&s, &stat).precondition()?;
                warnings.extend(validity_warnings("gaussian", &g.poisson));
                (g.total, serde_json::to_value(&g).expect("serializes"), true)
            }
        }
        (name, Target::TTilde) if matches!(name, "uniform" | "theorem1" | "llr" | "dpd") => {
            if name == "llr" && stat.lambda() != 0.0 {
                return Err(CliError::Config("bound=llr needs lambda = 0".into()));
            }
            let (b, note) = breakdown(cfg, name)?;
            warnings.extend(validity_warnings(name, &b));
            warnings.extend(note);
            (b.total, breakdown_value(&b), false)
        }
        (name, _) => {
            return Err(CliError::Config(format!("bound `{name}` cannot be verified against target {target}")));
        }
    };

    let m = match target {
        Target::Occupancy(m) => m,
        Target::TTilde => 2,
    };
    let mu = bounds::mu(&s, n, m).precondition()?;
    let experiment = ExperimentConfig {
        scheme: descriptor,
        n,
        lambda: stat.lambda(),
        replicates,
        seed,
        targets: vec![target],
    };
    let batch = match cfg.workers()? {
        Some(w) => simulate_with_workers(&experiment, w),
        None => simulate(&experiment),
    }
    .precondition()?;
    if let Some(path) = cfg.str_opt("output.samples")? {
        batch.write_csv(BufWriter::new(File::create(&path)?))?;
    }

    let mut samples = batch.sorted(target).expect("target was simulated");
    let reference = if gaussian {
        if !(mu > 0.0) {
            return Err(CliError::Precondition("mu = 0: cannot standardize".into()));
        }
        let sd = mu.sqrt();
        samples.iter_mut().for_each(|x| *x = (*x - mu) / sd);
        Reference::Normal
    } else {
        Reference::Poisson { mu }
    };
    let report = empirical_dk(&samples, reference).precondition()?;
    if report.dkw_margin > 1.0 {
        warnings.push(format!(
            "dkw_margin = {} exceeds 1 with {replicates} replicates: the comparison is vacuous",
            fmt_scalar(report.dkw_margin)
        ));
    }
    let pass = report.d_hat <= bound + report.dkw_margin;
    let verdict = if pass { "PASS" } else { "FAIL" };

    let result = json!({
        "bound_name": bound_name,
        "target": target.to_string(),
        "bound": num(bound),
        "bound_detail": detail,
        "mu": num(mu),
        "standardized": gaussian,
        "kolmogorov": serde_json::to_value(&report).expect("serializes"),
        "verdict": verdict,
    });
    let mut text = String::new();
    for (label, v) in [
        ("bound_name", bound_name.clone()),
        ("target", target.to_string()),
        ("bound", fmt_scalar(bound)),
        ("mu", fmt_scalar(mu)),
        ("d_hat", fmt_scalar(report.d_hat)),
        ("dkw_margin", fmt_scalar(report.dkw_margin)),
        ("argmax_point", fmt_scalar(report.argmax_point)),
        ("tail_truncation", fmt_scalar(report.tail_truncation)),
        ("replicates", replicates.to_string()),
        ("verdict", verdict.to_owned()),
    ] {
        let _ = writeln!(text, "{label:<16}{v}");
    }
    let csv = format!(
        "bound_name,target,bound,d_hat,dkw_margin,verdict\n{bound_name},{target},{},{},{},{verdict}\n",
        fmt_scalar(bound),
        fmt_scalar(report.d_hat),
        fmt_scalar(report.dkw_margin)
    );
    Ok(Body { result, text, csv, warnings, exit_code: if pass { 0 } else { 1 } })
}
