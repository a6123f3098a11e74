use std::fmt::Write as _;

use powerdiv_core::bounds::uniform_bound;
use serde_json::{json, Value};

use super::Body;
use crate::config::Config;
use crate::error::Result;
use crate::report::num;

pub const TABLE1_R: [usize; 8] = [300, 500, 700, 1000, 3000, 5000, 7000, 10000];
pub const TABLE1_N: [u64; 6] = [5, 10, 20, 30, 40, 50];

/// Placeholder for uninformative cells.
pub const DASH: &str = "—";

/// Four decimals, or a dash when the unrounded value exceeds 1.
pub fn cell_display(value: f64) -> String {
    if value > 1.0 {
        DASH.to_owned()
    } else {
        format!("{value:.4}")
    }
}

pub(crate) fn run(_cfg: &Config) -> Result<Body> {
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut csv = String::from("r");
    for n in TABLE1_N {
        let _ = write!(csv, ",{n}");
    }
    csv.push('\n');
    let _ = writeln!(text, "Uniform allocation: upper bound on d_K, 4 d.p. ({DASH} where above 1)");
    let _ = write!(text, "{:>7}", "r \\ n");
    for n in TABLE1_N {
        let _ = write!(text, "{n:>8}");
    }
    text.push('\n');

    for r in TABLE1_R {
        let _ = write!(text, "{r:>7}");
        let _ = write!(csv, "{r}");
        let mut cells = Vec::new();
        for n in TABLE1_N {
            let value = uniform_bound::<f64>(n, r);
            let shown = cell_display(value);
            let _ = write!(text, "{shown:>8}");
            let _ = write!(csv, ",{shown}");
            cells.push(json!({ "n": n, "value": num(value), "display": shown }));
        }
        text.push('\n');
        csv.push('\n');
        rows.push(json!({ "r": r, "cells": Value::Array(cells) }));
    }
    let result = json!({ "n": TABLE1_N, "r": TABLE1_R, "rows": rows });
    Ok(Body::ok(result, text, csv, Vec::new()))
}
