use std::path::Path;
use std::process::{Command, Output};

use powerdiv_cli::commands::{TABLE1_N, TABLE1_R};
use powerdiv_cli::report::read_manifest;
use powerdiv_core::bounds::uniform_bound;
use serde_json::Value;

fn powerdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powerdiv"))
        .args(args)
        .env_remove("POWERDIV_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn uniform_bound_prints_table_value() {
    let o = powerdiv(&["bound", "--bound", "uniform", "--n", "5", "--r", "300"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("(0.3767)"), "{}", stdout(&o));
}

#[test]
fn theorem1_outside_assumptions_still_prints() {
    let o = powerdiv(&["bound", "--bound", "theorem1", "--n", "5000", "--r", "300"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("valid=false"));
    assert!(stdout(&o).contains("valid           false"));
}

#[test]
fn gaussian_reports_theorem_and_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let o = powerdiv(&[
        "bound", "--bound", "gaussian", "--n", "10000", "--r", "10000000", "--format", "json", "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&out);
    let closed = doc["result"]["uniform_closed_form"].as_f64().unwrap();
    assert!((closed - 0.763_137_884_710_7).abs() < 1e-9, "{closed}");
    let theorem = doc["result"]["theorem"]["total"].as_f64().unwrap();
    let poisson = doc["result"]["theorem"]["poisson"]["total"].as_f64().unwrap();
    let mu = doc["result"]["theorem"]["poisson"]["mu"].as_f64().unwrap();
    let be = doc["result"]["theorem"]["berry_esseen_term"].as_f64().unwrap();
    assert_eq!(be, 0.4748 / mu.sqrt());
    assert_eq!(theorem, poisson + be);
    assert!(theorem < closed);
}

#[test]
fn exit_codes() {
    assert_eq!(powerdiv(&["bound", "--set", "nope=1"]).status.code(), Some(2));
    assert_eq!(powerdiv(&["bound", "--bound", "uniform", "--r", "300"]).status.code(), Some(2));
    assert_eq!(powerdiv(&["bound", "--bound", "wat", "--n", "5", "--r", "300"]).status.code(), Some(2));
    assert_eq!(powerdiv(&["bound", "--n", "5", "--r", "300", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(powerdiv(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(powerdiv(&["bound", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let o = powerdiv(&[
        "bound", "--bound", "generalized", "--n", "5", "--r", "300", "--m", "3", "--set", "generalized.h=flat",
        "--set", "generalized.var_r=0",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_reports_fail_when_remainder_leaves_the_lattice() {
    // Nearly uniform power scheme: the bound is tiny, but T~ carries a small
    // continuous remainder that puts mass just below 0.
    let o = powerdiv(&[
        "verify", "--scheme", "power", "--a", "0.01", "--r", "3000", "--n", "5", "--bound", "theorem1",
        "--replicates", "20000",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_single_replicate_is_vacuous() {
    let o = powerdiv(&["verify", "--n", "5", "--r", "3000", "--replicates", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    assert!(stderr(&o).contains("exceeds 1"));
}

#[test]
fn verify_occupancy_against_occupancy_bound() {
    let o = powerdiv(&["verify", "--target", "occupancy", "--n", "4", "--r", "8", "--replicates", "20000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("bound_name      occupancy"));
    assert!(text.contains("mu              0.57421875"));
}

#[test]
fn table1_csv_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = powerdiv(&["table1", "--format", "csv", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(read_manifest(&text).unwrap().command, "table1");
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<u64> = lines.next().unwrap().split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert_eq!(header, TABLE1_N);
    let mut rows = 0;
    for (line, r) in lines.zip(TABLE1_R) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0].parse::<usize>().unwrap(), r);
        for (cell, n) in cells[1..].iter().zip(TABLE1_N) {
            let exact: f64 = uniform_bound(n, r);
            if exact > 1.0 {
                assert_eq!(*cell, "—", "r={r} n={n}");
            } else {
                assert_eq!(cell.parse::<f64>().unwrap(), (exact * 1e4).round() / 1e4, "r={r} n={n}");
                assert_eq!(*cell, format!("{exact:.4}"));
            }
        }
        rows += 1;
    }
    assert_eq!(rows, 8);
}

#[test]
fn table1_text_and_json_agree() {
    let text = stdout(&powerdiv(&["table1"]));
    assert!(text.contains("   700  0.0692  0.5534"));
    let json: Value = serde_json::from_str(&stdout(&powerdiv(&["table1", "--format", "json"]))).unwrap();
    let row = &json["result"]["rows"][4];
    assert_eq!(row["r"], 3000);
    assert_eq!(row["cells"][0]["display"], "0.0038");
    assert_eq!(json["result"]["rows"][0]["cells"][1]["display"], "—");
}

#[test]
fn bound_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let o = powerdiv(&[
        "bound", "--scheme", "power", "--a", "0.5", "--r", "2000", "--n", "12", "--lambda", "2/3", "--format",
        "json", "--output", first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = powerdiv(&["run", "--config", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (a, b) = (read_json(&first), read_json(&second));
    assert_eq!(serde_json::to_string(&a["result"]).unwrap(), serde_json::to_string(&b["result"]).unwrap());
    assert_eq!(a["manifest"]["config"]["lambda"], "2/3");
    assert_eq!(b["manifest"]["command"], "bound");
}

#[test]
fn verify_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("v1.json");
    let second = dir.path().join("v2.json");
    let o = powerdiv(&[
        "verify", "--n", "5", "--r", "3000", "--lambda", "-1/2", "--replicates", "5000", "--seed", "7", "--format",
        "json", "--output", first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = powerdiv(&["run", "--config", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (a, b) = (read_json(&first), read_json(&second));
    assert_eq!(serde_json::to_string(&a["result"]).unwrap(), serde_json::to_string(&b["result"]).unwrap());
    assert_eq!(a["manifest"]["seed"], 7);
}

#[test]
fn json_config_file_with_nested_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command": "bound", "bound": "uniform", "scheme": {"kind": "uniform", "r": 3000}, "n": 5}"#)
        .unwrap();
    let o = powerdiv(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("(0.0038)"));
    // flags override file values
    let o = powerdiv(&["bound", "--config", cfg.to_str().unwrap(), "--r", "700", "--n", "10"]);
    assert!(stdout(&o).contains("(0.5534)"));
}

#[test]
fn explicit_scheme_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let probs = dir.path().join("p.txt");
    std::fs::write(&probs, "# four cells\n0.25\n0.25\n\n0.25\n0.25\n").unwrap();
    let from_file = powerdiv(&[
        "bound", "--scheme", "explicit", "--scheme-file", probs.to_str().unwrap(), "--n", "4", "--format", "csv",
    ]);
    let uniform = powerdiv(&["bound", "--scheme", "uniform", "--r", "4", "--n", "4", "--format", "csv"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    assert_eq!(stdout(&from_file), stdout(&uniform));

    std::fs::write(&probs, "0.5\n0.4\n").unwrap();
    let o = powerdiv(&["bound", "--scheme", "explicit", "--scheme-file", probs.to_str().unwrap(), "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

fn sweep_rows(args: &[&str]) -> Vec<Vec<String>> {
    let o = powerdiv(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    stdout(&o).lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn sweep_quadratic_coupling_decays_like_one_over_n() {
    let rows = sweep_rows(&["sweep", "--bound", "uniform", "--set", "grid.n=20,40,80", "--set", "grid.coupling=r=n^2"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][1], "6400");
    assert!(rows[0].last().unwrap().is_empty());
    for row in &rows[1..] {
        let ratio: f64 = row.last().unwrap().parse().unwrap();
        assert!((0.4..=0.6).contains(&ratio), "{ratio}");
    }
}

#[test]
fn sweep_dpd_terms_grow_with_a() {
    let rows = sweep_rows(&[
        "sweep", "--bound", "dpd", "--n", "20", "--r", "5000", "--lambda", "1", "--set", "grid.a=0,0.1,0.2",
    ]);
    // n,r,a,lambda,term_occupancy,term_c,term_triple,term_d,...
    let col = |i: usize| rows.iter().map(|r| r[i].parse::<f64>().unwrap()).collect::<Vec<_>>();
    for terms in [col(5), col(7)] {
        assert_eq!(terms[0], 0.0);
        assert!(terms[0] < terms[1] && terms[1] < terms[2], "{terms:?}");
    }
}

#[test]
fn sweep_single_point_matches_bound() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    let b = dir.path().join("b.json");
    let common = ["--bound", "theorem1", "--scheme", "power", "--a", "0.3", "--r", "4000", "--n", "15", "--lambda", "0.5"];
    let mut args = vec!["sweep"];
    args.extend(common);
    args.extend(["--format", "json", "--output", s.to_str().unwrap()]);
    assert_eq!(powerdiv(&args).status.code(), Some(0));
    let mut args = vec!["bound"];
    args.extend(common);
    args.extend(["--format", "json", "--output", b.to_str().unwrap()]);
    assert_eq!(powerdiv(&args).status.code(), Some(0));
    let (s, b) = (read_json(&s), read_json(&b));
    assert_eq!(s["result"]["rows"].as_array().unwrap().len(), 1);
    assert_eq!(s["result"]["rows"][0]["breakdown"], b["result"]["breakdown"]);
}

#[test]
fn sweep_rejects_empty_grid() {
    assert_eq!(powerdiv(&["sweep", "--bound", "uniform", "--r", "300", "--set", "grid.n=[]"]).status.code(), Some(2));
    assert_eq!(powerdiv(&["sweep", "--bound", "uniform", "--r", "300"]).status.code(), Some(2));
}

#[test]
fn dpd_nonpositive_lambda_uses_theorem1() {
    let dpd = powerdiv(&["bound", "--bound", "dpd", "--a", "0.4", "--r", "3000", "--n", "10", "--lambda", "-0.5", "--format", "csv"]);
    assert_eq!(dpd.status.code(), Some(0));
    assert!(stderr(&dpd).contains("theorem1 evaluated on the power scheme"));
    let t1 = powerdiv(&[
        "bound", "--bound", "theorem1", "--scheme", "power", "--a", "0.4", "--r", "3000", "--n", "10", "--lambda", "-0.5",
        "--format", "csv",
    ]);
    let tail = |o: &Output| stdout(o).lines().nth(1).unwrap().split_once(',').unwrap().1.to_owned();
    assert_eq!(tail(&dpd), tail(&t1));
}

#[test]
fn text_report_file_embeds_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.txt");
    powerdiv(&["bound", "--bound", "llr", "--n", "10", "--r", "1000", "--output", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    let m = read_manifest(&text).unwrap();
    assert_eq!(m.command, "bound");
    assert_eq!(m.config["bound"], "llr");
    assert_eq!(m.outputs, vec![out.to_str().unwrap().to_owned()]);
}
