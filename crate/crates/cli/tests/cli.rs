use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn affquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affquant")).args(args).output().expect("binary runs")
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

const SMALL_GRID: [&str; 12] =
    ["--qmin", "0.2", "--qmax", "4", "--nq", "9", "--pmin", "-3", "--pmax", "3", "--np", "11"];

#[test]
fn trace_u_prints_series_and_closed_forms() {
    let o = affquant(&["trace-u", "--alpha", "2", "--q", "2", "--p", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let value = |prefix: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(prefix)).unwrap();
        line[prefix.len()..].split_whitespace().next().unwrap().parse().unwrap()
    };
    assert!((value("abel sum") - 0.5f64.sqrt()).abs() < 1e-6);
    assert!((value("min(q,1/q)^(alpha/2) sqrt(q)/|q-1|") - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((value("sqrt(q)/|q-1|") - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn trace_u_at_alpha_zero_matches_plain_form() {
    let o = affquant(&["trace-u", "--alpha", "0", "--q", "4", "--p", "1.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("abel sum")).unwrap();
    let v: f64 = line["abel sum".len()..].split_whitespace().next().unwrap().parse().unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-5, "{v}");
}

#[test]
fn observable_syntax_error_reports_column() {
    let o = affquant(&["quantize", "--f", "q^^2", "--json-errors"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["column"], 3);
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn high_momentum_power_is_rejected() {
    let o = affquant(&["quantize", "--f", "p^9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unsupported power"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(affquant(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(affquant(&["trace-u", "--alpha", "2"]).status.code(), Some(2));
    assert_eq!(affquant(&["repr", "--q", "2", "--alpha", "-3"]).status.code(), Some(2));
    assert_eq!(affquant(&["wigner", "--nq", "1"]).status.code(), Some(2));
    let o = affquant(&["constants", "--weight", "thermal", "--json-errors"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn computation_errors_exit_one() {
    // ψ′² ~ 1/x for the default e_0^(1) fiducial
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["lower-symbol", "--f", "p^2", "--weight", "acs", "--out", out, "--json-errors"];
    args.extend(SMALL_GRID);
    let o = affquant(&args);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "computation");
}

#[test]
fn half_oscillator_hamiltonian_spectrum() {
    let o = affquant(&["quantize", "--f", "0.5*p^2 + 0.5*q^2", "--alpha", "2", "--scale", "0.5", "--n-max", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("lowest eigenvalues")).unwrap();
    let ev: Vec<f64> = line["lowest eigenvalues".len()..].split_whitespace().map(|s| s.parse().unwrap()).collect();
    for (k, e) in ev.iter().take(4).enumerate() {
        assert!((e - (2.0 * k as f64 + 1.5)).abs() < 1e-3, "level {k}: {e}");
    }
}

#[test]
fn halfosc_wigner_emits_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["halfosc", "--n", "1", "--emit", "wigner", "--out", out.to_str().unwrap()];
    args.extend(SMALL_GRID);
    let o = affquant(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = std::fs::read_to_string(out.join("wigner.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "q,p,value");
    assert_eq!(lines.len(), 1 + 9 * 11);
    let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[..2], [0.2, -3.0]);

    let side = read_json(&out.join("wigner.json"));
    assert_eq!(side["kind"], "wigner_aw");
    assert_eq!(side["state"], "phi_1");
    assert!(side["residuals"]["imag_residual"].as_f64().unwrap() < 1e-8);

    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "halfosc");
    assert_eq!(m["tolerances"]["requested"], 1e-6);
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["wigner.csv", "wigner.json"]);
    for f in files {
        let bytes = std::fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["halfosc", "--n", "2", "--emit", "wigner,acs_density,q_marginal", "--out", "OUT"];
        args.extend(SMALL_GRID);
        let o_str = out.to_str().unwrap().to_string();
        let args: Vec<&str> = args.iter().map(|a| if *a == "OUT" { o_str.as_str() } else { a }).collect();
        let o = affquant(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for name in ["wigner.csv", "wigner.json", "acs_density.csv", "acs_density.json", "q_marginal.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let ma = read_json(&a.join("manifest.json"));
    let mb = read_json(&b.join("manifest.json"));
    assert_eq!(ma["files"], mb["files"]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"state": "laguerre:1", "alpha": 2.0, "tol": 1e-9, "grid": {{"qmin": 0.5, "qmax": 2.0, "nq": 3, "pmin": -1.0, "pmax": 1.0, "np": 4}}, "out": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = affquant(&["wigner", "--config", cfg.to_str().unwrap(), "--np", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let side = read_json(&out.join("wigner.json"));
    assert_eq!(side["state"], "e_1^(2)");
    assert_eq!(side["grid"]["p"]["n"], 5);
    assert_eq!(side["grid"]["q"]["n"], 3);
    assert_eq!(side["tolerances"]["requested"], 1e-9);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["config"]["grid"]["np"], 5);

    std::fs::write(&cfg, r#"{"alpha": 2.0, "bogus": 1}"#).unwrap();
    assert_eq!(affquant(&["wigner", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn every_subcommand_records_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("repr", vec!["repr", "--q", "1.2", "--p", "0.1", "--n-max", "10"]),
        ("trace-u", vec!["trace-u", "--q", "3"]),
        ("constants", vec!["constants", "--weight", "thermal", "--t", "0.4"]),
        ("quantize", vec!["quantize", "--f", "qp", "--n-max", "8"]),
        ("acs-density", vec!["acs-density", "--nq", "3", "--np", "3"]),
        ("lower-symbol", vec!["lower-symbol", "--f", "q^-1", "--nq", "3", "--np", "3"]),
        ("verify", vec!["verify", "--check", "8"]),
    ];
    for (name, mut args) in cases {
        let out = dir.path().join(name);
        let out = out.to_str().unwrap().to_string();
        args.extend(["--tol", "1e-4", "--out", out.as_str()]);
        let o = affquant(&args);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let m = read_json(&Path::new(&out).join("manifest.json"));
        assert_eq!(m["command"], name);
        assert_eq!(m["tolerances"]["requested"], 1e-4, "{name}");
    }
}

#[test]
fn verify_prints_table() {
    let o = affquant(&["verify", "--check", "1", "--check", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 2);
    assert!(text.contains("2 of 2 checks passed"));
    assert_eq!(affquant(&["verify", "--check", "11"]).status.code(), Some(2));
}
