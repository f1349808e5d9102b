use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn l2tor(args: &[&str]) -> Output {
    l2tor_env(args, &[])
}

fn l2tor_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_l2tor"));
    cmd.args(args).env_remove("L2TOR_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn selftest_passes_with_table() {
    let o = l2tor(&["selftest"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}{}", stderr(&o));
    for key in ["C3", "anomaly-dim2", "short-exact"] {
        assert!(out.contains(key), "missing {key}:\n{out}");
    }
    assert!(out.contains("11 of 11 criteria passed"));
}

#[test]
fn selftest_json_is_deterministic() {
    let args = ["selftest", "--only", "anomaly-dim3,jsj,cim-oracle", "--format", "json"];
    let a = l2tor(&args);
    let b = l2tor(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 3);
    assert_eq!(v["passed"], true);
}

#[test]
fn selftest_rejects_unknown_criterion() {
    let o = l2tor(&["selftest", "--only", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown criterion"));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = l2tor(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn missing_manifest_is_a_file_error() {
    let o = l2tor(&["jsj", "--input", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"), "{}", stderr(&o));
}

#[test]
fn cim_selftest_prints_convention() {
    let o = l2tor(&["zeta", "selftest-cim"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["formula"], "-2/(m-i)");
    assert_eq!(v["resolution"]["statedDisagreesAt"], serde_json::json!([1, 3, 4, 5, 6, 7, 8]));
    let text = stdout(&l2tor(&["zeta", "selftest-cim", "--format", "text"]));
    assert!(text.starts_with("c(i,m) = -2/(m-i)"), "{text}");
}

#[test]
fn hyperbolic_constant() {
    let o = l2tor(&["hyperbolic", "--m", "3", "--op", "constant"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["value"].as_f64().unwrap() + 1.0 / (3.0 * PI)).abs() < 1e-6);
    let even = json(&l2tor(&["hyperbolic", "--m", "6"]));
    assert_eq!(even["value"].as_f64(), Some(0.0));
    assert_eq!(l2tor(&["hyperbolic", "--m", "5"]).status.code(), Some(2));
}

#[test]
fn hyperbolic_density_and_cusp() {
    let v = json(&l2tor(&["hyperbolic", "--op", "density", "--t", "0.5"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let (q, c) = (r["density"].as_f64().unwrap(), r["closedForm"].as_f64().unwrap());
        assert!((q - c).abs() <= 1e-9 * c, "{r}");
    }
    let v = json(&l2tor(&["hyperbolic", "--op", "cusp", "--cross-section", "2", "--height", "0,1"]));
    let vol: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["volume"].as_f64().unwrap()).collect();
    assert_eq!(vol[0], 1.0);
    assert!((vol[1] - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn zeta_determinants() {
    let v = json(&l2tor(&["zeta", "--circle", "5"]));
    assert!((v["result"]["value"].as_f64().unwrap() - 25.0).abs() < 1e-8);
    let v = json(&l2tor(&["zeta", "--spectrum", "[[0, 1], [2, 3], [5, 1]]", "--op", "det"]));
    assert!((v["result"]["value"].as_f64().unwrap() - 40.0).abs() < 1e-9);
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "spec.json", "[2, 2, 2, 5]");
    let v = json(&l2tor(&["zeta", "--spectrum", &f]));
    assert!((v["result"]["value"].as_f64().unwrap() - 40.0).abs() < 1e-9);
    assert_eq!(l2tor(&["zeta", "--spectrum", "[0]"]).status.code(), Some(2));
    assert_eq!(l2tor(&["zeta", "--spectrum", "nowhere.json"]).status.code(), Some(2));
}

#[test]
fn zeta_trace_and_torsion() {
    let v = json(&l2tor(&["zeta", "--spectrum", "[[0, 1], [1, 2]]", "--op", "trace", "--t", "1"]));
    let row = &v["rows"][0];
    assert!((row["perp"].as_f64().unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    assert!((row["full"].as_f64().unwrap() - 1.0 - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    // Degree 1 with a single eigenvalue λ contributes −(−ln λ) = ln λ.
    let v = json(&l2tor(&["zeta", "--spectrum", "[[], [[3, 1]]]", "--op", "torsion"]));
    assert!((v["result"]["total"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-9, "{v}");
}

#[test]
fn heatcmp_emits_csv_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let o = l2tor(&["heatcmp", "--pair", "halfline-line", "--K", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["violations"], 0);
    assert!(v["closedFormError"].as_f64().unwrap() <= 1e-12);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("t,x,diff,bound\n"));
    assert_eq!(rows.lines().count(), 1 + v["probes"].as_u64().unwrap() as usize);

    let o = l2tor(&["heatcmp", "--pair", "interval-halfline", "--K", "0.5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("t,x,diff,bound\n"));
    let verdict: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(verdict["pair"], "interval-halfline");
}

#[test]
fn anomaly_outputs() {
    let v = json(&l2tor(&["anomaly", "--dim", "2", "--family", "preset", "--u", "0"]));
    assert!((v["result"]["sum"].as_f64().unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-12);

    let o = l2tor(&["anomaly", "--dim", "3", "--family", "preset", "--sweep", "0:1:5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("u,d0,d1,d2,d3,sum,meanCurvature,secondNormal,curvature"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[5] + (1.0 + cols[0]) / (4.0 * PI)).abs() < 1e-12, "{line}");
    }

    let o = l2tor(&["anomaly", "--dim", "2", "--f", "1+u+x", "--u", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("boundary-stationary"));
    assert_eq!(l2tor(&["anomaly", "--dim", "2", "--family", "other"]).status.code(), Some(2));
}

#[test]
fn jsj_reports() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "m.json",
        &format!(r#"{{"name": "one", "boundaryTori": 0, "pieces": [{{"kind": "hyperbolic", "volume": {}}}]}}"#, 3.0 * PI),
    );
    let v = json(&l2tor(&["jsj", "--input", &f]));
    assert_eq!(v["torsion"].as_f64(), Some(-1.0));
    let csv = write(dir.path(), "g.csv", "# name: graph\nkind,volume,label\nseifert,,a\nseifert,,b\n");
    let o = l2tor(&["jsj", "--input", &csv, "--report", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("graph manifold     true"));
    let bad = write(dir.path(), "b.json", r#"{"name": "x", "boundaryTori": 0, "pieces": [{"kind": "sol"}]}"#);
    let o = l2tor(&["jsj", "--input", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown kind 'sol'"), "{}", stderr(&o));
    assert_eq!(l2tor(&["jsj", "--census", "nope"]).status.code(), Some(2));
}

#[test]
fn seed_precedence_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 11\n");
    let run = |extra: &[&str], env: &[(&str, &str)]| {
        let mut args = vec!["sdf-check", "--suite", "short-exact", "--instances", "5"];
        args.extend_from_slice(extra);
        let o = l2tor_env(&args, env);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let seed = |bytes: &[u8]| serde_json::from_slice::<Value>(bytes).unwrap()["seed"].as_u64().unwrap();
    assert_eq!(run(&[], &[]), run(&[], &[]));
    assert_eq!(seed(&run(&["--config", &cfg], &[])), 11);
    assert_eq!(seed(&run(&["--config", &cfg], &[("L2TOR_SEED", "12")])), 12);
    assert_eq!(seed(&run(&["--config", &cfg, "--seed", "13"], &[("L2TOR_SEED", "12")])), 13);
    assert_eq!(run(&["--seed", "12"], &[]), run(&["--config", &cfg], &[("L2TOR_SEED", "12")]));
}

#[test]
fn config_and_output_plumbing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"tolerances": {"density": 0}}"#);
    let o = l2tor(&["--config", &bad, "hyperbolic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("strictly positive"));

    let out = dir.path().join("report.txt");
    let cfg = write(
        dir.path(),
        "ok.toml",
        &format!("[output]\npath = {:?}\nformat = \"text\"\n", out.to_str().unwrap()),
    );
    let o = l2tor(&["--config", &cfg, "jsj", "--census", "trefoil"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("manifold           trefoil"));
    assert_eq!(l2tor(&["zeta", "--circle", "1", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tight.toml", "[tolerances]\nconstant = 1e-30\n");
    let o = l2tor(&["--config", &cfg, "hyperbolic", "--op", "constant"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert_eq!(json(&o)["passed"], false);
}
