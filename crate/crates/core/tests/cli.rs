use std::process::{Command, Output};

fn dca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dca")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SQUARE: &str = r#"{"kind":"square","cellsX":2,"cellsY":2,"mesh":0.5,"a":0,"b":4}"#;

#[test]
fn saw_census_csv() {
    let o = dca(&["saw-census", "--kmax", "12", "--assert"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# dca "));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k,count,root,ratio");
    let counts: Vec<u64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(counts, dca_core::onmodel::naive_saw_count(12));
}

#[test]
fn on_verify_ising_point() {
    let o = dca(&["on-verify", "--N", "1", "--regime", "dilute", "--assert"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let x = v["result"]["params"]["x"].as_f64().unwrap();
    assert_eq!(x, 1.0 / 3f64.sqrt());
    assert!(v["result"]["triplet"]["loopResidual"].as_f64().unwrap() < 1e-12);
    assert!(v["result"]["triplet"]["edgeResidual"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["config"]["command"], "on-verify");
    assert!(v["version"].is_string());
}

#[test]
fn invalid_domain_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let o = dca(&[
        "dca-check",
        "--domain",
        r#"{"kind":"square","cellsX":0,"cellsY":2,"mesh":1.0}"#,
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(!o.stderr.is_empty());

    let o = dca(&["dca-check", "--domain", r#"{"kind":"square","bogus":1,"mesh":1.0}"#]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(dca(&["saw-census", "--kmax", "40"]).status.code(), Some(3));
    assert_eq!(
        dca(&["ising-observable", "--domain", SQUARE, "--enum-budget-log2", "2"]).status.code(),
        Some(3)
    );
    assert_eq!(dca(&["ising-energy", "--domain", SQUARE]).status.code(), Some(2));
    assert_eq!(dca(&["ising-observable", "--domain", SQUARE, "--x", "1.5"]).status.code(), Some(2));
    // exactly preharmonic data gives no convergence order
    let o = dca(&["scaling-converge", "--study", "dirichlet", "--data", "reZ3", "--assert"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("\"pass\": false"));
    assert!(dca(&["scaling-converge", "--study", "dirichlet", "--data", "reZ3"]).status.success());
}

#[test]
fn observable_at_criticality() {
    let o = dca(&["ising-observable", "--domain", SQUARE, "--assert"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["result"];
    assert!(r["strongResidual"]["maxResidual"].as_f64().unwrap() < 1e-10);
    let values = r["values"].as_array().unwrap();
    // 12 edges, and 12 ports filling the boundary vertices to degree 4
    assert_eq!(values.len(), 24);
    assert_eq!(values[0]["z"], 0);
    // 17 significant digits throughout
    let text = stdout(&o);
    let x = text.lines().find(|l| l.trim_start().starts_with("\"x\"")).unwrap();
    assert!(x.contains("4.1421356237309515e-1"), "{x}");
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command":"saw-census","sawKmax":8,"format":"json"}"#).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&dca(&["saw-census", "--config", cfg.to_str().unwrap()]))).unwrap();
    assert_eq!(v["result"]["counts"].as_array().unwrap().len(), 8);
    assert_eq!(v["config"]["sawKmax"], 8);

    let v: serde_json::Value =
        serde_json::from_str(&stdout(&dca(&["saw-census", "--config", cfg.to_str().unwrap(), "--kmax", "6"]))).unwrap();
    assert_eq!(v["result"]["counts"].as_array().unwrap().len(), 6);

    let o = Command::new(env!("CARGO_BIN_EXE_dca"))
        .args(["saw-census", "--config", cfg.to_str().unwrap()])
        .env("DCA_SAW_KMAX", "5")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["counts"].as_array().unwrap().len(), 5);

    std::fs::write(&cfg, r#"{"command":"on-verify","N":1.0}"#).unwrap();
    assert_eq!(dca(&["saw-census", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"sawKmax":8,"unknown":1}"#).unwrap();
    assert_eq!(dca(&["saw-census", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let args = ["ising-energy", "--domain", SQUARE, "--seed", "4", "--sweeps", "3000", "--format", "csv"];
    let printed = stdout(&dca(&args));
    let mut with_file = args.to_vec();
    with_file.extend(["-o", out.to_str().unwrap()]);
    let o = dca(&with_file);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), printed);
    assert!(printed.contains("\"seed\": 4"));
    assert!(printed.lines().any(|l| l.starts_with("estimate,stderr,sweeps,seed,exact")));
}
