use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use yamabe_core::integrator::{integrate, Direction, IntegrationOptions};
use yamabe_core::ode::{SolitonParams, SolitonState};

fn yamabe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yamabe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Row {
    r: f64,
    rho: f64,
    drho: f64,
    ddrho: f64,
    #[serde(rename = "R")]
    curvature: f64,
}

const CONSTANT: [&str; 10] = [
    "--n", "3", "--lambda", "-1", "--rbar", "-1", "--rho0", "1", "--drho0", "0",
];

#[test]
fn integrate_constant_stream() {
    let mut args = vec!["integrate"];
    args.extend(CONSTANT);
    let out = yamabe(&args);
    assert_eq!(code(&out), 0);
    let v = lines(&out);
    let (summary, samples) = v.split_last().unwrap();
    assert!(samples.len() > 100);
    for s in samples {
        assert_eq!(s["R"], -1.0);
        assert_eq!(s["rho"], 1.0);
    }
    assert_eq!(summary["termination_fwd"], "WindowEnd");
    assert_eq!(summary["termination_bwd"], "WindowEnd");
    assert!(summary["events"].is_array());
}

#[test]
fn integrate_from_tip() {
    let out = yamabe(&["integrate", "--n", "3", "--lambda", "-1", "--rbar", "2", "--tip"]);
    assert_eq!(code(&out), 0);
    let v = lines(&out);
    let samples = &v[..v.len() - 1];
    assert!(samples.iter().any(|s| s["r"] == 1e-4));
    let first = samples[0]["r"].as_f64().unwrap();
    assert!(first > 0.0 && first < 1e-4);
    assert_eq!(v.last().unwrap()["termination_bwd"], "RhoZero");
}

#[test]
fn usage_errors_exit_2() {
    let cases: [&[&str]; 6] = [
        &["integrate", "--n", "2", "--lambda", "-1", "--rbar", "2", "--tip"],
        &["integrate", "--n", "3", "--lambda", "-1", "--rbar", "-1", "--tip"],
        &["integrate", "--n", "3", "--lambda", "-1", "--rbar", "-1", "--rho0", "1"],
        &["integrate", "--n", "3", "--lambda", "-1", "--rbar", "2", "--tip", "--rho0", "1"],
        &["integrate", "--n", "3", "--lambda", "-1", "--rbar", "-1", "--rho0", "1", "--drho0", "0", "--r-span", "-5"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&yamabe(args)), 2, "{args:?}");
    }
}

#[test]
fn integration_failure_exits_3() {
    let out = yamabe(&[
        "integrate", "--n", "3", "--lambda", "-1", "--rbar", "-1", "--rho0", "2", "--drho0", "0.5",
        "--rtol", "1e-300", "--atol", "1e-300",
    ]);
    assert_eq!(code(&out), 3);
    let out = yamabe(&[
        "integrate", "--n", "3", "--lambda", "-1", "--rbar", "-1", "--rho0", "1e12", "--separatrix", "forward",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn classify_exit_codes() {
    let mut args = vec!["classify"];
    args.extend(CONSTANT);
    let out = yamabe(&args);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["branch"], "Trivial");
    assert_eq!(v["asymptote_c"], 1.0);

    let line = ["classify", "--n", "3", "--lambda", "-1", "--rbar", "-1", "--rho0", "2"];
    let mut args = line.to_vec();
    args.extend(["--separatrix", "backward"]);
    let out = yamabe(&args);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["branch"], "LineRGreaterLambda");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let mut args = line.to_vec();
    args.extend(["--drho0", "0.5", "--r-span", "0.5"]);
    let out = yamabe(&args);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["branch"], "Inconclusive");
}

#[test]
fn verify_suites() {
    let out = yamabe(&["verify", "--suite", "eq-consistency"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["suite"], "eq-consistency");
    assert!(!v["checks"].as_array().unwrap().is_empty());

    let out = yamabe(&["verify", "--suite", "claim2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&yamabe(&["verify", "--suite", "nonsense"])), 2);
}

#[test]
fn examples() {
    let out = yamabe(&["example", "--name", "constant", "--n", "3", "--lambda", "-1", "--rbar", "-1"]);
    assert_eq!(code(&out), 0);
    let v = lines(&out);
    assert!(v[..v.len() - 1].iter().all(|s| s["rho"] == 1.0 && s["R"] == -1.0));

    let out = yamabe(&["example", "--name", "sphere-tip", "--n", "3", "--lambda", "-1", "--rbar", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(lines(&out).last().unwrap()["termination_bwd"], "RhoZero");

    let out = yamabe(&["example", "--name", "constant", "--rbar", "1", "--lambda", "-1"]);
    assert_eq!(code(&out), 2);
    let out = yamabe(&["example", "--name", "sphere-tip", "--rbar", "-1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stream_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let out = yamabe(&[
        "integrate", "--n", "4", "--lambda", "-1.5", "--rbar", "-0.5", "--rho0", "1.3", "--drho0", "0.4",
        "--r-span", "5", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());

    let params = SolitonParams::expanding(4, -1.5, -0.5).unwrap();
    let tr = integrate(
        &params,
        SolitonState::new(0.0, 1.3, 0.4),
        Direction::Both,
        &IntegrationOptions::default().with_r_span(5.0),
    )
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), tr.samples().len() + 1);
    for (row, s) in rows.iter().zip(tr.samples()) {
        let v: Value = serde_json::from_str(row).unwrap();
        for (key, want) in [("r", s.r), ("rho", s.rho), ("drho", s.drho), ("ddrho", s.ddrho)] {
            assert_eq!(v[key].as_f64().unwrap().to_bits(), want.to_bits(), "{key}");
        }
        let typed: Row = serde_json::from_str(row).unwrap();
        assert_eq!(serde_json::to_string(&typed).unwrap(), *row);
    }
}

const CLAIM1: &str = r#"{"n":[3],"lambda":[-1],"rbar":[2],"rho0":[0.5,1,2],"drho0":[0.1,0.5,1,2]}"#;

#[test]
fn scan_claim1_grid_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for target in [&a, &b] {
        let mut cfg: Value = serde_json::from_str(CLAIM1).unwrap();
        cfg["output_path"] = target.to_str().unwrap().into();
        let c = write(dir.path(), "c.json", &cfg.to_string());
        let out = yamabe(&["scan", "--config", &c]);
        assert_eq!(code(&out), 0);
        assert!(String::from_utf8_lossy(&out.stderr).contains("branches"));
    }
    let a = std::fs::read_to_string(a).unwrap();
    let b = std::fs::read_to_string(b).unwrap();
    let (ha, ra) = a.split_once('\n').unwrap();
    let (_, rb) = b.split_once('\n').unwrap();
    assert_eq!(ra, rb);

    let header: Value = serde_json::from_str(ha).unwrap();
    assert!(header["timestamp"].as_str().unwrap().ends_with('Z'));
    let records: Vec<Value> = ra.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 12);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["grid_index"], i);
        let branch = r["classification"]["branch"].as_str().unwrap();
        assert!(!branch.starts_with("Line"), "{branch}");
    }
}

#[test]
fn scan_csv_and_guards() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "k.json",
        r#"{"n":[3],"lambda":[-1],"rbar":[-1],"rho0":[1],"drho0":[0],"format":"csv"}"#,
    );
    let out = yamabe(&["scan", "--config", &c]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(
        rows[0],
        "grid_index,n,lambda,rbar,rho0,drho0,branch,asymptote_c,suite_pass,termination_fwd,termination_bwd"
    );
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,3,-1.0,-1.0,1.0,0.0,Trivial,"));

    let empty = write(dir.path(), "e.json", r#"{"n":[3],"lambda":[],"rbar":[-1],"rho0":[1],"drho0":[0]}"#);
    assert_eq!(code(&yamabe(&["scan", "--config", &empty])), 2);
    let bad = write(dir.path(), "b.json", r#"{"n":[3],"lambda":[-1]"#);
    assert_eq!(code(&yamabe(&["scan", "--config", &bad])), 2);
    let tip = write(dir.path(), "t.json", r#"{"n":[3],"lambda":[-1],"rbar":[-1],"tip":true}"#);
    assert_eq!(code(&yamabe(&["scan", "--config", &tip])), 2);
    assert_eq!(code(&yamabe(&["scan", "--config", "/nonexistent/x.json"])), 2);
}

#[test]
fn scan_worker_error_leaves_a_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "f.json",
        r#"{"n":[3],"lambda":[-1],"rbar":[-1],"rho0":[1,-1,2],"drho0":[0]}"#,
    );
    let out = yamabe(&["scan", "--config", &c]);
    assert_eq!(code(&out), 3);
    let v = lines(&out);
    assert_eq!(v.len(), 3);
    assert_eq!(v[1]["grid_index"], 0);
    assert_eq!(v[2]["FAILED"]["grid_index"], 1);
}
