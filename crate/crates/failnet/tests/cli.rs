use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use failnet::exit;
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_failnet"));
    c.env_remove("FAILNET_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn model(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(name).to_string_lossy().into_owned()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, serde_json::to_vec(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn assert_header(doc: &Value, command: &str, seed: u64) {
    let h = &doc["header"];
    assert_eq!(h["tool"], "failnet");
    assert_eq!(h["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(h["command"], command);
    assert_eq!(h["seed"], seed);
    assert_eq!(h["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn finner_check_on_failing_triangle_is_saturated() {
    let o = run(&["finner-check", "--model", &model("failing_triangle.json")]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let doc = json_out(&o);
    assert_header(&doc, "finner-check", 7);
    assert_eq!(doc["result"]["saturated"], true);
    let implied: Vec<f64> = doc["result"]["implied_e"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, b) in implied.iter().zip([0.1, 0.2, 0.3]) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn inline_failures_override_the_file() {
    let o = run(&["finner-check", "--model", &model("failing_triangle.json"), "--fail", "0.5,0,0.25"]);
    let doc = json_out(&o);
    assert_eq!(doc["result"]["saturated"], true);
    assert!((doc["result"]["implied_e"][0].as_f64().unwrap() - 0.5).abs() < 1e-10);
    let o = run(&["finner-check", "--model", &model("failing_triangle.json"), "--fail", "0.5,0"]);
    assert_eq!(o.status.code(), Some(exit::USAGE));
}

#[test]
fn validate_rejects_redundant_source() {
    let o = run(&["validate", "--model", &model("redundant_source.json")]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
    let doc = json_out(&o);
    assert_header(&doc, "validate", 7);
    assert_eq!(doc["result"]["valid"], false);
    let o = run(&["validate", "--model", &model("failing_triangle.json")]);
    assert_eq!(o.status.code(), Some(exit::OK));
    // commands that need a valid network refuse it too
    let o = run(&["simulate", "--model", &model("redundant_source.json")]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
}

#[test]
fn error_classes_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"]).status.code(), Some(exit::USAGE));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = run(&["finner-check", "--model", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::MALFORMED));
    let missing = dir.path().join("missing.json");
    let o = run(&["finner-check", "--model", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::IO));

    // a state that is not normalized
    let m = json!({
        "graph": {"n_parties": 2, "sources": [[0, 1]]},
        "kind": "quantum",
        "states": [{"dims": [1, 1], "amplitudes": [[2.0, 0.0]]}],
        "povms": [{"labels": ["0"], "elements": [[[[1.0, 0.0]]]]}, {"labels": ["0"], "elements": [[[[1.0, 0.0]]]]}]
    });
    let o = run(&["simulate", "--model", &write_json(dir.path(), "unnormalized.json", &m)]);
    assert_eq!(o.status.code(), Some(exit::INVALID_MODEL));

    let o = run(&["rigidity", "--model", &model("redundant_source.json")]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
}

/// B holds one qubit from each neighbour and accepts only on the Bell projector.
fn entangling_model() -> Value {
    let h = 0.5;
    let z = [0.0, 0.0];
    let bell = vec![
        vec![[h, 0.0], z, z, [h, 0.0]],
        vec![z, z, z, z],
        vec![z, z, z, z],
        vec![[h, 0.0], z, z, [h, 0.0]],
    ];
    let rest = vec![
        vec![[h, 0.0], z, z, [-h, 0.0]],
        vec![z, [1.0, 0.0], z, z],
        vec![z, z, [1.0, 0.0], z],
        vec![[-h, 0.0], z, z, [h, 0.0]],
    ];
    let id2 = vec![vec![[1.0, 0.0], z], vec![z, [1.0, 0.0]]];
    let phi = json!({"dims": [2, 2], "amplitudes": [[FRAC_1_SQRT_2, 0.0], z, z, [FRAC_1_SQRT_2, 0.0]]});
    json!({
        "graph": {"n_parties": 3, "sources": [[0, 1], [1, 2]]},
        "kind": "quantum",
        "states": [phi, phi],
        "povms": [
            {"labels": ["0"], "elements": [id2]},
            {"labels": ["1", "∅"], "elements": [bell, rest]},
            {"labels": ["0"], "elements": [id2]}
        ]
    })
}

#[test]
fn postselect_round_trips_and_rejects_entangling_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("filtered.json");
    let o = run(&["postselect", "--model", &model("fair_sampling_bell.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_header(&doc, "postselect", 7);
    assert_eq!(doc["result"]["fair_sampling"], json!([true, true]));
    assert!(doc["result"]["equivalence_error"].as_f64().unwrap() < 1e-10);
    // the emitted document is itself a valid model
    let o = run(&["simulate", "--model", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let sim = json_out(&o);
    let total: f64 = sim["result"]["probabilities"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let o = run(&["postselect", "--model", &write_json(dir.path(), "bell.json", &entangling_model())]);
    assert_eq!(o.status.code(), Some(exit::CERTIFICATION));
    let doc = json_out(&o);
    assert_eq!(doc["result"]["fair_sampling"], json!([true, false, true]));
    assert!(doc["result"]["model"].is_null());
}

#[test]
fn simulated_distribution_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dist.json");
    let o = run(&["simulate", "--model", &model("failing_triangle.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK));
    assert!(o.stdout.is_empty());
    let o = run(&["finner-check", "--model", out.to_str().unwrap()]);
    assert_eq!(json_out(&o)["result"]["saturated"], true);
}

#[test]
fn rigidity_reports_flag_model() {
    let o = run(&["rigidity", "--model", &model("failing_triangle.json"), "--g-oracle"]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let doc = json_out(&o);
    assert_eq!(doc["result"]["verdict"]["rigid"], true);
    assert_eq!(doc["result"]["g_oracle"]["chain_holds"], true);
    let o = run(&["rigidity", "--model", &model("redundant_source.json"), "--fail", "0,0"]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
}

#[test]
fn tolerance_comes_from_flag_then_environment() {
    let m = model("failing_triangle.json");
    let doc = json_out(&run(&["finner-check", "--model", &m]));
    assert_eq!(doc["result"]["tol"], 1e-9);
    let o = bin().args(["finner-check", "--model", &m]).env("FAILNET_TOL", "1e-3").output().unwrap();
    assert_eq!(json_out(&o)["result"]["tol"], 1e-3);
    let o = bin().args(["finner-check", "--model", &m, "--tol", "1e-5"]).env("FAILNET_TOL", "1e-3").output().unwrap();
    assert_eq!(json_out(&o)["result"]["tol"], 1e-5);
    let o = bin().args(["finner-check", "--model", &m]).env("FAILNET_TOL", "loose").output().unwrap();
    assert_eq!(o.status.code(), Some(exit::USAGE));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let args = ["spdc-optimize", "--objective", "ps_chsh", "--pump", "free", "--restarts", "6", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(exit::OK));
    assert_eq!(a.stdout, b.stdout);
    let doc = json_out(&a);
    assert_header(&doc, "spdc-optimize", 11);
    assert!(doc["result"].get("restarts").is_none());

    let c = run(&["spdc-optimize", "--objective", "ps_chsh", "--pump", "free", "--restarts", "6", "--seed", "12"]);
    assert_ne!(json_out(&c)["header"]["config_hash"], doc["header"]["config_hash"]);

    let scan = ["spdc-scan", "--steps", "3", "--restarts", "2", "--t-min", "0.1", "--t-max", "0.5"];
    let a = run(&scan);
    assert_eq!(a.stdout, run(&scan).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# tool failnet");
    assert_eq!(lines[3], "# seed 7");
    assert!(lines[4].starts_with("# config_hash "));
    assert_eq!(lines[5], "t,standard_chsh,ps_chsh,standard_rate,ps_rate");
    assert_eq!(lines.len(), 9);
}

#[test]
fn output_path_does_not_change_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut docs = Vec::new();
    for name in ["a.json", "b.json"] {
        let p = dir.path().join(name);
        let o = run(&["rgb4-bound", "--theta", "0.26", "--fail-beta", "0.1", "--fail-gamma", "0.1", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(exit::OK));
        docs.push(std::fs::read(p).unwrap());
    }
    assert_eq!(docs[0], docs[1]);
    let doc: Value = serde_json::from_slice(&docs[0]).unwrap();
    assert_eq!(doc["result"]["finner"]["saturated"], true);
    let scaled = doc["result"]["bound"]["scaled"].as_f64().unwrap();
    let l = doc["result"]["bound"]["l"].as_f64().unwrap();
    assert!((scaled - 0.81 * l).abs() < 1e-15);
}

#[test]
fn rgb4_sweep_is_csv() {
    let o = run(&["rgb4-bound", "--sweep", "5", "--fail-beta", "0.2"]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "theta,r_lower,l,scaled,naive,saturated");
    assert_eq!(rows.len(), 6);
    assert!(rows[1].starts_with("0,0,0,"));
}

#[test]
fn reproduce_tables_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for sub in ["one", "two"] {
        let out = dir.path().join(sub);
        let o = run(&[
            "reproduce-tables",
            "--out-dir",
            out.to_str().unwrap(),
            "--restarts",
            "3",
            "--scan-steps",
            "2",
            "--scan-restarts",
            "2",
        ]);
        assert_eq!(o.status.code(), Some(exit::OK), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<Vec<u8>> = ["table_equal.csv", "table_free.csv", "scan.csv", "summary.json"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        bytes.push(files);
    }
    assert_eq!(bytes[0], bytes[1]);
    let table = String::from_utf8(bytes[0][0].clone()).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("standard_randomness,") && rows[2].starts_with("ps_randomness,"));
    let summary: Value = serde_json::from_slice(&bytes[0][3]).unwrap();
    assert_header(&summary, "reproduce-tables", 7);
    assert_eq!(summary["result"]["tables"].as_array().unwrap().len(), 4);
}
