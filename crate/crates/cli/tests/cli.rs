use std::process::{Command, Output};

use serde_json::Value;

fn einlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_einlab"))
        .args(args)
        .env_remove("EINLAB_DIGITS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn num(v: &Value) -> f64 {
    v["value"].as_str().unwrap().parse().unwrap()
}

#[test]
fn constants_json_schema() {
    let doc = json_of(&einlab(&["constants", "--digits", "50", "--format", "json"]));
    for key in ["command", "config", "results", "errors_bounds", "runtime_ms"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["command"], "constants");
    assert_eq!(doc["config"]["digits"], 50);
    let gamma = doc["results"]["gamma"]["value"]["value"].as_str().unwrap();
    assert!(gamma.starts_with("5.772156649015328606065120900824024310421"), "{gamma}");
    let delta = doc["results"]["delta"]["value"]["value"].as_str().unwrap();
    assert!(delta.starts_with("5.963473623231940743410784993692793760741"), "{delta}");
    assert_eq!(doc["results"]["ein1"]["routes"].as_array().unwrap().len(), 2);
    assert!(doc["errors_bounds"]["gamma"]["max_pairwise_discrepancy"].as_f64().unwrap() < 1e-50);
}

#[test]
fn prop1_csv_trace_and_json_verdict() {
    let out = einlab(&["prop1", "--alpha", "1/e", "--terms", "1000", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,term,cumulative,abs_term"));
    assert_eq!(lines.count(), 1000);

    let doc = json_of(&einlab(&["prop1", "--alpha", "1/e", "--terms", "1000", "--digits", "30"]));
    assert_eq!(doc["results"]["verdict"], "converging");
    let est = num(&doc["results"]["limit_estimate"]);
    assert!((est - 0.796_599_599_297_053).abs() < 1e-5, "{est}");
}

#[test]
fn prop1_exact_identity_flag() {
    let doc = json_of(&einlab(&["prop1", "--alpha", "1/3", "--terms", "30", "--identity-m", "10", "--digits", "20"]));
    assert_eq!(doc["results"]["finite_identity"]["residual"], "0");
    assert_eq!(doc["results"]["verdict"], "diverging");
    let out = einlab(&["prop1", "--alpha", "1/e", "--terms", "30", "--identity-m", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alpha_scan_rows() {
    let doc = json_of(&einlab(&[
        "alpha-scan", "--center", "1/e", "--offsets", "1e-3,1e-6,1e-9", "--terms", "500", "--digits", "30",
    ]));
    let rows = doc["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let ks: Vec<u64> = rows.iter().map(|r| r["k_star"].as_u64().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[0] < w[1]), "{ks:?}");
    assert!(rows.iter().all(|r| r["verdict"] == "diverging"));
    assert_eq!(rows[0]["alpha"], "1/e+1/1000");

    let out = einlab(&["alpha-scan", "--center", "1/e", "--offsets", "-1e-3,0", "--terms", "100", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,verdict,k_star,min_term,best_error");
    assert!(lines[1].starts_with("1/e-1/1000,diverging,"));
    assert!(lines[2].starts_with("1/e,converging,,"), "{}", lines[2]);
}

#[test]
fn exit_codes() {
    assert_eq!(einlab(&["prop1", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(einlab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(einlab(&["prop1", "--alpha", "pi"]).status.code(), Some(2));
    assert_eq!(einlab(&["prop1", "--terms", "5"]).status.code(), Some(2));
    assert_eq!(einlab(&["verify-all"]).status.code(), Some(2));
    assert_eq!(einlab(&["stokes", "--target", "generalized"]).status.code(), Some(4));
    assert_eq!(einlab(&["moments", "--n", "13"]).status.code(), Some(4));
    // a starved quadrature cannot reach its tolerance
    assert_eq!(einlab(&["borel", "--quad-budget", "40", "--digits", "30"]).status.code(), Some(3));
    assert_eq!(einlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_einlab"))
        .args(["constants", "--name", "gamma"])
        .env("EINLAB_DIGITS", "25")
        .output()
        .unwrap();
    let doc = json_of(&out);
    assert_eq!(doc["config"]["digits"], 25);
    let out = Command::new(env!("CARGO_BIN_EXE_einlab"))
        .args(["constants", "--name", "gamma", "--digits", "30"])
        .env("EINLAB_DIGITS", "25")
        .output()
        .unwrap();
    assert_eq!(json_of(&out)["config"]["digits"], 30);
}

#[test]
fn output_file_and_gumbel_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let p = path.to_str().unwrap();
    let args = ["moments", "--n", "1", "--digits", "30", "--mc-samples", "20000", "--seed", "9", "-o", p];
    assert_eq!(einlab(&args).status.code(), Some(0));
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(einlab(&args).status.code(), Some(0));
    let b: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(a["results"]["monte_carlo"], b["results"]["monte_carlo"]);
    let full = num(&a["results"]["full"]);
    assert!((full - 0.577_215_664_901_532_9).abs() < 1e-25);
}

#[test]
fn gen_series_and_borel() {
    let doc = json_of(&einlab(&["gen-series", "--n", "2", "--terms", "400", "--digits", "30"]));
    assert_eq!(doc["results"]["verdict"], "converging");
    assert!(doc["errors_bounds"]["limit_minus_moment"].as_f64().unwrap() < 1e-3);
    let doc = json_of(&einlab(&["gen-series", "--n", "2", "--alpha", "0", "--terms", "400", "--digits", "30"]));
    assert_eq!(doc["results"]["verdict"], "diverging");

    let doc = json_of(&einlab(&["borel", "--kind", "delta", "--digits", "30"]));
    assert!(doc["errors_bounds"]["laplace_minus_reference"].as_f64().unwrap() < 1e-28);
    let r = num(&doc["results"]["radius_estimate"]);
    assert!((r - 1.0).abs() < 0.05);
}

#[test]
fn verify_subset() {
    let out = einlab(&["verify-all", "--seed", "7", "--only", "2,7", "--digits", "40"]);
    let doc = json_of(&out);
    assert_eq!(doc["results"]["all_passed"], true);
    assert_eq!(doc["results"]["criteria"].as_array().unwrap().len(), 2);
    assert_eq!(einlab(&["verify-all", "--seed", "7", "--only", "11"]).status.code(), Some(2));
}
