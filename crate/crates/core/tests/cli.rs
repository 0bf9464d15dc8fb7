use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn example(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aztec-mvop-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_aztec-mvop")).args(args).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

#[test]
fn validate_passes_on_bundled_configs() {
    for cfg in ["genus_one.json", "scalar.json"] {
        let (code, v) = run(&["validate", "--config", &example(cfg)]);
        assert_eq!(code, 0, "{cfg}: {v}");
        assert_eq!(v["pass"], true);
    }
}

#[test]
fn genus_zero_config_fails_with_hypothesis() {
    let (code, v) = run(&["validate", "--config", &example("degenerate.json")]);
    assert_eq!(code, 1);
    assert_eq!(v["pass"], false);
    assert!(v["failures"].as_array().unwrap().iter().any(|f| f["error"] == "GenusZero"));
}

#[test]
fn malformed_input_exits_with_two() {
    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"k\": 2, \"N\": ").unwrap();
    let (code, v) = run(&["mvop", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["failure"]["error"], "ConfigError");
    let (code, _) = run(&["mvop", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["nosuchcommand"]);
    assert_eq!(code, 2);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let a = scratch("a.json");
    let b = scratch("b.json");
    for out in [&a, &b] {
        let (code, _) = run(&["kernel", "--config", &example("genus_one.json"), "--n", "2", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn kernel_blocks_report_null_single_term_when_x_not_above_x_prime() {
    let cfg = scratch("queries.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(example("genus_one.json")).unwrap()).unwrap();
    v["N"] = 2.into();
    v["queries"] = serde_json::json!([{"x": 2, "x_prime": 5, "y": 0, "y_prime": 1}, {"x": 5, "x_prime": 2, "y": 1, "y_prime": 0}]);
    std::fs::write(&cfg, v.to_string()).unwrap();
    let (code, out) = run(&["kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let blocks = out["blocks"].as_array().unwrap();
    for route in ["rn", "wh", "pn"] {
        assert!(blocks[0][route]["single"].is_null());
        assert!(blocks[1][route]["single"].is_array());
    }
}

#[test]
fn inadmissible_query_exits_with_two() {
    let cfg = scratch("badquery.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(example("genus_one.json")).unwrap()).unwrap();
    v["N"] = 1.into();
    v["queries"] = serde_json::json!([{"x": 0, "x_prime": 1, "y": 0, "y_prime": 0}]);
    std::fs::write(&cfg, v.to_string()).unwrap();
    let (code, out) = run(&["kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(out["failure"]["error"], "InvalidQuery");
}

#[test]
fn zero_degree_mvop_is_identity() {
    let (code, v) = run(&["mvop", "--config", &example("genus_one.json"), "--n", "0"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["P"], serde_json::json!([[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]));
}

#[test]
fn float_and_exact_solvers_are_selectable() {
    let ex = run(&["mvop", "--config", &example("genus_one.json"), "--n", "2"]).1;
    let fl = run(&["mvop", "--config", &example("genus_one.json"), "--n", "2", "--solver", "float"]).1;
    assert_eq!(ex["contour"]["nodes_used"], 0);
    assert!(fl["contour"]["nodes_used"].as_u64().unwrap() > 0);
    let (code, v) = run(&["mvop", "--config", &example("scalar.json"), "--solver", "exact"]);
    assert_eq!(code, 2);
    assert_eq!(v["failure"]["error"], "ConfigError");
}

#[test]
fn theta_targets_run() {
    for target in ["pn", "pnhat", "lemmas"] {
        let (code, v) = run(&["theta", target, "--config", &example("genus_one.json"), "--n", "2"]);
        assert_eq!(code, 0, "{target}: {v}");
    }
    let (code, v) = run(&["theta", "pn", "--config", &example("scalar.json")]);
    assert_eq!(code, 2, "{v}");
}
