//! CLI contract tests: the documented invocations, exit codes, report
//! schema, and reproducibility of the JSON payload.

use serde_json::Value;
use std::process::{Command, Output};

fn oscform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscform"))
        .args(args)
        .env_remove("OSC_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Structural schema check of a report envelope.
fn assert_envelope_schema(v: &Value, verb: &str) {
    let obj = v.as_object().expect("envelope is an object");
    for key in ["tool", "input", "timing_ms", "result"] {
        assert!(obj.contains_key(key), "missing envelope key {key}");
    }
    let tool = v["tool"].as_object().unwrap();
    assert!(tool["name"].is_string() && tool["version"].is_string());
    let input = v["input"].as_object().unwrap();
    assert_eq!(input["verb"].as_str().unwrap(), verb);
    assert!(input["phase"].is_string());
    assert!(input["as_ds"].is_boolean());
    assert!(v["timing_ms"].is_number());
    let result = v["result"].as_object().unwrap();
    let kind = result["kind"].as_str().unwrap();
    match kind {
        "invariants" => {
            for key in ["n", "alpha", "beta", "gamma", "d0", "d1", "kappa", "mu"] {
                assert!(result[key].is_u64(), "invariants field {key}");
            }
            // exact rationals serialize as "a/b" strings
            let delta = result["delta"].as_str().unwrap();
            assert!(delta.split('/').all(|part| part.parse::<i64>().is_ok()));
            assert!(result["sharp"].is_boolean());
            assert!(result["case_label"].is_string());
        }
        "degenerate" => {
            assert!(result["reason"].is_string());
        }
        "tree" => {
            assert!(result["half_plane"].is_string());
            assert!(result["epsilon"].is_string());
            assert!(result["good_leaves"].is_u64());
            fn check_nodes(nodes: &Value) {
                for node in nodes.as_array().unwrap() {
                    let kind = node["kind"].as_str().unwrap();
                    assert!(
                        ["GoodVertex", "GoodEdge", "Bad", "Truncated"].contains(&kind),
                        "node kind {kind}"
                    );
                    assert!(node["depth"].is_u64());
                    assert!(node["m_window"].is_array());
                    assert!(node["chain"].is_array());
                    if kind == "Bad" {
                        assert!(node["rho"].is_string());
                        check_nodes(&node["children"]);
                    }
                    if kind == "Truncated" {
                        assert!(node["reason"].is_string());
                    }
                }
            }
            check_nodes(&result["regions"]);
        }
        "decay_fit" => {
            for key in ["lambdas", "magnitudes", "predicted_bound"] {
                assert!(result[key].is_array(), "decay_fit field {key}");
            }
            assert!(result["fitted_delta"].is_number());
            assert!(result["envelope_constant"].is_number());
        }
        "sublevel" => {
            assert!(result["epsilons"].is_array());
            assert!(result["measures"].is_array());
            assert!(result["fitted_exponent"].is_number());
        }
        other => panic!("unknown result kind {other}"),
    }
}

#[test]
fn acceptance_9a_analyze_x2y() {
    let out = oscform(&["analyze", "--phase", "x^2*y"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_envelope_schema(&v, "analyze");
    assert_eq!(v["result"]["n"], 3);
    assert_eq!(v["result"]["delta"], "1/4");
    assert_eq!(v["result"]["mu"], 0);
    println!("acceptance 9a (analyze x^2*y): PASS");
}

#[test]
fn acceptance_9b_analyze_degenerate_xy() {
    let out = oscform(&["analyze", "--phase", "x*y"]);
    assert_eq!(out.status.code(), Some(3), "degenerate exit code");
    let v = stdout_json(&out);
    assert_envelope_schema(&v, "analyze");
    assert_eq!(v["result"]["kind"], "degenerate");
    println!("acceptance 9b (analyze x*y degenerate): PASS");
}

#[test]
fn acceptance_9c_decompose_cusp() {
    let out = oscform(&[
        "decompose",
        "--as-ds",
        "--phase",
        "y^2 - x^3",
        "--max-depth",
        "8",
        "--json",
        "-",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_envelope_schema(&v, "decompose");
    // two good leaves at vertex (3, 1), one under each branch root
    let mut count = 0;
    fn walk(nodes: &Value, count: &mut usize) {
        for node in nodes.as_array().unwrap() {
            if node["kind"] == "GoodVertex"
                && node["vertex"] == serde_json::json!(["3", "1"])
                && node["chain"].as_array().unwrap().len() == 1
            {
                *count += 1;
            }
            if let Some(children) = node.get("children") {
                walk(children, count);
            }
        }
    }
    walk(&v["result"]["regions"], &mut count);
    assert_eq!(count, 2, "expected two good leaves at vertex (3,1)");
    println!("acceptance 9c (decompose y^2 - x^3): PASS");
}

#[test]
fn schema_valid_across_the_catalog() {
    let catalog = [
        "x^3*y^2",
        "y^2 - x^3",
        "y^2 - 2*x*y + x^2",
        "y^3 - 2*x^2*y^2 + x^4*y + x^3*y^2 - 2*x^5*y + x^7",
        "x^5*y - x^3*y^2 + x^2*y^4",
    ];
    for phase in catalog {
        let out = oscform(&["analyze", "--phase", phase, "--as-ds"]);
        assert_eq!(out.status.code(), Some(0), "analyze {phase}");
        assert_envelope_schema(&stdout_json(&out), "analyze");

        let out = oscform(&["decompose", "--phase", phase, "--as-ds"]);
        assert_eq!(out.status.code(), Some(0), "decompose {phase}");
        assert_envelope_schema(&stdout_json(&out), "decompose");
    }
}

#[test]
fn decompose_writes_the_report_to_a_file() {
    let dir = std::env::temp_dir().join(format!("oscform-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tree.json");
    let out = oscform(&[
        "decompose",
        "--as-ds",
        "--phase",
        "y^2 - x^3",
        "--json",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_envelope_schema(&on_disk, "decompose");
    assert_eq!(on_disk, stdout_json(&out));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn schema_valid_for_remaining_verbs() {
    let out = oscform(&[
        "verify",
        "--phase",
        "x^2*y",
        "--lambda-min",
        "256",
        "--lambda-max",
        "4096",
        "--points",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    assert_envelope_schema(&stdout_json(&out), "verify");

    let out = oscform(&[
        "sublevel",
        "--phase",
        "x^2*y^2",
        "--eps-min",
        "0.001",
        "--eps-max",
        "0.1",
        "--grid",
        "512",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_envelope_schema(&stdout_json(&out), "sublevel");
}

#[test]
fn csv_outputs_have_documented_columns() {
    let out = oscform(&[
        "verify",
        "--phase",
        "x^2*y",
        "--lambda-min",
        "256",
        "--lambda-max",
        "4096",
        "--points",
        "8",
        "--csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,re,im,abs,predicted_bound"));
    assert_eq!(lines.count(), 8);

    let out = oscform(&[
        "sublevel",
        "--phase",
        "x^2*y^2",
        "--eps-min",
        "0.001",
        "--eps-max",
        "0.1",
        "--grid",
        "256",
        "--csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("epsilon,measure,stderr"));
}

#[test]
fn malformed_or_unknown_inputs_exit_2() {
    let out = oscform(&["analyze", "--phase", "x^-2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = oscform(&["analyze", "--phase", "x + z"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown flag: clap's usage error convention
    let out = oscform(&["analyze", "--phase", "x", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // option conflict
    let out = oscform(&["analyze", "--phase", "x^2*y", "--json", "--csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_invocations_are_bitwise_identical_modulo_timing() {
    let args = [
        "decompose",
        "--as-ds",
        "--phase",
        "y^2 - x^3",
        "--max-depth",
        "8",
    ];
    let mut payloads = Vec::new();
    for _ in 0..2 {
        let out = oscform(&args);
        assert_eq!(out.status.code(), Some(0));
        let mut v = stdout_json(&out);
        v.as_object_mut().unwrap().remove("timing_ms");
        payloads.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn parse_format_round_trip_through_analyze() {
    // analyzing the echoed canonical form gives the identical payload
    for phase in ["x^5*y - x^3*y^2 + x^2*y^4", "1/2*x^2*y - x^2*y"] {
        let first = oscform(&["analyze", "--phase", phase]);
        let v1 = stdout_json(&first);
        let canonical = oscform::FracPoly::parse(phase).unwrap().to_string();
        let second = oscform(&["analyze", "--phase", &canonical]);
        let v2 = stdout_json(&second);
        assert_eq!(v1["result"], v2["result"], "round trip of {phase}");
    }
}
