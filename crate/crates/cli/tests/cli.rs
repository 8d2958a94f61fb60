use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

const D3K1: [&str; 10] = ["--d", "3", "--k", "1", "--p", "2", "--a", "0", "--b", "0"];

fn with<'a>(command: &'a str, base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![command];
    v.extend_from_slice(base);
    v.extend_from_slice(extra);
    v
}

#[test]
fn complement_constant() {
    let out = hardy(&with("constant", &D3K1, &["--cone", "complement-sigma0"]));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    let row = &v["rows"][0];
    assert_eq!(num(&row["closed_form"]), 2.25);
    assert!((num(&row["numeric_M"]) - 2.25).abs() < 1e-4);
    assert_eq!(row["status"], "ok");
}

#[test]
fn punctured_constant() {
    let out = hardy(&with("constant", &D3K1, &["--cone", "punctured"]));
    assert_eq!(out.status.code(), Some(0));
    let row = &json(&out)["rows"][0];
    assert_eq!(num(&row["closed_form"]), 0.25);
    assert!((num(&row["numeric_M"]) - 0.25).abs() < 1e-12);
    assert!(num(&row["gap"]).abs() < 1e-12);
}

#[test]
fn inadmissible_input_is_an_error_object() {
    let out = hardy(&[
        "constant", "--d", "3", "--k", "2", "--p", "2", "--a", "-3", "--b", "0", "--cone", "full",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["error"]["kind"], "inadmissible");
    assert!(v["error"]["message"].as_str().unwrap().contains("k + a"));
}

#[test]
fn bad_cone_and_missing_flags_exit_two() {
    let out = hardy(&with("constant", &D3K1, &["--cone", "cylinder"]));
    assert_eq!(out.status.code(), Some(2));
    let out = hardy(&["constant", "--d", "3", "--cone", "full"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "config");
}

#[test]
fn builtin_table_reproduces_the_fractional_rows() {
    let out = hardy(&["table"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    for n in [2.0f64, 3.0] {
        for s in [0.25f64, 0.5, 0.75] {
            let a = 1.0 - 2.0 * s;
            let find = |cone: &str| {
                rows.iter()
                    .find(|r| num(&r["d"]) == n + 1.0 && num(&r["a"]) == a && r["cone"] == cone)
                    .unwrap_or_else(|| panic!("n = {n}, s = {s}, {cone}"))
            };
            let full = ((n - 2.0 * s) / 2.0).powi(2);
            let half = ((n + 2.0 * s) / 2.0).powi(2);
            assert!((num(&find("full")["closed_form"]) - full).abs() < 1e-12);
            assert!((num(&find("half-space")["closed_form"]) - half).abs() < 1e-12);
            assert!((num(&find("half-space")["numeric_M"]) - half).abs() < 1e-3 * half);
        }
    }
    let threshold = rows
        .iter()
        .find(|r| r["closed_form_source"] == "mixed-threshold" && num(&r["p"]) == 3.0)
        .unwrap();
    assert!((num(&threshold["closed_form"]) - 8.0 / 27.0).abs() < 1e-12);
    assert!(rows
        .iter()
        .any(|r| r["status"] == "no_closed_form" && r["numeric_M"].is_number()));
}

#[test]
fn empty_grid_gives_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(&cfg, r#"{"cells": []}"#).unwrap();
    let out = hardy(&["table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rows"].as_array().unwrap().len(), 0);
}

#[test]
fn config_cells_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"d": 4, "k": 1, "p": 2, "a": 0, "b": 0, "cone": "half-space", "mesh": 64, "tol": 0.5}"#,
    )
    .unwrap();
    let out = hardy(&[
        "constant",
        "--config",
        cfg.to_str().unwrap(),
        "--d",
        "3",
        "--mesh",
        "128",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["config"]["mesh_size"], 128);
    assert_eq!(num(&v["config"]["tol"]), 0.5);
    let row = &v["rows"][0];
    assert_eq!(row["d"], 3);
    assert_eq!(row["cone"], "half-space");
    assert_eq!(num(&row["closed_form"]), 2.25);

    std::fs::write(&cfg, r#"{"d": 3, "colour": "red"}"#).unwrap();
    let out = hardy(&["constant", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "config");
}

#[test]
fn missing_config_is_an_io_error() {
    let out = hardy(&["table", "--config", "/nonexistent/grid.json"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "io");
    assert!(v["error"]["message"]
        .as_str()
        .unwrap()
        .contains("/nonexistent/grid.json"));
}

#[test]
fn delta_trace_extrapolates_to_the_constant() {
    let out = hardy(&with(
        "verify",
        &D3K1,
        &["--cone", "complement-sigma0", "--deltas", "0.2,0.1,0.05"],
    ));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row["trace_kind"], "delta");
    let trace = row["quotient_trace"].as_array().unwrap();
    assert_eq!(trace.len(), 3);
    assert!(trace.iter().all(|t| num(&t["value"]) > 2.25));
    assert!((num(&row["extrapolated"]) - 2.25).abs() <= 1e-3);
    assert!((num(&row["observed_order"]) - 2.0).abs() < 1e-2);
    assert_eq!(row["checks_passed"], true);
}

#[test]
fn strip_trace_decays_at_the_threshold_rate() {
    // k + a = p = 2
    let out = hardy(&[
        "verify",
        "--d",
        "3",
        "--k",
        "1",
        "--p",
        "2",
        "--a",
        "1",
        "--b",
        "0",
        "--cone",
        "complement-sigma0",
        "--hs",
        "4,8,16",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let row = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["trace_kind"] == "h")
        .unwrap()
        .clone();
    assert!((num(&row["fitted_rate"]) - (1.0 - 2.0)).abs() < 1e-3);
    assert_eq!(row["checks_passed"], true);

    // cutoffs below the threshold are rejected
    let out = hardy(&with("verify", &D3K1, &["--cone", "complement-sigma0", "--hs", "4"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_delta_list_gives_an_ok_row() {
    let out = hardy(&with("verify", &D3K1, &["--cone", "complement-sigma0", "--deltas"]));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let row = &v["rows"][0];
    assert_eq!(row["status"], "ok");
    assert_eq!(row["quotient_trace"].as_array().unwrap().len(), 0);
    assert!(row["extrapolated"].is_null());
}

#[test]
fn spectrum_reports_the_profile() {
    let out = hardy(&with(
        "spectrum",
        &D3K1,
        &["--cone", "complement-sigma0", "--mesh", "64"],
    ));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let row = &v["rows"][0];
    assert_eq!(row["trace_kind"], "profile");
    assert!((num(&row["lambda"]) - 2.0).abs() < 1e-3);
    let trace = row["quotient_trace"].as_array().unwrap();
    assert!(trace.len() > 64);
    // Dirichlet at θ = π/2
    assert_eq!(num(&trace.last().unwrap()["value"]), 0.0);
}

#[test]
fn tight_tolerance_fails_with_exit_one() {
    let out = hardy(&with(
        "constant",
        &D3K1,
        &["--cone", "complement-sigma0", "--mesh", "16", "--tol", "1e-12"],
    ));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["rows"][0]["status"], "ok");
}

#[test]
fn sweep_skips_inadmissible_corners() {
    let out = hardy(&[
        "sweep",
        "--d",
        "3,4",
        "--k",
        "1,2,3",
        "--p",
        "2",
        "--a",
        "-1.5,0",
        "--b",
        "0",
        "--cone",
        "full,complement-sigma0",
        "--mesh",
        "64",
        "--tol",
        "1e-2",
    ]);
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    // 20 combinations with k < d; full drops k + a <= 0 (two) and d + a <= p + b (one)
    assert_eq!(rows.len(), 17);
    for r in rows {
        assert!(num(&r["k"]) < num(&r["d"]));
        if r["cone"] == "full" {
            let kpa = num(&r["k"]) + num(&r["a"]);
            assert!(kpa > 0.0 && num(&r["d"]) + num(&r["a"]) > 2.0);
        }
        assert_eq!(r["status"], "ok");
        assert!(num(&r["gap"]).abs() <= 1e-2 * num(&r["closed_form"]));
    }
    assert!(rows.iter().any(|r| num(&r["k"]) + num(&r["a"]) < 0.0));
    assert_eq!(out.status.code(), Some(0));

    let out = hardy(&[
        "sweep",
        "--d",
        "3,4",
        "--k",
        "1,2",
        "--p",
        "2",
        "--a",
        "-0.5,0",
        "--b",
        "0",
        "--cone",
        "full,complement-sigma0",
        "--mesh",
        "64",
        "--tol",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rows"].as_array().unwrap().len(), 16);
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = hardy(&with(
        "verify",
        &D3K1,
        &[
            "--cone",
            "complement-sigma0",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ],
    ));
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "command,d,k,p,a,b,cone,mesh,h,closed_form,closed_form_source,numeric_M,lambda,gap,\
         trace_kind,trace,extrapolated,observed_order,fitted_rate,checks_passed,status,message"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("verify,3,1,2,0,0,complement-sigma0,512,0.5,2.25,"));
    assert!(row.contains(",delta,0.2:"));
    assert!(lines.next().is_none());
    // only the report is left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn unwritable_output_is_exit_three() {
    let out = hardy(&with(
        "constant",
        &D3K1,
        &["--cone", "punctured", "--out", "/nonexistent/dir/out.json"],
    ));
    assert_eq!(out.status.code(), Some(3));
    assert!(!Path::new("/nonexistent/dir/out.json").exists());
}

#[test]
fn reports_do_not_depend_on_jobs() {
    let run = |jobs: &str| hardy(&["table", "--jobs", jobs, "--mesh", "128"]).stdout;
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
    assert_eq!(one, run("4"));
}
