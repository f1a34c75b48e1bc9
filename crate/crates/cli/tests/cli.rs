use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sphbound_core::sdpcert::builtin_certificate;

const SOLUTION: &str = "../core/tests/data/petersen_d2.sol";
const SDPA_SHA256: &str = include_str!("../../core/tests/data/petersen_d2.dat-s.sha256");

fn sphbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphbound"))
        .args(args)
        .env("SPHBOUND_WORKERS", "1")
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn verdict<'a>(r: &'a Value, check: &str) -> &'a Value {
    r["verdicts"].as_array().unwrap().iter().find(|v| v["check"] == check).unwrap_or_else(|| panic!("no {check} verdict"))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn builtin_json() -> Value {
    serde_json::from_str(&builtin_certificate().to_json()).unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn tight_certificate_passes() {
    let out = sphbound(&["verify-petersen"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["overall"], "PASS");
    assert_eq!(r["values"]["bound"], serde_json::json!({"kind": "exact", "value": "10"}));
    assert_eq!(r["values"]["condition_c_mode"], "certified");
    assert_eq!(r["values"]["automorphisms"], 120);
    assert_eq!(r["values"]["girth"], 5);
}

#[test]
fn printed_certificate_fails_shifted_positivity() {
    let out = sphbound(&["verify-petersen", "--certificate", "builtin", "--mode", "sampled", "--sample-step", "1/40"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let v = verdict(&r, "psd_shifted");
    assert_eq!(v["status"], "FAIL");
    assert_eq!(v["witness"]["kind"], "vector");
    assert_eq!(verdict(&r, "psd_blocks")["status"], "PASS");
    assert_eq!(verdict(&r, "expansion")["status"], "PASS");
    assert_eq!(r["values"]["max_admissible_f0"], "51551/387");
}

#[test]
fn sampled_mode_is_reported() {
    let out = sphbound(&["verify-petersen", "--mode", "sampled", "--sample-step", "1/40"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["values"]["condition_c_mode"], "sampled");
    assert!(verdict(&r, "condition_c")["detail"].as_str().unwrap().starts_with("sampled"));
}

#[test]
fn corrupted_block_entry_fails_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let mut cert = builtin_json();
    assert!(cert.get("expansion").is_some());
    assert_eq!(cert["blocks"][1][1][1], "3588");
    cert["blocks"][1][1][1] = "3587".into();
    let path = write_json(dir.path(), "mutated.json", &cert);
    let out = sphbound(&["verify-cert", "--file", &path, "--mode", "sampled", "--sample-step", "1/40"]);
    assert_eq!(out.status.code(), Some(1));
    let v = verdict(&report(&out), "expansion").clone();
    assert_eq!(v["status"], "FAIL");
    assert_eq!(v["witness"]["kind"], "coefficient");
}

#[test]
fn lowered_diagonal_bound_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut cert = builtin_json();
    cert["B"] = "249".into();
    let path = write_json(dir.path(), "low_b.json", &cert);
    let out = sphbound(&["verify-cert", "--file", &path, "--mode", "sampled", "--sample-step", "1/40"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let v = verdict(&r, "condition_d");
    assert_eq!(v["status"], "FAIL");
    assert_eq!(v["witness"]["kind"], "point");
}

#[test]
fn lp_bound_and_obstruction() {
    let out = sphbound(&["lp-bound", "--n", "4", "--t", "1/6", "--d", "3", "--obstruction", "--max-k", "40"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["values"]["bound"], "85/8");
    assert_eq!(r["values"]["coefficients"], serde_json::json!(["1", "227/68", "555/136", "75/34"]));
    assert_eq!(r["values"]["obstruction"]["zero_set"], serde_json::json!([1, 2]));
    assert_eq!(r["values"]["obstruction"]["tail_certified"], true);
}

#[test]
fn degree_one_lp_is_infeasible() {
    let out = sphbound(&["lp-bound", "--n", "4", "--t", "1/6", "--d", "1", "--grid", "201"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(verdict(&report(&out), "lp")["status"], "FAIL");
}

#[test]
fn usage_and_input_errors() {
    let out = sphbound(&["verify-petersen", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--no-such-flag"));

    let out = sphbound(&["verify-cert", "--file", "/nonexistent/cert.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read /nonexistent/cert.json"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"blocks\": 3}").unwrap();
    let out = sphbound(&["verify-cert", "--file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("invalid certificate"));

    let out = sphbound(&["lp-bound", "--n", "4", "--t", "one", "--d", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("is not a rational"));
}

#[test]
fn config_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"mode": "sampled", "sample-step": "1/40"}"#).unwrap();
    let out = sphbound(&["--config", cfg.to_str().unwrap(), "verify-petersen"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(report(&out)["values"]["condition_c_mode"], "sampled");

    std::fs::write(&cfg, r#"{"colour": "blue"}"#).unwrap();
    let out = sphbound(&["--config", cfg.to_str().unwrap(), "verify-petersen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("invalid config"));
}

#[test]
fn report_schema_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["--report", path.to_str().unwrap(), "lp-bound", "--n", "4", "--t", "1/6", "--d", "3"];
    let mut digests = Vec::new();
    for _ in 0..2 {
        let out = sphbound(&args);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["artifacts", "command", "digest", "inputs", "overall", "schema", "timings_ms", "values", "verdicts"]);
        assert_eq!(r["schema"], 1);
        assert_eq!(r["command"], "lp-bound");
        assert!(r["timings_ms"]["total"].is_u64());
        digests.push(r["digest"].as_str().unwrap().to_string());
    }
    assert_eq!(digests[0].len(), 64);
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn generate_and_round_degree_two_instance() {
    let dir = tempfile::tempdir().unwrap();
    let sdpa = dir.path().join("petersen_d2.dat-s");
    let out = sphbound(&["gen-sdpa", "--n", "4", "--t", "1/6", "--d", "2", "--out", sdpa.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["artifacts"][sdpa.to_str().unwrap()], SDPA_SHA256.trim());
    assert_eq!(r["values"]["variables"], 18);

    let cert = dir.path().join("rounded.json");
    let out = sphbound(&[
        "round-cert",
        "--sdpa",
        sdpa.to_str().unwrap(),
        "--solution",
        SOLUTION,
        "--n",
        "4",
        "--t",
        "1/6",
        "--petersen",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["values"]["bound"]["value"], "10");
    assert_eq!(r["values"]["certificate"]["B"], "20/23");

    let out = sphbound(&["verify-cert", "--file", cert.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn solution_of_the_wrong_shape_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sdpa = dir.path().join("d3.dat-s");
    let out = sphbound(&[
        "gen-sdpa",
        "--n",
        "4",
        "--t",
        "1/6",
        "--d",
        "2",
        "--sizes",
        "3,2,1",
        "--grid-cube",
        "7",
        "--grid-segment",
        "9",
        "--out",
        sdpa.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = sphbound(&["round-cert", "--sdpa", sdpa.to_str().unwrap(), "--solution", SOLUTION, "--n", "4", "--t", "1/6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("invalid SDPA input"), "{}", stderr(&out));
}
