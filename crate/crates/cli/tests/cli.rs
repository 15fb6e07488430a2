use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dlab_core::purenet::PureNet;
use dlab_core::qcore::{bell_state, choi_of, write_qmx, KrausChannel, MatrixJson};
use serde_json::Value;

fn dlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlab")).args(args).output().expect("spawn dlab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dlab-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn net_bounds_lead_with_the_lower_bound() {
    let out = dlab(&["net", "bounds", "--d", "2", "--eps", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let compact: String = text.split_whitespace().collect();
    assert!(compact.starts_with(r#"{"log2_lower":4.0,"#), "{text}");
}

#[test]
fn net_build_is_byte_reproducible() {
    let args = ["net", "build", "--d", "2", "--eps", "0.5", "--seed", "7"];
    let a = dlab(&args);
    let b = dlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!(v["size"].as_u64().unwrap() >= 2);
    assert_eq!(v["seed"], 7);
}

#[test]
fn certifying_a_stored_octahedron() {
    let path = scratch("octahedron.json");
    std::fs::write(&path, serde_json::to_string(&PureNet::octahedron().to_json()).unwrap()).unwrap();
    let out = dlab(&["net", "certify", "--net-file", s(&path), "--samples", "100000", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out)["certificate"]["max_observed"].as_f64().unwrap();
    // the exact covering radius is 0.4597; sampling approaches it from below
    assert!((0.45..=0.4597).contains(&r), "{r}");
}

#[test]
fn definetti_spec_from_flags() {
    let out = dlab(&["disent", "build", "--kind", "definetti", "--d", "2", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["spec"]["input_dim"], 18);
    assert_eq!(v["spec"]["eps_claim"], 0.25);
    assert_eq!(v["spec"]["delta_claim"], 0.0);
}

#[test]
fn definetti_second_condition_from_a_spec_file() {
    let path = scratch("definetti.json");
    let out = dlab(&["disent", "build", "--kind", "definetti", "--d", "2", "--n", "8", "--output", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let out = dlab(&["disent", "verify", "--spec-file", s(&path), "--checks", "c2", "--trials", "50", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"][0]["condition"], "c2");
    assert!(v["reports"][0]["worst_observed"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn identity_control_fails_verification() {
    let out = dlab(&["disent", "verify", "--kind", "identity", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    let c1 = &v["reports"][0];
    assert_eq!(c1["condition"], "c1");
    assert!((c1["worst_observed"].as_f64().unwrap() - 0.5).abs() < 5e-3);
}

#[test]
fn selecting_a_subset_of_checks_changes_no_report() {
    let one = json(&dlab(&["disent", "verify", "--kind", "swap", "--checks", "c2", "--trials", "5", "--seed", "9"]));
    let both =
        json(&dlab(&["disent", "verify", "--kind", "swap", "--checks", "c1,c2", "--trials", "5", "--seed", "9"]));
    assert_eq!(one["reports"][0], both["reports"][1]);
}

#[test]
fn verify_reports_render_as_csv() {
    let out = dlab(&["disent", "verify", "--kind", "identity", "--checks", "c1,eb", "--trials", "4", "--seed", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("condition,method,worst_observed"));
    assert!(lines[1].starts_with("c1,"));
    assert!(lines[2].starts_with("eb_reduction,"));
}

#[test]
fn cap_violations_exit_with_three() {
    let out = dlab(&["disent", "build", "--kind", "definetti", "--d", "2", "--n", "40"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    // csv outside sweep tables
    assert_eq!(dlab(&["sym", "dim", "--d", "3", "--n", "6", "--format", "csv"]).status.code(), Some(2));
    // seed is mandatory for stochastic commands
    assert_eq!(dlab(&["net", "build", "--d", "2", "--eps", "0.5"]).status.code(), Some(2));
    assert_eq!(dlab(&["net", "bounds", "--d", "2", "--eps", "0.25", "--bogus"]).status.code(), Some(2));
    assert_eq!(dlab(&["disent", "build", "--kind", "definetti", "--d", "2"]).status.code(), Some(2));
    assert_eq!(dlab(&["disent", "build", "--kind", "net", "--octahedron"]).status.code(), Some(2));
}

#[test]
fn config_file_overrides_and_rejects_unknown_keys() {
    let good = scratch("good-config.json");
    std::fs::write(&good, r#"{"tolerance": 0.6}"#).unwrap();
    // with a tolerance above the observed 0.5 the identity control passes
    let out = dlab(&["disent", "verify", "--kind", "identity", "--checks", "c1", "--trials", "3", "--seed", "1", "--config", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["reports"][0]["tolerance"], 0.6);
    let bad = scratch("bad-config.json");
    std::fs::write(&bad, r#"{"restartz": 1}"#).unwrap();
    assert_eq!(dlab(&["sym", "dim", "--d", "2", "--n", "2", "--config", s(&bad)]).status.code(), Some(2));
}

#[test]
fn ppt_of_a_stored_bell_state() {
    let path = scratch("bell.qmx");
    let mut buf = Vec::new();
    write_qmx(&mut buf, bell_state().density().matrix(), false).unwrap();
    std::fs::write(&path, buf).unwrap();
    let out = dlab(&["sep", "ppt", "--state", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["state"]["dims"], serde_json::json!([2, 2]));
    assert!((v["min_eigenvalue"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(v["ppt"], false);
}

#[test]
fn separable_fidelity_of_a_stored_bell_state() {
    let path = scratch("bell.json");
    std::fs::write(&path, serde_json::to_string(&MatrixJson::from(&bell_state().density())).unwrap()).unwrap();
    let out = dlab(&["sep", "fidelity", "--state", s(&path), "--dims", "2,2", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["fidelity"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let out = dlab(&["sep", "lemma2", "--state", s(&path), "--seed", "4"]);
    assert!((json(&out)["value"].as_f64().unwrap() - 0.5).abs() < 1e-2);
    let out = dlab(&["sep", "distance", "--state", s(&path), "--seed", "4"]);
    // the closest separable state to a Bell state is at trace distance 1/2
    let dist = json(&out)["distance"].as_f64().unwrap();
    assert!((0.5 - 1e-9..0.55).contains(&dist), "{dist}");
}

#[test]
fn identity_choi_is_not_entanglement_breaking() {
    let path = scratch("identity-choi.json");
    let j = choi_of(&KrausChannel::identity(vec![2]));
    std::fs::write(&path, serde_json::to_string(&MatrixJson::from(&j)).unwrap()).unwrap();
    let out = dlab(&["sep", "eb", "--choi", s(&path), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "non_member");
    assert!((v["ppt_min_eig"].as_f64().unwrap() + 0.5).abs() < 1e-10);
}

#[test]
fn symmetric_dimension() {
    let v = json(&dlab(&["sym", "dim", "--d", "3", "--n", "6"]));
    assert_eq!(v["dim"], 28);
}

#[test]
fn definetti_fit_respects_the_bound() {
    let out = dlab(&["sym", "definetti", "--d", "2", "--n", "6", "--k", "2", "--seed", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["bound"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!(v["fit"]["distance"].as_f64().unwrap() <= 2.0 / 3.0);
}

#[test]
fn lower_bound_and_construction_bounds() {
    let v = json(&dlab(&["disent", "bounds", "--d", "21", "--eps", "0", "--delta", "0.04"]));
    assert!((v["Delta"].as_f64().unwrap() - 0.36).abs() < 1e-12);
    let hand = 10.0 * (1.0f64 / 0.36).log2() - 2.0 * 21f64.log2();
    assert!((v["log2_D_lower"].as_f64().unwrap() - hand).abs() < 1e-12);
    assert_eq!(dlab(&["disent", "bounds", "--d", "2", "--eps", "0.5", "--delta", "0.25"]).status.code(), Some(2));
    let v = json(&dlab(&["disent", "bounds", "--kind", "definetti", "--d", "2", "--n", "8"]));
    assert_eq!(v["asserted"], true);
    assert!((v["log2_D_actual"].as_f64().unwrap() - 18f64.log2()).abs() < 1e-12);
}
