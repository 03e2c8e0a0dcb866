use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use stonean::format::{self, Document};
use stonean::workspace::Workspace;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stonean(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_stonean"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let (code, out, err) = stonean(&all);
    assert!(err.is_empty(), "{err}");
    (code, serde_json::from_str(&out).expect("JSON report"))
}

#[test]
fn eval_m_r_exists() {
    let (code, out, _) = stonean(&["eval", "M_R", "E x. R(x)"]);
    assert_eq!(code, 0);
    assert_eq!(out, "a1∨a2 = 1\n");
}

#[test]
fn check_mixing_mnm_fails_with_witness() {
    let (code, out, _) = stonean(&["check-mixing", "MNM"]);
    assert_eq!(code, 1);
    assert!(out.contains("antichain {a1,a2}"), "{out}");
    let (code, v) = json(&["check-mixing", "MNM"]);
    assert_eq!(code, 1);
    assert_eq!(
        v["checks"][0]["witness"]["antichain"],
        serde_json::json!([["a1"], ["a2"]])
    );
}

#[test]
fn validate_names_the_reflexivity_failure() {
    let (code, out, _) = stonean(&["validate", &fixture("bad_reflexive.json")]);
    assert_eq!(code, 1);
    assert!(out.contains("reflexivity fails at σ"), "{out}");
}

#[test]
fn input_errors_exit_with_two() {
    let (code, _, err) = stonean(&["validate", &fixture("broken.json")]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");
    let (code, _, err) = stonean(&["eval", "M_R", "E x. S(x)"]);
    assert_eq!(code, 2);
    assert!(err.contains("column 6"), "{err}");
    let (code, _, err) = stonean(&["eval", "NOPE", "E x. R(x)"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown name `NOPE`"), "{err}");
    let (code, _, _) = stonean(&["check-mixing", "FS"]);
    assert_eq!(code, 2);
    let (code, _, _) = stonean(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn workspace_entries_by_name() {
    let ws = fixture("workspace.json");
    let (code, _, _) = stonean(&["validate", &format!("{ws}#three")]);
    assert_eq!(code, 0);
    let (code, v) = json(&["quotient", &format!("{ws}#three"), "u"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["classes"]["x1"], "x0");
    let (code, _, err) = stonean(&["validate", &ws]);
    assert_eq!(code, 2);
    assert!(err.contains("#name"), "{err}");
}

#[test]
fn mixify_output_round_trips() {
    let (code, v) = json(&["mixify", "MNM"]);
    assert_eq!(code, 0);
    let src = serde_json::to_string(&v["data"]["model"]).unwrap();
    let Document::Model(mj) = Document::parse(&src, "report").unwrap() else {
        panic!("not a model")
    };
    let m = format::model_from_json(&mj, &Workspace::builtin(), "report").unwrap();
    assert_eq!(m.len(), 4);
    assert!(m.has_mixing(None).unwrap().holds());
    assert_eq!(format::model_to_json(&m), mj);
}

#[test]
fn sheafify_output_round_trips() {
    let (code, v) = json(&["sheafify", "FS"]);
    assert_eq!(code, 0);
    let src = serde_json::to_string(&v["data"]["sheaf"]).unwrap();
    let Document::Presheaf(pj) = Document::parse(&src, "report").unwrap() else {
        panic!("not a presheaf")
    };
    let f = format::presheaf_from_json(&pj, &Workspace::builtin(), "report").unwrap();
    assert!(stonean_core::sheaf::is_stonean_sheaf(&f));
    assert_eq!(format::presheaf_to_json(&f), pj);
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["mixify", "MNM", "--json"][..],
        &["check-full", "M_R", "--depth", "1"],
        &["selftest", "--count", "5", "--seed", "9"],
    ] {
        assert_eq!(stonean(args), stonean(args));
    }
}

#[test]
fn passing_checks_exit_zero() {
    for args in [
        &["check-full", "M_R"][..],
        &["sheafify", "FS"],
        &["duality-check", "B8"],
        &["duality-check", "S"],
        &["duality-check", "PV"],
        &["duality-check", "B2_B4"],
        &["adjunction-check", "MNM"],
        &["adjunction-check", "M_R"],
        &["phi-bundle", "M_R", "R(x)"],
        &[
            "check-mixing",
            &format!("{}#pair", fixture("workspace.json")),
        ],
        &["selftest", "--count", "5"],
    ] {
        let (code, out, err) = stonean(args);
        assert_eq!(code, 0, "{args:?}\n{out}{err}");
    }
}

#[test]
fn phi_bundle_of_m_r() {
    let (code, v) = json(&["phi-bundle", "M_R", "R(x)"]);
    assert_eq!(code, 0);
    assert_eq!(
        v["data"]["global_sections"],
        serde_json::json!(["⟨σ⟩@a1 ⟨τ⟩@a2"])
    );
    assert_eq!(v["data"]["clauses"]["los"], true);
}

#[test]
fn max_antichain_limits_the_search() {
    let (code, _, _) = stonean(&["check-mixing", "MNM", "--max-antichain", "1"]);
    assert_eq!(code, 0);
}
