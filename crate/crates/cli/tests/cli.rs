use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use cfid_core::expr::{evaluate, from_json};
use cfid_core::oracle::{scm_from_json, LazyFamily};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cfid(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_cfid")).args(args).output().expect("binary runs");
    (String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap(), out.status.code().unwrap())
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

const CONDITIONAL: &str = "P(Y[X=x]=y | X=x', Z[D=d]=z, D=d)";

#[test]
fn identify_conditional_query() {
    let (out, _, code) = cfid(&["identify", &path("mediated.graph"), CONDITIONAL]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict: identified"), "{out}");
    assert!(out.contains("expression: sum_{w1} P[w1,z](x', y) * P[x](w1) / (sum_{w2, w3} P[w2,z](x', w3) * P[x](w2))"), "{out}");
}

#[test]
fn identify_formats() {
    let (latex, _, _) = cfid(&["identify", &path("mediated.graph"), CONDITIONAL, "--format", "latex"]);
    assert!(latex.contains(r"\frac{\sum_{w_{1}} P_{w_{1},z}(x', y)P_{x}(w_{1})}"), "{latex}");
    let (json, _, code) = cfid(&["identify", &path("mediated.graph"), CONDITIONAL, "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["verdict"], "identified");
    assert_eq!(v["expression"]["json"]["expr"]["kind"], "ratio");
    assert!(v.get("witness").is_none());
    let (bad, err, code) = cfid(&["identify", &path("mediated.graph"), CONDITIONAL, "--format", "svg"]);
    assert_eq!(code, 1, "{bad}{err}");
}

#[test]
fn non_identifiable_exits_2_with_witness() {
    let (out, _, code) = cfid(&["identify", &path("w.graph"), "P(Y[X=x0]=y0, Y[X=x1]=y1)"]);
    assert_eq!(code, 2);
    assert!(out.contains("verdict: fail"));
    assert!(out.contains("witness: c-component {Y[X=x0], Y[X=x1]} has parent X set to x0 and to x1"), "{out}");
    let (json, _, _) = cfid(&["identify", &path("w.graph"), "P(Y[X=x0]=y0, Y[X=x1]=y1)", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["verdict"], "fail");
    assert_eq!(v["witness"]["conflict_var"], "X");
    assert!(v.get("expression").is_none());
}

#[test]
fn undefined_exits_3() {
    let (out, _, code) = cfid(&["identify", &path("w.graph"), "P(Y[X=x0]=y0 | X=x0, X=x1)"]);
    assert_eq!(code, 3);
    assert!(out.contains("verdict: undefined"));
}

#[test]
fn zero_verdicts_exit_0() {
    let (out, _, code) = cfid(&["identify", &path("w.graph"), "P(X[X=x0]=x1)"]);
    assert_eq!((code, out.contains("verdict: zero")), (0, true), "{out}");
    let (out, _, code) = cfid(&["identify", &path("w.graph"), "P(Y[X=x0]=y0, Y[X=x0]=y1)"]);
    assert_eq!((code, out.contains("verdict: inconsistent-zero")), (0, true), "{out}");
}

#[test]
fn input_errors_exit_1() {
    let (_, err, code) = cfid(&["identify", &path("w.graph"), "P(Y[X=x0=y0)"]);
    assert_eq!(code, 1);
    assert!(err.contains("column"), "{err}");
    let (_, err, code) = cfid(&["identify", "/nonexistent/graph", "P(Y=y)"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/graph"));
    let (_, _, code) = cfid(&["identify", &path("w.graph"), "P(Q=q)"]);
    assert_eq!(code, 1);
    let (_, _, code) = cfid(&["frobnicate"]);
    assert_eq!(code, 1);

    let dir = tempfile::tempdir().unwrap();
    let cyclic = dir.path().join("cyclic.graph");
    std::fs::write(&cyclic, "X -> Y\nY -> X\n").unwrap();
    let (_, err, code) = cfid(&["identify", cyclic.to_str().unwrap(), "P(Y=y)"]);
    assert_eq!(code, 1);
    assert!(err.contains('X') && err.contains('Y') && err.contains("cycle"), "{err}");
    let dup = dir.path().join("dup.graph");
    std::fs::write(&dup, "X -> Y\nX -> Y\n").unwrap();
    let (_, err, code) = cfid(&["identify", dup.to_str().unwrap(), "P(Y=y)"]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn explain_shows_worlds_merges_and_trace() {
    let (out, _, code) = cfid(&["explain", &path("mediated.graph"), CONDITIONAL]);
    assert_eq!(code, 0);
    for needle in [
        "parallel-worlds graph:",
        "merge Z[D=d] into Z: D=d in both",
        "counterfactual graph:",
        "  node Z = z [observed]",
        "rewritten events: D=d, X=x', Y[X=x]=y, Z=z",
        "IDC* step 4:",
        "ID* step 9:",
    ] {
        assert!(out.contains(needle), "missing `{needle}` in\n{out}");
    }
    let (out, _, _) = cfid(&["identify", &path("mediated.graph"), CONDITIONAL, "--explain"]);
    assert!(out.contains("trace:\nIDC* step 1:"), "{out}");
}

#[test]
fn oracle_by_hand_and_on_parity_models() {
    let (out, _, code) = cfid(&["oracle", &path("chain.json"), "P(Y=y1)"]);
    assert_eq!(code, 0);
    // 3/4 * 1/3 + 1/4 * 2/3
    assert!(out.contains("exact: 5/12"), "{out}");
    let (out, _, _) = cfid(&["oracle", &path("chain.json"), "P(Y[X=x0]=y0 | X=x1)"]);
    assert!(out.contains("world X=x0: Y[X=x0]=y0") && out.contains("world (actual): X=x1"), "{out}");
    assert!(out.contains("exact: 2/3"), "{out}");
    let (_, _, code) = cfid(&["oracle", &path("chain.json"), "P(Y=y0 | X=x0, X=x1)"]);
    assert_eq!(code, 3);

    // odd total parity is impossible in the second model
    for q in ["P(Y[X=x0]=1, Z[X=x1]=1, W1=1)", "P(Y[X=x0]=1, Z[X=x1]=0, W1=0)", "P(Y[X=x0]=0, Z[X=x1]=0, W1=1)"] {
        let (out, _, _) = cfid(&["oracle", &path("parity-k1/model2.json"), q]);
        assert!(out.contains("exact: 0\n"), "{q}: {out}");
        let (out, _, _) = cfid(&["oracle", &path("parity-k1/model1.json"), q]);
        assert!(out.contains("exact: 1/4\n"), "{q}: {out}");
    }
}

#[test]
fn oracle_matches_evaluated_expression() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _, code) = cfid(&["model", &path("mediated.graph"), "--seed", "11"]);
    assert_eq!(code, 0);
    let model_path = dir.path().join("model.json");
    std::fs::write(&model_path, &model).unwrap();
    let m = scm_from_json(&model).unwrap();
    let query = "P(Y[X=x0]=y1 | X=x1, Z[D=d0]=z0, D=d0)";
    let (json, _, _) = cfid(&["identify", &path("mediated.graph"), query, "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let e = from_json(&v["expression"]["json"].to_string()).unwrap();
    let got = evaluate(&e, &LazyFamily::new(&m), &BTreeMap::new()).unwrap();
    let (oracle, _, _) = cfid(&["oracle", model_path.to_str().unwrap(), query, "--json"]);
    let truth = serde_json::from_str::<serde_json::Value>(&oracle).unwrap()["probability"].as_f64().unwrap();
    assert!((got - truth).abs() <= 1e-9, "{got} vs {truth}");
}

#[test]
fn model_output_is_reproducible() {
    let a = cfid(&["model", &path("napkin.graph"), "--seed", "5"]);
    let b = cfid(&["model", &path("napkin.graph"), "--seed", "5"]);
    let c = cfid(&["model", &path("napkin.graph"), "--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn verify_single_event_queries() {
    let args = ["verify", &path("mediated.graph"), "--models", "25", "--all-up-to", "1", "--seed", "3"];
    let (out, _, code) = cfid(&args);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("models: 25 run, 0 skipped"), "{out}");
    assert!(out.contains("mismatches: 0"), "{out}");
    assert_eq!(cfid(&args).0, out);
}

#[test]
fn verify_query_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("queries.txt");
    std::fs::write(&file, "# effect and its negation\nP(Y[X=x0]=y0)\nY[X=x0]=y1\n\nP(Y[X=x0]=y0, Y[X=x1]=y1)\n").unwrap();
    let (out, _, code) = cfid(&["verify", &path("w.graph"), "--models", "3", "--queries", file.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["queries"], 3);
    assert_eq!(v["verdicts"]["identified"], 2);
    assert_eq!(v["verdicts"]["fail"], 1);
    assert_eq!(v["comparisons"], 6);
}

#[test]
fn parity_command_reports_agreement_and_failure() {
    let (out, _, code) = cfid(&["parity", "--k", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("interventional families: identical"), "{out}");
    assert!(out.contains("P(query) in model 1: 1/8"), "{out}");
    assert!(out.contains("P(query) in model 2: 0"), "{out}");
    assert!(out.contains("identification: fail"), "{out}");
}
