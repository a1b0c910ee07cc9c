mod common;

use std::process::Command;

use common::{fixture, number, path_str, run, run_json};
use phfl::solver::{solver_available, SolverConfig};

fn f(name: &str) -> String {
    path_str(&fixture(name)).to_string()
}

#[test]
fn exit_codes() {
    let chain = f("example_chain.json");
    assert_eq!(run(&["check", &chain, &f("order1.phfl")]).code, 0);
    let out = run(&["check", &chain, &f("ill_applied.phfl")]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("failure: "), "{}", out.stderr);
    let out = run(&["check", &chain, &f("syntax_error.phfl")]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.starts_with("error: "), "{}", out.stderr);
    assert_eq!(run(&["check", &chain, "/nonexistent/file.phfl"]).code, 2);
    assert_eq!(run(&["check", &f("order1.phfl"), &f("order1.phfl")]).code, 2);
}

#[test]
fn check_summary() {
    let out = run(&["check", &f("example_chain.json"), &f("order1.phfl")]);
    assert_eq!(out.stdout.trim(), "type: *, order: 1");
}

#[test]
fn rtype_on_the_two_letter_example() {
    let (code, v) = run_json(&["rtype", &f("ab_chain.json"), &f("ab.phfl")]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["type"], "{s2,s3,s4 ; }");
}

#[test]
fn rtype_mup_and_conj_violation() {
    let chain = f("example_chain.json");
    let (code, v) = run_json(&["rtype", &chain, &f("mup.phfl"), "--mup"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["type"], "{ ; }");
    let (code, v) = run_json(&["rtype", &chain, &f("conj_violation.phfl")]);
    assert_eq!(code, 1);
    assert!(v["diagnostics"].to_string().contains("T-Conj"), "{v}");
}

#[test]
fn eval_numeral() {
    let (code, v) = run_json(&["eval", &f("fig4_chain.json"), &f("numeral2.phfl")]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["values"]["s0"], "1/4");
    assert_eq!(v["result"]["values"]["s0'"], "3/4");
}

#[test]
fn solve_bottom_fixpoint() {
    let (code, v) = run_json(&["solve", &f("example_chain.json"), &f("mux.phfl")]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["rows"], "(0 0 0 | 0 0 0)");
    assert_eq!(v["mode"], "exact");
}

#[test]
fn reduce_automaton() {
    let dir = tempfile::tempdir().unwrap();
    let (chain, formula) = (dir.path().join("c.json"), dir.path().join("f.phfl"));
    let (code, v) = run_json(&["reduce", "pa", &f("one_state.pa.json"), "--out-chain", path_str(&chain), "--out-formula", path_str(&formula)]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["fragment"], "general");
    let (code, v) = run_json(&["eval", path_str(&chain), path_str(&formula), "--mode", "bounded", "--depth", "1"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(number(&v["result"]["at_init"]), 1.0);
}

#[test]
fn reduce_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let (chain, formula) = (dir.path().join("c.json"), dir.path().join("f.phfl"));
    let (code, v) = run_json(&["reduce", "mu", &f("le.mu"), "--out-chain", path_str(&chain), "--out-formula", path_str(&formula)]);
    assert_eq!(code, 0, "{v}");
    let (code, v) = run_json(&["eval", path_str(&chain), path_str(&formula)]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["values"]["s0"], "1");
}

#[test]
fn reduce_scheme_shape() {
    let (code, v) = run_json(&["reduce", "phors", &f("walk_1_3.phors.json")]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["fragment"], "decidable-mu-only");
    assert!(v["result"]["chain"]["states"].as_array().unwrap().len() >= 3);
    assert!(v["result"]["formula"].as_str().unwrap().contains("mu"));
}

#[test]
fn pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (chain, formula) = (dir.path().join("c.json"), dir.path().join("f.phfl"));
    let (c, fl) = (path_str(&chain), path_str(&formula));
    assert_eq!(run(&["reduce", "phors", &f("walk_2_5.phors.json"), "--out-chain", c, "--out-formula", fl]).code, 0);
    assert_eq!(run(&["rtype", c, fl]).code, 0);
    let (code, v) = run_json(&["solve", c, fl]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["at_init"], "2/3");
    let out = run(&["emit-smt", c, fl]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("(check-sat)"));
}

#[test]
fn deterministic_output() {
    let args = ["--json", "solve", &f("example_chain.json"), &f("example_fix.phfl")];
    let a = run(&args);
    let b = run(&args);
    let (va, vb): (serde_json::Value, serde_json::Value) = (serde_json::from_str(&a.stdout).unwrap(), serde_json::from_str(&b.stdout).unwrap());
    assert_eq!(va["result"]["rows"], vb["result"]["rows"]);
    assert_eq!(va["result"]["fixpoints"], vb["result"]["fixpoints"]);
    let emit = ["emit-smt", &f("example_chain.json"), &f("mup.phfl")];
    assert_eq!(run(&emit).stdout, run(&emit).stdout);
}

#[test]
fn solver_round_trip() {
    let cfg = SolverConfig::resolve(None, None).unwrap();
    if !solver_available(&cfg) {
        eprintln!("no SMT solver found, skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let formula = dir.path().join("q.phfl");
    std::fs::write(&formula, "[mu X. p2 \\/ avg X] >= 1/2\n").unwrap();
    for fragment in ["mu-only", "full"] {
        let (code, v) = run_json(&["emit-smt", &f("example_chain.json"), path_str(&formula), "--fragment", fragment, "--run"]);
        assert_eq!(code, 0, "{v}");
        assert!(v["result"]["verdict"].is_string(), "{v}");
    }
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_phfl")).args(["check", &f("example_chain.json"), &f("order1.phfl")]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "type: *, order: 1");
    let out = Command::new(env!("CARGO_BIN_EXE_phfl")).args(["check", &f("example_chain.json"), &f("syntax_error.phfl")]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
