//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use phfl::Output;
use phfl_core::rational::{parse_rational, to_f64};
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn run(args: &[&str]) -> Output {
    let mut all = vec!["phfl"];
    all.extend_from_slice(args);
    phfl::run(all)
}

/// Runs with `--json` and parses the verdict.
pub fn run_json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = run(&all);
    let v = serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}{}", out.stdout, out.stderr));
    (out.code, v)
}

/// A value printed as a rational or a float.
pub fn number(v: &Value) -> f64 {
    let s = v.as_str().unwrap_or_else(|| panic!("not a string: {v}"));
    match parse_rational(s) {
        Ok(r) => to_f64(&r),
        Err(_) => s.parse().unwrap_or_else(|_| panic!("not a number: {s}")),
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
