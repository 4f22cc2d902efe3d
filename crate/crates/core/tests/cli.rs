mod common;

use std::process::Command;

use common::{manifest_path, validate_against_schema};
use lcstrs::cli::{main_with, CheckDocument, RunDocument};
use lcstrs::prover::ProofDocument;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lcstrs").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(rel: &str) -> String {
    manifest_path(rel).to_string_lossy().into_owned()
}

fn assert_schema(json: &str) {
    let v: serde_json::Value = serde_json::from_str(json).expect("valid JSON");
    if let Some(res) = validate_against_schema(&v) {
        res.unwrap_or_else(|e| panic!("schema violation: {e}\n{json}"));
    }
}

#[test]
fn check_lists_the_four_rules() {
    let (code, out, err) = run_cli(&["check", &path("examples/fact.lcstrs")]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("rule ")).count(), 4);
    assert!(out.contains("rule 4: fact n k -> fact (n - 1) (comp k ([*] n)) [n > 0]"));
}

#[test]
fn check_empty_file() {
    let (code, out, _) = run_cli(&["check", &path("examples/empty.lcstrs")]);
    assert_eq!(code, 0);
    assert!(out.contains("0 rules"));
}

#[test]
fn check_reports_theory_lhs_with_position() {
    let bad = path("tests/data/bad.lcstrs");
    let (code, out, err) = run_cli(&["check", &bad]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with(&format!("error: {bad}:2:1:")), "{err}");
    assert!(err.contains("theory term"), "{err}");
}

#[test]
fn check_missing_file_and_syntax_error() {
    let (code, _, err) = run_cli(&["check", "/nonexistent/x.lcstrs"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: /nonexistent/x.lcstrs:"));

    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("syn.lcstrs");
    std::fs::write(&f, "fun f : Int -> Int\nrule f x -> [true]\n").unwrap();
    let (code, _, err) = run_cli(&["check", f.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("syn.lcstrs:2:"), "{err}");
}

#[test]
fn check_json() {
    let (code, out, _) = run_cli(&["check", &path("examples/fact.lcstrs"), "--format", "json"]);
    assert_eq!(code, 0);
    let doc: CheckDocument = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.rules.len(), 4);
    assert_eq!(doc.signature[3].ty, "Int -> (Int -> Int) -> Int");
    assert_schema(&out);
}

#[test]
fn run_factorial_trace() {
    let (code, out, _) = run_cli(&["run", &path("examples/fact.lcstrs"), "--term", "fact 1 exit"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "start\tfact 1 exit");
    assert_eq!(lines[1], "root\trule#4\tfact (1 - 1) (comp exit ([*] 1))");
    assert_eq!(lines[2], "0.1\tcalc\tfact 0 (comp exit ([*] 1))");
    assert_eq!(lines[3], "root\trule#3\tcomp exit ([*] 1) 1");
    assert_eq!(*lines.last().unwrap(), "normal form after 5 steps: exit 1");
}

#[test]
fn run_value_is_already_normal() {
    let (code, out, _) = run_cli(&[
        "run",
        &path("examples/fact.lcstrs"),
        "--term",
        "exit 1",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let doc: RunDocument = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.trace.step_count, 0);
    assert_eq!(doc.trace.result, "exit 1");
    assert_schema(&out);
}

#[test]
fn run_loop_exhausts_fuel() {
    let (code, out, _) = run_cli(&["run", &path("examples/loop.lcstrs"), "--term", "f 0", "--fuel", "10"]);
    assert_eq!(code, 2);
    assert!(out.contains("fuel exhausted after 10 steps"));
    let (code, out, _) = run_cli(&[
        "run",
        &path("examples/loop.lcstrs"),
        "--term",
        "f 0",
        "--fuel",
        "10",
        "--trace-cap",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(code, 2);
    let doc: RunDocument = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.status, "fuel-exhausted");
    assert_eq!((doc.trace.steps.len(), doc.trace.step_count), (2, 10));
    assert_schema(&out);
}

#[test]
fn run_uses_inputs_for_fresh_variables() {
    let fact = path("examples/fact.lcstrs");
    let (code, out, _) = run_cli(&["run", &fact, "--term", "init", "--input", "3"]);
    assert_eq!(code, 0);
    assert!(out.ends_with("normal form after 14 steps: exit 6\n"), "{out}");
    // without inputs the fresh variable defaults to 0
    let (_, out, _) = run_cli(&["run", &fact, "--term", "init", "--strategy", "outermost"]);
    assert!(out.ends_with(": exit 1\n"), "{out}");
    let (code, _, err) = run_cli(&["run", &fact, "--term", "init", "--input", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("--input"));
}

#[test]
fn run_rejects_ill_typed_terms() {
    let (code, _, err) = run_cli(&["run", &path("examples/fact.lcstrs"), "--term", "fact exit 1"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: --term:1:"), "{err}");
}

#[test]
fn prove_factorial() {
    let (code, out, _) = run_cli(&["prove", &path("examples/fact.lcstrs")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("terminating"));
    for pair in ["init > fact", "fact > comp", "init > exit"] {
        assert!(out.contains(pair), "{pair} missing from\n{out}");
    }
    let (code, out, _) = run_cli(&["prove", &path("examples/fact.lcstrs"), "--format", "json"]);
    assert_eq!(code, 0);
    let doc: ProofDocument = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.result, "terminating");
    assert!(doc.rules.iter().all(|r| r.oriented && r.derivation.is_some()));
    assert_eq!(doc.status["fact"], "lex");
    assert_schema(&out);
}

#[test]
fn prove_empty_and_loop() {
    let (code, _, _) = run_cli(&["prove", &path("examples/empty.lcstrs")]);
    assert_eq!(code, 0);
    let (code, out, _) = run_cli(&["prove", &path("examples/loop.lcstrs")]);
    assert_eq!(code, 2);
    assert!(out.contains("no termination witness found"));
    assert!(!out.to_lowercase().contains("nonterminat"));
    let (code, out, _) = run_cli(&["prove", &path("examples/loop.lcstrs"), "--format", "json"]);
    assert_eq!(code, 2);
    let doc: ProofDocument = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.result, "unknown");
    assert!(!doc.rules[0].oriented);
    assert_schema(&out);
}

#[test]
fn prove_flags() {
    let fact = path("examples/fact.lcstrs");
    let (code, out, _) = run_cli(&[
        "prove",
        &fact,
        "--bound",
        "-3",
        "--bound",
        "0",
        "--jobs",
        "2",
        "--timeout",
        "5",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("bound: -3"));
    let (code, _, err) = run_cli(&["prove", &fact, "--smt-cmd", "/nonexistent/solver"]);
    // the factorial entailments never reach the external solver
    assert_eq!(code, 0, "{err}");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["frobnicate"],
        vec!["check"],
        vec!["run", "x.lcstrs"],
        vec!["check", "x.lcstrs", "--unknown"],
        vec!["run", "x.lcstrs", "--term", "t", "--strategy", "sideways"],
        vec!["prove", "x.lcstrs", "--format", "yaml"],
    ] {
        let (code, out, err) = run_cli(&args);
        assert_eq!(code, 1, "{args:?}");
        assert!(out.is_empty() && !err.is_empty(), "{args:?}");
    }
    let (code, out, _) = run_cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("prove"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_lcstrs");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let o = status(&["prove", &path("examples/fact.lcstrs")]);
    assert_eq!(o.status.code(), Some(0));
    let o = status(&["run", &path("examples/loop.lcstrs"), "--term", "f 0", "--fuel", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = status(&["check", &path("tests/data/bad.lcstrs")]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(!stderr.contains("panicked") && !stderr.contains("backtrace"));
}
