use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_basext"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("basext-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let (code, out, err) = run(&all);
    let v: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}"));
    for key in ["command", "result", "counterexamples", "elapsed_ms"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    // round trip through the parser
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
    (code, v)
}

const UNIVERSE: &str = "atoms: a, b\nrules:\n  0: => a\n  1: ([a] => b) => b\nbases: all-subsets\n";

#[test]
fn prove_exit_codes() {
    assert_eq!(run(&["prove", "--sequent", "a |- a"]).0, 0);
    assert_eq!(run(&["prove", "--sequent", "|- ((a -> b) -> a) -> a"]).0, 1);
    assert_eq!(run(&["prove", "--sequent", "a |-"]).0, 2);
    let (code, v) = run_json(&["prove", "--sequent", "a & b |- b & a"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["provable"], true);
    assert!(v["result"]["method"].is_string());
}

#[test]
fn prove_via_base_reports_witness() {
    let (code, v) = run_json(&["prove-via-base", "--sequent", "a |- a | a"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["provable"], true);
    assert_eq!(v["result"]["witness"]["nd_check"], true);
    let (code, v) = run_json(&["prove-via-base", "--sequent", "|- a | (a -> bot)"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["provable"], false);
}

#[test]
fn derive_exit_codes() {
    let b = scratch("b.txt", "atoms: p, q, r\n([p] => q) => r\n");
    let b = b.to_str().unwrap();
    assert_eq!(run(&["derive", "--base", b, "--context", "p", "--atom", "q"]).0, 1);
    assert_eq!(run(&["derive", "--base", b, "--context", "q", "--atom", "q"]).0, 0);
    assert_eq!(run(&["derive", "--base", b, "--atom", "zz"]).0, 2);
    assert_eq!(run(&["derive", "--base", "/nonexistent/file", "--atom", "q"]).0, 2);
}

#[test]
fn support_valid_and_equiv_check() {
    let u = scratch("u.txt", UNIVERSE);
    let u = u.to_str().unwrap();
    let (code, v) = run_json(&["support", "--universe", u, "--world", "{0}", "--formula", "a | a"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["supported"], true);
    assert_eq!(run(&["support", "--universe", u, "--world", "{}", "--formula", "a | a"]).0, 1);
    assert_eq!(run(&["support", "--universe", u, "--world", "{7}", "--formula", "a"]).0, 2);
    assert_eq!(run(&["valid", "--universe", u, "--sequent", "a |- a"]).0, 0);
    let (code, v) = run_json(&["valid", "--universe", u, "--sequent", "|- a"]);
    assert_eq!(code, 1);
    assert!(!v["counterexamples"].as_array().unwrap().is_empty());
    let (code, v) = run_json(&["equiv-check", "--universe", u, "--max-depth", "3"]);
    assert_eq!(code, 0);
    assert!(v["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn flatten_output_is_a_base_file() {
    let (code, out, _) = run(&["flatten", "--sequent", "a |- a | a"]);
    assert_eq!(code, 0);
    let b = basext::bases::parse_base_file(&out).unwrap();
    assert_eq!(b.rules().len(), 3);
    assert!(out.contains("#0 = a | a"));
}

#[test]
fn dagger_check_cli() {
    assert_eq!(run(&["dagger-check", "--sequent", "a |- a | a", "--extra", "=> a"]).0, 0);
    assert_eq!(run(&["dagger-check", "--sequent", "a |- a | a", "--extra", "=> zz"]).0, 2);
    assert_eq!(run(&["dagger-check", "--sequent", "a -> b |- a"]).0, 1);
    assert_eq!(run(&["dagger-check", "--sequent", "a -> b |- a", "--close"]).0, 0);
}

#[test]
fn cps_subcommands() {
    let (code, out, _) = run(&["cps", "eval", r"(\x. \y. x) C D"]);
    assert_eq!(code, 0);
    assert!(out.trim().ends_with('C'));
    assert_eq!(run(&["cps", "eval", "--steps", "50", r"(\x. x x) (\x. x x)"]).0, 1);
    assert_eq!(run(&["cps", "eval", "C D"]).0, 1);
    assert_eq!(run(&["cps", "eval", r"(\x. x"]).0, 2);
    let (code, out, _) = run(&["cps", "run", "--trace", r"(\x. x) C"]);
    assert_eq!(code, 0);
    assert!(out.contains('['));
    assert!(out.trim_end().ends_with("value: C"));
    let (code, v) = run_json(&["cps", "type", r"\x:a. x"]);
    assert_eq!(code, 0);
    assert!(v["result"].is_object());
    assert_eq!(run(&["cps", "type", "--env", "C:a, D:b", r"(\x:b. x) C"]).0, 1);
    let (code, out, _) = run(&["cps", "transform", "x"]);
    assert_eq!(code, 0);
    let t = basext::cps::parse_term(out.trim()).unwrap();
    assert!(basext::cps::alpha_eq(&t, &basext::cps::parse_term(r"\k. k x").unwrap()));
}

#[test]
fn search_cli() {
    let g = scratch("g.txt", "# the motivating program\na1 -> a\na2 -> a\na2\n");
    let g = g.to_str().unwrap();
    let (code, v) = run_json(&["search", "--program", g, "--goal", "a", "--trace"]);
    assert_eq!(code, 0);
    let events = v["result"]["trace"].as_array().unwrap();
    assert_eq!(events.iter().filter(|e| e["event"] == "fail").count(), 1);
    assert_eq!(run(&["search", "--program", g, "--goal", "b"]).0, 1);
}
