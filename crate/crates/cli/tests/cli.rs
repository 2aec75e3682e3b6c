use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn cata(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cata")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn has_z3() -> bool {
    let ok = Command::new("z3").arg("-version").output().is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("z3 not on PATH; skipping");
    }
    ok
}

fn path(rel: &str) -> String {
    repo(rel).display().to_string()
}

fn replay() -> String {
    format!("replay:{}", path("fixtures/sumtree.trace"))
}

#[test]
fn replayed_sumtree_is_sat_at_depth_two() {
    let o = cata(&["solve", &path("fixtures/sumtree.smt2"), "--solver", &replay()]);
    assert_eq!(o.status.code(), Some(10));
    let out = stdout(&o);
    let header: Vec<&str> = out.lines().next().unwrap().split(' ').collect();
    assert_eq!(header[..2], ["sat", "2"]);
    assert!(out.contains("(Node Leaf 5.0 Leaf)"), "{out}");
}

#[test]
fn emitted_trace_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.trace");
    let o =
        cata(&["solve", &path("fixtures/sumtree.smt2"), "--solver", &replay(), "--emit-trace", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(fs::read(&out).unwrap(), fs::read(repo("fixtures/sumtree.trace")).unwrap());
}

#[test]
fn live_trace_matches_fixture() {
    if !has_z3() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.trace");
    let o = cata(&["solve", &path("fixtures/sumtree.smt2"), "--emit-trace", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(fs::read_to_string(&out).unwrap(), fs::read_to_string(repo("fixtures/sumtree.trace")).unwrap());
}

#[test]
fn exit_codes() {
    if !has_z3() {
        return;
    }
    let o = cata(&["solve", &path("fixtures/dirty-words.smt2")]);
    assert_eq!(o.status.code(), Some(20));
    assert!(stdout(&o).starts_with("unsat 1 "), "{}", stdout(&o));

    let o = cata(&["solve", &path("fixtures/sumtree.smt2"), "--max-unroll", "0"]);
    assert_eq!(o.status.code(), Some(30));
    assert!(stdout(&o).starts_with("unknown 0 "));

    let o = cata(&["solve", &path("fixtures/sizei-negative.smt2")]);
    assert_eq!(o.status.code(), Some(20));
    assert!(stdout(&o).starts_with("unsat 0 "));
}

#[test]
fn usage_and_backend_errors() {
    assert_eq!(cata(&["solve", "/no/such/file.smt2"]).status.code(), Some(1));
    assert_eq!(cata(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cata(&["solve", &path("fixtures/sumtree.smt2"), "--bound-mode", "sometimes"]).status.code(), Some(1));
    let o = cata(&["solve", &path("fixtures/sumtree.smt2"), "--solver", "path:/bin/false"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_report() {
    let o = cata(&["solve", &path("fixtures/sumtree.smt2"), "--solver", &replay(), "--json"]);
    assert_eq!(o.status.code(), Some(10));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["verdict"], "sat");
    assert_eq!(v["depth"], 2);
    assert!(v["time_ms"].is_u64());
    assert!(v["backend"].as_str().unwrap().starts_with("replay:"));
    assert!(v["bound"].is_null());
    assert_eq!(v["rounds_ms"].as_array().unwrap().len(), 3);
}

#[test]
fn emit_core_smt2_declares_the_uninterpreted_stand_in() {
    let o = cata(&["solve", &path("fixtures/sumtree.smt2"), "--emit-core-smt2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("(declare-fun SumTree (RealTree) Real)"), "{out}");
    assert!(!out.contains("define-catamorphism"));
}

#[test]
fn oracle_command() {
    let dw = path("fixtures/dirty-words.smt2");
    let o = cata(&["oracle", &dw, "--domain", "clean,dirty", "--max-size", "7", "--interp", "dirty=dirty"]);
    assert_eq!(o.status.code(), Some(20));
    assert!(stdout(&o).starts_with("no model within bounds"));
    let o = cata(&["oracle", &path("fixtures/sumtree.smt2"), "--domain", "0,5", "--max-size", "3"]);
    assert_eq!(o.status.code(), Some(10));
}

#[test]
fn normalize_and_combine() {
    let o = cata(&["normalize", &path("corpus/sumtree03.smt2")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("p = 1"), "{}", stdout(&o));

    let o = cata(&["combine", "Set", "SizeI"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("(define-catamorphism Set_x_SizeI"));
    let o = cata(&["combine", "List_preorder", "Sortedness_dup"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not associative"));
}

#[test]
fn analyze_builtins() {
    if !has_z3() {
        return;
    }
    let o = cata(&["analyze", "--builtin", "SizeI,Height", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("associative-syntactic[SizeI] holds"), "{out}");
    assert!(out.contains("associative-semantic[Height] fails"), "{out}");
    assert!(out.contains("bound[SizeI] bound 3"), "{out}");
}

#[test]
fn bench_corpus_matches() {
    if !has_z3() {
        return;
    }
    let o = cata(&["bench", &path("corpus")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("24 benchmarks, 0 mismatched, 0 skipped"));
}

#[test]
fn bench_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = cata(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 benchmarks"));
}

#[test]
fn bench_flipped_expectation_fails_naming_the_file() {
    if !has_z3() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    for name in ["sumtree01", "sumtree02"] {
        fs::copy(repo(&format!("corpus/{name}.smt2")), dir.path().join(format!("{name}.smt2"))).unwrap();
        fs::copy(repo(&format!("corpus/{name}.expect")), dir.path().join(format!("{name}.expect"))).unwrap();
    }
    let e = dir.path().join("sumtree02.expect");
    let flipped = if fs::read_to_string(&e).unwrap().trim() == "sat" { "unsat\n" } else { "sat\n" };
    fs::write(&e, flipped).unwrap();
    let o = cata(&["bench", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sumtree02"));
    assert!(!String::from_utf8_lossy(&o.stderr).contains("sumtree01"));
}
