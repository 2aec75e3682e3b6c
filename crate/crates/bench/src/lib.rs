//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use cata_core::{parse_script, Script};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The shipped corpus, sorted by file name.
pub fn corpus() -> Vec<(String, Script)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(repo_root().join("corpus"))
        .expect("corpus directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, parse_script(&text).unwrap())
        })
        .collect()
}

pub fn fixture(name: &str) -> Script {
    parse_script(&std::fs::read_to_string(repo_root().join("fixtures").join(name)).unwrap()).unwrap()
}

/// `n` tree variables, each distinct from a node built on the next one,
/// plus a sum constraint: a chain of disequalities for step 4 to split.
pub fn diseq_chain(n: usize) -> Script {
    let mut s = String::from(
        "(declare-datatypes () ((Tree (Leaf) (Node (left Tree) (elem Int) (right Tree)))))\n\
         (define-catamorphism Sum ((t Tree)) Int\n  (ite (is-Leaf t) 0 (+ (Sum (left t)) (elem t) (Sum (right t)))))\n",
    );
    for i in 0..=n {
        s.push_str(&format!("(declare-fun t{i} () Tree)\n"));
    }
    for i in 0..n {
        s.push_str(&format!("(assert (not (= t{i} (Node t{} {i} Leaf))))\n", i + 1));
    }
    s.push_str(&format!("(assert (= (Sum t0) {n}))\n(check-sat)\n"));
    parse_script(&s).unwrap()
}
