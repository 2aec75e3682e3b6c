use std::path::PathBuf;
use std::time::{Duration, Instant};

use cata_core::backend::{solver_available, SatVerdict, Session, SolverConfig};
use cata_core::engine::{decide, BoundUse, EngineConfig, Outcome, Round, UnknownReason, UnrollState};
use cata_core::frontend::Dialect;
use cata_core::oracle::{model_satisfies, Interp};
use cata_core::{parse_script, Script};

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn script(rel: &str) -> Script {
    parse_script(&std::fs::read_to_string(repo(rel)).unwrap()).unwrap()
}

fn live() -> Option<Session> {
    let cfg = SolverConfig::z3();
    if !solver_available(&cfg) {
        eprintln!("no solver on PATH; skipping");
        return None;
    }
    Some(Session::start(&cfg).unwrap())
}

fn round(
    depth: usize,
    c: Option<SatVerdict>,
    r: Option<SatVerdict>,
) -> (usize, Option<SatVerdict>, Option<SatVerdict>) {
    (depth, c, r)
}

fn shape(rounds: &[Round]) -> Vec<(usize, Option<SatVerdict>, Option<SatVerdict>)> {
    rounds.iter().map(|r| (r.depth, r.with_controls, r.with_ranges)).collect()
}

#[test]
fn sumtree_replays_golden_transcript() {
    let s = script("fixtures/sumtree.smt2");
    let start = Instant::now();
    let mut session = Session::start(&SolverConfig::replay(repo("fixtures/sumtree.trace"))).unwrap();
    let v = decide(&s, &mut session, &EngineConfig::default()).unwrap();
    assert!(start.elapsed() < Duration::from_secs(1));
    use SatVerdict::*;
    assert_eq!(
        shape(&v.rounds),
        [round(0, None, Some(Sat)), round(1, Some(Unsat), Some(Sat)), round(2, Some(Sat), None)]
    );
    assert_eq!(v.depth, 2);
    let Outcome::Sat { model: Some(m) } = &v.outcome else { panic!("{:?}", v.outcome) };
    assert_eq!(model_satisfies(&s.formula(), &s.signature, &Interp::new(), m).unwrap(), Some(true));
    let golden = std::fs::read_to_string(repo("fixtures/sumtree.trace")).unwrap();
    assert_eq!(session.trace(), golden);
}

#[test]
fn sumtree_transcript_commands() {
    let golden = std::fs::read_to_string(repo("fixtures/sumtree.trace")).unwrap();
    let sent: Vec<&str> = golden.lines().filter(|l| !l.starts_with(";;")).collect();
    let tail = [
        "(check-sat)",
        "(assert (SumTree_GeneratedUnrollDefineFun t1))",
        "(push)",
        "(assert (is-Leaf t1))",
        "(check-sat)",
        "(pop)",
        "(check-sat)",
        "(assert (SumTree_GeneratedUnrollDefineFun (left t1)))",
        "(assert (SumTree_GeneratedUnrollDefineFun (right t1)))",
        "(push)",
        "(assert (is-Leaf (left t1)))",
        "(assert (is-Leaf (right t1)))",
        "(check-sat)",
        "(get-model)",
        "(pop)",
    ];
    assert!(sent.ends_with(&tail), "{sent:#?}");
    assert!(sent.contains(&"(declare-fun SumTree (RealTree) Real)"));
    assert!(sent.contains(&"(assert (= (SumTree t1) 5.0))"));
}

#[test]
fn replay_with_smaller_budget_diverges_into_unknown() {
    let s = script("fixtures/sumtree.smt2");
    let mut session = Session::start(&SolverConfig::replay(repo("fixtures/sumtree.trace"))).unwrap();
    let cfg = EngineConfig { max_unroll: 1, ..EngineConfig::default() };
    let v = decide(&s, &mut session, &cfg).unwrap();
    assert_eq!(v.outcome, Outcome::Unknown(UnknownReason::MaxUnroll));
    assert_eq!(v.depth, 1);
}

#[test]
fn initial_state() {
    let dw = script("fixtures/dirty-words.smt2");
    let st = UnrollState::init(&dw);
    assert_eq!(st.frontier().len(), 1);
    assert_eq!(st.ranges(Dialect::Z3), ["(>= (DW t) 0)"]);
    assert_eq!(st.controls(Dialect::Z3), ["(is-Leaf t)"]);
    let next = st.children();
    assert_eq!(next.controls(Dialect::Z3), ["(is-Leaf (left t))", "(is-Leaf (right t))"]);
    assert_eq!(next.depth, 1);

    let s = script("fixtures/sumtree.smt2");
    assert_eq!(UnrollState::init(&s).equations(Dialect::Z3), ["(SumTree_GeneratedUnrollDefineFun t1)"]);

    let plain = parse_script("(declare-fun x () Int)\n(assert (> x 0))\n(check-sat)\n").unwrap();
    let st = UnrollState::init(&plain);
    assert!(st.is_empty());
    assert!(st.children().is_empty());
}

#[test]
fn dirty_words_unsat_at_depth_one() {
    let Some(mut s) = live() else { return };
    let start = Instant::now();
    let v = decide(&script("fixtures/dirty-words.smt2"), &mut s, &EngineConfig::default()).unwrap();
    assert_eq!(v.outcome, Outcome::Unsat);
    assert!(v.depth <= 1);
    assert!(start.elapsed() < Duration::from_secs(2));
}

#[test]
fn range_refutes_at_depth_zero() {
    let Some(mut s) = live() else { return };
    let v = decide(&script("fixtures/sizei-negative.smt2"), &mut s, &EngineConfig::default()).unwrap();
    assert_eq!((v.outcome, v.depth), (Outcome::Unsat, 0));
}

#[test]
fn without_range_the_budget_runs_out() {
    let Some(mut s) = live() else { return };
    let cfg = EngineConfig { max_unroll: 6, bound_use: BoundUse::Off };
    let v = decide(&script("fixtures/sizei-negative-norange.smt2"), &mut s, &cfg).unwrap();
    assert_eq!(v.outcome, Outcome::Unknown(UnknownReason::MaxUnroll));
    assert_eq!(v.depth, 6);
    assert!(v.rounds.iter().all(|r| r.with_controls != Some(SatVerdict::Sat)));
}

#[test]
fn strict_mode_requires_ranges() {
    let Some(mut s) = live() else { return };
    let cfg = EngineConfig { max_unroll: 4, bound_use: BoundUse::Strict };
    assert!(decide(&script("fixtures/sumtree.smt2"), &mut s, &cfg).is_err());
}

#[test]
fn script_without_catamorphisms_is_one_check() {
    let Some(mut s) = live() else { return };
    let plain = parse_script("(declare-fun x () Int)\n(assert (> x 0))\n(check-sat)\n").unwrap();
    let v = decide(&plain, &mut s, &EngineConfig::default()).unwrap();
    assert!(matches!(v.outcome, Outcome::Sat { .. }));
    assert_eq!(v.rounds.len(), 1);
}

#[test]
fn corpus_verdicts_and_models() {
    let Some(_) = live() else { return };
    let mut files: Vec<_> = std::fs::read_dir(repo("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    files.sort();
    assert_eq!(files.len(), 24);
    for f in files {
        let s = parse_script(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let expect = std::fs::read_to_string(f.with_extension("expect")).unwrap();
        let mut session = Session::start(&SolverConfig::z3()).unwrap();
        let start = Instant::now();
        let cfg = EngineConfig { bound_use: BoundUse::Off, ..EngineConfig::default() };
        let v = decide(&s, &mut session, &cfg).unwrap();
        assert!(start.elapsed() < Duration::from_secs(10), "{}", f.display());
        match (expect.trim(), &v.outcome) {
            ("sat", Outcome::Sat { model: Some(m) }) => {
                let ok = model_satisfies(&s.formula(), &s.signature, &Interp::new(), m).unwrap();
                assert_ne!(ok, Some(false), "{}: {m}", f.display());
            }
            ("unsat", Outcome::Unsat) => {}
            (e, o) => panic!("{}: expected {e}, got {o}", f.display()),
        }
    }
}
