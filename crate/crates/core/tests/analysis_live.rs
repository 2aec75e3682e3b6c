use cata_core::analysis::{
    builtin, builtin_signature, check_range_overapprox, detect_associative_semantic, detect_associative_syntactic,
    AnalysisResult,
};
use cata_core::ast::{CataDef, Op, RangePred, Sort, Term, Var};
use cata_core::backend::{solver_available, Session, SolverConfig};

fn session() -> Option<Session> {
    let cfg = SolverConfig::z3();
    if !solver_available(&cfg) {
        eprintln!("no solver on PATH; skipping");
        return None;
    }
    Some(Session::start(&cfg).unwrap())
}

const HOLDS: &[&str] = &[
    "Set",
    "Multiset",
    "SizeI",
    "List_inorder",
    "Min",
    "Sum",
    "Sortedness_dup",
    "Sortedness_nodup",
    "Size",
    "Leftmost",
    "Rightmost",
    "DW",
];
const FAILS: &[&str] = &["Height", "List_preorder", "List_postorder", "Mirror", "Some"];

#[test]
fn associativity_of_builtins() {
    let Some(mut s) = session() else { return };
    for n in HOLDS {
        let (sig, c) = builtin(n).unwrap();
        let syn = detect_associative_syntactic(&c, &sig, &mut s).unwrap();
        let sem = detect_associative_semantic(&c, &sig, &mut s).unwrap();
        assert_eq!(syn.result, AnalysisResult::Holds, "{syn}");
        assert!(sem.result.holds(), "{sem}");
    }
    for n in FAILS {
        let (sig, c) = builtin(n).unwrap();
        let syn = detect_associative_syntactic(&c, &sig, &mut s).unwrap();
        let sem = detect_associative_semantic(&c, &sig, &mut s).unwrap();
        assert!(matches!(syn.result, AnalysisResult::NotApplicable(_)), "{syn}");
        assert!(sem.result.fails(), "{sem}");
    }
    assert_eq!(s.depth(), 0);
}

#[test]
fn subtraction_is_not_associative() {
    let Some(mut s) = session() else { return };
    let (sig, mut c) = builtin("Sum").unwrap();
    c.assoc.as_mut().unwrap().op = cata_core::ast::BinaryFn::Theory(Op::Sub);
    let v = detect_associative_syntactic(&c, &sig, &mut s).unwrap();
    assert!(v.result.fails(), "{v}");
}

fn with_range(c: &CataDef, body: impl Fn(Term) -> Term) -> CataDef {
    let mut c = c.clone();
    let var = Var::new("c", c.result.clone());
    c.range = Some(RangePred { body: body(Term::Var(var.clone())), var });
    c
}

#[test]
fn range_checks() {
    let Some(mut s) = session() else { return };
    for n in ["SizeI", "Height", "DW"] {
        let (sig, c) = builtin(n).unwrap();
        let v = check_range_overapprox(&c, &sig, &mut s).unwrap();
        assert_eq!(v.result, AnalysisResult::Holds, "{v}");
    }
    for n in ["Sum", "Set", "Mirror"] {
        let (sig, mut c) = builtin(n).unwrap();
        c.range = None;
        assert_eq!(check_range_overapprox(&c, &sig, &mut s).unwrap().result, AnalysisResult::Holds);
    }
    let (sig, c) = builtin("SizeI").unwrap();
    let bad = with_range(&c, |x| Term::op(Op::Gt, vec![x, Term::int(5)]));
    let v = check_range_overapprox(&bad, &sig, &mut s).unwrap();
    match &v.result {
        AnalysisResult::Fails { summary, .. } => assert!(summary.starts_with("base case"), "{v}"),
        other => panic!("{other:?}"),
    }
    let _ = builtin_signature(&["SizeI"]).unwrap();
    let _ = Sort::Int;
}
