use crate::ast::{
    AssocDecomp, BinaryFn, Binder, CataCase, CataClass, CataDef, Constructor, DatatypeDecl, FunDecl, FunDef, Op,
    RangePred, Signature, Sort, Symbol, Term, Var,
};
use crate::frontend::placeholder;

use super::AnalysisError;

pub const BUILTIN_NAMES: &[&str] = &[
    "Set",
    "Multiset",
    "SizeI",
    "Height",
    "List_inorder",
    "List_preorder",
    "List_postorder",
    "Some",
    "Min",
    "Sortedness_dup",
    "Sortedness_nodup",
    "Mirror",
    "DW",
    "Sum",
    "Size",
    "Leftmost",
    "Rightmost",
    "id*",
];

const TREE: &str = "Tree";
const OPTION: &str = "Option";
const SORT_INFO: &str = "SortInfo";
const ID_PAIR: &str = "IdStarPair";

fn tree() -> Sort {
    Sort::datatype(TREE)
}

fn option() -> Sort {
    Sort::datatype(OPTION)
}

fn none() -> Term {
    Term::ctor("none", vec![])
}

fn some(e: Term) -> Term {
    Term::ctor("some", vec![e])
}

fn is_none(t: Term) -> Term {
    Term::test("none", t)
}

fn value(t: Term) -> Term {
    Term::select("value", t)
}

fn op(o: Op, args: Vec<Term>) -> Term {
    Term::op(o, args)
}

fn v(name: &str, sort: Sort) -> Term {
    Term::var(name, sort)
}

fn elem_sort(name: &str) -> Sort {
    if name == "DW" {
        Sort::String
    } else {
        Sort::Int
    }
}

/// A signature with one `Tree` datatype and the named builtin
/// catamorphisms over it, plus whatever auxiliary datatypes and operators
/// they need.
pub fn builtin_signature(names: &[&str]) -> Result<Signature, AnalysisError> {
    for n in names {
        if !BUILTIN_NAMES.contains(n) {
            return Err(AnalysisError::UnknownBuiltin(n.to_string()));
        }
    }
    let elem = names.first().map(|n| elem_sort(n)).unwrap_or(Sort::Int);
    if let Some(bad) = names.iter().find(|n| elem_sort(n) != elem) {
        return Err(AnalysisError::Incompatible(format!(
            "{bad} needs {} elements, but {} needs {elem}",
            elem_sort(bad),
            names[0]
        )));
    }
    let mut sig = Signature::new();
    sig.add_datatype(DatatypeDecl::binary_tree(TREE, elem.clone()))?;
    for n in names {
        add_builtin(&mut sig, n, &elem)?;
    }
    Ok(sig)
}

/// A signature holding just the named builtin, and its definition.
pub fn builtin(name: &str) -> Result<(Signature, CataDef), AnalysisError> {
    let sig = builtin_signature(&[name])?;
    let c = sig.cata(&Symbol::new(name)).cloned().expect("builtin was added");
    Ok((sig, c))
}

fn ensure_option(sig: &mut Signature) -> Result<(), AnalysisError> {
    if sig.datatype(&OPTION.into()).is_none() {
        sig.add_datatype(DatatypeDecl::new(
            OPTION,
            vec![Constructor::new("none", vec![]), Constructor::new("some", vec![("value", Sort::Int)])],
        )?)?;
    }
    Ok(())
}

fn ensure_define(
    sig: &mut Signature,
    name: &str,
    params: &[(&str, Sort)],
    result: Sort,
    body: Term,
) -> Result<(), AnalysisError> {
    if sig.define(&name.into()).is_none() {
        sig.add_define(FunDef {
            name: name.into(),
            params: params.iter().map(|(n, s)| Var::new(*n, s.clone())).collect(),
            result,
            body,
        })?;
    }
    Ok(())
}

struct Spec {
    result: Sort,
    empty: Term,
    combine: Box<dyn Fn(Term, Term, Term) -> Term>,
    assoc: Option<AssocDecomp>,
    range: Option<Term>,
}

impl Spec {
    fn assoc(result: Sort, empty: Term, op: BinaryFn, elem: &Sort, delta: impl Fn(Term) -> Term) -> Spec {
        let delta_var = Var::new("e", elem.clone());
        let decomp = AssocDecomp { op, delta_var: delta_var.clone(), delta: delta(Term::Var(delta_var)) };
        let d = decomp.clone();
        Spec { result, empty, combine: Box::new(move |l, e, r| d.combine(l, e, r)), assoc: Some(decomp), range: None }
    }

    fn plain(result: Sort, empty: Term, combine: impl Fn(Term, Term, Term) -> Term + 'static) -> Spec {
        Spec { result, empty, combine: Box::new(combine), assoc: None, range: None }
    }

    fn with_range(mut self, body: impl Fn(Term) -> Term) -> Spec {
        self.range = Some(body(Term::var("c", self.result.clone())));
        self
    }
}

fn add_builtin(sig: &mut Signature, name: &str, elem: &Sort) -> Result<(), AnalysisError> {
    let int = Sort::Int;
    let ge0 = |c: Term| op(Op::Ge, vec![c, Term::int(0)]);
    let spec = match name {
        "Set" => {
            let s = Sort::Set(Box::new(elem.clone()));
            let e = elem.clone();
            Spec::assoc(s, op(Op::SetEmpty(elem.clone()), vec![]), BinaryFn::Theory(Op::SetUnion), elem, move |x| {
                op(Op::SetSingleton(e.clone()), vec![x])
            })
        }
        "Multiset" => {
            let s = Sort::Bag(Box::new(elem.clone()));
            let e = elem.clone();
            Spec::assoc(s, op(Op::BagEmpty(elem.clone()), vec![]), BinaryFn::Theory(Op::BagUnion), elem, move |x| {
                op(Op::BagMake(e.clone()), vec![x, Term::int(1)])
            })
        }
        "SizeI" => Spec::assoc(int, Term::int(0), BinaryFn::Theory(Op::Add), elem, |_| Term::int(1)).with_range(ge0),
        "Size" => Spec::assoc(int, Term::int(1), BinaryFn::Theory(Op::Add), elem, |_| Term::int(1))
            .with_range(|c| op(Op::Ge, vec![c, Term::int(1)])),
        "Sum" => Spec::assoc(int, Term::int(0), BinaryFn::Theory(Op::Add), elem, |x| x),
        "DW" => {
            if sig.function(&"dirty".into()).is_none() {
                sig.add_function(FunDecl { name: "dirty".into(), params: vec![Sort::String], result: Sort::Bool })?;
            }
            Spec::assoc(int, Term::int(0), BinaryFn::Theory(Op::Add), elem, |x| {
                Term::ite(Term::apply("dirty", vec![x]), Term::int(1), Term::int(0))
            })
            .with_range(ge0)
        }
        "Height" => Spec::plain(int, Term::int(0), |l, _, r| {
            let max = Term::ite(op(Op::Ge, vec![l.clone(), r.clone()]), l, r);
            op(Op::Add, vec![Term::int(1), max])
        })
        .with_range(ge0),
        "List_inorder" | "List_preorder" | "List_postorder" => {
            let s = Sort::Seq(Box::new(elem.clone()));
            let empty = op(Op::SeqEmpty(elem.clone()), vec![]);
            let e = elem.clone();
            let unit = move |x| op(Op::SeqUnit(e.clone()), vec![x]);
            match name {
                "List_inorder" => Spec::assoc(s, empty, BinaryFn::Theory(Op::SeqConcat), elem, unit),
                "List_preorder" => Spec::plain(s, empty, move |l, x, r| op(Op::SeqConcat, vec![unit(x), l, r])),
                _ => Spec::plain(s, empty, move |l, x, r| op(Op::SeqConcat, vec![l, r, unit(x)])),
            }
        }
        "Some" => {
            ensure_option(sig)?;
            Spec::plain(option(), none(), |_, e, _| some(e))
        }
        "Min" => {
            ensure_option(sig)?;
            let (a, b) = (v("a", option()), v("b", option()));
            let smaller = Term::ite(op(Op::Le, vec![value(a.clone()), value(b.clone())]), a.clone(), b.clone());
            let body = Term::ite(is_none(a.clone()), b.clone(), Term::ite(is_none(b), a, smaller));
            ensure_define(sig, "min_opt", &[("a", option()), ("b", option())], option(), body)?;
            Spec::assoc(option(), none(), BinaryFn::Defined("min_opt".into()), elem, some)
        }
        "Leftmost" | "Rightmost" => {
            ensure_option(sig)?;
            let (a, b) = (v("a", option()), v("b", option()));
            let (fname, body) = if name == "Leftmost" {
                ("leftmost_op", Term::ite(is_none(a.clone()), b, a))
            } else {
                ("rightmost_op", Term::ite(is_none(b.clone()), a, b))
            };
            ensure_define(sig, fname, &[("a", option()), ("b", option())], option(), body)?;
            Spec::assoc(option(), none(), BinaryFn::Defined(fname.into()), elem, some)
        }
        "Sortedness_dup" | "Sortedness_nodup" => {
            ensure_option(sig)?;
            if sig.datatype(&SORT_INFO.into()).is_none() {
                sig.add_datatype(DatatypeDecl::new(
                    SORT_INFO,
                    vec![Constructor::new(
                        "mkSortInfo",
                        vec![("sMin", option()), ("sMax", option()), ("sOk", Sort::Bool)],
                    )],
                )?)?;
            }
            let si = Sort::datatype(SORT_INFO);
            let mk = |lo: Term, hi: Term, ok: bool| Term::ctor("mkSortInfo", vec![lo, hi, Term::bool(ok)]);
            let smin = |t: Term| Term::select("sMin", t);
            let smax = |t: Term| Term::select("sMax", t);
            let sok = |t: Term| Term::select("sOk", t);
            let (a, b) = (v("a", si.clone()), v("b", si.clone()));
            let bad = mk(none(), none(), false);
            let cmp = if name == "Sortedness_dup" { Op::Le } else { Op::Lt };
            let fname = if name == "Sortedness_dup" { "sorted_dup_op" } else { "sorted_nodup_op" };
            let joined = Term::ite(
                op(cmp, vec![value(smax(a.clone())), value(smin(b.clone()))]),
                mk(smin(a.clone()), smax(b.clone()), true),
                bad.clone(),
            );
            let body = Term::ite(
                op(Op::Or, vec![Term::not(sok(a.clone())), Term::not(sok(b.clone()))]),
                bad,
                Term::ite(is_none(smin(a.clone())), b.clone(), Term::ite(is_none(smin(b.clone())), a.clone(), joined)),
            );
            ensure_define(sig, fname, &[("a", si.clone()), ("b", si.clone())], si.clone(), body)?;
            Spec::assoc(si.clone(), mk(none(), none(), true), BinaryFn::Defined(fname.into()), elem, move |x| {
                mk(some(x.clone()), some(x), true)
            })
            .with_range(move |c| {
                // exactly the values the fold can produce
                let lo = smin(c.clone());
                let hi = smax(c.clone());
                op(
                    Op::Or,
                    vec![
                        op(Op::And, vec![is_none(lo.clone()), is_none(hi.clone())]),
                        op(
                            Op::And,
                            vec![
                                sok(c),
                                Term::not(is_none(lo.clone())),
                                Term::not(is_none(hi.clone())),
                                op(Op::Le, vec![value(lo), value(hi)]),
                            ],
                        ),
                    ],
                )
            })
        }
        "Mirror" => Spec::plain(tree(), Term::ctor("Leaf", vec![]), |l, e, r| Term::ctor("Node", vec![r, e, l])),
        "id*" => {
            if sig.datatype(&ID_PAIR.into()).is_none() {
                sig.add_datatype(DatatypeDecl::new(
                    ID_PAIR,
                    vec![Constructor::new("mkIdStarPair", vec![("idFirst", Sort::Int), ("idSecond", tree())])],
                )?)?;
            }
            let pair = Sort::datatype(ID_PAIR);
            let empty = Term::ctor("mkIdStarPair", vec![Term::int(0), Term::ctor("Leaf", vec![])]);
            Spec::plain(pair, empty, |l, e, r| {
                let fst = |t: &Term| Term::select("idFirst", t.clone());
                let snd = |t: &Term| Term::select("idSecond", t.clone());
                let max = Term::ite(op(Op::Ge, vec![fst(&l), fst(&r)]), fst(&l), fst(&r));
                let h = op(Op::Add, vec![Term::int(1), max]);
                let odd = Term::eq(op(Op::Mod, vec![h.clone(), Term::int(2)]), Term::int(1));
                Term::ite(
                    odd,
                    Term::ctor("mkIdStarPair", vec![h.clone(), Term::ctor("Node", vec![snd(&l), e.clone(), snd(&r)])]),
                    Term::ctor(
                        "mkIdStarPair",
                        vec![h, Term::ctor("Node", vec![snd(&l), e, Term::ctor("Leaf", vec![])])],
                    ),
                )
            })
        }
        _ => return Err(AnalysisError::UnknownBuiltin(name.to_string())),
    };
    let def = cata_from_spec(name, elem, spec);
    sig.add_cata(def)?;
    Ok(())
}

fn cata_from_spec(name: &str, elem: &Sort, spec: Spec) -> CataDef {
    let binder = |sel: &str, sort: Sort, recursive: bool| Binder {
        selector: sel.into(),
        var: Var::new(placeholder(sel), sort),
        recursive,
    };
    let binders = vec![
        binder("left", spec.result.clone(), true),
        binder("elem", elem.clone(), false),
        binder("right", spec.result.clone(), true),
    ];
    let args: Vec<Term> = binders.iter().map(|b| Term::Var(b.var.clone())).collect();
    let body = (spec.combine)(args[0].clone(), args[1].clone(), args[2].clone());
    let class = if spec.assoc.is_some() { CataClass::Associative } else { CataClass::Unclassified };
    CataDef {
        name: name.into(),
        input: TREE.into(),
        result: spec.result.clone(),
        param: "t".into(),
        cases: vec![
            CataCase { ctor: "Leaf".into(), binders: vec![], body: spec.empty },
            CataCase { ctor: "Node".into(), binders, body },
        ],
        range: spec.range.map(|body| RangePred { var: Var::new("c", spec.result.clone()), body }),
        assoc: spec.assoc,
        class,
    }
}
