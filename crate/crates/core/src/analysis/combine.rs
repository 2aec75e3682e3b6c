use crate::ast::{
    AssocDecomp, BinaryFn, Binder, CataCase, CataClass, CataDef, Constructor, DatatypeDecl, FunDef, Signature, Sort,
    Symbol, Term, Var,
};
use crate::frontend::placeholder;

use super::AnalysisError;

/// Names for the tuple datatype of an `m`-fold product, suffixed until
/// none of them is taken.
fn tuple_names(sig: &Signature, m: usize) -> (String, String, Vec<String>) {
    let mut k = 0;
    loop {
        let sfx = if k == 0 { String::new() } else { format!("_{k}") };
        let dt = format!("Tuple_{m}{sfx}");
        let ctor = format!("mkTuple_{m}{sfx}");
        let projs: Vec<String> = (1..=m).map(|i| format!("proj_{i}{sfx}")).collect();
        let taken = |n: &str| sig.is_declared(&Symbol::new(n));
        if !taken(&dt) && !taken(&ctor) && projs.iter().all(|p| !taken(p)) {
            return (dt, ctor, projs);
        }
        k += 1;
    }
}

fn fresh_name(sig: &Signature, base: &str) -> String {
    let mut name = base.to_string();
    let mut k = 1;
    while sig.is_declared(&Symbol::new(&name)) {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

/// Adds the componentwise product of associative catamorphisms to `sig`:
/// a tuple datatype, a componentwise operator macro, and the product
/// catamorphism itself, which is declared associative. Returns its name.
/// The product gets no range predicate.
pub fn combine_catas(sig: &mut Signature, names: &[Symbol]) -> Result<Symbol, AnalysisError> {
    if names.is_empty() {
        return Err(AnalysisError::Incompatible("nothing to combine".into()));
    }
    let mut parts: Vec<CataDef> = Vec::new();
    for n in names {
        let c = sig.cata(n).ok_or_else(|| AnalysisError::UnknownCata(n.clone()))?;
        if parts.iter().any(|p| &p.name == n) {
            return Err(AnalysisError::Incompatible(format!("{n} listed twice")));
        }
        if c.assoc.is_none() {
            return Err(AnalysisError::NotAssociative(n.clone()));
        }
        parts.push(c.clone());
    }
    let input = parts[0].input.clone();
    if let Some(p) = parts.iter().find(|p| p.input != input) {
        return Err(AnalysisError::Incompatible(format!("{} is over {}, not {input}", p.name, p.input)));
    }
    let dt = sig.datatype(&input).cloned().expect("catamorphism input is declared");
    let view = dt
        .binary_view()
        .ok_or_else(|| AnalysisError::Incompatible(format!("{input} is not a binary tree datatype")))?;

    let m = parts.len();
    let (tuple, mk, projs) = tuple_names(sig, m);
    let fields: Vec<(&str, Sort)> =
        projs.iter().map(String::as_str).zip(parts.iter().map(|p| p.result.clone())).collect();
    sig.add_datatype(DatatypeDecl::new(tuple.as_str(), vec![Constructor::new(mk.as_str(), fields)])?)?;
    let tsort = Sort::datatype(tuple.as_str());

    let base: Vec<&str> = parts.iter().map(|p| p.name.as_str()).collect();
    let name = fresh_name(sig, &base.join("_x_"));
    let op_name = fresh_name(sig, &format!("{name}_op"));
    let a = Var::new("a", tsort.clone());
    let b = Var::new("b", tsort.clone());
    let proj = |i: usize, t: Term| Term::select(projs[i].as_str(), t);
    let op_body = Term::ctor(
        mk.as_str(),
        parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let assoc = p.assoc.as_ref().unwrap();
                assoc.op.apply(proj(i, Term::Var(a.clone())), proj(i, Term::Var(b.clone())))
            })
            .collect(),
    );
    sig.add_define(FunDef { name: op_name.as_str().into(), params: vec![a, b], result: tsort.clone(), body: op_body })?;

    let delta_var = Var::new("e", view.elem_sort.clone());
    let delta = Term::ctor(
        mk.as_str(),
        parts.iter().map(|p| p.assoc.as_ref().unwrap().delta_of(Term::Var(delta_var.clone()))).collect(),
    );
    let assoc = AssocDecomp { op: BinaryFn::Defined(op_name.as_str().into()), delta_var, delta };
    let empty = Term::ctor(mk.as_str(), parts.iter().map(|p| p.empty().cloned().expect("base case")).collect());

    let binder = |sel: &Symbol, sort: Sort, recursive: bool| Binder {
        selector: sel.clone(),
        var: Var::new(placeholder(sel.as_str()), sort),
        recursive,
    };
    let binders = vec![
        binder(&view.left, tsort.clone(), true),
        binder(&view.elem, view.elem_sort.clone(), false),
        binder(&view.right, tsort.clone(), true),
    ];
    let body = assoc.combine(
        Term::Var(binders[0].var.clone()),
        Term::Var(binders[1].var.clone()),
        Term::Var(binders[2].var.clone()),
    );
    let cases = dt
        .constructors
        .iter()
        .map(|c| {
            if c.name == view.leaf {
                CataCase { ctor: c.name.clone(), binders: vec![], body: empty.clone() }
            } else {
                CataCase { ctor: c.name.clone(), binders: binders.clone(), body: body.clone() }
            }
        })
        .collect();
    let def = CataDef {
        name: name.as_str().into(),
        input,
        result: tsort,
        param: "t".into(),
        cases,
        range: None,
        assoc: Some(assoc),
        class: CataClass::Associative,
    };
    sig.add_cata(def)?;
    Ok(name.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::builtin_signature;
    use crate::oracle::{eval_cata, ConcreteTree, Interp, Value};

    #[test]
    fn set_times_sizei_on_figure_tree() {
        let mut sig = builtin_signature(&["Set", "SizeI"]).unwrap();
        let n = combine_catas(&mut sig, &["Set".into(), "SizeI".into()]).unwrap();
        let c = sig.cata(&n).unwrap().clone();
        let t = ConcreteTree::node(
            ConcreteTree::node(ConcreteTree::Leaf, Value::Int(1), ConcreteTree::Leaf),
            Value::Int(2),
            ConcreteTree::Leaf,
        );
        let v = eval_cata(&c, &t, &sig, &Interp::new()).unwrap();
        let set = Value::Set([Value::Int(1), Value::Int(2)].into_iter().collect());
        assert_eq!(v, Value::data("mkTuple_2", vec![set, Value::Int(2)]));
        assert_eq!(c.class, CataClass::Associative);
        assert!(c.range.is_none());
    }

    #[test]
    fn single_component_wraps() {
        let mut sig = builtin_signature(&["Sum"]).unwrap();
        let n = combine_catas(&mut sig, &["Sum".into()]).unwrap();
        let c = sig.cata(&n).unwrap().clone();
        let t = ConcreteTree::node(ConcreteTree::Leaf, Value::Int(4), ConcreteTree::Leaf);
        assert_eq!(eval_cata(&c, &t, &sig, &Interp::new()).unwrap(), Value::data("mkTuple_1", vec![Value::Int(4)]));
    }

    #[test]
    fn preorder_is_rejected() {
        let mut sig = builtin_signature(&["List_preorder", "Sortedness_dup"]).unwrap();
        let e = combine_catas(&mut sig, &["List_preorder".into(), "Sortedness_dup".into()]).unwrap_err();
        assert_eq!(e, AnalysisError::NotAssociative("List_preorder".into()));
        assert!(e.to_string().contains("not associative"));
    }

    #[test]
    fn combining_twice_gets_fresh_names() {
        let mut sig = builtin_signature(&["Set", "SizeI"]).unwrap();
        let a = combine_catas(&mut sig, &["Set".into(), "SizeI".into()]).unwrap();
        let b = combine_catas(&mut sig, &["Set".into(), "SizeI".into()]).unwrap();
        assert_ne!(a, b);
    }
}
