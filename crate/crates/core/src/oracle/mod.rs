//! Brute-force ground truth: tree enumeration, concrete evaluation of terms,
//! catamorphisms and formulas, bounded inverse-image counting and exhaustive
//! satisfiability search over small universes.

mod eval;
mod tree;
mod value;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use eval::{Env, Evaluator, Interp, UfTable};
pub use tree::{count_st, enumerate_shapes, enumerate_trees, trees_by_size, ConcreteTree, Shape};
pub use value::Value;

use crate::ast::{free_vars, BinaryTreeView, CataDef, Formula, Signature, Sort, Symbol, Term, Var};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("no interpretation for {0}")]
    Uninterpreted(String),
    #[error("cannot evaluate: {0}")]
    Unsupported(String),
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("no tree of height {0} within the size bound")]
    NoTreeOfHeight(usize),
    #[error("no finite domain for sort {0}")]
    NoDomain(Sort),
}

/// The finite universe searched by the oracle.
#[derive(Clone, Debug)]
pub struct Bounds {
    pub max_size: usize,
    pub domains: Vec<(Sort, Vec<Value>)>,
}

impl Bounds {
    /// One element domain; its sort is read off the values.
    pub fn new(max_size: usize, domain: Vec<Value>) -> Bounds {
        let sort = match domain.first() {
            Some(Value::Int(_)) => Sort::Int,
            Some(Value::Real(_)) => Sort::Real,
            Some(Value::Str(_)) => Sort::String,
            Some(Value::Bool(_)) => Sort::Bool,
            _ => Sort::Int,
        };
        Bounds { max_size, domains: vec![(sort, domain)] }
    }

    pub fn with_domain(mut self, sort: Sort, values: Vec<Value>) -> Bounds {
        self.domains.retain(|(s, _)| *s != sort);
        self.domains.push((sort, values));
        self
    }

    pub fn domain(&self, sort: &Sort) -> Option<&[Value]> {
        self.domains.iter().find(|(s, _)| s == sort).map(|(_, v)| v.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness(pub Vec<(Var, Value)>);

impl Witness {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(v, _)| v.name.as_str() == name).map(|(_, x)| x)
    }

    pub fn env(&self) -> Env {
        self.0.iter().cloned().collect()
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, x)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{} = {x}", v.name)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchResult {
    Sat(Witness),
    NoModelWithinBounds,
}

impl SearchResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SearchResult::Sat(_))
    }
}

fn tree_view(sig: &Signature, sort: &Sort) -> Option<BinaryTreeView> {
    let dt = sig.datatype_of_sort(sort)?;
    if dt.is_recursive() {
        dt.binary_view()
    } else {
        None
    }
}

/// Values of `sort` within `bounds`, in the deterministic search order.
pub fn universe(sig: &Signature, sort: &Sort, bounds: &Bounds) -> Result<Vec<Value>, OracleError> {
    if let Some(d) = bounds.domain(sort) {
        return Ok(d.to_vec());
    }
    match sort {
        Sort::Bool => Ok(vec![Value::Bool(false), Value::Bool(true)]),
        Sort::Datatype(_) => {
            let dt = sig.datatype_of_sort(sort).ok_or_else(|| OracleError::NoDomain(sort.clone()))?;
            if dt.is_recursive() {
                let view = dt.binary_view().ok_or_else(|| OracleError::NoDomain(sort.clone()))?;
                let elems = universe(sig, &view.elem_sort, bounds)?;
                Ok(enumerate_trees(bounds.max_size, &elems).map(|t| t.to_value(&view)).collect())
            } else {
                let mut out = Vec::new();
                for c in &dt.constructors {
                    let mut combos: Vec<Vec<Value>> = vec![vec![]];
                    for f in &c.fields {
                        let vals = universe(sig, &f.sort, bounds)?;
                        combos = combos
                            .into_iter()
                            .flat_map(|p| {
                                vals.iter().map(move |v| {
                                    let mut q = p.clone();
                                    q.push(v.clone());
                                    q
                                })
                            })
                            .collect();
                    }
                    out.extend(combos.into_iter().map(|fs| Value::data(c.name.clone(), fs)));
                }
                Ok(out)
            }
        }
        _ => Err(OracleError::NoDomain(sort.clone())),
    }
}

/// Variables whose every occurrence is the direct argument of a
/// catamorphism, with the catamorphisms applied to them.
fn cata_only_vars(f: &Formula) -> HashMap<Var, BTreeSet<Symbol>> {
    let mut total: HashMap<Var, usize> = HashMap::new();
    let mut under: HashMap<Var, (usize, BTreeSet<Symbol>)> = HashMap::new();
    for t in f.terms() {
        t.visit(&mut |s| match s {
            Term::Var(v) => *total.entry(v.clone()).or_default() += 1,
            Term::Cata { cata, arg } => {
                if let Term::Var(v) = arg.as_ref() {
                    let e = under.entry(v.clone()).or_default();
                    e.0 += 1;
                    e.1.insert(cata.clone());
                }
            }
            _ => {}
        });
    }
    under.into_iter().filter(|(v, (n, _))| total.get(v) == Some(n)).map(|(v, (_, cs))| (v, cs)).collect()
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(fs) => fs.iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

/// Variables in search order: declared constants first, in declaration
/// order, then any other free variable.
pub fn search_order(f: &Formula, sig: &Signature) -> Vec<Var> {
    let fv = free_vars(f);
    let mut out: Vec<Var> = sig.constants.iter().filter(|c| fv.contains(*c)).cloned().collect();
    out.extend(fv.into_iter().filter(|v| !sig.constants.contains(v)));
    out
}

/// Exhaustive search for an assignment satisfying `f`, trying trees of size
/// at most `bounds.max_size` and element values from the bounds' domains.
/// The witness returned is the first in lexicographic order over
/// [`search_order`].
pub fn brute_force_sat(
    f: &Formula,
    sig: &Signature,
    interp: &Interp,
    bounds: &Bounds,
) -> Result<SearchResult, OracleError> {
    brute_force_with_order(f, &search_order(f, sig), sig, interp, bounds)
}

pub fn brute_force_with_order(
    f: &Formula,
    order: &[Var],
    sig: &Signature,
    interp: &Interp,
    bounds: &Bounds,
) -> Result<SearchResult, OracleError> {
    let ev = Evaluator::new(sig, interp);
    let cata_only = cata_only_vars(f);
    let mut candidates = Vec::with_capacity(order.len());
    for v in order {
        let mut vals = universe(sig, &v.sort, bounds)?;
        if let Some(cs) = cata_only.get(v) {
            // only the catamorphism values matter: keep the first tree of
            // each class
            let catas: Vec<&CataDef> = cs.iter().filter_map(|c| sig.cata(c)).collect();
            let mut seen = std::collections::HashSet::new();
            let mut kept = Vec::new();
            for t in vals {
                let key: Vec<Option<Value>> = catas.iter().map(|c| ev.eval_cata(c, &t).ok()).collect();
                if seen.insert(key) {
                    kept.push(t);
                }
            }
            vals = kept;
        }
        candidates.push(vals);
    }

    let index: HashMap<&Var, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut schedule: Vec<Vec<&Formula>> = vec![Vec::new(); order.len() + 1];
    for c in conjuncts(f) {
        let level = free_vars(c)
            .iter()
            .map(|v| index.get(v).map(|i| i + 1).ok_or_else(|| OracleError::Unbound(v.name.to_string())))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        schedule[level].push(c);
    }

    let mut env = Env::new();
    for c in &schedule[0] {
        if !ev.holds(c, &env)? {
            return Ok(SearchResult::NoModelWithinBounds);
        }
    }
    if search(&ev, order, &candidates, &schedule, 0, &mut env)? {
        Ok(SearchResult::Sat(Witness(order.iter().map(|v| (v.clone(), env[v].clone())).collect())))
    } else {
        Ok(SearchResult::NoModelWithinBounds)
    }
}

fn search(
    ev: &Evaluator<'_>,
    order: &[Var],
    candidates: &[Vec<Value>],
    schedule: &[Vec<&Formula>],
    i: usize,
    env: &mut Env,
) -> Result<bool, OracleError> {
    if i == order.len() {
        return Ok(true);
    }
    'values: for val in &candidates[i] {
        env.insert(order[i].clone(), val.clone());
        for c in &schedule[i + 1] {
            if !ev.holds(c, env)? {
                continue 'values;
            }
        }
        if search(ev, order, candidates, schedule, i + 1, env)? {
            return Ok(true);
        }
    }
    env.remove(&order[i]);
    Ok(false)
}

/// Catamorphism values of every tree within the bounds, in enumeration order.
fn cata_table(
    cata: &CataDef,
    sig: &Signature,
    interp: &Interp,
    max_size: usize,
    domain: &[Value],
) -> Result<(BinaryTreeView, Vec<(ConcreteTree, Value)>), OracleError> {
    let view = tree_view(sig, &Sort::Datatype(cata.input.clone()))
        .ok_or_else(|| OracleError::Unsupported(format!("{} is not a binary tree datatype", cata.input)))?;
    let ev = Evaluator::new(sig, interp);
    let mut out = Vec::new();
    for t in enumerate_trees(max_size, domain) {
        let v = ev.eval_cata(cata, &t.to_value(&view))?;
        out.push((t, v));
    }
    Ok((view, out))
}

/// Extends an assignment of a standard-form clause's variables to the
/// variables eliminated on the way to it, by evaluating the recorded
/// substitutions newest first. Variables bound nowhere, including those of
/// `wanted`, take the first value of their universe.
pub fn reconstruct(
    origin: &[crate::normalizer::Binding],
    assignment: &Env,
    wanted: impl IntoIterator<Item = Var>,
    sig: &Signature,
    interp: &Interp,
    bounds: &Bounds,
) -> Result<Env, OracleError> {
    let ev = Evaluator::new(sig, interp);
    let mut env = assignment.clone();
    let default = |env: &mut Env, u: Var| -> Result<(), OracleError> {
        if let std::collections::hash_map::Entry::Vacant(slot) = env.entry(u) {
            let sort = slot.key().sort.clone();
            let first = universe(sig, &sort, bounds)?.into_iter().next().ok_or(OracleError::NoDomain(sort))?;
            slot.insert(first);
        }
        Ok(())
    };
    for (v, t) in origin.iter().rev() {
        for u in t.free_vars() {
            default(&mut env, u)?;
        }
        let x = ev.eval(t, &env)?.ok_or_else(|| OracleError::Unsupported(format!("binding of {}", v.name)))?;
        env.insert(v.clone(), x);
    }
    for u in wanted {
        default(&mut env, u)?;
    }
    Ok(env)
}

/// Whether a solver model, read back as concrete values of the free
/// variables of `f`, satisfies `f` under the catamorphisms' definitions.
/// `None` when the answer depends on selectors applied to the wrong
/// constructor, whose values the solver leaves unspecified.
pub fn model_satisfies(
    f: &Formula,
    sig: &Signature,
    interp: &Interp,
    model: &str,
) -> Result<Option<bool>, OracleError> {
    let values = crate::backend::model_values(model);
    let ev = Evaluator::new(sig, interp);
    let mut env = Env::new();
    for v in free_vars(f) {
        let (_, text) = values
            .iter()
            .find(|(n, _)| n == v.name.as_str())
            .ok_or_else(|| OracleError::Unbound(v.name.to_string()))?;
        let t = crate::frontend::parse_term(text, sig)
            .map_err(|e| OracleError::Unsupported(format!("model value `{text}`: {e}")))?;
        let x = ev.eval(&t, &Env::new())?.ok_or_else(|| OracleError::Unsupported(format!("model value `{text}`")))?;
        env.insert(v, x);
    }
    if ev.holds(f, &env)? {
        Ok(Some(true))
    } else if ev.holds_lenient(f, &env)? {
        Ok(None)
    } else {
        Ok(Some(false))
    }
}

/// Value of a catamorphism on a concrete tree.
pub fn eval_cata(cata: &CataDef, t: &ConcreteTree, sig: &Signature, interp: &Interp) -> Result<Value, OracleError> {
    let view = tree_view(sig, &Sort::Datatype(cata.input.clone()))
        .ok_or_else(|| OracleError::Unsupported(format!("{} is not a binary tree datatype", cata.input)))?;
    Evaluator::new(sig, interp).eval_cata(cata, &t.to_value(&view))
}

/// Number of trees within the bounds that the catamorphism maps to the same
/// value as `t`: a lower bound on the size of the inverse image.
pub fn beta_bounded(
    cata: &CataDef,
    t: &ConcreteTree,
    sig: &Signature,
    interp: &Interp,
    max_size: usize,
    domain: &[Value],
) -> Result<usize, OracleError> {
    let target = eval_cata(cata, t, sig, interp)?;
    let (_, table) = cata_table(cata, sig, interp, max_size, domain)?;
    Ok(table.iter().filter(|(_, v)| *v == target).count())
}

/// Minimum of [`beta_bounded`] over the enumerated trees of height exactly `h`.
pub fn minbeta_bounded(
    cata: &CataDef,
    h: usize,
    sig: &Signature,
    interp: &Interp,
    max_size: usize,
    domain: &[Value],
) -> Result<usize, OracleError> {
    let (_, table) = cata_table(cata, sig, interp, max_size, domain)?;
    let mut counts: HashMap<&Value, usize> = HashMap::new();
    for (_, v) in &table {
        *counts.entry(v).or_default() += 1;
    }
    table.iter().filter(|(t, _)| t.height() == h).map(|(_, v)| counts[v]).min().ok_or(OracleError::NoTreeOfHeight(h))
}

/// `α(Leaf) ⊕ δ(e₁) ⊕ α(Leaf) ⊕ δ(e₂) ⊕ … ⊕ α(Leaf)` over the in-order
/// listing, folded left; requires an associative decomposition.
pub fn eval_flattened(
    cata: &CataDef,
    t: &ConcreteTree,
    sig: &Signature,
    interp: &Interp,
) -> Result<Value, OracleError> {
    let assoc = cata
        .assoc
        .as_ref()
        .ok_or_else(|| OracleError::Unsupported(format!("{} has no associative decomposition", cata.name)))?;
    let ev = Evaluator::new(sig, interp);
    let empty = ev
        .eval(cata.empty().expect("catamorphism without base case"), &Env::new())?
        .ok_or_else(|| OracleError::Unsupported("undefined base value".into()))?;
    let a = Var::new("#a", cata.result.clone());
    let b = Var::new("#b", cata.result.clone());
    let op_term = assoc.op.apply(Term::Var(a.clone()), Term::Var(b.clone()));
    let combine = |x: Value, y: Value| -> Result<Value, OracleError> {
        let env: Env = [(a.clone(), x), (b.clone(), y)].into_iter().collect();
        ev.eval(&op_term, &env)?.ok_or_else(|| OracleError::Unsupported("undefined operator value".into()))
    };
    let mut acc = empty.clone();
    for e in t.inorder() {
        let env: Env = [(assoc.delta_var.clone(), e)].into_iter().collect();
        let d =
            ev.eval(&assoc.delta, &env)?.ok_or_else(|| OracleError::Unsupported("undefined element image".into()))?;
        acc = combine(acc, d)?;
        acc = combine(acc, empty.clone())?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_script;

    const SUMTREE: &str = "\
(declare-datatypes () ((RealTree (Leaf) (Node (left RealTree) (elem Real) (right RealTree)))))
(define-catamorphism SumTree ((t RealTree)) Real
  (ite (is-Leaf t) 0.0 (+ (SumTree (left t)) (elem t) (SumTree (right t)))))
(declare-fun t1 () RealTree)
(declare-fun t2 () RealTree)
(declare-fun t3 () RealTree)
(assert (= t1 (Node t2 5.0 t3)))
(assert (= (SumTree t1) 5.0))
(check-sat)
";

    fn real(n: i64) -> Value {
        Value::Real(num_rational::Rational64::from_integer(n))
    }

    #[test]
    fn sumtree_smallest_witness() {
        let s = parse_script(SUMTREE).unwrap();
        let b = Bounds::new(5, vec![real(0), real(5)]);
        let r = brute_force_sat(&s.formula(), &s.signature, &Interp::new(), &b).unwrap();
        let SearchResult::Sat(w) = r else { panic!("expected a model") };
        assert_eq!(w.get("t1").unwrap().to_string(), "(Node Leaf 5.0 Leaf)");
        assert_eq!(w.get("t2").unwrap().to_string(), "Leaf");
        assert_eq!(w.get("t3").unwrap().to_string(), "Leaf");
    }

    #[test]
    fn self_disequality_has_no_model() {
        let s = parse_script(&SUMTREE.replace("(assert (= (SumTree t1) 5.0))", "(assert (distinct t2 t2))")).unwrap();
        let b = Bounds::new(5, vec![real(0)]);
        assert_eq!(
            brute_force_sat(&s.formula(), &s.signature, &Interp::new(), &b).unwrap(),
            SearchResult::NoModelWithinBounds
        );
    }

    #[test]
    fn strict_selectors_make_literals_false_in_both_polarities() {
        let s = parse_script(SUMTREE).unwrap();
        let sig = &s.signature;
        let leaf_env: Env = [(sig.constants[0].clone(), Value::data("Leaf", vec![]))].into_iter().collect();
        let interp = Interp::new();
        let ev = Evaluator::new(sig, &interp);
        let pos = crate::frontend::parse_formula("(= (elem t1) 1.0)", sig).unwrap();
        let neg = crate::frontend::parse_formula("(not (= (elem t1) 1.0))", sig).unwrap();
        assert!(!ev.holds(&pos, &leaf_env).unwrap());
        assert!(!ev.holds(&neg, &leaf_env).unwrap());
    }
}
