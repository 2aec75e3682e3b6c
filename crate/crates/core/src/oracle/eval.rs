use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};

use super::{OracleError, Value};
use crate::ast::{Atom, CataDef, Formula, Op, Signature, Symbol, Term, Var};

/// Interpretation of the uninterpreted function symbols, as finite tables.
#[derive(Clone, Debug, Default)]
pub struct Interp {
    tables: HashMap<Symbol, UfTable>,
}

#[derive(Clone, Debug, Default)]
pub struct UfTable {
    pub entries: BTreeMap<Vec<Value>, Value>,
    pub default: Option<Value>,
}

impl Interp {
    pub fn new() -> Self {
        Self::default()
    }

    /// A unary predicate true exactly on `members`.
    pub fn with_predicate(mut self, name: &str, members: impl IntoIterator<Item = Value>) -> Self {
        let entries = members.into_iter().map(|m| (vec![m], Value::Bool(true))).collect();
        self.tables.insert(name.into(), UfTable { entries, default: Some(Value::Bool(false)) });
        self
    }

    pub fn with_table(mut self, name: &str, table: UfTable) -> Self {
        self.tables.insert(name.into(), table);
        self
    }

    pub fn lookup(&self, name: &Symbol, args: &[Value]) -> Result<Value, OracleError> {
        let table = self.tables.get(name).ok_or_else(|| OracleError::Uninterpreted(name.to_string()))?;
        table
            .entries
            .get(args)
            .or(table.default.as_ref())
            .cloned()
            .ok_or_else(|| OracleError::Uninterpreted(format!("{name} at {args:?}")))
    }
}

pub type Env = HashMap<Var, Value>;

/// Evaluates terms and formulas under strict selector semantics: a selector
/// applied to a value built with another constructor has no value, and any
/// literal that needs such a value is false regardless of its polarity.
pub struct Evaluator<'a> {
    pub sig: &'a Signature,
    pub interp: &'a Interp,
}

fn type_error(what: &str) -> OracleError {
    OracleError::Unsupported(format!("ill-typed value in {what}"))
}

fn int_op(
    a: &Value,
    b: &Value,
    f: impl Fn(i64, i64) -> Option<i64>,
    g: impl Fn(Rational64, Rational64) -> Option<Rational64>,
) -> Result<Value, OracleError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => f(*x, *y).map(Value::Int).ok_or(OracleError::Overflow),
        (Value::Real(x), Value::Real(y)) => g(*x, *y).map(Value::Real).ok_or(OracleError::Overflow),
        _ => Err(type_error("arithmetic")),
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(sig: &'a Signature, interp: &'a Interp) -> Self {
        Evaluator { sig, interp }
    }

    /// `Ok(None)` when the term has no value (strict selectors, division by
    /// zero).
    pub fn eval(&self, t: &Term, env: &Env) -> Result<Option<Value>, OracleError> {
        Ok(Some(match t {
            Term::Var(v) => env.get(v).cloned().ok_or_else(|| OracleError::Unbound(v.name.to_string()))?,
            Term::Lit(l) => Value::from_literal(l),
            Term::Ctor { ctor, args } => {
                let mut fields = Vec::with_capacity(args.len());
                for a in args {
                    let Some(v) = self.eval(a, env)? else { return Ok(None) };
                    fields.push(v);
                }
                Value::data(ctor.clone(), fields)
            }
            Term::Select { selector, arg } => {
                let Some(v) = self.eval(arg, env)? else { return Ok(None) };
                let (_, c, i) =
                    self.sig.selector(selector).ok_or_else(|| OracleError::Uninterpreted(selector.to_string()))?;
                match v {
                    Value::Data { ctor, fields } if ctor == c.name => fields[i].clone(),
                    Value::Data { .. } => return Ok(None),
                    _ => return Err(type_error("selector")),
                }
            }
            Term::Test { ctor, arg } => {
                let Some(v) = self.eval(arg, env)? else { return Ok(None) };
                match v {
                    Value::Data { ctor: c, .. } => Value::Bool(&c == ctor),
                    _ => return Err(type_error("tester")),
                }
            }
            Term::Cata { cata, arg } => {
                let Some(v) = self.eval(arg, env)? else { return Ok(None) };
                let c = self.sig.cata(cata).ok_or_else(|| OracleError::Uninterpreted(cata.to_string()))?;
                return self.eval_cata_opt(c, &v);
            }
            Term::Apply { func, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    let Some(v) = self.eval(a, env)? else { return Ok(None) };
                    vals.push(v);
                }
                if let Some(d) = self.sig.define(func) {
                    let inner: Env = d.params.iter().cloned().zip(vals).collect();
                    return self.eval(&d.body, &inner);
                }
                self.interp.lookup(func, &vals)?
            }
            Term::Op { op, args } => return self.eval_op(op, args, env),
        }))
    }

    fn eval_all(&self, args: &[Term], env: &Env) -> Result<Option<Vec<Value>>, OracleError> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            match self.eval(a, env)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn eval_op(&self, op: &Op, args: &[Term], env: &Env) -> Result<Option<Value>, OracleError> {
        if let Op::Ite = op {
            let Some(c) = self.eval(&args[0], env)? else { return Ok(None) };
            let c = c.as_bool().ok_or_else(|| type_error("ite"))?;
            return self.eval(&args[if c { 1 } else { 2 }], env);
        }
        let Some(vs) = self.eval_all(args, env)? else { return Ok(None) };
        let bools = || -> Result<Vec<bool>, OracleError> {
            vs.iter().map(|v| v.as_bool().ok_or_else(|| type_error("boolean connective"))).collect()
        };
        let cmp = |f: fn(std::cmp::Ordering) -> bool| -> Result<Option<Value>, OracleError> {
            Ok(Some(Value::Bool(vs.windows(2).all(|w| f(w[0].cmp(&w[1]))))))
        };
        Ok(Some(match op {
            Op::Not => Value::Bool(!bools()?[0]),
            Op::And => Value::Bool(bools()?.into_iter().all(|b| b)),
            Op::Or => Value::Bool(bools()?.into_iter().any(|b| b)),
            Op::Xor => Value::Bool(bools()?.into_iter().fold(false, |a, b| a ^ b)),
            Op::Implies => {
                let bs = bools()?;
                let (last, init) = bs.split_last().unwrap();
                // right associative: a => (b => c)
                Value::Bool(init.iter().rev().fold(*last, |acc, &a| !a || acc))
            }
            Op::Eq => Value::Bool(vs.windows(2).all(|w| w[0] == w[1])),
            Op::Distinct => {
                let mut all = true;
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        all &= vs[i] != vs[j];
                    }
                }
                Value::Bool(all)
            }
            Op::Ite => unreachable!(),
            Op::Add => {
                let mut acc = vs[0].clone();
                for v in &vs[1..] {
                    acc = int_op(&acc, v, i64::checked_add, |a, b| a.checked_add(&b))?;
                }
                acc
            }
            Op::Mul => {
                let mut acc = vs[0].clone();
                for v in &vs[1..] {
                    acc = int_op(&acc, v, i64::checked_mul, |a, b| a.checked_mul(&b))?;
                }
                acc
            }
            Op::Sub if vs.len() == 1 => match &vs[0] {
                Value::Int(n) => Value::Int(n.checked_neg().ok_or(OracleError::Overflow)?),
                Value::Real(r) => Value::Real(-r),
                _ => return Err(type_error("negation")),
            },
            Op::Sub => {
                let mut acc = vs[0].clone();
                for v in &vs[1..] {
                    acc = int_op(&acc, v, i64::checked_sub, |a, b| a.checked_sub(&b))?;
                }
                acc
            }
            Op::Div => {
                let mut acc = vs[0].clone();
                for v in &vs[1..] {
                    match (&acc, v) {
                        (Value::Real(_), Value::Real(d)) if d.is_zero() => return Ok(None),
                        _ => acc = int_op(&acc, v, |_, _| None, |a, b| a.checked_div(&b))?,
                    }
                }
                acc
            }
            Op::IntDiv | Op::Mod => match (&vs[0], &vs[1]) {
                (Value::Int(_), Value::Int(0)) => return Ok(None),
                (Value::Int(a), Value::Int(b)) => {
                    Value::Int(if *op == Op::IntDiv { a.div_euclid(*b) } else { a.rem_euclid(*b) })
                }
                _ => return Err(type_error("div/mod")),
            },
            Op::Abs => match &vs[0] {
                Value::Int(n) => Value::Int(n.checked_abs().ok_or(OracleError::Overflow)?),
                Value::Real(r) => Value::Real(r.abs()),
                _ => return Err(type_error("abs")),
            },
            Op::Lt => return cmp(|o| o.is_lt()),
            Op::Le => return cmp(|o| o.is_le()),
            Op::Gt => return cmp(|o| o.is_gt()),
            Op::Ge => return cmp(|o| o.is_ge()),
            Op::SetEmpty(_) => Value::Set(Default::default()),
            Op::SetSingleton(_) => Value::Set([vs[0].clone()].into_iter().collect()),
            Op::SetUnion | Op::SetInter | Op::SetMinus => {
                let sets: Vec<&std::collections::BTreeSet<Value>> = vs
                    .iter()
                    .map(|v| match v {
                        Value::Set(s) => Ok(s),
                        _ => Err(type_error("set operator")),
                    })
                    .collect::<Result<_, _>>()?;
                let mut acc = sets[0].clone();
                for s in &sets[1..] {
                    acc = match op {
                        Op::SetUnion => acc.union(s).cloned().collect(),
                        Op::SetInter => acc.intersection(s).cloned().collect(),
                        _ => acc.difference(s).cloned().collect(),
                    };
                }
                Value::Set(acc)
            }
            Op::SetMember => match &vs[1] {
                Value::Set(s) => Value::Bool(s.contains(&vs[0])),
                _ => return Err(type_error("set.member")),
            },
            Op::SetSubset => match (&vs[0], &vs[1]) {
                (Value::Set(a), Value::Set(b)) => Value::Bool(a.is_subset(b)),
                _ => return Err(type_error("set.subset")),
            },
            Op::BagEmpty(_) => Value::Bag(Default::default()),
            Op::BagMake(_) => match &vs[1] {
                Value::Int(n) if *n > 0 => Value::Bag([(vs[0].clone(), *n as u64)].into_iter().collect()),
                Value::Int(_) => Value::Bag(Default::default()),
                _ => return Err(type_error("bag")),
            },
            Op::BagUnion => {
                let mut acc: BTreeMap<Value, u64> = BTreeMap::new();
                for v in &vs {
                    let Value::Bag(b) = v else { return Err(type_error("bag.union_disjoint")) };
                    for (k, n) in b {
                        *acc.entry(k.clone()).or_insert(0) += n;
                    }
                }
                Value::Bag(acc)
            }
            Op::BagCount => match &vs[1] {
                Value::Bag(b) => Value::Int(b.get(&vs[0]).copied().unwrap_or(0) as i64),
                _ => return Err(type_error("bag.count")),
            },
            Op::SeqEmpty(_) => Value::Seq(vec![]),
            Op::SeqUnit(_) => Value::Seq(vec![vs[0].clone()]),
            Op::SeqConcat => {
                let mut acc = Vec::new();
                for v in &vs {
                    let Value::Seq(s) = v else { return Err(type_error("seq.++")) };
                    acc.extend(s.iter().cloned());
                }
                Value::Seq(acc)
            }
            Op::SeqLen => match &vs[0] {
                Value::Seq(s) => Value::Int(s.len() as i64),
                _ => return Err(type_error("seq.len")),
            },
        }))
    }

    fn eval_cata_opt(&self, cata: &CataDef, v: &Value) -> Result<Option<Value>, OracleError> {
        let Value::Data { ctor, fields } = v else { return Err(type_error("catamorphism argument")) };
        let case =
            cata.case(ctor).ok_or_else(|| OracleError::Unsupported(format!("{} has no case for {ctor}", cata.name)))?;
        let mut env = Env::with_capacity(case.binders.len());
        for (b, f) in case.binders.iter().zip(fields.iter()) {
            let val = if b.recursive {
                match self.eval_cata_opt(cata, f)? {
                    Some(x) => x,
                    None => return Ok(None),
                }
            } else {
                f.clone()
            };
            env.insert(b.var.clone(), val);
        }
        self.eval(&case.body, &env)
    }

    /// The catamorphism value of a concrete datatype value.
    pub fn eval_cata(&self, cata: &CataDef, v: &Value) -> Result<Value, OracleError> {
        self.eval_cata_opt(cata, v)?
            .ok_or_else(|| OracleError::Unsupported(format!("{} is undefined on {v}", cata.name)))
    }

    pub fn eval_atom(&self, a: &Atom, env: &Env) -> Result<Option<bool>, OracleError> {
        Ok(match a {
            Atom::Eq(x, y) | Atom::Diseq(x, y) => {
                let (Some(vx), Some(vy)) = (self.eval(x, env)?, self.eval(y, env)?) else { return Ok(None) };
                Some((vx == vy) == matches!(a, Atom::Eq(..)))
            }
            Atom::Pred(p) => match self.eval(p, env)? {
                Some(v) => Some(v.as_bool().ok_or_else(|| type_error("predicate"))?),
                None => None,
            },
        })
    }

    /// Truth of `f` under strict semantics.
    pub fn holds(&self, f: &Formula, env: &Env) -> Result<bool, OracleError> {
        self.holds_pol(f, true, env, false)
    }

    /// Truth of `f` when every undefined atom may take whichever value
    /// helps. False here means no choice of the unspecified values helps.
    pub fn holds_lenient(&self, f: &Formula, env: &Env) -> Result<bool, OracleError> {
        self.holds_pol(f, true, env, true)
    }

    fn holds_pol(&self, f: &Formula, pol: bool, env: &Env, undef: bool) -> Result<bool, OracleError> {
        Ok(match f {
            Formula::Atom(a) => match self.eval_atom(a, env)? {
                Some(b) => b == pol,
                None => undef,
            },
            Formula::Not(g) => self.holds_pol(g, !pol, env, undef)?,
            Formula::And(fs) if pol => {
                for g in fs {
                    if !self.holds_pol(g, true, env, undef)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(fs) if !pol => {
                for g in fs {
                    if !self.holds_pol(g, false, env, undef)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::And(fs) | Formula::Or(fs) => {
                for g in fs {
                    if self.holds_pol(g, pol, env, undef)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => {
                if pol {
                    self.holds_pol(a, false, env, undef)? || self.holds_pol(b, true, env, undef)?
                } else {
                    self.holds_pol(a, true, env, undef)? && self.holds_pol(b, false, env, undef)?
                }
            }
            Formula::Iff(a, b) => {
                let (at, af) = (self.holds_pol(a, true, env, undef)?, self.holds_pol(a, false, env, undef)?);
                let (bt, bf) = (self.holds_pol(b, true, env, undef)?, self.holds_pol(b, false, env, undef)?);
                if pol {
                    (at && bt) || (af && bf)
                } else {
                    (at && bf) || (af && bt)
                }
            }
        })
    }
}
