use std::fmt;

use crate::ast::{CataDef, Formula, Signature, Sort, Symbol, Term, Var};
use crate::backend::{model_values, SatVerdict, Session};
use crate::frontend::{print_formula, print_sort, signature_declarations};

use super::AnalysisError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    AssociativeSyntactic,
    AssociativeSemantic,
    RangeOverapprox,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::AssociativeSyntactic => "associative-syntactic",
            Property::AssociativeSemantic => "associative-semantic",
            Property::RangeOverapprox => "range-overapprox",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnalysisResult {
    Holds,
    /// Holds under the assumption that the range predicate is exact.
    HoldsRelativeToRange,
    /// A counterexample: a one-line summary and the raw model text.
    Fails {
        summary: String,
        model: String,
    },
    Unknown(String),
    NotApplicable(String),
}

impl AnalysisResult {
    pub fn holds(&self) -> bool {
        matches!(self, AnalysisResult::Holds | AnalysisResult::HoldsRelativeToRange)
    }

    pub fn fails(&self) -> bool {
        matches!(self, AnalysisResult::Fails { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisVerdict {
    pub cata: Symbol,
    pub property: Property,
    pub result: AnalysisResult,
}

impl fmt::Display for AnalysisVerdict {
    /// `PROPERTY RESULT [counterexample]` on one line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] ", self.property, self.cata)?;
        match &self.result {
            AnalysisResult::Holds => f.write_str("holds"),
            AnalysisResult::HoldsRelativeToRange => f.write_str("holds-relative-to-range"),
            AnalysisResult::Fails { summary, .. } => write!(f, "fails {summary}"),
            AnalysisResult::Unknown(why) => write!(f, "unknown ({why})"),
            AnalysisResult::NotApplicable(why) => write!(f, "not-applicable ({why})"),
        }
    }
}

/// Fresh query variables, avoiding every declared symbol.
fn fresh_vars(sig: &Signature, specs: &[(&str, Sort)]) -> Vec<Var> {
    let mut k = 0;
    loop {
        let names: Vec<String> =
            specs.iter().map(|(n, _)| if k == 0 { n.to_string() } else { format!("{n}_{k}") }).collect();
        if names.iter().all(|n| !sig.is_declared(&Symbol::new(n))) {
            return names.into_iter().zip(specs).map(|(n, (_, s))| Var::new(n, s.clone())).collect();
        }
        k += 1;
    }
}

fn node_elem_sort(cata: &CataDef, sig: &Signature) -> Result<Sort, AnalysisError> {
    sig.datatype(&cata.input)
        .and_then(|d| d.binary_view())
        .map(|v| v.elem_sort)
        .ok_or_else(|| AnalysisError::Incompatible(format!("{} is not over a binary tree datatype", cata.name)))
}

/// Runs one satisfiability query in its own frame: declarations, variable
/// declarations and assertions are all popped afterwards.
fn query(
    session: &mut Session,
    sig: &Signature,
    vars: &[Var],
    assertions: &[Formula],
) -> Result<Outcome, AnalysisError> {
    let d = session.dialect();
    let depth = session.depth();
    session.push()?;
    let r = (|| {
        for decl in signature_declarations(sig, d) {
            session.send(&decl)?;
        }
        for v in vars {
            session.send(&format!("(declare-fun {} () {})", v.name, print_sort(&v.sort, d)))?;
        }
        for a in assertions {
            session.assert(&print_formula(a, d))?;
        }
        let r = session.check()?;
        Ok::<_, AnalysisError>(match r.verdict {
            SatVerdict::Unsat => Outcome::Unsat,
            SatVerdict::Unknown => Outcome::Unknown,
            SatVerdict::Sat => Outcome::Sat(session.get_model()?),
        })
    })();
    if session.is_alive() && session.depth() > depth {
        session.pop()?;
    }
    r
}

enum Outcome {
    Sat(String),
    Unsat,
    Unknown,
}

fn summarize(model: &str, vars: &[Var]) -> String {
    let vals = model_values(model);
    let parts: Vec<String> = vars
        .iter()
        .filter_map(|v| vals.iter().find(|(n, _)| n == v.name.as_str()).map(|(n, x)| format!("{n}={x}")))
        .collect();
    parts.join(" ")
}

fn verdict(cata: &CataDef, property: Property, o: Outcome, vars: &[Var], holds: AnalysisResult) -> AnalysisVerdict {
    let result = match o {
        Outcome::Unsat => holds,
        Outcome::Unknown => AnalysisResult::Unknown("solver returned unknown".into()),
        Outcome::Sat(model) => AnalysisResult::Fails { summary: summarize(&model, vars), model },
    };
    AnalysisVerdict { cata: cata.name.clone(), property, result }
}

/// Associativity of ⊕ on the range: `R(a) ∧ R(b) ∧ R(c) ∧ (a⊕b)⊕c ≠ a⊕(b⊕c)`
/// is unsatisfiable.
pub fn detect_associative_syntactic(
    cata: &CataDef,
    sig: &Signature,
    session: &mut Session,
) -> Result<AnalysisVerdict, AnalysisError> {
    let Some(assoc) = &cata.assoc else {
        return Ok(AnalysisVerdict {
            cata: cata.name.clone(),
            property: Property::AssociativeSyntactic,
            result: AnalysisResult::NotApplicable("no associative decomposition".into()),
        });
    };
    let r = cata.range_or_trivial();
    let vars = fresh_vars(sig, &[("a", cata.result.clone()), ("b", cata.result.clone()), ("c", cata.result.clone())]);
    let [a, b, c] = [0, 1, 2].map(|i| Term::Var(vars[i].clone()));
    let mut fs: Vec<Formula> = [&a, &b, &c].iter().map(|x| Formula::pred(r.apply((*x).clone()))).collect();
    let lhs = assoc.op.apply(assoc.op.apply(a.clone(), b.clone()), c.clone());
    let rhs = assoc.op.apply(a, assoc.op.apply(b, c));
    fs.push(Formula::diseq(lhs, rhs));
    let o = query(session, sig, &vars, &fs)?;
    Ok(verdict(cata, Property::AssociativeSyntactic, o, &vars, AnalysisResult::Holds))
}

/// Rotation invariance of the whole combine step:
/// `combine(c1, e1, combine(c2, e2, c3)) ≠ combine(combine(c1, e1, c2), e2, c3)`
/// over range values is unsatisfiable. Only as strong as the range
/// predicate is exact.
pub fn detect_associative_semantic(
    cata: &CataDef,
    sig: &Signature,
    session: &mut Session,
) -> Result<AnalysisVerdict, AnalysisError> {
    let elem = node_elem_sort(cata, sig)?;
    let r = cata.range_or_trivial();
    let vars = fresh_vars(
        sig,
        &[
            ("c1", cata.result.clone()),
            ("c2", cata.result.clone()),
            ("c3", cata.result.clone()),
            ("e1", elem.clone()),
            ("e2", elem),
        ],
    );
    let [c1, c2, c3, e1, e2] = [0, 1, 2, 3, 4].map(|i| Term::Var(vars[i].clone()));
    let mut fs: Vec<Formula> = [&c1, &c2, &c3].iter().map(|x| Formula::pred(r.apply((*x).clone()))).collect();
    let right_nested = cata.combine(c1.clone(), e1.clone(), cata.combine(c2.clone(), e2.clone(), c3.clone()));
    let left_nested = cata.combine(cata.combine(c1, e1, c2), e2, c3);
    fs.push(Formula::diseq(right_nested, left_nested));
    let o = query(session, sig, &vars, &fs)?;
    Ok(verdict(cata, Property::AssociativeSemantic, o, &vars, AnalysisResult::HoldsRelativeToRange))
}

/// Both associativity checks; the syntactic one is not applicable without
/// an associative decomposition.
pub fn classify_associative(
    cata: &CataDef,
    sig: &Signature,
    session: &mut Session,
) -> Result<[AnalysisVerdict; 2], AnalysisError> {
    Ok([detect_associative_syntactic(cata, sig, session)?, detect_associative_semantic(cata, sig, session)?])
}

/// Inductive over-approximation check of the range predicate: the base
/// value satisfies it, and combine preserves it.
pub fn check_range_overapprox(
    cata: &CataDef,
    sig: &Signature,
    session: &mut Session,
) -> Result<AnalysisVerdict, AnalysisError> {
    let r = cata.range_or_trivial();
    let empty =
        cata.empty().ok_or_else(|| AnalysisError::Incompatible(format!("{} has no base case", cata.name)))?.clone();
    let base = query(session, sig, &[], &[Formula::not(Formula::pred(r.apply(empty.clone())))])?;
    if !matches!(base, Outcome::Unsat) {
        let mut v = verdict(cata, Property::RangeOverapprox, base, &[], AnalysisResult::Holds);
        if let AnalysisResult::Fails { summary, .. } = &mut v.result {
            *summary = format!("base case: empty = {}", crate::frontend::print_term(&empty));
        }
        return Ok(v);
    }
    let elem = node_elem_sort(cata, sig)?;
    let vars = fresh_vars(sig, &[("c1", cata.result.clone()), ("c2", cata.result.clone()), ("e", elem)]);
    let [c1, c2, e] = [0, 1, 2].map(|i| Term::Var(vars[i].clone()));
    let fs = vec![
        Formula::pred(r.apply(c1.clone())),
        Formula::pred(r.apply(c2.clone())),
        Formula::not(Formula::pred(r.apply(cata.combine(c1, e, c2)))),
    ];
    let o = query(session, sig, &vars, &fs)?;
    let mut v = verdict(cata, Property::RangeOverapprox, o, &vars, AnalysisResult::Holds);
    if let AnalysisResult::Fails { summary, .. } = &mut v.result {
        *summary = format!("step case: {summary}");
    }
    Ok(v)
}
