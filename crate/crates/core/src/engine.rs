//! The unrolling decision loop.
//!
//! Catamorphism applications are sent to the solver as uninterpreted
//! functions. Each round asserts the defining equation of the catamorphism
//! on the current frontier, checks with control conditions (every frontier
//! node is a base constructor, so no uninterpreted value is used) and, when
//! that fails, checks again with range restrictions on the uninterpreted
//! values below the frontier.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use log::{debug, warn};
use thiserror::Error;

use crate::analysis::{unroll_bound, BoundReport};
use crate::ast::{substitute_unchecked, well_sorted, CataClass, CataDef, Op, Script, Signature, Symbol, Term, Var};
use crate::backend::{BackendError, SatVerdict, Session};
use crate::frontend::{
    core_declarations, generated_cat_define, generated_unroll_define, print_formula, print_term_in, unroll_define_name,
    Dialect,
};
use crate::normalizer::{Binding, NormalizeError, Normalizer};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("catamorphism {0} has no range predicate (required by --bound-mode strict)")]
    MissingRange(Symbol),
    #[error("no unrolling bound under --bound-mode strict: {0}")]
    NoBound(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// How the early-termination bound is used.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundUse {
    /// Never stop early; UNKNOWN when the unrolling budget runs out.
    Off,
    /// Stop with SAT-BY-BOUND when every catamorphism has a declared class
    /// and range predicate.
    #[default]
    Auto,
    /// Like `Auto`, but a missing range predicate or class is an error.
    Strict,
}

impl std::str::FromStr for BoundUse {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(BoundUse::Off),
            "auto" => Ok(BoundUse::Auto),
            "strict" => Ok(BoundUse::Strict),
            _ => Err(format!("unknown bound mode `{s}` (expected off, auto or strict)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_unroll: usize,
    pub bound_use: BoundUse,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_unroll: 64, bound_use: BoundUse::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat {
        model: Option<String>,
    },
    Unsat,
    /// The bound was reached with the range check still satisfiable.
    SatByBound,
    Unknown(UnknownReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    MaxUnroll,
    SolverUnknown,
    /// The solver crashed, misbehaved or could not be talked to.
    Backend(String),
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::MaxUnroll => f.write_str("max-unroll reached"),
            UnknownReason::SolverUnknown => f.write_str("solver returned unknown"),
            UnknownReason::Backend(m) => write!(f, "backend: {m}"),
        }
    }
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Sat { .. } => "sat",
            Outcome::Unsat => "unsat",
            Outcome::SatByBound => "sat-by-bound",
            Outcome::Unknown(_) => "unknown",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Unknown(r) => write!(f, "unknown ({r})"),
            o => f.write_str(o.label()),
        }
    }
}

/// The two checks of one depth. Depth 0 has no control check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub depth: usize,
    pub with_controls: Option<SatVerdict>,
    pub with_ranges: Option<SatVerdict>,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub rounds: Vec<Round>,
    pub depth: usize,
    pub bound: Option<usize>,
}

/// Frontier of one catamorphism.
#[derive(Clone, Debug)]
struct Frontier {
    cata: CataDef,
    nodes: Vec<Term>,
}

/// Frontier, control conditions and range restrictions of a run.
#[derive(Clone, Debug)]
pub struct UnrollState {
    frontiers: Vec<Frontier>,
    pub depth: usize,
    recursive: Vec<(Symbol, Vec<Symbol>)>,
    base: Vec<(Symbol, Vec<Symbol>)>,
}

impl UnrollState {
    /// Collects the initial frontier: the arguments of every catamorphism
    /// application, grouped by catamorphism.
    pub fn init(script: &Script) -> UnrollState {
        let sig = &script.signature;
        let mut frontiers: Vec<Frontier> = Vec::new();
        for (name, arg) in script.cata_applications() {
            let cata = sig.cata(&name).expect("declared catamorphism").clone();
            match frontiers.iter_mut().find(|f| f.cata.name == name) {
                Some(f) => f.nodes.push(arg),
                None => frontiers.push(Frontier { cata, nodes: vec![arg] }),
            }
        }
        let mut recursive = Vec::new();
        let mut base = Vec::new();
        for dt in &sig.datatypes {
            let me = Some(&dt.name);
            let sels = dt
                .constructors
                .iter()
                .flat_map(|c| &c.fields)
                .filter(|f| f.sort.datatype_name() == me)
                .map(|f| f.selector.clone())
                .collect();
            recursive.push((dt.name.clone(), sels));
            base.push((dt.name.clone(), dt.base_constructors().map(|c| c.name.clone()).collect()));
        }
        UnrollState { frontiers, depth: 0, recursive, base }
    }

    pub fn is_empty(&self) -> bool {
        self.frontiers.iter().all(|f| f.nodes.is_empty())
    }

    pub fn frontier(&self) -> Vec<(Symbol, Term)> {
        self.frontiers.iter().flat_map(|f| f.nodes.iter().map(|n| (f.cata.name.clone(), n.clone()))).collect()
    }

    fn lookup<'s>(table: &'s [(Symbol, Vec<Symbol>)], dt: &Symbol) -> &'s [Symbol] {
        table.iter().find(|(n, _)| n == dt).map(|(_, v)| v.as_slice()).unwrap_or(&[])
    }

    /// Defining-equation assertions for the current frontier.
    pub fn equations(&self, d: Dialect) -> Vec<String> {
        self.frontiers
            .iter()
            .flat_map(|f| {
                let name = unroll_define_name(&f.cata);
                f.nodes.iter().map(move |n| format!("({name} {})", print_term_in(n, d)))
            })
            .collect()
    }

    /// Control conditions: each frontier node is a base constructor.
    pub fn controls(&self, d: Dialect) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.frontiers {
            let ctors = Self::lookup(&self.base, &f.cata.input);
            for n in &f.nodes {
                let tests: Vec<Term> = ctors.iter().map(|c| Term::test(c.clone(), n.clone())).collect();
                let t = if tests.len() == 1 { tests.into_iter().next().unwrap() } else { Term::op(Op::Or, tests) };
                out.push(print_term_in(&t, d));
            }
        }
        out
    }

    /// Range restrictions on the uninterpreted values of the given frontier.
    pub fn ranges(&self, d: Dialect) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.frontiers {
            let Some(r) = &f.cata.range else { continue };
            if r.body.is_true() {
                continue;
            }
            for n in &f.nodes {
                out.push(print_term_in(&r.apply(Term::cata(f.cata.name.clone(), n.clone())), d));
            }
        }
        out
    }

    /// The frontier one level down: every recursive-selector child.
    pub fn children(&self) -> UnrollState {
        let frontiers = self
            .frontiers
            .iter()
            .map(|f| {
                let sels = Self::lookup(&self.recursive, &f.cata.input);
                let mut nodes: Vec<Term> = Vec::new();
                for n in &f.nodes {
                    for s in sels {
                        let c = Term::select(s.clone(), n.clone());
                        if !nodes.contains(&c) {
                            nodes.push(c);
                        }
                    }
                }
                Frontier { cata: f.cata.clone(), nodes }
            })
            .collect();
        UnrollState { frontiers, depth: self.depth + 1, recursive: self.recursive.clone(), base: self.base.clone() }
    }
}

/// Constructor depth of a catamorphism argument once the substitutions a
/// standard-form clause was derived with are applied: the frontier depth
/// at which that clause's variables are reached.
fn argument_depth(arg: &Term, origin: &[Binding], sig: &Signature) -> usize {
    let map: BTreeMap<Var, Term> = origin.iter().cloned().collect();
    let mut t = arg.clone();
    loop {
        let next = substitute_unchecked(&t, &map).map_bottom_up(&mut |n| match &n {
            Term::Select { selector, arg } => match arg.as_ref() {
                Term::Ctor { ctor, args } => match sig.selector(selector) {
                    Some((_, c, i)) if &c.name == ctor => args[i].clone(),
                    _ => n,
                },
                _ => n,
            },
            _ => n,
        });
        if next == t {
            break;
        }
        t = next;
    }
    fn depth(t: &Term, sig: &Signature) -> usize {
        match t {
            Term::Ctor { args, .. } => {
                let tree = |a: &&Term| well_sorted(a, sig).is_ok_and(|s| sig.is_tree_sort(&s));
                1 + args.iter().filter(tree).map(|a| depth(a, sig)).max().unwrap_or(0)
            }
            _ => 0,
        }
    }
    depth(&t, sig)
}

/// The early-termination depth, when every catamorphism admits one.
pub fn termination_bound(
    script: &Script,
    bound_use: BoundUse,
) -> Result<Option<(usize, Vec<BoundReport>)>, EngineError> {
    if bound_use == BoundUse::Off {
        return Ok(None);
    }
    let strict = bound_use == BoundUse::Strict;
    let catas: Vec<&CataDef> = {
        let mut seen: Vec<&CataDef> = Vec::new();
        for (n, _) in script.cata_applications() {
            let c = script.signature.cata(&n).expect("declared catamorphism");
            if !seen.iter().any(|s| s.name == c.name) {
                seen.push(c);
            }
        }
        seen
    };
    for c in &catas {
        if c.range.is_none() {
            if strict {
                return Err(EngineError::MissingRange(c.name.clone()));
            }
            return Ok(None);
        }
        if c.class == CataClass::Unclassified {
            if strict {
                return Err(EngineError::NoBound(format!("{} has no declared class", c.name)));
            }
            return Ok(None);
        }
    }
    let clauses = match Normalizer::new(&script.signature).to_standard_form(&script.formula()) {
        Ok(c) => c,
        Err(e) if strict => return Err(e.into()),
        Err(e) => {
            debug!("no bound: {e}");
            return Ok(None);
        }
    };
    if clauses.is_empty() {
        return Ok(None);
    }
    let p = clauses.iter().map(|c| c.p()).max().unwrap_or(0);
    let args = script.cata_applications();
    let offset = clauses
        .iter()
        .flat_map(|c| args.iter().map(|(_, a)| argument_depth(a, &c.origin, &script.signature)))
        .max()
        .unwrap_or(0);
    let mut reports = Vec::new();
    for c in &catas {
        reports.push(unroll_bound(&c.name, c.class, p as u64).expect("classified"));
    }
    let h = reports.iter().map(|r| r.h_p as usize).max().unwrap_or(0);
    Ok(Some((h + offset, reports)))
}

/// Runs the loop on an open session. The session should be fresh: the
/// script's declarations are sent first.
pub fn decide(script: &Script, session: &mut Session, config: &EngineConfig) -> Result<Verdict, EngineError> {
    let mut state = UnrollState::init(script);
    for (name, _) in state.frontier() {
        let c = script.signature.cata(&name).unwrap();
        if c.range.is_none() && config.bound_use != BoundUse::Strict {
            warn!("{name} has no range predicate; unsatisfiable inputs may not terminate");
        }
    }
    let bound = termination_bound(script, config.bound_use)?;
    let bound_depth = bound.as_ref().map(|(h, _)| *h);
    if let Some((h, reports)) = &bound {
        for r in reports {
            debug!("{r}");
        }
        debug!("early termination at depth {h}");
    }

    let d = session.dialect();
    let sig = &script.signature;
    for line in core_declarations(script, d) {
        session.send(&line)?;
    }
    for f in script.assertions() {
        session.assert(&print_formula(f, d))?;
    }
    let mut used: Vec<&CataDef> = Vec::new();
    for (n, _) in state.frontier() {
        let c = sig.cata(&n).unwrap();
        if !used.iter().any(|u| u.name == c.name) {
            used.push(c);
        }
    }
    for c in &sig.catas {
        if used.iter().any(|u| u.name == c.name) {
            session.send(&generated_cat_define(c, sig, d))?;
            session.send(&generated_unroll_define(c, d))?;
        }
    }

    let mut rounds = Vec::new();
    let verdict = |outcome, rounds, depth| Verdict { outcome, rounds, depth, bound: bound_depth };

    if state.is_empty() {
        let start = Instant::now();
        let r = match session.check() {
            Ok(r) => r,
            Err(e) => return Ok(verdict(Outcome::Unknown(UnknownReason::Backend(e.to_string())), rounds, 0)),
        };
        rounds.push(Round { depth: 0, with_controls: None, with_ranges: Some(r.verdict), elapsed_ms: ms(start) });
        let outcome = match r.verdict {
            SatVerdict::Sat => match session.get_model() {
                Ok(m) => Outcome::Sat { model: Some(m) },
                Err(e) => return Ok(verdict(Outcome::Unknown(UnknownReason::Backend(e.to_string())), rounds, 0)),
            },
            SatVerdict::Unsat => Outcome::Unsat,
            SatVerdict::Unknown => Outcome::Unknown(UnknownReason::SolverUnknown),
        };
        return Ok(verdict(outcome, rounds, 0));
    }

    loop {
        let start = Instant::now();
        let depth = state.depth;
        let mut round = Round { depth, with_controls: None, with_ranges: None, elapsed_ms: 0 };
        let step = (|| -> Result<Option<Outcome>, BackendError> {
            let below = if depth == 0 {
                state.clone()
            } else {
                for eq in state.equations(d) {
                    session.assert(&eq)?;
                }
                let r = session.check_frame(&state.controls(d), true)?;
                round.with_controls = Some(r.verdict);
                if r.verdict == SatVerdict::Sat {
                    return Ok(Some(Outcome::Sat { model: r.model }));
                }
                state.children()
            };
            let ranges = below.ranges(d);
            let r = if ranges.is_empty() { session.check()? } else { session.check_frame(&ranges, false)? };
            round.with_ranges = Some(r.verdict);
            Ok(match r.verdict {
                SatVerdict::Unsat => Some(Outcome::Unsat),
                SatVerdict::Unknown => Some(Outcome::Unknown(UnknownReason::SolverUnknown)),
                SatVerdict::Sat => None,
            })
        })();
        round.elapsed_ms = ms(start);
        rounds.push(round);
        match step {
            Err(e) => return Ok(verdict(Outcome::Unknown(UnknownReason::Backend(e.to_string())), rounds, depth)),
            Ok(Some(outcome)) => return Ok(verdict(outcome, rounds, depth)),
            Ok(None) => {}
        }
        if bound_depth.is_some_and(|h| depth >= h) {
            return Ok(verdict(Outcome::SatByBound, rounds, depth));
        }
        if depth >= config.max_unroll {
            return Ok(verdict(Outcome::Unknown(UnknownReason::MaxUnroll), rounds, depth));
        }
        // the frontier advances only after its equations were asserted
        if depth > 0 {
            state = state.children();
        } else {
            state.depth = 1;
        }
    }
}

fn ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}
