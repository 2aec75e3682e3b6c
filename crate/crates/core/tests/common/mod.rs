//! Random scripts for the oracle cross-checks: at most two tree variables,
//! at most three integer constants, one associative catamorphism, formulas
//! of connective depth at most four.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use cata_core::normalizer::{
    cata_args_are_vars, diseqs_between_distinct_vars, is_standard, no_tree_equalities, no_tree_selectors,
    NormalizeError, Normalizer,
};
use cata_core::oracle::{brute_force_sat, reconstruct, Bounds, Evaluator, Interp, SearchResult, Value};
use cata_core::{free_vars, Script};

pub const DOMAIN: [i64; 3] = [0, 1, 2];
pub const MAX_SIZE: usize = 5;

pub fn bounds() -> Bounds {
    Bounds::new(MAX_SIZE, DOMAIN.iter().map(|&n| Value::Int(n)).collect())
}

const HEADER: &str = "(declare-datatypes () ((Tree (Leaf) (Node (left Tree) (elem Int) (right Tree)))))\n";

const CATAS: [(&str, &str); 2] = [
    (
        "Sum",
        "(define-catamorphism Sum ((t Tree)) Int
  (ite (is-Leaf t) 0 (+ (Sum (left t)) (elem t) (Sum (right t)))))
(declare-range Sum ((c Int)) true)
(set-cata-class Sum associative)
",
    ),
    (
        "SizeI",
        "(define-catamorphism SizeI ((t Tree)) Int
  (ite (is-Leaf t) 0 (+ (SizeI (left t)) 1 (SizeI (right t)))))
(declare-range SizeI ((c Int)) (>= c 0))
(set-cata-class SizeI associative)
",
    ),
];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    trees: Vec<&'static str>,
    ints: Vec<&'static str>,
    cata: &'static str,
}

impl<R: Rng> Gen<'_, R> {
    fn tree(&mut self, d: usize) -> String {
        let roll: u32 = self.rng.gen_range(0..100);
        if d == 0 || roll < 55 {
            if roll % 7 == 0 {
                "Leaf".into()
            } else {
                self.trees.choose(self.rng).unwrap().to_string()
            }
        } else if roll < 90 {
            let l = self.tree(d - 1);
            let e = self.elem();
            let r = self.tree(d - 1);
            format!("(Node {l} {e} {r})")
        } else {
            let sel = if roll % 2 == 0 { "left" } else { "right" };
            format!("({sel} {})", self.trees.choose(self.rng).unwrap())
        }
    }

    fn elem(&mut self) -> String {
        if !self.ints.is_empty() && self.rng.gen_bool(0.5) {
            self.ints.choose(self.rng).unwrap().to_string()
        } else {
            DOMAIN.choose(self.rng).unwrap().to_string()
        }
    }

    fn int(&mut self, d: usize) -> String {
        match self.rng.gen_range(0..10) {
            0..=4 => {
                let t = self.tree(d.min(1));
                format!("({} {t})", self.cata)
            }
            5..=6 if d > 0 => {
                let a = self.int(d - 1);
                let b = self.int(d - 1);
                format!("(+ {a} {b})")
            }
            _ => self.elem(),
        }
    }

    fn atom(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=1 => {
                let a = self.tree(2);
                let b = self.tree(2);
                format!("(= {a} {b})")
            }
            2 => {
                let c = if self.rng.gen_bool(0.5) { "Leaf" } else { "Node" };
                let t = self.tree(1);
                format!("(is-{c} {t})")
            }
            3..=5 => {
                let a = self.int(1);
                let b = self.int(1);
                format!("(= {a} {b})")
            }
            6..=7 => {
                let a = self.int(1);
                let b = self.int(1);
                format!("(<= {a} {b})")
            }
            _ => {
                let a = self.int(1);
                let b = self.int(1);
                format!("(< {a} {b})")
            }
        }
    }

    fn formula(&mut self, d: usize) -> String {
        if d == 0 || self.rng.gen_bool(0.35) {
            return self.atom();
        }
        match self.rng.gen_range(0..4) {
            0 => format!("(not {})", self.formula(d - 1)),
            1 => format!("(and {} {})", self.formula(d - 1), self.formula(d - 1)),
            2 => format!("(or {} {})", self.formula(d - 1), self.formula(d - 1)),
            _ => format!("(=> {} {})", self.formula(d - 1), self.formula(d - 1)),
        }
    }
}

pub fn random_script<R: Rng>(rng: &mut R) -> String {
    let (cata, def) = CATAS[rng.gen_range(0..CATAS.len())];
    let trees = ["t1", "t2"][..rng.gen_range(1..=2)].to_vec();
    let ints = ["x", "y", "z"][..rng.gen_range(0..=3)].to_vec();
    let mut out = String::from(HEADER);
    out.push_str(def);
    for t in &trees {
        out.push_str(&format!("(declare-fun {t} () Tree)\n"));
    }
    for x in &ints {
        out.push_str(&format!("(declare-fun {x} () Int)\n"));
    }
    let mut g = Gen { rng, trees, ints, cata };
    let n = g.rng.gen_range(1..=2);
    for _ in 0..n {
        let f = g.formula(3);
        out.push_str(&format!("(assert {f})\n"));
    }
    out.push_str("(check-sat)\n");
    out
}

/// Runs the normalizer step by step, checking each step's postcondition,
/// then compares satisfiability of the input and of the standard form with
/// the oracle. A clause model is carried back to the input variables and
/// the input is evaluated on it, since the carried-back trees may exceed
/// the search bound. Inputs on which the normalizer gives up are reported
/// as declined rather than failed.
pub fn check_normalizer(script: &Script) -> Result<Check, String> {
    let sig = &script.signature;
    let f = script.formula();
    let mut n = Normalizer::new(sig);
    n.check_fragment(&f).map_err(|e| e.to_string())?;
    for clause in n.to_dnf(&f).map_err(|e| e.to_string())? {
        for clause in n.expand_testers(clause) {
            let clause = n.eliminate_selectors(clause);
            if !no_tree_selectors(&clause, sig) {
                return Err("selector survived step 2".into());
            }
            let Some((clause, _)) = n.unify_trees(clause) else { continue };
            if !no_tree_equalities(&clause, sig) {
                return Err("tree equality survived step 3".into());
            }
            let reduced = match n.reduce_disequalities(clause) {
                Ok(r) => r,
                Err(e) => return declined(e),
            };
            for (clause, _) in reduced {
                if !diseqs_between_distinct_vars(&clause, sig) {
                    return Err("disequality not between distinct variables after step 4".into());
                }
                if !cata_args_are_vars(&n.partial_eval(clause)) {
                    return Err("catamorphism applied to a non-variable after step 5".into());
                }
            }
        }
    }

    let clauses = match Normalizer::new(sig).to_standard_form(&f) {
        Ok(c) => c,
        Err(e) => return declined(e),
    };
    let interp = Interp::new();
    let b = bounds();
    let original = brute_force_sat(&f, sig, &interp, &b).map_err(|e| e.to_string())?;
    let ev = Evaluator::new(sig, &interp);
    let mut any = false;
    for c in &clauses {
        if !is_standard(c, sig) {
            return Err(format!("not in standard form: {c}"));
        }
        if let SearchResult::Sat(w) = brute_force_sat(&c.to_formula(), sig, &interp, &b).map_err(|e| e.to_string())? {
            let env = reconstruct(&c.origin, &w.env(), free_vars(&f), sig, &interp, &b).map_err(|e| e.to_string())?;
            if !ev.holds(&f, &env).map_err(|e| e.to_string())? {
                return Err(format!("clause model does not carry back: {c}\n{w}"));
            }
            any = true;
            break;
        }
    }
    if original.is_sat() && !any {
        return Err(format!("input has a model but no clause does: {original:?}"));
    }
    Ok(Check::Agrees)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Agrees,
    Declined(NormalizeError),
}

fn declined(e: NormalizeError) -> Result<Check, String> {
    match e {
        NormalizeError::Unsupported(_) => Err(e.to_string()),
        e => Ok(Check::Declined(e)),
    }
}
