//! Translation of a formula into an equisatisfiable disjunction of
//! standard-form clauses: tree disequalities between distinct variables,
//! plus a collection/element part in which catamorphisms are applied to
//! variables only.
//!
//! The pipeline is DNF, tester expansion, selector elimination, tree
//! unification, disequality reduction and partial evaluation of the
//! catamorphisms. Fresh variables are named `_nf<k>` from a counter local
//! to one [`Normalizer`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ast::{substitute_unchecked, well_sorted, Atom, Formula, Op, Signature, Sort, Symbol, Term, Var};
use crate::frontend::{print_formula, Dialect};

pub const DEFAULT_CLAUSE_CAP: usize = 100_000;

/// Budget on the total size of the clauses pending in step 4. Cyclic
/// disequalities such as `v != Node(w, 0, Leaf)` with `w != Node(v, 0, Leaf)`
/// keep growing under substitution and never reach a standard form.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("more than {0} clauses")]
    ClauseExplosion(usize),
    #[error("outside the supported fragment: {0}")]
    Unsupported(String),
    #[error("disequality reduction exceeded {0} term nodes")]
    Diverged(usize),
}

/// An atom or its negation. Disequalities are stored as negated equalities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn new(atom: Atom, positive: bool) -> Literal {
        match atom {
            Atom::Diseq(a, b) => Literal { atom: Atom::Eq(a, b), positive: !positive },
            atom => Literal { atom, positive },
        }
    }

    pub fn eq(a: Term, b: Term) -> Literal {
        Literal { atom: Atom::Eq(a, b), positive: true }
    }

    pub fn diseq(a: Term, b: Term) -> Literal {
        Literal { atom: Atom::Eq(a, b), positive: false }
    }

    pub fn to_formula(&self) -> Formula {
        match (&self.atom, self.positive) {
            (Atom::Eq(a, b), false) => Formula::diseq(a.clone(), b.clone()),
            (a, true) => Formula::Atom(a.clone()),
            (a, false) => Formula::not(Formula::Atom(a.clone())),
        }
    }

    fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Literal {
        Literal { atom: self.atom.map_terms(f), positive: self.positive }
    }

    fn eq_sides(&self) -> Option<(&Term, &Term)> {
        match &self.atom {
            Atom::Eq(a, b) => Some((a, b)),
            _ => None,
        }
    }
}

pub type Clause = Vec<Literal>;

pub fn clause_formula(c: &[Literal]) -> Formula {
    Formula::And(c.iter().map(Literal::to_formula).collect())
}

/// Substitution recorded while normalizing: `var` was replaced by `term`.
pub type Binding = (Var, Term);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardClause {
    /// Unordered pairs of distinct tree variables, each stored smaller first.
    pub tree_diseqs: Vec<(Var, Var)>,
    pub ce_part: Vec<Literal>,
    /// Substitutions applied on the way, oldest first; used to rebuild an
    /// assignment of the original variables from a model of the clause.
    pub origin: Vec<Binding>,
}

impl StandardClause {
    /// Number of tree disequalities.
    pub fn p(&self) -> usize {
        self.tree_diseqs.len()
    }

    pub fn to_formula(&self) -> Formula {
        let mut fs: Vec<Formula> =
            self.tree_diseqs.iter().map(|(a, b)| Formula::diseq(Term::Var(a.clone()), Term::Var(b.clone()))).collect();
        fs.extend(self.ce_part.iter().map(Literal::to_formula));
        Formula::And(fs)
    }
}

impl fmt::Display for StandardClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(&self.to_formula(), Dialect::Surface))
    }
}

pub struct Normalizer<'a> {
    sig: &'a Signature,
    next: usize,
    cap: usize,
}

impl<'a> Normalizer<'a> {
    pub fn new(sig: &'a Signature) -> Normalizer<'a> {
        Normalizer { sig, next: 0, cap: DEFAULT_CLAUSE_CAP }
    }

    pub fn with_cap(mut self, cap: usize) -> Normalizer<'a> {
        self.cap = cap;
        self
    }

    fn fresh(&mut self, sort: Sort) -> Var {
        let v = Var::new(format!("_nf{}", self.next), sort);
        self.next += 1;
        v
    }

    fn sort_of(&self, t: &Term) -> Sort {
        well_sorted(t, self.sig).expect("normalizer input is well-sorted")
    }

    fn is_tree(&self, t: &Term) -> bool {
        self.sig.is_tree_sort(&self.sort_of(t))
    }

    fn is_tree_selector(&self, s: &Symbol) -> bool {
        self.sig.selector(s).is_some_and(|(dt, _, _)| dt.is_recursive())
    }

    /// Whether a sort is, or contains, a tree datatype.
    fn mentions_tree(&self, s: &Sort, seen: &mut BTreeSet<Symbol>) -> bool {
        match s {
            Sort::Set(e) | Sort::Bag(e) | Sort::Seq(e) => self.mentions_tree(e, seen),
            Sort::Datatype(n) => {
                let Some(dt) = self.sig.datatype(n) else { return false };
                if dt.is_recursive() {
                    return true;
                }
                if !seen.insert(n.clone()) {
                    return false;
                }
                dt.constructors.iter().flat_map(|c| &c.fields).any(|f| self.mentions_tree(&f.sort, seen))
            }
            _ => false,
        }
    }

    /// Rejects inputs outside the fragment the steps are defined on.
    pub fn check_fragment(&self, f: &Formula) -> Result<(), NormalizeError> {
        for a in f.atoms() {
            let top_tester = matches!(a, Atom::Pred(Term::Test { .. }));
            for (i, t) in a.terms().into_iter().enumerate() {
                let mut err = None;
                t.visit(&mut |s| {
                    if err.is_some() {
                        return;
                    }
                    match s {
                        Term::Op { op: Op::Ite, args } if self.is_tree(&args[1]) => {
                            err = Some("if-then-else over trees".to_string());
                        }
                        Term::Apply { func, args }
                            if args.iter().any(|x| self.mentions_tree(&self.sort_of(x), &mut BTreeSet::new())) =>
                        {
                            err = Some(format!("{func} applied to a tree"));
                        }
                        Term::Cata { cata, .. } => {
                            let c = self.sig.cata(cata).expect("declared");
                            if self.mentions_tree(&c.result, &mut BTreeSet::new()) {
                                err = Some(format!("{cata} returns a tree"));
                            }
                        }
                        Term::Test { arg, .. }
                            if self.is_tree(arg) && !(top_tester && i == 0 && std::ptr::eq(s, t)) =>
                        {
                            err = Some("tester nested inside a theory term".to_string());
                        }
                        _ => {}
                    }
                });
                if let Some(e) = err {
                    return Err(NormalizeError::Unsupported(e));
                }
            }
        }
        Ok(())
    }

    /// Step 1: disjunctive normal form. Boolean structure hidden in
    /// predicate atoms (`xor`, boolean `ite`, equalities of booleans) is
    /// lifted first.
    pub fn to_dnf(&self, f: &Formula) -> Result<Vec<Clause>, NormalizeError> {
        self.dnf(f, true)
    }

    fn dnf(&self, f: &Formula, pol: bool) -> Result<Vec<Clause>, NormalizeError> {
        match f {
            Formula::Atom(a) => self.dnf_atom(a, pol),
            Formula::Not(g) => self.dnf(g, !pol),
            Formula::And(fs) if pol => self.product(fs.iter().map(|g| self.dnf(g, true))),
            Formula::And(fs) => self.union(fs.iter().map(|g| self.dnf(g, false))),
            Formula::Or(fs) if pol => self.union(fs.iter().map(|g| self.dnf(g, true))),
            Formula::Or(fs) => self.product(fs.iter().map(|g| self.dnf(g, false))),
            Formula::Implies(a, b) => self.dnf(&Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()]), pol),
            Formula::Iff(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                let g = if pol {
                    Formula::Or(vec![
                        Formula::And(vec![a.clone(), b.clone()]),
                        Formula::And(vec![Formula::not(a), Formula::not(b)]),
                    ])
                } else {
                    Formula::Or(vec![
                        Formula::And(vec![a.clone(), Formula::not(b.clone())]),
                        Formula::And(vec![Formula::not(a), b]),
                    ])
                };
                self.dnf(&g, true)
            }
        }
    }

    fn dnf_atom(&self, a: &Atom, pol: bool) -> Result<Vec<Clause>, NormalizeError> {
        match a {
            Atom::Pred(Term::Lit(crate::ast::Literal::Bool(b))) => Ok(if *b == pol { vec![vec![]] } else { vec![] }),
            Atom::Pred(t @ Term::Op { op, args }) => match op {
                Op::Xor => {
                    let mut it = args.iter().map(|x| Formula::from_term(x, self.sig));
                    let first = it.next().expect("xor has arguments");
                    let g = it.fold(first, |acc, x| Formula::not(Formula::iff(acc, x)));
                    self.dnf(&g, pol)
                }
                Op::Ite => {
                    let c = Formula::from_term(&args[0], self.sig);
                    let g = Formula::Or(vec![
                        Formula::And(vec![c.clone(), Formula::from_term(&args[1], self.sig)]),
                        Formula::And(vec![Formula::not(c), Formula::from_term(&args[2], self.sig)]),
                    ]);
                    self.dnf(&g, pol)
                }
                Op::Not | Op::And | Op::Or | Op::Implies | Op::Eq | Op::Distinct => {
                    let g = Formula::from_term(t, self.sig);
                    if matches!(&g, Formula::Atom(Atom::Pred(p)) if p == t) {
                        Ok(vec![vec![Literal::new(a.clone(), pol)]])
                    } else {
                        self.dnf(&g, pol)
                    }
                }
                _ => Ok(vec![vec![Literal::new(a.clone(), pol)]]),
            },
            Atom::Eq(x, _) | Atom::Diseq(x, _) if self.sort_of(x) == Sort::Bool => {
                let (l, r) = match a {
                    Atom::Eq(l, r) | Atom::Diseq(l, r) => (l, r),
                    Atom::Pred(_) => unreachable!(),
                };
                let g = Formula::iff(Formula::from_term(l, self.sig), Formula::from_term(r, self.sig));
                self.dnf(&g, if matches!(a, Atom::Eq(..)) { pol } else { !pol })
            }
            _ => Ok(vec![vec![Literal::new(a.clone(), pol)]]),
        }
    }

    fn union(
        &self,
        parts: impl Iterator<Item = Result<Vec<Clause>, NormalizeError>>,
    ) -> Result<Vec<Clause>, NormalizeError> {
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
            if out.len() > self.cap {
                return Err(NormalizeError::ClauseExplosion(self.cap));
            }
        }
        Ok(out)
    }

    fn product(
        &self,
        parts: impl Iterator<Item = Result<Vec<Clause>, NormalizeError>>,
    ) -> Result<Vec<Clause>, NormalizeError> {
        let mut acc: Vec<Clause> = vec![vec![]];
        for p in parts {
            let p = p?;
            if acc.len().saturating_mul(p.len()) > self.cap {
                return Err(NormalizeError::ClauseExplosion(self.cap));
            }
            let mut next = Vec::with_capacity(acc.len() * p.len());
            for a in &acc {
                for b in &p {
                    let mut c = a.clone();
                    for l in b {
                        if !c.contains(l) {
                            c.push(l.clone());
                        }
                    }
                    next.push(c);
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Replaces tree testers by constructor equalities: `is-C(t)` becomes
    /// `t = C(x̄)` with fresh `x̄`; `¬is-C(t)` becomes one clause per other
    /// constructor `D` with `t = D(x̄)`.
    pub fn expand_testers(&mut self, clause: Clause) -> Vec<Clause> {
        let mut done: Vec<Clause> = vec![vec![]];
        for lit in clause {
            let tester = match (&lit.atom, self.sig.is_tree_sort(&self.sort_of_pred(&lit.atom))) {
                (Atom::Pred(Term::Test { ctor, arg }), true) => Some((ctor.clone(), (**arg).clone())),
                _ => None,
            };
            let Some((ctor, arg)) = tester else {
                for c in &mut done {
                    c.push(lit.clone());
                }
                continue;
            };
            let (dt, _) = self.sig.constructor(&ctor).expect("declared constructor");
            let ctors: Vec<_> = if lit.positive {
                vec![ctor.clone()]
            } else {
                dt.constructors.iter().filter(|c| c.name != ctor).map(|c| c.name.clone()).collect()
            };
            let mut next = Vec::new();
            for c in &done {
                for k in &ctors {
                    let fields: Vec<Sort> =
                        self.sig.constructor(k).unwrap().1.fields.iter().map(|f| f.sort.clone()).collect();
                    let args: Vec<Term> = fields.into_iter().map(|s| Term::Var(self.fresh(s))).collect();
                    let mut c2 = c.clone();
                    c2.push(Literal::eq(arg.clone(), Term::ctor(k.clone(), args)));
                    next.push(c2);
                }
            }
            done = next;
        }
        done
    }

    fn sort_of_pred(&self, a: &Atom) -> Sort {
        match a {
            Atom::Pred(Term::Test { arg, .. }) => self.sort_of(arg),
            _ => Sort::Bool,
        }
    }

    /// Step 2: replaces every tree selector application, innermost first,
    /// by a fresh variable, adding one binding `base = C(x̄)` per base term
    /// and constructor.
    pub fn eliminate_selectors(&mut self, clause: Clause) -> Clause {
        let mut clause = clause;
        loop {
            let mut found: Option<(Symbol, Term)> = None;
            'outer: for l in &clause {
                for t in l.atom.terms() {
                    t.visit(&mut |s| {
                        if found.is_some() {
                            return;
                        }
                        if let Term::Select { selector, arg } = s {
                            if self.is_tree_selector(selector)
                                && !arg.any(&mut |x| matches!(x, Term::Select { selector, .. } if self.is_tree_selector(selector)))
                            {
                                found = Some((selector.clone(), (**arg).clone()));
                            }
                        }
                    });
                    if found.is_some() {
                        break 'outer;
                    }
                }
            }
            let Some((selector, base)) = found else { return clause };
            let (_, ctor, _) = self.sig.selector(&selector).expect("declared selector");
            let ctor = ctor.clone();
            let fresh: Vec<Var> = ctor.fields.iter().map(|f| self.fresh(f.sort.clone())).collect();
            let mut replace = |t: &Term| {
                t.map_bottom_up(&mut |n| match &n {
                    Term::Select { selector, arg } if **arg == base => {
                        match ctor.fields.iter().position(|f| &f.selector == selector) {
                            Some(i) => Term::Var(fresh[i].clone()),
                            None => n,
                        }
                    }
                    _ => n,
                })
            };
            clause = clause.iter().map(|l| l.map_terms(&mut replace)).collect();
            clause.push(Literal::eq(
                base.clone(),
                Term::ctor(ctor.name.clone(), fresh.into_iter().map(Term::Var).collect()),
            ));
        }
    }

    /// Step 3: solves the tree equalities by unification; element-sorted
    /// constructor arguments are left as residual equalities. `None` when
    /// unification fails, i.e. the clause is unsatisfiable.
    pub fn unify_trees(&mut self, clause: Clause) -> Option<(Clause, Vec<Binding>)> {
        let mut eqs: VecDeque<(Term, Term)> = VecDeque::new();
        let mut rest = Vec::new();
        for l in clause {
            match l.eq_sides() {
                Some((a, b)) if l.positive && self.is_tree(a) => eqs.push_back((a.clone(), b.clone())),
                _ => rest.push(l),
            }
        }
        let mut sigma: BTreeMap<Var, Term> = BTreeMap::new();
        let mut order: Vec<Var> = Vec::new();
        let mut residual = Vec::new();
        while let Some((a, b)) = eqs.pop_front() {
            let a = resolve(&a, &sigma);
            let b = resolve(&b, &sigma);
            if a == b {
                continue;
            }
            match (&a, &b) {
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    if t.contains(&Term::Var(v.clone())) {
                        return None;
                    }
                    sigma.insert(v.clone(), t.clone());
                    order.push(v.clone());
                }
                (Term::Ctor { ctor: c1, args: a1 }, Term::Ctor { ctor: c2, args: a2 }) => {
                    if c1 != c2 {
                        return None;
                    }
                    for (x, y) in a1.iter().zip(a2) {
                        if self.is_tree(x) {
                            eqs.push_back((x.clone(), y.clone()));
                        } else {
                            residual.push((x.clone(), y.clone()));
                        }
                    }
                }
                _ => unreachable!("tree terms are variables and constructor applications after selector elimination"),
            }
        }
        let origin: Vec<Binding> = order.iter().map(|v| (v.clone(), resolve(&Term::Var(v.clone()), &sigma))).collect();
        let full: BTreeMap<Var, Term> = origin.iter().cloned().collect();
        let mut out: Clause = rest.iter().map(|l| l.map_terms(&mut |t| substitute_unchecked(t, &full))).collect();
        for (x, y) in residual {
            let l = Literal::eq(substitute_unchecked(&x, &full), substitute_unchecked(&y, &full));
            if !out.contains(&l) {
                out.push(l);
            }
        }
        Some((out, origin))
    }

    /// Step 4: rewrites tree disequalities until each relates two distinct
    /// variables. Clauses are processed breadth-first.
    pub fn reduce_disequalities(&mut self, clause: Clause) -> Result<Vec<(Clause, Vec<Binding>)>, NormalizeError> {
        fn weight(clause: &Clause, origin: &[Binding]) -> usize {
            let lits: usize = clause.iter().map(|l| l.eq_sides().map_or(1, |(a, b)| a.size() + b.size())).sum();
            lits + origin.iter().map(|(_, t)| 1 + t.size()).sum::<usize>()
        }
        struct Queue {
            items: VecDeque<(Clause, Vec<Binding>, usize)>,
            nodes: usize,
        }
        impl Queue {
            fn push(&mut self, clause: Clause, origin: Vec<Binding>) {
                let w = weight(&clause, &origin);
                self.nodes += w;
                self.items.push_back((clause, origin, w));
            }
        }
        let mut queue = Queue { items: VecDeque::new(), nodes: 0 };
        queue.push(clause, Vec::new());
        let mut out = Vec::new();
        let mut out_nodes = 0;
        while let Some((clause, origin, w)) = queue.items.pop_front() {
            queue.nodes -= w;
            if queue.items.len() + out.len() > self.cap {
                return Err(NormalizeError::ClauseExplosion(self.cap));
            }
            if queue.nodes + out_nodes > DEFAULT_NODE_BUDGET {
                return Err(NormalizeError::Diverged(DEFAULT_NODE_BUDGET));
            }
            let pending = clause.iter().position(|l| {
                !l.positive
                    && l.eq_sides().is_some_and(|(a, b)| {
                        self.is_tree(a) && !(a.as_var().is_some() && b.as_var().is_some() && a != b)
                    })
            });
            let Some(i) = pending else {
                out_nodes += w;
                out.push((clause, origin));
                continue;
            };
            let mut rest = clause.clone();
            let lead = rest.remove(i);
            let (a, b) = lead.eq_sides().map(|(a, b)| (a.clone(), b.clone())).unwrap();
            let lead_size = a.size() + b.size();
            if a == b {
                continue;
            }
            match (&a, &b) {
                (Term::Ctor { ctor: c1, args: a1 }, Term::Ctor { ctor: c2, args: a2 }) => {
                    if c1 != c2 {
                        queue.push(rest, origin);
                    } else {
                        for (x, y) in a1.iter().zip(a2) {
                            debug_assert!(x.size() + y.size() < lead_size);
                            let mut c = rest.clone();
                            c.push(Literal::diseq(x.clone(), y.clone()));
                            queue.push(c, origin.clone());
                        }
                    }
                }
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    let Term::Ctor { ctor, args } = t else { unreachable!() };
                    if t.contains(&Term::Var(v.clone())) {
                        // a tree never equals a term strictly containing it
                        queue.push(rest, origin);
                        continue;
                    }
                    let (dt, _) = self.sig.constructor(ctor).expect("declared constructor");
                    let all: Vec<_> = dt.constructors.clone();
                    for c in &all {
                        let fresh: Vec<Var> = c.fields.iter().map(|f| self.fresh(f.sort.clone())).collect();
                        let image = Term::ctor(c.name.clone(), fresh.iter().cloned().map(Term::Var).collect());
                        let bind: BTreeMap<Var, Term> = [(v.clone(), image.clone())].into_iter().collect();
                        let subst: Clause =
                            rest.iter().map(|l| l.map_terms(&mut |x| substitute_unchecked(x, &bind))).collect();
                        let mut org = origin.clone();
                        org.push((v.clone(), image.clone()));
                        if &c.name != ctor {
                            queue.push(subst, org);
                        } else {
                            for (f, y) in fresh.iter().zip(args) {
                                let y = substitute_unchecked(y, &bind);
                                debug_assert!(1 + y.size() < lead_size);
                                let mut c2 = subst.clone();
                                c2.push(Literal::diseq(Term::Var(f.clone()), y));
                                queue.push(c2, org.clone());
                            }
                        }
                    }
                }
                _ => unreachable!("tree terms are variables and constructor applications"),
            }
        }
        Ok(out)
    }

    /// Step 5: unfolds catamorphisms applied to constructor terms.
    pub fn partial_eval(&self, clause: Clause) -> Clause {
        clause.iter().map(|l| l.map_terms(&mut |t| self.pe(t))).collect()
    }

    fn pe(&self, t: &Term) -> Term {
        t.map_bottom_up(&mut |n| self.unfold(n))
    }

    fn unfold(&self, n: Term) -> Term {
        let Term::Cata { cata, arg } = &n else { return n };
        let Term::Ctor { ctor, args } = arg.as_ref() else { return n };
        let c = self.sig.cata(cata).expect("declared catamorphism");
        let case = c.case(ctor).expect("case per constructor");
        let inst: Vec<Term> = case
            .binders
            .iter()
            .zip(args)
            .map(|(b, a)| if b.recursive { self.unfold(Term::cata(cata.clone(), a.clone())) } else { a.clone() })
            .collect();
        case.instantiate(&inst)
    }

    /// The whole pipeline.
    pub fn to_standard_form(&mut self, f: &Formula) -> Result<Vec<StandardClause>, NormalizeError> {
        self.check_fragment(f)?;
        let mut out = Vec::new();
        for clause in self.to_dnf(f)? {
            for clause in self.expand_testers(clause) {
                let clause = self.eliminate_selectors(clause);
                debug_assert!(no_tree_selectors(&clause, self.sig));
                let Some((clause, origin)) = self.unify_trees(clause) else { continue };
                debug_assert!(no_tree_equalities(&clause, self.sig));
                for (clause, more) in self.reduce_disequalities(clause)? {
                    debug_assert!(diseqs_between_distinct_vars(&clause, self.sig));
                    let clause = self.partial_eval(clause);
                    debug_assert!(cata_args_are_vars(&clause));
                    let mut org = origin.clone();
                    org.extend(more);
                    out.push(self.split(clause, org));
                    if out.len() > self.cap {
                        return Err(NormalizeError::ClauseExplosion(self.cap));
                    }
                }
            }
        }
        Ok(out)
    }

    fn split(&self, clause: Clause, origin: Vec<Binding>) -> StandardClause {
        let mut tree_diseqs = Vec::new();
        let mut ce_part = Vec::new();
        for l in clause {
            match (l.positive, &l.atom) {
                (false, Atom::Eq(Term::Var(a), Term::Var(b))) if self.sig.is_tree_sort(&a.sort) => {
                    let pair = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                    if !tree_diseqs.contains(&pair) {
                        tree_diseqs.push(pair);
                    }
                }
                _ => {
                    if !ce_part.contains(&l) {
                        ce_part.push(l)
                    }
                }
            }
        }
        StandardClause { tree_diseqs, ce_part, origin }
    }
}

fn resolve(t: &Term, sigma: &BTreeMap<Var, Term>) -> Term {
    if sigma.is_empty() {
        return t.clone();
    }
    let mut cur = t.clone();
    loop {
        let next = substitute_unchecked(&cur, sigma);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// p for a formula: the largest number of tree disequalities in any of its
/// standard-form clauses.
pub fn max_disequalities(f: &Formula, sig: &Signature) -> Result<usize, NormalizeError> {
    Ok(Normalizer::new(sig).to_standard_form(f)?.iter().map(StandardClause::p).max().unwrap_or(0))
}

pub fn no_tree_selectors(c: &[Literal], sig: &Signature) -> bool {
    !c.iter().any(|l| {
        l.atom.terms().iter().any(|t| {
            t.any(&mut |x| {
                matches!(x, Term::Select { selector, .. } if sig.selector(selector).is_some_and(|(d, _, _)| d.is_recursive()))
            })
        })
    })
}

pub fn no_tree_equalities(c: &[Literal], sig: &Signature) -> bool {
    !c.iter().any(|l| {
        l.positive && matches!(&l.atom, Atom::Eq(a, _) if well_sorted(a, sig).is_ok_and(|s| sig.is_tree_sort(&s)))
    })
}

pub fn diseqs_between_distinct_vars(c: &[Literal], sig: &Signature) -> bool {
    no_tree_selectors(c, sig)
        && no_tree_equalities(c, sig)
        && c.iter().all(|l| match &l.atom {
            Atom::Eq(a, b) if !l.positive && well_sorted(a, sig).is_ok_and(|s| sig.is_tree_sort(&s)) => {
                matches!((a, b), (Term::Var(x), Term::Var(y)) if x != y)
            }
            _ => true,
        })
}

pub fn cata_args_are_vars(c: &[Literal]) -> bool {
    c.iter().all(|l| {
        l.atom.terms().iter().all(|t| !t.any(&mut |x| matches!(x, Term::Cata { arg, .. } if arg.as_var().is_none())))
    })
}

/// Checks every structural postcondition of a standard-form clause.
pub fn is_standard(c: &StandardClause, sig: &Signature) -> bool {
    let mut lits = c.ce_part.clone();
    lits.extend(c.tree_diseqs.iter().map(|(a, b)| Literal::diseq(Term::Var(a.clone()), Term::Var(b.clone()))));
    diseqs_between_distinct_vars(&lits, sig)
        && cata_args_are_vars(&lits)
        && c.tree_diseqs.iter().all(|(a, b)| a != b)
        && c.ce_part.iter().all(|l| {
            l.atom.terms().iter().all(|t| {
                !t.any(&mut |x| {
                    matches!(x, Term::Ctor { .. }) && well_sorted(x, sig).is_ok_and(|s| sig.is_tree_sort(&s))
                })
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_formula, parse_script, print_term};

    const DECLS: &str = "\
(declare-datatypes () ((Tree (Leaf) (Node (left Tree) (elem Int) (right Tree)))))
(define-catamorphism SizeI ((t Tree)) Int
  (ite (is-Leaf t) 0 (+ (SizeI (left t)) 1 (SizeI (right t)))))
(declare-fun t () Tree)
(declare-fun u () Tree)
(declare-fun x () Int)
(declare-fun a () Bool)
(declare-fun b () Bool)
(declare-fun c () Bool)
(check-sat)
";

    fn sig() -> Signature {
        parse_script(DECLS).unwrap().signature
    }

    fn f(text: &str) -> Formula {
        parse_formula(text, &sig()).unwrap()
    }

    fn show(c: &[Literal]) -> String {
        print_term(&clause_formula(c).to_term())
    }

    #[test]
    fn dnf_distributes() {
        let s = sig();
        let n = Normalizer::new(&s);
        let got: Vec<String> = n.to_dnf(&f("(and a (or b c))")).unwrap().iter().map(|c| show(c)).collect();
        assert_eq!(got, ["(and a b)", "(and a c)"]);
        let got: Vec<String> = n.to_dnf(&f("(not (or a b))")).unwrap().iter().map(|c| show(c)).collect();
        assert_eq!(got, ["(and (not a) (not b))"]);
        assert_eq!(n.to_dnf(&f("a")).unwrap().len(), 1);
    }

    #[test]
    fn dnf_cap() {
        let s = sig();
        let n = Normalizer::new(&s).with_cap(3);
        let e = n.to_dnf(&f("(and (or a b) (or b c))")).unwrap_err();
        assert_eq!(e, NormalizeError::ClauseExplosion(3));
    }

    #[test]
    fn selector_elimination() {
        let s = sig();
        let mut n = Normalizer::new(&s);
        let c = n.to_dnf(&f("(= (left t) u)")).unwrap().remove(0);
        let c = n.eliminate_selectors(c);
        assert_eq!(show(&c), "(and (= _nf0 u) (= t (Node _nf0 _nf1 _nf2)))");
        let c = n.to_dnf(&f("(= (elem (left t)) 3)")).unwrap().remove(0);
        let c = n.eliminate_selectors(c);
        assert_eq!(show(&c), "(and (= _nf7 3) (= t (Node _nf3 _nf4 _nf5)) (= _nf3 (Node _nf6 _nf7 _nf8)))");
    }

    #[test]
    fn unification() {
        let s = sig();
        let mut n = Normalizer::new(&s);
        let clause = vec![
            Literal::eq(Term::var("t", Sort::datatype("Tree")), Term::ctor("Leaf", vec![])),
            Literal::eq(Term::ctor("Leaf", vec![]), Term::var("t", Sort::datatype("Tree"))),
        ];
        let (c, origin) = n.unify_trees(clause).unwrap();
        assert!(c.is_empty());
        assert_eq!(origin.len(), 1);
        let clash = n.to_dnf(&f("(= Leaf (Node u x u))")).unwrap().remove(0);
        assert!(n.unify_trees(clash).is_none());
        let occurs = n.to_dnf(&f("(= t (Node t x u))")).unwrap().remove(0);
        assert!(n.unify_trees(occurs).is_none());
        let two = n.to_dnf(&f("(and (= t (Node u x u)) (= t (Node u 3 u)))")).unwrap().remove(0);
        let (c, _) = n.unify_trees(two).unwrap();
        assert_eq!(show(&c), "(= x 3)");
    }

    #[test]
    fn disequality_rules() {
        let s = sig();
        let mut n = Normalizer::new(&s);
        let cl = |n: &Normalizer, t: &str| n.to_dnf(&f(t)).unwrap().remove(0);
        let r = n.reduce_disequalities(cl(&n, "(distinct Leaf Leaf)")).unwrap();
        assert!(r.is_empty());
        let r = n.reduce_disequalities(cl(&n, "(and (distinct Leaf (Node t x u)) a)")).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(show(&r[0].0), "a");
        let r = n.reduce_disequalities(cl(&n, "(and (distinct t Leaf) (= (SizeI t) 2))")).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(show(&r[0].0), "(= (SizeI (Node _nf0 _nf1 _nf2)) 2)");
        let r = n.reduce_disequalities(cl(&n, "(distinct t (Node u x u))")).unwrap();
        assert_eq!(r.len(), 4);
        let r = n.reduce_disequalities(cl(&n, "(distinct t (Node t x u))")).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].0.is_empty());
    }

    #[test]
    fn partial_evaluation() {
        let s = sig();
        let n = Normalizer::new(&s);
        let c = n.partial_eval(vec![Literal::eq(
            Term::cata(
                "SizeI",
                Term::ctor(
                    "Node",
                    vec![Term::ctor("Leaf", vec![]), Term::int(4), Term::var("u", Sort::datatype("Tree"))],
                ),
            ),
            Term::int(2),
        )]);
        assert_eq!(show(&c), "(= (+ 0 1 (SizeI u)) 2)");
        let c = n.partial_eval(vec![Literal::eq(Term::cata("SizeI", Term::ctor("Leaf", vec![])), Term::int(0))]);
        assert_eq!(show(&c), "(= 0 0)");
    }

    #[test]
    fn standard_forms() {
        let s = sig();
        let sf = Normalizer::new(&s).to_standard_form(&f("(distinct t u)")).unwrap();
        assert_eq!(sf.len(), 1);
        assert_eq!(sf[0].p(), 1);
        let sf = Normalizer::new(&s).to_standard_form(&f("(= t t)")).unwrap();
        assert_eq!((sf.len(), sf[0].p()), (1, 0));
        let sf = Normalizer::new(&s).to_standard_form(&f("(and (= (SizeI (left t)) 1) (is-Leaf u))")).unwrap();
        assert_eq!(sf.len(), 1);
        assert!(is_standard(&sf[0], &s));
        assert_eq!(sf[0].to_string(), "(= (SizeI _nf0) 1)");
    }

    #[test]
    fn negated_tester_splits_over_other_constructors() {
        let s = sig();
        let sf = Normalizer::new(&s).to_standard_form(&f("(not (is-Node t))")).unwrap();
        assert_eq!(sf.len(), 1);
        assert_eq!(sf[0].origin[0].1, Term::ctor("Leaf", vec![]));
    }

    #[test]
    fn fragment_checks() {
        let s = sig();
        let n = Normalizer::new(&s);
        assert!(n.check_fragment(&f("(= t (ite a u Leaf))")).is_err());
        assert!(n.check_fragment(&f("(= x (ite (is-Leaf t) 1 2))")).is_err());
        assert!(n.check_fragment(&f("(is-Leaf t)")).is_ok());
    }
}
