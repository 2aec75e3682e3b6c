//! Sorted terms and formulas of the parametric logic, datatype declarations,
//! catamorphism definitions and the script container.
//!
//! Everything here is immutable once built. Terms carry enough sort
//! information (variables know their sort, polymorphic collection operators
//! carry their element sort) that [`well_sorted`] only needs a [`Signature`]
//! to check them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use thiserror::Error;

/// An interned-by-sharing identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: impl AsRef<str>) -> Self {
        Symbol(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl AsRef<str> for Symbol {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
    String,
    Datatype(Symbol),
    Set(Box<Sort>),
    Bag(Box<Sort>),
    Seq(Box<Sort>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortKind {
    Boolean,
    Builtin,
    Datatype,
    Collection,
}

impl Sort {
    pub fn datatype(name: impl Into<Symbol>) -> Sort {
        Sort::Datatype(name.into())
    }

    pub fn kind(&self) -> SortKind {
        match self {
            Sort::Bool => SortKind::Boolean,
            Sort::Int | Sort::Real | Sort::String => SortKind::Builtin,
            Sort::Datatype(_) => SortKind::Datatype,
            Sort::Set(_) | Sort::Bag(_) | Sort::Seq(_) => SortKind::Collection,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }

    pub fn datatype_name(&self) -> Option<&Symbol> {
        match self {
            Sort::Datatype(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Int => f.write_str("Int"),
            Sort::Real => f.write_str("Real"),
            Sort::String => f.write_str("String"),
            Sort::Datatype(n) => write!(f, "{n}"),
            Sort::Set(e) => write!(f, "(Set {e})"),
            Sort::Bag(e) => write!(f, "(Bag {e})"),
            Sort::Seq(e) => write!(f, "(Seq {e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub selector: Symbol,
    pub sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constructor {
    pub name: Symbol,
    pub fields: Vec<Field>,
}

impl Constructor {
    pub fn new(name: impl Into<Symbol>, fields: Vec<(&str, Sort)>) -> Self {
        Constructor {
            name: name.into(),
            fields: fields.into_iter().map(|(s, sort)| Field { selector: s.into(), sort }).collect(),
        }
    }
}

/// An algebraic datatype.
///
/// Recursive positions are the fields whose sort is the datatype itself;
/// mutually recursive positions (through another datatype) are not tracked.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DatatypeDecl {
    pub name: Symbol,
    pub constructors: Vec<Constructor>,
}

/// The Leaf/Node shape most of this crate is specialised to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTreeView {
    pub leaf: Symbol,
    pub node: Symbol,
    pub left: Symbol,
    pub elem: Symbol,
    pub right: Symbol,
    pub elem_sort: Sort,
}

impl DatatypeDecl {
    pub fn new(name: impl Into<Symbol>, constructors: Vec<Constructor>) -> Result<Self, SortError> {
        let dt = DatatypeDecl { name: name.into(), constructors };
        dt.validate()?;
        Ok(dt)
    }

    /// The usual `Leaf | Node(left, elem, right)` declaration.
    pub fn binary_tree(name: &str, elem_sort: Sort) -> Self {
        let me = Sort::datatype(name);
        DatatypeDecl {
            name: name.into(),
            constructors: vec![
                Constructor::new("Leaf", vec![]),
                Constructor::new("Node", vec![("left", me.clone()), ("elem", elem_sort), ("right", me)]),
            ],
        }
    }

    fn validate(&self) -> Result<(), SortError> {
        if self.constructors.is_empty() {
            return Err(SortError::new(format!("datatype {} has no constructors", self.name)));
        }
        if !self.constructors.iter().any(|c| self.recursive_positions_of(c).is_empty()) {
            return Err(SortError::new(format!("datatype {} has no base constructor", self.name)));
        }
        let mut seen = BTreeSet::new();
        for c in &self.constructors {
            if !seen.insert(c.name.clone()) {
                return Err(SortError::new(format!("duplicate constructor {}", c.name)));
            }
        }
        let mut sels = BTreeSet::new();
        for f in self.constructors.iter().flat_map(|c| &c.fields) {
            if !sels.insert(f.selector.clone()) {
                return Err(SortError::new(format!("selector {} declared twice in {}", f.selector, self.name)));
            }
        }
        Ok(())
    }

    pub fn sort(&self) -> Sort {
        Sort::Datatype(self.name.clone())
    }

    fn recursive_positions_of(&self, c: &Constructor) -> Vec<usize> {
        c.fields
            .iter()
            .enumerate()
            .filter(|(_, f)| f.sort.datatype_name() == Some(&self.name))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn recursive_positions(&self, ctor: &Symbol) -> Vec<usize> {
        self.constructor(ctor).map(|c| self.recursive_positions_of(c)).unwrap_or_default()
    }

    pub fn constructor(&self, name: &Symbol) -> Option<&Constructor> {
        self.constructors.iter().find(|c| &c.name == name)
    }

    pub fn is_recursive(&self) -> bool {
        self.constructors.iter().any(|c| !self.recursive_positions_of(c).is_empty())
    }

    /// Constructors with no recursive field.
    pub fn base_constructors(&self) -> impl Iterator<Item = &Constructor> {
        self.constructors.iter().filter(|c| self.recursive_positions_of(c).is_empty())
    }

    pub fn binary_view(&self) -> Option<BinaryTreeView> {
        if self.constructors.len() != 2 {
            return None;
        }
        let (leaf, node) = match (self.constructors[0].fields.is_empty(), self.constructors[1].fields.is_empty()) {
            (true, false) => (&self.constructors[0], &self.constructors[1]),
            (false, true) => (&self.constructors[1], &self.constructors[0]),
            _ => return None,
        };
        if node.fields.len() != 3 || self.recursive_positions_of(node) != vec![0, 2] {
            return None;
        }
        Some(BinaryTreeView {
            leaf: leaf.name.clone(),
            node: node.name.clone(),
            left: node.fields[0].selector.clone(),
            elem: node.fields[1].selector.clone(),
            right: node.fields[2].selector.clone(),
            elem_sort: node.fields[1].sort.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Symbol,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<Symbol>, sort: Sort) -> Self {
        Var { name: name.into(), sort }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Real(Rational64),
    Str(String),
}

impl Literal {
    pub fn sort(&self) -> Sort {
        match self {
            Literal::Bool(_) => Sort::Bool,
            Literal::Int(_) => Sort::Int,
            Literal::Real(_) => Sort::Real,
            Literal::Str(_) => Sort::String,
        }
    }
}

/// Interpreted operators of the element and collection theories.
///
/// Collection constants and constructors that cannot infer their element sort
/// from their arguments carry it explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    Xor,
    Eq,
    Distinct,
    Ite,
    Add,
    Sub,
    Mul,
    Div,
    IntDiv,
    Mod,
    Abs,
    Lt,
    Le,
    Gt,
    Ge,
    SetEmpty(Sort),
    SetSingleton(Sort),
    SetUnion,
    SetInter,
    SetMinus,
    SetMember,
    SetSubset,
    BagEmpty(Sort),
    BagMake(Sort),
    BagUnion,
    BagCount,
    SeqEmpty(Sort),
    SeqUnit(Sort),
    SeqConcat,
    SeqLen,
}

impl Op {
    pub fn symbol(&self) -> &'static str {
        match self {
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Implies => "=>",
            Op::Xor => "xor",
            Op::Eq => "=",
            Op::Distinct => "distinct",
            Op::Ite => "ite",
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::IntDiv => "div",
            Op::Mod => "mod",
            Op::Abs => "abs",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::SetEmpty(_) => "set.empty",
            Op::SetSingleton(_) => "set.singleton",
            Op::SetUnion => "set.union",
            Op::SetInter => "set.inter",
            Op::SetMinus => "set.minus",
            Op::SetMember => "set.member",
            Op::SetSubset => "set.subset",
            Op::BagEmpty(_) => "bag.empty",
            Op::BagMake(_) => "bag",
            Op::BagUnion => "bag.union_disjoint",
            Op::BagCount => "bag.count",
            Op::SeqEmpty(_) => "seq.empty",
            Op::SeqUnit(_) => "seq.unit",
            Op::SeqConcat => "seq.++",
            Op::SeqLen => "seq.len",
        }
    }

    /// Operators whose sort annotation is filled in from the arguments by the
    /// parser; `None` for symbols that are not theory operators.
    pub fn from_symbol(s: &str) -> Option<Op> {
        Some(match s {
            "not" => Op::Not,
            "and" => Op::And,
            "or" => Op::Or,
            "=>" => Op::Implies,
            "xor" => Op::Xor,
            "=" => Op::Eq,
            "distinct" => Op::Distinct,
            "ite" => Op::Ite,
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            "div" => Op::IntDiv,
            "mod" => Op::Mod,
            "abs" => Op::Abs,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "set.singleton" => Op::SetSingleton(Sort::Bool),
            "set.union" => Op::SetUnion,
            "set.inter" => Op::SetInter,
            "set.minus" => Op::SetMinus,
            "set.member" => Op::SetMember,
            "set.subset" => Op::SetSubset,
            "bag" => Op::BagMake(Sort::Bool),
            "bag.union_disjoint" => Op::BagUnion,
            "bag.count" => Op::BagCount,
            "seq.unit" => Op::SeqUnit(Sort::Bool),
            "seq.++" => Op::SeqConcat,
            "seq.len" => Op::SeqLen,
            _ => return None,
        })
    }

    pub fn is_boolean_connective(&self) -> bool {
        matches!(self, Op::Not | Op::And | Op::Or | Op::Implies | Op::Xor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Lit(Literal),
    Ctor {
        ctor: Symbol,
        args: Vec<Term>,
    },
    Select {
        selector: Symbol,
        arg: Box<Term>,
    },
    Test {
        ctor: Symbol,
        arg: Box<Term>,
    },
    Cata {
        cata: Symbol,
        arg: Box<Term>,
    },
    /// Application of a declared (uninterpreted) or defined function.
    Apply {
        func: Symbol,
        args: Vec<Term>,
    },
    Op {
        op: Op,
        args: Vec<Term>,
    },
}

impl Term {
    pub fn var(name: impl Into<Symbol>, sort: Sort) -> Term {
        Term::Var(Var::new(name, sort))
    }

    pub fn int(n: i64) -> Term {
        Term::Lit(Literal::Int(n))
    }

    pub fn real(n: i64) -> Term {
        Term::Lit(Literal::Real(Rational64::from_integer(n)))
    }

    pub fn bool(b: bool) -> Term {
        Term::Lit(Literal::Bool(b))
    }

    pub fn string(s: impl Into<String>) -> Term {
        Term::Lit(Literal::Str(s.into()))
    }

    pub fn ctor(ctor: impl Into<Symbol>, args: Vec<Term>) -> Term {
        Term::Ctor { ctor: ctor.into(), args }
    }

    pub fn select(selector: impl Into<Symbol>, arg: Term) -> Term {
        Term::Select { selector: selector.into(), arg: Box::new(arg) }
    }

    pub fn test(ctor: impl Into<Symbol>, arg: Term) -> Term {
        Term::Test { ctor: ctor.into(), arg: Box::new(arg) }
    }

    pub fn cata(cata: impl Into<Symbol>, arg: Term) -> Term {
        Term::Cata { cata: cata.into(), arg: Box::new(arg) }
    }

    pub fn apply(func: impl Into<Symbol>, args: Vec<Term>) -> Term {
        Term::Apply { func: func.into(), args }
    }

    pub fn op(op: Op, args: Vec<Term>) -> Term {
        Term::Op { op, args }
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::op(Op::Eq, vec![a, b])
    }

    pub fn not(a: Term) -> Term {
        Term::op(Op::Not, vec![a])
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::op(Op::Ite, vec![c, t, e])
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Lit(Literal::Bool(true)))
    }

    /// Direct subterms, in argument order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Lit(_) => vec![],
            Term::Ctor { args, .. } | Term::Apply { args, .. } | Term::Op { args, .. } => args.iter().collect(),
            Term::Select { arg, .. } | Term::Test { arg, .. } | Term::Cata { arg, .. } => {
                vec![arg.as_ref()]
            }
        }
    }

    /// Rebuilds the term bottom-up, giving `f` the chance to replace each
    /// node after its children have been rebuilt.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let rebuilt = match self {
            Term::Var(_) | Term::Lit(_) => self.clone(),
            Term::Ctor { ctor, args } => {
                Term::Ctor { ctor: ctor.clone(), args: args.iter().map(|a| a.map_bottom_up(f)).collect() }
            }
            Term::Apply { func, args } => {
                Term::Apply { func: func.clone(), args: args.iter().map(|a| a.map_bottom_up(f)).collect() }
            }
            Term::Op { op, args } => {
                Term::Op { op: op.clone(), args: args.iter().map(|a| a.map_bottom_up(f)).collect() }
            }
            Term::Select { selector, arg } => {
                Term::Select { selector: selector.clone(), arg: Box::new(arg.map_bottom_up(f)) }
            }
            Term::Test { ctor, arg } => Term::Test { ctor: ctor.clone(), arg: Box::new(arg.map_bottom_up(f)) },
            Term::Cata { cata, arg } => Term::Cata { cata: cata.clone(), arg: Box::new(arg.map_bottom_up(f)) },
        };
        f(rebuilt)
    }

    /// Replaces every occurrence of `from` (structurally) with `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Var(_) | Term::Lit(_) => self.clone(),
            Term::Ctor { ctor, args } => {
                Term::Ctor { ctor: ctor.clone(), args: args.iter().map(|a| a.replace(from, to)).collect() }
            }
            Term::Apply { func, args } => {
                Term::Apply { func: func.clone(), args: args.iter().map(|a| a.replace(from, to)).collect() }
            }
            Term::Op { op, args } => {
                Term::Op { op: op.clone(), args: args.iter().map(|a| a.replace(from, to)).collect() }
            }
            Term::Select { selector, arg } => {
                Term::Select { selector: selector.clone(), arg: Box::new(arg.replace(from, to)) }
            }
            Term::Test { ctor, arg } => Term::Test { ctor: ctor.clone(), arg: Box::new(arg.replace(from, to)) },
            Term::Cata { cata, arg } => Term::Cata { cata: cata.clone(), arg: Box::new(arg.replace(from, to)) },
        }
    }

    pub fn any(&self, pred: &mut impl FnMut(&Term) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    /// Pre-order visit of every subterm.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn contains(&self, needle: &Term) -> bool {
        self.any(&mut |t| t == needle)
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        self.visit(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        });
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Eq(Term, Term),
    Diseq(Term, Term),
    /// Any other boolean-sorted term: theory predicates, testers, boolean
    /// variables and constants.
    Pred(Term),
}

impl Atom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Eq(a, b) | Atom::Diseq(a, b) => vec![a, b],
            Atom::Pred(p) => vec![p],
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Atom {
        match self {
            Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
            Atom::Diseq(a, b) => Atom::Diseq(f(a), f(b)),
            Atom::Pred(p) => Atom::Pred(f(p)),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Atom::Eq(a, b) => Term::eq(a.clone(), b.clone()),
            Atom::Diseq(a, b) => Term::op(Op::Distinct, vec![a.clone(), b.clone()]),
            Atom::Pred(p) => p.clone(),
        }
    }
}

/// Boolean structure over atoms. `And(vec![])` is true, `Or(vec![])` false.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn tt() -> Formula {
        Formula::And(vec![])
    }

    pub fn ff() -> Formula {
        Formula::Or(vec![])
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Atom(Atom::Eq(a, b))
    }

    pub fn diseq(a: Term, b: Term) -> Formula {
        Formula::Atom(Atom::Diseq(a, b))
    }

    pub fn pred(t: Term) -> Formula {
        Formula::Atom(Atom::Pred(t))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Lifts the boolean skeleton of a `Bool`-sorted term into a formula.
    /// Equalities between booleans become `Iff`; n-ary `=`/`distinct` expand
    /// to conjunctions of binary atoms.
    pub fn from_term(t: &Term, sig: &Signature) -> Formula {
        match t {
            Term::Op { op, args } => match op {
                Op::Not if args.len() == 1 => Formula::not(Formula::from_term(&args[0], sig)),
                Op::And => Formula::And(args.iter().map(|a| Formula::from_term(a, sig)).collect()),
                Op::Or => Formula::Or(args.iter().map(|a| Formula::from_term(a, sig)).collect()),
                Op::Implies if args.len() >= 2 => {
                    // right associative
                    let mut it = args.iter().rev();
                    let mut acc = Formula::from_term(it.next().unwrap(), sig);
                    for a in it {
                        acc = Formula::implies(Formula::from_term(a, sig), acc);
                    }
                    acc
                }
                Op::Eq if args.len() >= 2 => {
                    let is_bool = well_sorted(&args[0], sig).map(|s| s == Sort::Bool).unwrap_or(false);
                    let pairs: Vec<Formula> = args
                        .windows(2)
                        .map(|w| {
                            if is_bool {
                                Formula::iff(Formula::from_term(&w[0], sig), Formula::from_term(&w[1], sig))
                            } else {
                                Formula::eq(w[0].clone(), w[1].clone())
                            }
                        })
                        .collect();
                    if pairs.len() == 1 {
                        pairs.into_iter().next().unwrap()
                    } else {
                        Formula::And(pairs)
                    }
                }
                Op::Distinct if args.len() >= 2 => {
                    let mut pairs = Vec::new();
                    for i in 0..args.len() {
                        for j in i + 1..args.len() {
                            pairs.push(Formula::diseq(args[i].clone(), args[j].clone()));
                        }
                    }
                    if pairs.len() == 1 {
                        pairs.into_iter().next().unwrap()
                    } else {
                        Formula::And(pairs)
                    }
                }
                _ => Formula::pred(t.clone()),
            },
            _ => Formula::pred(t.clone()),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Formula::Atom(a) => a.to_term(),
            Formula::Not(f) => Term::not(f.to_term()),
            Formula::And(fs) if fs.is_empty() => Term::bool(true),
            Formula::Or(fs) if fs.is_empty() => Term::bool(false),
            Formula::And(fs) if fs.len() == 1 => fs[0].to_term(),
            Formula::Or(fs) if fs.len() == 1 => fs[0].to_term(),
            Formula::And(fs) => Term::op(Op::And, fs.iter().map(Formula::to_term).collect()),
            Formula::Or(fs) => Term::op(Op::Or, fs.iter().map(Formula::to_term).collect()),
            Formula::Implies(a, b) => Term::op(Op::Implies, vec![a.to_term(), b.to_term()]),
            Formula::Iff(a, b) => Term::eq(a.to_term(), b.to_term()),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Atom) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(f(a)),
            Formula::Not(x) => Formula::not(x.map_atoms(f)),
            Formula::And(fs) => Formula::And(fs.iter().map(|x| x.map_atoms(f)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|x| x.map_atoms(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
            Formula::Iff(a, b) => Formula::iff(a.map_atoms(f), b.map_atoms(f)),
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        self.map_atoms(&mut |a| a.map_terms(f))
    }

    /// Every maximal term occurring in an atom.
    pub fn terms(&self) -> Vec<&Term> {
        self.atoms().into_iter().flat_map(|a| a.terms()).collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) => 1 + f.depth(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Implies(a, b) | Formula::Iff(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

/// Exact free-variable set of a formula, with sorts.
pub fn free_vars(f: &Formula) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for t in f.terms() {
        t.free_vars_into(&mut out);
    }
    out
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{message}{}", fmt_path(.path))]
pub struct SortError {
    /// 1-based argument positions from the root to the offending subterm.
    pub path: Vec<usize>,
    pub message: String,
}

fn fmt_path(path: &[usize]) -> String {
    if path.is_empty() {
        String::new()
    } else {
        let p: Vec<String> = path.iter().map(usize::to_string).collect();
        format!(" (at argument {})", p.join("."))
    }
}

impl SortError {
    pub fn new(message: impl Into<String>) -> Self {
        SortError { path: Vec::new(), message: message.into() }
    }

    fn at(mut self, pos: usize) -> Self {
        self.path.insert(0, pos);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: Symbol,
    pub params: Vec<Sort>,
    pub result: Sort,
}

/// A non-recursive `define-fun` macro.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDef {
    pub name: Symbol,
    pub params: Vec<Var>,
    pub result: Sort,
    pub body: Term,
}

impl FunDef {
    pub fn instantiate(&self, args: &[Term]) -> Term {
        let bindings: BTreeMap<Var, Term> = self.params.iter().cloned().zip(args.iter().cloned()).collect();
        substitute_unchecked(&self.body, &bindings)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binder {
    pub selector: Symbol,
    pub var: Var,
    pub recursive: bool,
}

/// One branch of a catamorphism: the value for a tree built with `ctor`,
/// written over placeholder variables (`binders`) that stand for the
/// catamorphism value of recursive fields and the raw value of the others.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CataCase {
    pub ctor: Symbol,
    pub binders: Vec<Binder>,
    pub body: Term,
}

impl CataCase {
    pub fn instantiate(&self, args: &[Term]) -> Term {
        let bindings: BTreeMap<Var, Term> =
            self.binders.iter().map(|b| b.var.clone()).zip(args.iter().cloned()).collect();
        substitute_unchecked(&self.body, &bindings)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangePred {
    pub var: Var,
    pub body: Term,
}

impl RangePred {
    pub fn apply(&self, value: Term) -> Term {
        let mut b = BTreeMap::new();
        b.insert(self.var.clone(), value);
        substitute_unchecked(&self.body, &b)
    }

    pub fn trivial(sort: Sort) -> RangePred {
        RangePred { var: Var::new("c", sort), body: Term::bool(true) }
    }
}

/// A binary function usable as the associative operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BinaryFn {
    Theory(Op),
    Defined(Symbol),
}

impl BinaryFn {
    pub fn apply(&self, a: Term, b: Term) -> Term {
        match self {
            BinaryFn::Theory(op) => Term::op(op.clone(), vec![a, b]),
            BinaryFn::Defined(f) => Term::apply(f.clone(), vec![a, b]),
        }
    }
}

/// `combine(l, e, r) = l ⊕ δ(e) ⊕ r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssocDecomp {
    pub op: BinaryFn,
    pub delta_var: Var,
    pub delta: Term,
}

impl AssocDecomp {
    pub fn delta_of(&self, e: Term) -> Term {
        let mut b = BTreeMap::new();
        b.insert(self.delta_var.clone(), e);
        substitute_unchecked(&self.delta, &b)
    }

    /// `(l ⊕ δ(e)) ⊕ r`
    pub fn combine(&self, l: Term, e: Term, r: Term) -> Term {
        self.op.apply(self.op.apply(l, self.delta_of(e)), r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CataClass {
    #[default]
    Unclassified,
    Monotonic(u32),
    Associative,
}

impl fmt::Display for CataClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CataClass::Unclassified => f.write_str("unclassified"),
            CataClass::Monotonic(h) => write!(f, "(monotonic {h})"),
            CataClass::Associative => f.write_str("associative"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CataDef {
    pub name: Symbol,
    pub input: Symbol,
    pub result: Sort,
    /// Parameter name used when the definition is printed as a function body.
    pub param: Symbol,
    /// One case per constructor of `input`, in declaration order.
    pub cases: Vec<CataCase>,
    pub range: Option<RangePred>,
    pub assoc: Option<AssocDecomp>,
    pub class: CataClass,
}

impl CataDef {
    pub fn case(&self, ctor: &Symbol) -> Option<&CataCase> {
        self.cases.iter().find(|c| &c.ctor == ctor)
    }

    /// Value on the base constructor of a binary tree datatype.
    pub fn empty(&self) -> Option<&Term> {
        self.cases.iter().find(|c| c.binders.is_empty()).map(|c| &c.body)
    }

    /// `combine(l, e, r)` for a Leaf/Node datatype.
    pub fn combine(&self, l: Term, e: Term, r: Term) -> Term {
        let case = self
            .cases
            .iter()
            .find(|c| c.binders.len() == 3)
            .expect("combine on a catamorphism without a binary node case");
        case.instantiate(&[l, e, r])
    }

    pub fn range_or_trivial(&self) -> RangePred {
        self.range.clone().unwrap_or_else(|| RangePred::trivial(self.result.clone()))
    }

    /// The defining body over `subject`: an ite cascade over testers, with
    /// recursive fields mapped through `recurse`.
    pub fn unfold_at(&self, dt: &DatatypeDecl, subject: &Term, recurse: &dyn Fn(Term) -> Term) -> Term {
        let branch = |case: &CataCase| {
            let args: Vec<Term> = case
                .binders
                .iter()
                .map(|b| {
                    let sel = Term::select(b.selector.clone(), subject.clone());
                    if b.recursive {
                        recurse(sel)
                    } else {
                        sel
                    }
                })
                .collect();
            case.instantiate(&args)
        };
        let ordered: Vec<&CataCase> = dt.constructors.iter().filter_map(|c| self.case(&c.name)).collect();
        let (last, init) = ordered.split_last().expect("catamorphism without cases");
        let mut acc = branch(last);
        for case in init.iter().rev() {
            acc = Term::ite(Term::test(case.ctor.clone(), subject.clone()), branch(case), acc);
        }
        acc
    }

    /// The body over the parameter, with recursion through the catamorphism
    /// itself; this is what `define-catamorphism` and the generated
    /// `_GeneratedCatDefineFun` print.
    pub fn body(&self, dt: &DatatypeDecl) -> Term {
        let name = self.name.clone();
        let param = Term::var(self.param.clone(), dt.sort());
        self.unfold_at(dt, &param, &|t| Term::cata(name.clone(), t))
    }
}

/// Every declared symbol of a script.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    pub datatypes: Vec<DatatypeDecl>,
    pub functions: Vec<FunDecl>,
    pub defines: Vec<FunDef>,
    pub constants: Vec<Var>,
    pub catas: Vec<CataDef>,
    ctor_index: HashMap<Symbol, (usize, usize)>,
    selector_index: HashMap<Symbol, (usize, usize, usize)>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_declared(&self, name: &Symbol) -> bool {
        self.ctor_index.contains_key(name)
            || self.selector_index.contains_key(name)
            || self.datatypes.iter().any(|d| &d.name == name)
            || self.function(name).is_some()
            || self.define(name).is_some()
            || self.constant(name).is_some()
            || self.cata(name).is_some()
    }

    fn fresh_check(&self, name: &Symbol) -> Result<(), SortError> {
        if self.is_declared(name) {
            Err(SortError::new(format!("symbol {name} already declared")))
        } else {
            Ok(())
        }
    }

    pub fn add_datatype(&mut self, dt: DatatypeDecl) -> Result<(), SortError> {
        self.fresh_check(&dt.name)?;
        for c in &dt.constructors {
            self.fresh_check(&c.name)?;
            for f in &c.fields {
                self.fresh_check(&f.selector)?;
            }
        }
        let di = self.datatypes.len();
        for (ci, c) in dt.constructors.iter().enumerate() {
            self.ctor_index.insert(c.name.clone(), (di, ci));
            for (fi, f) in c.fields.iter().enumerate() {
                self.selector_index.insert(f.selector.clone(), (di, ci, fi));
            }
        }
        self.datatypes.push(dt);
        Ok(())
    }

    pub fn add_function(&mut self, f: FunDecl) -> Result<(), SortError> {
        self.fresh_check(&f.name)?;
        self.functions.push(f);
        Ok(())
    }

    pub fn add_define(&mut self, f: FunDef) -> Result<(), SortError> {
        self.fresh_check(&f.name)?;
        let s = well_sorted(&f.body, self)?;
        if s != f.result {
            return Err(SortError::new(format!("body of {} has sort {s}, declared {}", f.name, f.result)));
        }
        self.defines.push(f);
        Ok(())
    }

    pub fn add_constant(&mut self, v: Var) -> Result<(), SortError> {
        self.fresh_check(&v.name)?;
        self.constants.push(v);
        Ok(())
    }

    pub fn add_cata(&mut self, c: CataDef) -> Result<(), SortError> {
        self.fresh_check(&c.name)?;
        let name = c.name.clone();
        self.catas.push(c);
        if let Err(e) = self.check_cata(&name) {
            self.catas.pop();
            return Err(e);
        }
        Ok(())
    }

    pub fn cata_mut(&mut self, name: &Symbol) -> Option<&mut CataDef> {
        self.catas.iter_mut().find(|c| &c.name == name)
    }

    /// Validates the structural invariants of a catamorphism definition.
    pub fn check_cata(&self, name: &Symbol) -> Result<(), SortError> {
        let cata = self.cata(name).ok_or_else(|| SortError::new(format!("unknown catamorphism {name}")))?;
        let dt =
            self.datatype(&cata.input).ok_or_else(|| SortError::new(format!("unknown datatype {}", cata.input)))?;
        for ctor in &dt.constructors {
            let case = cata
                .case(&ctor.name)
                .ok_or_else(|| SortError::new(format!("{} has no case for constructor {}", cata.name, ctor.name)))?;
            if case.binders.len() != ctor.fields.len() {
                return Err(SortError::new(format!("case {} of {} has wrong arity", ctor.name, cata.name)));
            }
            let rec = dt.recursive_positions(&ctor.name);
            for (i, (b, f)) in case.binders.iter().zip(&ctor.fields).enumerate() {
                let expected = if rec.contains(&i) { &cata.result } else { &f.sort };
                if b.recursive != rec.contains(&i) || &b.var.sort != expected || b.selector != f.selector {
                    return Err(SortError::new(format!(
                        "placeholder {} of {} does not match field {}",
                        b.var, cata.name, f.selector
                    )));
                }
            }
            if case.body.any(&mut |t| matches!(t, Term::Cata { .. })) {
                return Err(SortError::new(format!("non-structural recursion in case {} of {}", ctor.name, cata.name)));
            }
            let s = well_sorted(&case.body, self)?;
            if s != cata.result {
                return Err(SortError::new(format!(
                    "case {} of {} has sort {s}, expected {}",
                    ctor.name, cata.name, cata.result
                )));
            }
        }
        if let Some(r) = &cata.range {
            if r.var.sort != cata.result || well_sorted(&r.body, self)? != Sort::Bool {
                return Err(SortError::new(format!("ill-sorted range predicate for {}", cata.name)));
            }
        }
        Ok(())
    }

    pub fn datatype(&self, name: &Symbol) -> Option<&DatatypeDecl> {
        self.datatypes.iter().find(|d| &d.name == name)
    }

    pub fn datatype_of_sort(&self, sort: &Sort) -> Option<&DatatypeDecl> {
        sort.datatype_name().and_then(|n| self.datatype(n))
    }

    /// Recursive datatypes play the role of trees; non-recursive ones
    /// (options, tuples) belong to the collection/element theories.
    pub fn is_tree_sort(&self, sort: &Sort) -> bool {
        self.datatype_of_sort(sort).map(DatatypeDecl::is_recursive).unwrap_or(false)
    }

    pub fn constructor(&self, name: &Symbol) -> Option<(&DatatypeDecl, &Constructor)> {
        self.ctor_index.get(name).map(|&(d, c)| {
            let dt = &self.datatypes[d];
            (dt, &dt.constructors[c])
        })
    }

    pub fn selector(&self, name: &Symbol) -> Option<(&DatatypeDecl, &Constructor, usize)> {
        self.selector_index.get(name).map(|&(d, c, f)| {
            let dt = &self.datatypes[d];
            (dt, &dt.constructors[c], f)
        })
    }

    pub fn function(&self, name: &Symbol) -> Option<&FunDecl> {
        self.functions.iter().find(|f| &f.name == name)
    }

    pub fn define(&self, name: &Symbol) -> Option<&FunDef> {
        self.defines.iter().find(|f| &f.name == name)
    }

    pub fn constant(&self, name: &Symbol) -> Option<&Var> {
        self.constants.iter().find(|v| &v.name == name)
    }

    pub fn cata(&self, name: &Symbol) -> Option<&CataDef> {
        self.catas.iter().find(|c| &c.name == name)
    }
}

fn expect_sort(t: &Term, sig: &Signature, pos: usize, want: &Sort) -> Result<(), SortError> {
    let got = well_sorted(t, sig).map_err(|e| e.at(pos))?;
    if &got != want {
        return Err(SortError::new(format!("expected {want}, found {got}")).at(pos));
    }
    Ok(())
}

fn arg_sorts(args: &[Term], sig: &Signature) -> Result<Vec<Sort>, SortError> {
    args.iter().enumerate().map(|(i, a)| well_sorted(a, sig).map_err(|e| e.at(i + 1))).collect()
}

fn all_same(sorts: &[Sort], want: &Sort) -> Result<(), SortError> {
    for (i, s) in sorts.iter().enumerate() {
        if s != want {
            return Err(SortError::new(format!("expected {want}, found {s}")).at(i + 1));
        }
    }
    Ok(())
}

fn arity(op: &Op, args: &[Term], min: usize, max: Option<usize>) -> Result<(), SortError> {
    if args.len() < min || max.is_some_and(|m| args.len() > m) {
        return Err(SortError::new(format!("wrong number of arguments to {}: {}", op.symbol(), args.len())));
    }
    Ok(())
}

/// Returns the sort of `t`, checking every subterm against the signature.
pub fn well_sorted(t: &Term, sig: &Signature) -> Result<Sort, SortError> {
    match t {
        Term::Var(v) => Ok(v.sort.clone()),
        Term::Lit(l) => Ok(l.sort()),
        Term::Ctor { ctor, args } => {
            let (dt, c) = sig.constructor(ctor).ok_or_else(|| SortError::new(format!("unknown constructor {ctor}")))?;
            if c.fields.len() != args.len() {
                return Err(SortError::new(format!("{ctor} expects {} arguments, got {}", c.fields.len(), args.len())));
            }
            for (i, (a, f)) in args.iter().zip(&c.fields).enumerate() {
                expect_sort(a, sig, i + 1, &f.sort)?;
            }
            Ok(dt.sort())
        }
        Term::Select { selector, arg } => {
            let (dt, c, f) =
                sig.selector(selector).ok_or_else(|| SortError::new(format!("unknown selector {selector}")))?;
            expect_sort(arg, sig, 1, &dt.sort())?;
            Ok(c.fields[f].sort.clone())
        }
        Term::Test { ctor, arg } => {
            let (dt, _) = sig.constructor(ctor).ok_or_else(|| SortError::new(format!("unknown constructor {ctor}")))?;
            expect_sort(arg, sig, 1, &dt.sort())?;
            Ok(Sort::Bool)
        }
        Term::Cata { cata, arg } => {
            let c = sig.cata(cata).ok_or_else(|| SortError::new(format!("unknown catamorphism {cata}")))?;
            expect_sort(arg, sig, 1, &Sort::Datatype(c.input.clone()))?;
            Ok(c.result.clone())
        }
        Term::Apply { func, args } => {
            let (params, result): (Vec<Sort>, Sort) = if let Some(f) = sig.function(func) {
                (f.params.clone(), f.result.clone())
            } else if let Some(d) = sig.define(func) {
                (d.params.iter().map(|p| p.sort.clone()).collect(), d.result.clone())
            } else {
                return Err(SortError::new(format!("unknown function {func}")));
            };
            if params.len() != args.len() {
                return Err(SortError::new(format!("{func} expects {} arguments, got {}", params.len(), args.len())));
            }
            for (i, (a, p)) in args.iter().zip(&params).enumerate() {
                expect_sort(a, sig, i + 1, p)?;
            }
            Ok(result)
        }
        Term::Op { op, args } => op_sort(op, args, sig),
    }
}

fn op_sort(op: &Op, args: &[Term], sig: &Signature) -> Result<Sort, SortError> {
    use Op::*;
    match op {
        SetEmpty(e) => {
            arity(op, args, 0, Some(0))?;
            return Ok(Sort::Set(Box::new(e.clone())));
        }
        BagEmpty(e) => {
            arity(op, args, 0, Some(0))?;
            return Ok(Sort::Bag(Box::new(e.clone())));
        }
        SeqEmpty(e) => {
            arity(op, args, 0, Some(0))?;
            return Ok(Sort::Seq(Box::new(e.clone())));
        }
        _ => {}
    }
    let sorts = arg_sorts(args, sig)?;
    match op {
        Not => {
            arity(op, args, 1, Some(1))?;
            all_same(&sorts, &Sort::Bool)?;
            Ok(Sort::Bool)
        }
        And | Or | Xor => {
            all_same(&sorts, &Sort::Bool)?;
            Ok(Sort::Bool)
        }
        Implies => {
            arity(op, args, 2, None)?;
            all_same(&sorts, &Sort::Bool)?;
            Ok(Sort::Bool)
        }
        Eq | Distinct => {
            arity(op, args, 2, None)?;
            all_same(&sorts, &sorts[0])?;
            Ok(Sort::Bool)
        }
        Ite => {
            arity(op, args, 3, Some(3))?;
            if sorts[0] != Sort::Bool {
                return Err(SortError::new(format!("expected Bool, found {}", sorts[0])).at(1));
            }
            if sorts[1] != sorts[2] {
                return Err(SortError::new(format!("expected {}, found {}", sorts[1], sorts[2])).at(3));
            }
            Ok(sorts[1].clone())
        }
        Add | Mul => {
            arity(op, args, 2, None)?;
            numeric_same(&sorts)
        }
        Sub => {
            arity(op, args, 1, None)?;
            numeric_same(&sorts)
        }
        Div => {
            arity(op, args, 2, None)?;
            all_same(&sorts, &Sort::Real)?;
            Ok(Sort::Real)
        }
        IntDiv | Mod => {
            arity(op, args, 2, Some(2))?;
            all_same(&sorts, &Sort::Int)?;
            Ok(Sort::Int)
        }
        Abs => {
            arity(op, args, 1, Some(1))?;
            numeric_same(&sorts)
        }
        Lt | Le | Gt | Ge => {
            arity(op, args, 2, None)?;
            numeric_same(&sorts)?;
            Ok(Sort::Bool)
        }
        SetSingleton(e) => {
            arity(op, args, 1, Some(1))?;
            all_same(&sorts, e)?;
            Ok(Sort::Set(Box::new(e.clone())))
        }
        SetUnion | SetInter | SetMinus => {
            arity(op, args, 2, None)?;
            collection_same(&sorts, |s| matches!(s, Sort::Set(_)))
        }
        SetSubset => {
            arity(op, args, 2, Some(2))?;
            collection_same(&sorts, |s| matches!(s, Sort::Set(_)))?;
            Ok(Sort::Bool)
        }
        SetMember => {
            arity(op, args, 2, Some(2))?;
            match &sorts[1] {
                Sort::Set(e) if **e == sorts[0] => Ok(Sort::Bool),
                s => Err(SortError::new(format!("expected (Set {}), found {s}", sorts[0])).at(2)),
            }
        }
        BagMake(e) => {
            arity(op, args, 2, Some(2))?;
            if &sorts[0] != e {
                return Err(SortError::new(format!("expected {e}, found {}", sorts[0])).at(1));
            }
            if sorts[1] != Sort::Int {
                return Err(SortError::new(format!("expected Int, found {}", sorts[1])).at(2));
            }
            Ok(Sort::Bag(Box::new(e.clone())))
        }
        BagUnion => {
            arity(op, args, 2, None)?;
            collection_same(&sorts, |s| matches!(s, Sort::Bag(_)))
        }
        BagCount => {
            arity(op, args, 2, Some(2))?;
            match &sorts[1] {
                Sort::Bag(e) if **e == sorts[0] => Ok(Sort::Int),
                s => Err(SortError::new(format!("expected (Bag {}), found {s}", sorts[0])).at(2)),
            }
        }
        SeqUnit(e) => {
            arity(op, args, 1, Some(1))?;
            all_same(&sorts, e)?;
            Ok(Sort::Seq(Box::new(e.clone())))
        }
        SeqConcat => {
            arity(op, args, 2, None)?;
            collection_same(&sorts, |s| matches!(s, Sort::Seq(_)))
        }
        SeqLen => {
            arity(op, args, 1, Some(1))?;
            match &sorts[0] {
                Sort::Seq(_) => Ok(Sort::Int),
                s => Err(SortError::new(format!("expected a sequence, found {s}")).at(1)),
            }
        }
        SetEmpty(_) | BagEmpty(_) | SeqEmpty(_) => unreachable!(),
    }
}

fn numeric_same(sorts: &[Sort]) -> Result<Sort, SortError> {
    let first = &sorts[0];
    if !first.is_numeric() {
        return Err(SortError::new(format!("expected Int or Real, found {first}")).at(1));
    }
    all_same(sorts, first)?;
    Ok(first.clone())
}

fn collection_same(sorts: &[Sort], ok: impl Fn(&Sort) -> bool) -> Result<Sort, SortError> {
    let first = &sorts[0];
    if !ok(first) {
        return Err(SortError::new(format!("unexpected collection sort {first}")).at(1));
    }
    all_same(sorts, first)?;
    Ok(first.clone())
}

/// Simultaneous substitution of variables. Terms have no binders, so the
/// substitution is trivially capture-free.
pub fn substitute(t: &Term, bindings: &BTreeMap<Var, Term>, sig: &Signature) -> Result<Term, SortError> {
    for (v, r) in bindings {
        let s = well_sorted(r, sig)?;
        if s != v.sort {
            return Err(SortError::new(format!("cannot substitute a term of sort {s} for {} : {}", v.name, v.sort)));
        }
    }
    Ok(substitute_unchecked(t, bindings))
}

pub(crate) fn substitute_unchecked(t: &Term, bindings: &BTreeMap<Var, Term>) -> Term {
    if bindings.is_empty() {
        return t.clone();
    }
    t.map_bottom_up(&mut |n| match &n {
        Term::Var(v) => bindings.get(v).cloned().unwrap_or(n),
        _ => n,
    })
}

pub fn substitute_formula(f: &Formula, bindings: &BTreeMap<Var, Term>) -> Formula {
    f.map_terms(&mut |t| substitute_unchecked(t, bindings))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    SetLogic(String),
    SetOption(String),
    DeclareDatatypes(Vec<Symbol>),
    DeclareFun(Symbol),
    DeclareConst(Symbol),
    DefineFun(Symbol),
    DefineCata(Symbol),
    DeclareRange(Symbol),
    SetCataClass(Symbol),
    Assert(Formula),
    CheckSat,
    GetModel,
    Exit,
}

/// A validated input script.
#[derive(Clone, Debug)]
pub struct Script {
    pub signature: Signature,
    pub commands: Vec<Command>,
}

impl Script {
    pub fn assertions(&self) -> impl Iterator<Item = &Formula> {
        self.commands.iter().filter_map(|c| match c {
            Command::Assert(f) => Some(f),
            _ => None,
        })
    }

    /// The conjunction of all assertions.
    pub fn formula(&self) -> Formula {
        Formula::And(self.assertions().cloned().collect())
    }

    /// Catamorphism applications, deduplicated, in order of first occurrence.
    pub fn cata_applications(&self) -> Vec<(Symbol, Term)> {
        let mut out: Vec<(Symbol, Term)> = Vec::new();
        for f in self.assertions() {
            for t in f.terms() {
                t.visit(&mut |s| {
                    if let Term::Cata { cata, arg } = s {
                        let key = (cata.clone(), (**arg).clone());
                        if !out.contains(&key) {
                            out.push(key);
                        }
                    }
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_datatype(DatatypeDecl::binary_tree("Tree", Sort::Int)).unwrap();
        s
    }

    fn tree() -> Sort {
        Sort::datatype("Tree")
    }

    #[test]
    fn node_is_tree_sorted() {
        let t = Term::ctor("Node", vec![Term::ctor("Leaf", vec![]), Term::int(5), Term::ctor("Leaf", vec![])]);
        assert_eq!(well_sorted(&t, &sig()).unwrap(), tree());
    }

    #[test]
    fn selector_on_leaf_is_well_sorted() {
        let t = Term::select("left", Term::ctor("Leaf", vec![]));
        assert_eq!(well_sorted(&t, &sig()).unwrap(), tree());
    }

    #[test]
    fn swapped_fields_fail_at_first_argument() {
        let t = Term::ctor("Node", vec![Term::int(5), Term::ctor("Leaf", vec![]), Term::ctor("Leaf", vec![])]);
        let err = well_sorted(&t, &sig()).unwrap_err();
        assert_eq!(err.path, vec![1]);
    }

    #[test]
    fn nested_error_path() {
        let bad = Term::ctor("Node", vec![Term::int(5), Term::ctor("Leaf", vec![]), Term::ctor("Leaf", vec![])]);
        let t = Term::ctor("Node", vec![Term::ctor("Leaf", vec![]), Term::int(1), bad]);
        assert_eq!(well_sorted(&t, &sig()).unwrap_err().path, vec![3, 1]);
    }

    #[test]
    fn substitute_is_simultaneous() {
        let t = Term::var("t", tree());
        let e = Term::var("e", Sort::Int);
        let node = Term::ctor("Node", vec![t.clone(), e.clone(), t.clone()]);
        let mut b = BTreeMap::new();
        b.insert(Var::new("t", tree()), Term::ctor("Leaf", vec![]));
        let got = substitute(&node, &b, &sig()).unwrap();
        let leaf = Term::ctor("Leaf", vec![]);
        assert_eq!(got, Term::ctor("Node", vec![leaf.clone(), e, leaf]));
    }

    #[test]
    fn substitute_rejects_sort_mismatch() {
        let mut b = BTreeMap::new();
        b.insert(Var::new("t", tree()), Term::int(3));
        assert!(substitute(&Term::var("t", tree()), &b, &sig()).is_err());
    }

    #[test]
    fn empty_substitution_is_identity() {
        let f = Formula::eq(Term::var("x", Sort::Int), Term::var("y", Sort::Int));
        assert_eq!(substitute_formula(&f, &BTreeMap::new()), f);
    }

    #[test]
    fn free_vars_of_node_binding() {
        let f = Formula::eq(
            Term::var("t", tree()),
            Term::ctor("Node", vec![Term::var("tl", tree()), Term::var("e", Sort::Int), Term::var("tr", tree())]),
        );
        let names: Vec<String> = free_vars(&f).into_iter().map(|v| v.name.to_string()).collect();
        assert_eq!(names.len(), 4);
        for n in ["t", "tl", "e", "tr"] {
            assert!(names.contains(&n.to_string()));
        }
        assert!(free_vars(&Formula::tt()).is_empty());
    }

    #[test]
    fn datatype_needs_base_constructor() {
        let me = Sort::datatype("Stream");
        let r = DatatypeDecl::new("Stream", vec![Constructor::new("Cons", vec![("hd", Sort::Int), ("tl", me)])]);
        assert!(r.is_err());
    }

    #[test]
    fn datatype_selectors_unique() {
        let me = Sort::datatype("T");
        let r = DatatypeDecl::new(
            "T",
            vec![
                Constructor::new("A", vec![("x", Sort::Int)]),
                Constructor::new("B", vec![("x", Sort::Int), ("n", me)]),
            ],
        );
        assert!(r.is_err());
    }

    #[test]
    fn binary_view_and_recursive_positions() {
        let dt = DatatypeDecl::binary_tree("Tree", Sort::Int);
        assert_eq!(dt.recursive_positions(&"Node".into()), vec![0, 2]);
        let v = dt.binary_view().unwrap();
        assert_eq!(v.leaf.as_str(), "Leaf");
        assert_eq!(v.elem_sort, Sort::Int);
    }
}
