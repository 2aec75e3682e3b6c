//! Deterministic single-line printing of sorts, terms and commands.
//!
//! The surface dialect prints exactly what the parser accepts. The solver
//! dialects adjust tester syntax and, for z3, encode sets and bags as arrays.

use std::fmt::Write;

use num_traits::Signed;

use crate::ast::{CataDef, Command, DatatypeDecl, Formula, Literal, Op, Script, Signature, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Dialect {
    /// The input language: `is-C` testers, `set.*`/`bag.*`/`seq.*` operators.
    #[default]
    Surface,
    /// z3: `is-C` testers, sets as `(Array E Bool)`, bags as `(Array E Int)`.
    Z3,
    /// cvc5: `(_ is C)` testers, native collection theories.
    Cvc5,
}

pub fn print_sort(s: &Sort, d: Dialect) -> String {
    match (s, d) {
        (Sort::Set(e), Dialect::Z3) => format!("(Array {} Bool)", print_sort(e, d)),
        (Sort::Bag(e), Dialect::Z3) => format!("(Array {} Int)", print_sort(e, d)),
        (Sort::Set(e), _) => format!("(Set {})", print_sort(e, d)),
        (Sort::Bag(e), _) => format!("(Bag {})", print_sort(e, d)),
        (Sort::Seq(e), _) => format!("(Seq {})", print_sort(e, d)),
        _ => s.to_string(),
    }
}

/// Surface-dialect rendering; the inverse of the term parser.
pub fn print_term(t: &Term) -> String {
    print_term_in(t, Dialect::Surface)
}

pub fn print_term_in(t: &Term, d: Dialect) -> String {
    let mut out = String::new();
    write_term(&mut out, t, d);
    out
}

pub fn print_formula(f: &Formula, d: Dialect) -> String {
    print_term_in(&f.to_term(), d)
}

pub fn print_literal(l: &Literal) -> String {
    match l {
        Literal::Bool(b) => b.to_string(),
        Literal::Int(n) if *n < 0 => format!("(- {})", n.unsigned_abs()),
        Literal::Int(n) => n.to_string(),
        Literal::Real(r) => {
            let body = decimal(&r.abs());
            if r.is_negative() {
                format!("(- {body})")
            } else {
                body
            }
        }
        Literal::Str(s) => format!("\"{}\"", s.replace('"', "\"\"")),
    }
}

/// A non-negative rational as a finite decimal when one exists, else as a
/// quotient of decimals.
fn decimal(r: &num_rational::Rational64) -> String {
    let (n, den) = (*r.numer(), *r.denom());
    let mut d = den;
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("(/ {n}.0 {den}.0)");
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return format!("{n}.0");
    }
    let scale = 10i128.pow(digits);
    let scaled = n as i128 * (scale / den as i128);
    let int = scaled / scale;
    let frac = scaled % scale;
    format!("{int}.{frac:0width$}", width = digits as usize)
}

fn write_app(out: &mut String, head: &str, args: &[Term], d: Dialect) {
    if args.is_empty() {
        out.push_str(head);
        return;
    }
    out.push('(');
    out.push_str(head);
    for a in args {
        out.push(' ');
        write_term(out, a, d);
    }
    out.push(')');
}

fn write_term(out: &mut String, t: &Term, d: Dialect) {
    match t {
        Term::Var(v) => out.push_str(v.name.as_str()),
        Term::Lit(l) => out.push_str(&print_literal(l)),
        Term::Ctor { ctor, args } => write_app(out, ctor.as_str(), args, d),
        Term::Select { selector, arg } => write_app(out, selector.as_str(), std::slice::from_ref(arg), d),
        Term::Test { ctor, arg } => {
            let head = match d {
                Dialect::Cvc5 => format!("(_ is {ctor})"),
                _ => format!("is-{ctor}"),
            };
            write_app(out, &head, std::slice::from_ref(arg), d)
        }
        Term::Cata { cata, arg } => write_app(out, cata.as_str(), std::slice::from_ref(arg), d),
        Term::Apply { func, args } => write_app(out, func.as_str(), args, d),
        Term::Op { op, args } => write_op(out, op, args, d),
    }
}

fn write_op(out: &mut String, op: &Op, args: &[Term], d: Dialect) {
    if d == Dialect::Z3 {
        if let Some(()) = write_z3_collection(out, op, args) {
            return;
        }
    }
    match op {
        Op::SetEmpty(e) => {
            let _ = write!(out, "(as set.empty {})", print_sort(&Sort::Set(Box::new(e.clone())), d));
        }
        Op::BagEmpty(e) => {
            let _ = write!(out, "(as bag.empty {})", print_sort(&Sort::Bag(Box::new(e.clone())), d));
        }
        Op::SeqEmpty(e) => {
            let _ = write!(out, "(as seq.empty {})", print_sort(&Sort::Seq(Box::new(e.clone())), d));
        }
        // `and`/`or` keep their parentheses even when nullary so that the
        // printed form parses back to the same formula.
        Op::And | Op::Or if args.is_empty() => {
            let _ = write!(out, "({})", op.symbol());
        }
        _ => write_app(out, op.symbol(), args, d),
    }
}

/// Array encodings of the set and bag operators for z3.
fn write_z3_collection(out: &mut String, op: &Op, args: &[Term]) -> Option<()> {
    let d = Dialect::Z3;
    let p = |t: &Term| print_term_in(t, d);
    let fold = |out: &mut String, map: &str| {
        let mut acc = p(&args[0]);
        for a in &args[1..] {
            acc = format!("({map} {acc} {})", p(a));
        }
        out.push_str(&acc);
    };
    match op {
        Op::SetEmpty(e) => {
            let _ = write!(out, "((as const (Array {} Bool)) false)", print_sort(e, d));
        }
        Op::SetSingleton(e) => {
            let _ = write!(out, "(store ((as const (Array {} Bool)) false) {} true)", print_sort(e, d), p(&args[0]));
        }
        Op::SetUnion => fold(out, "(_ map or)"),
        Op::SetInter => fold(out, "(_ map and)"),
        Op::SetMinus => {
            let mut acc = p(&args[0]);
            for a in &args[1..] {
                acc = format!("((_ map and) {acc} ((_ map not) {}))", p(a));
            }
            out.push_str(&acc);
        }
        Op::SetMember => {
            let _ = write!(out, "(select {} {})", p(&args[1]), p(&args[0]));
        }
        Op::SetSubset => {
            let (a, b) = (p(&args[0]), p(&args[1]));
            let _ = write!(out, "(= ((_ map and) {a} {b}) {a})");
        }
        Op::BagEmpty(e) => {
            let _ = write!(out, "((as const (Array {} Int)) 0)", print_sort(e, d));
        }
        Op::BagMake(e) => {
            let n = p(&args[1]);
            let _ = write!(
                out,
                "(store ((as const (Array {} Int)) 0) {} (ite (>= {n} 0) {n} 0))",
                print_sort(e, d),
                p(&args[0])
            );
        }
        Op::BagUnion => fold(out, "(_ map (+ (Int Int) Int))"),
        Op::BagCount => {
            let _ = write!(out, "(select {} {})", p(&args[1]), p(&args[0]));
        }
        _ => return None,
    }
    Some(())
}

/// `(declare-datatypes ((A 0) ...) (((C (s S)) ...) ...))`
pub fn print_datatypes(dts: &[&DatatypeDecl], d: Dialect) -> String {
    let mut out = String::from("(declare-datatypes (");
    for (i, dt) in dts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "({} 0)", dt.name);
    }
    out.push_str(") (");
    for (i, dt) in dts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push('(');
        for (j, c) in dt.constructors.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "({}", c.name);
            for f in &c.fields {
                let _ = write!(out, " ({} {})", f.selector, print_sort(&f.sort, d));
            }
            out.push(')');
        }
        out.push(')');
    }
    out.push_str("))");
    out
}

pub fn print_define_fun(name: &str, params: &[(String, Sort)], result: &Sort, body: &Term, d: Dialect) -> String {
    let ps: Vec<String> = params.iter().map(|(n, s)| format!("({n} {})", print_sort(s, d))).collect();
    format!("(define-fun {name} ({}) {} {})", ps.join(" "), print_sort(result, d), print_term_in(body, d))
}

pub fn print_cata_definition(c: &CataDef, sig: &Signature) -> String {
    let dt = sig.datatype(&c.input).expect("catamorphism over an undeclared datatype");
    format!("(define-catamorphism {} (({} {})) {} {})", c.name, c.param, c.input, c.result, print_term(&c.body(dt)))
}

/// One line per command, in the surface dialect.
pub fn print_script(script: &Script) -> String {
    let sig = &script.signature;
    let mut out = String::new();
    for cmd in &script.commands {
        let line = match cmd {
            Command::SetLogic(l) => format!("(set-logic {l})"),
            Command::SetOption(o) => format!("(set-option {o})"),
            Command::DeclareDatatypes(names) => {
                let dts: Vec<&DatatypeDecl> = names.iter().filter_map(|n| sig.datatype(n)).collect();
                print_datatypes(&dts, Dialect::Surface)
            }
            Command::DeclareFun(n) => {
                let f = sig.function(n).expect("declared function");
                let ps: Vec<String> = f.params.iter().map(|s| print_sort(s, Dialect::Surface)).collect();
                format!("(declare-fun {} ({}) {})", f.name, ps.join(" "), f.result)
            }
            Command::DeclareConst(n) => {
                let v = sig.constant(n).expect("declared constant");
                format!("(declare-const {} {})", v.name, v.sort)
            }
            Command::DefineFun(n) => {
                let f = sig.define(n).expect("defined function");
                let ps: Vec<(String, Sort)> = f.params.iter().map(|p| (p.name.to_string(), p.sort.clone())).collect();
                print_define_fun(f.name.as_str(), &ps, &f.result, &f.body, Dialect::Surface)
            }
            Command::DefineCata(n) => print_cata_definition(sig.cata(n).expect("declared catamorphism"), sig),
            Command::DeclareRange(n) => {
                let c = sig.cata(n).expect("declared catamorphism");
                let r = c.range.as_ref().expect("declared range");
                format!("(declare-range {} (({} {})) {})", c.name, r.var.name, r.var.sort, print_term(&r.body))
            }
            Command::SetCataClass(n) => {
                let c = sig.cata(n).expect("declared catamorphism");
                format!("(set-cata-class {} {})", c.name, c.class)
            }
            Command::Assert(f) => format!("(assert {})", print_formula(f, Dialect::Surface)),
            Command::CheckSat => "(check-sat)".to_string(),
            Command::GetModel => "(get-model)".to_string(),
            Command::Exit => "(exit)".to_string(),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn reals_print_as_decimals() {
        let p = |n, d| print_literal(&Literal::Real(Rational64::new(n, d)));
        assert_eq!(p(5, 1), "5.0");
        assert_eq!(p(1, 4), "0.25");
        assert_eq!(p(-3, 2), "(- 1.5)");
        assert_eq!(p(1, 3), "(/ 1.0 3.0)");
        assert_eq!(p(0, 1), "0.0");
        assert_eq!(p(21, 20), "1.05");
    }

    #[test]
    fn node_and_tester() {
        let leaf = Term::ctor("Leaf", vec![]);
        let n = Term::ctor("Node", vec![leaf.clone(), Term::real(5), leaf]);
        assert_eq!(print_term(&n), "(Node Leaf 5.0 Leaf)");
        let t = Term::test("Leaf", Term::var("t1", Sort::datatype("RealTree")));
        assert_eq!(print_term(&t), "(is-Leaf t1)");
        assert_eq!(print_term_in(&t, Dialect::Cvc5), "((_ is Leaf) t1)");
    }

    #[test]
    fn z3_sets_are_arrays() {
        let s = Term::op(Op::SetSingleton(Sort::Int), vec![Term::int(3)]);
        let u = Term::op(Op::SetUnion, vec![s.clone(), s]);
        assert_eq!(
            print_term_in(&u, Dialect::Z3),
            "((_ map or) (store ((as const (Array Int Bool)) false) 3 true) (store ((as const (Array Int Bool)) false) 3 true))"
        );
        assert_eq!(print_sort(&Sort::Bag(Box::new(Sort::Int)), Dialect::Z3), "(Array Int Int)");
    }

    #[test]
    fn negative_int() {
        assert_eq!(print_term(&Term::int(-7)), "(- 7)");
    }

    #[test]
    fn datatype_declaration_matches_solver_syntax() {
        let dt = DatatypeDecl::binary_tree("RealTree", Sort::Real);
        assert_eq!(
            print_datatypes(&[&dt], Dialect::Z3),
            "(declare-datatypes ((RealTree 0)) (((Leaf) (Node (left RealTree) (elem Real) (right RealTree)))))"
        );
    }

    #[test]
    fn zero_prints_bare() {
        assert_eq!(print_term(&Term::int(0)), "0");
        assert_eq!(print_literal(&Literal::Real(Rational64::from_integer(0))), "0.0");
    }
}
