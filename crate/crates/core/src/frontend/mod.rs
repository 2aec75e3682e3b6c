//! The extended SMT-LIB input language: parsing, printing, and lowering of
//! the catamorphism extensions to plain SMT-LIB.

mod lexer;
mod parse;
mod print;

use std::fmt;

use thiserror::Error;

pub use lexer::{read_all, AtomKind, Sexp, SourceSpan};
pub use parse::{decompose_cata_body, parse_formula, parse_script, parse_sort, parse_term, placeholder};
pub use print::{
    print_cata_definition, print_datatypes, print_define_fun, print_formula, print_literal, print_script, print_sort,
    print_term, print_term_in, Dialect,
};

use crate::ast::{CataDef, Command, DatatypeDecl, Script, Signature, Sort, Term};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{span}: parse error: {message}{}", Expected(.expected))]
    Parse { span: SourceSpan, message: String, expected: Vec<String> },
    #[error("{}validation error: {message}", .span.map(|s| format!("{s}: ")).unwrap_or_default())]
    Validation { span: Option<SourceSpan>, message: String },
}

struct Expected<'a>(&'a [String]);

impl fmt::Display for Expected<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            Ok(())
        } else {
            write!(f, " (expected one of: {})", self.0.join(", "))
        }
    }
}

impl FrontendError {
    pub(crate) fn parse(span: SourceSpan, message: impl Into<String>, expected: &[&str]) -> Self {
        FrontendError::Parse {
            span,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub(crate) fn validation(span: Option<SourceSpan>, message: impl Into<String>) -> Self {
        FrontendError::Validation { span, message: message.into() }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            FrontendError::Parse { span, .. } => Some(*span),
            FrontendError::Validation { span, .. } => *span,
        }
    }
}

pub const CAT_DEFINE_SUFFIX: &str = "_GeneratedCatDefineFun";
pub const UNROLL_DEFINE_SUFFIX: &str = "_GeneratedUnrollDefineFun";

pub fn cat_define_name(cata: &CataDef) -> String {
    format!("{}{CAT_DEFINE_SUFFIX}", cata.name)
}

pub fn unroll_define_name(cata: &CataDef) -> String {
    format!("{}{UNROLL_DEFINE_SUFFIX}", cata.name)
}

/// `(define-fun N_GeneratedCatDefineFun ((t D)) R <body>)`, recursion going
/// through the uninterpreted `N`.
pub fn generated_cat_define(cata: &CataDef, sig: &Signature, d: Dialect) -> String {
    let dt = sig.datatype(&cata.input).expect("catamorphism over an undeclared datatype");
    print_define_fun(&cat_define_name(cata), &[(cata.param.to_string(), dt.sort())], &cata.result, &cata.body(dt), d)
}

/// `(define-fun N_GeneratedUnrollDefineFun ((t D)) Bool (= (N t) (N_GeneratedCatDefineFun t)))`
pub fn generated_unroll_define(cata: &CataDef, d: Dialect) -> String {
    let p = cata.param.to_string();
    let input = Sort::Datatype(cata.input.clone());
    let body = Term::eq(
        Term::cata(cata.name.clone(), Term::var(p.as_str(), input.clone())),
        Term::apply(cat_define_name(cata), vec![Term::var(p.as_str(), input.clone())]),
    );
    print_define_fun(&unroll_define_name(cata), &[(p, input)], &Sort::Bool, &body, d)
}

/// Declarations of a script in solver syntax, in source order, with each
/// catamorphism declared as an uninterpreted function.
pub fn core_declarations(script: &Script, d: Dialect) -> Vec<String> {
    let sig = &script.signature;
    let mut out = Vec::new();
    for cmd in &script.commands {
        match cmd {
            Command::DeclareDatatypes(names) => {
                let dts: Vec<&DatatypeDecl> = names.iter().filter_map(|n| sig.datatype(n)).collect();
                out.push(print_datatypes(&dts, d));
            }
            Command::DeclareFun(n) => {
                let f = sig.function(n).unwrap();
                let ps: Vec<String> = f.params.iter().map(|s| print_sort(s, d)).collect();
                out.push(format!("(declare-fun {} ({}) {})", f.name, ps.join(" "), print_sort(&f.result, d)));
            }
            Command::DeclareConst(n) => {
                let v = sig.constant(n).unwrap();
                out.push(format!("(declare-fun {} () {})", v.name, print_sort(&v.sort, d)));
            }
            Command::DefineFun(n) => {
                let f = sig.define(n).unwrap();
                let ps: Vec<(String, Sort)> = f.params.iter().map(|p| (p.name.to_string(), p.sort.clone())).collect();
                out.push(print_define_fun(f.name.as_str(), &ps, &f.result, &f.body, d));
            }
            Command::DefineCata(n) => {
                let c = sig.cata(n).unwrap();
                out.push(format!("(declare-fun {} ({}) {})", c.name, c.input, print_sort(&c.result, d)));
            }
            _ => {}
        }
    }
    out
}

/// Declarations for a signature built without a script: datatypes,
/// functions, catamorphisms as uninterpreted functions, then macros.
pub fn signature_declarations(sig: &Signature, d: Dialect) -> Vec<String> {
    let mut out = Vec::new();
    for dt in &sig.datatypes {
        out.push(print_datatypes(&[dt], d));
    }
    for f in &sig.functions {
        let ps: Vec<String> = f.params.iter().map(|s| print_sort(s, d)).collect();
        out.push(format!("(declare-fun {} ({}) {})", f.name, ps.join(" "), print_sort(&f.result, d)));
    }
    for c in &sig.catas {
        out.push(format!("(declare-fun {} ({}) {})", c.name, c.input, print_sort(&c.result, d)));
    }
    for f in &sig.defines {
        let ps: Vec<(String, Sort)> = f.params.iter().map(|p| (p.name.to_string(), p.sort.clone())).collect();
        out.push(print_define_fun(f.name.as_str(), &ps, &f.result, &f.body, d));
    }
    out
}

/// The script with every extension lowered to standard SMT-LIB: catamorphisms
/// become uninterpreted functions plus their generated defining macros.
pub fn lower_to_core(script: &Script, d: Dialect) -> String {
    let sig = &script.signature;
    let mut lines = vec!["(set-option :produce-models true)".to_string()];
    lines.extend(core_declarations(script, d));
    for f in script.assertions() {
        lines.push(format!("(assert {})", print_formula(f, d)));
    }
    for c in &sig.catas {
        lines.push(generated_cat_define(c, sig, d));
        lines.push(generated_unroll_define(c, d));
    }
    lines.push("(check-sat)".to_string());
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn sumtree_script_shape() {
        let s = parse_script(SUMTREE).unwrap();
        assert_eq!(s.signature.datatypes.len(), 1);
        assert_eq!(s.signature.catas.len(), 1);
        assert_eq!(s.assertions().count(), 2);
    }

    #[test]
    fn generated_definitions_match_solver_text() {
        let s = parse_script(SUMTREE).unwrap();
        let c = &s.signature.catas[0];
        assert_eq!(
            generated_cat_define(c, &s.signature, Dialect::Z3),
            "(define-fun SumTree_GeneratedCatDefineFun ((t RealTree)) Real (ite (is-Leaf t) 0.0 (+ (SumTree (left t)) (elem t) (SumTree (right t)))))"
        );
        assert_eq!(
            generated_unroll_define(c, Dialect::Z3),
            "(define-fun SumTree_GeneratedUnrollDefineFun ((t RealTree)) Bool (= (SumTree t) (SumTree_GeneratedCatDefineFun t)))"
        );
    }

    #[test]
    fn empty_input_expects_command() {
        let e = parse_script("").unwrap_err();
        assert!(e.to_string().contains("expected command"), "{e}");
        assert!(e.span().is_some());
    }

    #[test]
    fn non_structural_recursion_rejected() {
        let src = SUMTREE.replace("(SumTree (left t))", "(SumTree t)");
        let e = parse_script(&src).unwrap_err();
        assert!(e.to_string().contains("non-structural recursion"), "{e}");
    }

    #[test]
    fn deeper_recursion_rejected() {
        let src = SUMTREE.replace("(SumTree (left t))", "(SumTree (left (left t)))");
        let e = parse_script(&src).unwrap_err();
        assert!(e.to_string().contains("non-structural recursion"), "{e}");
    }

    #[test]
    fn round_trip_through_printer() {
        let s = parse_script(SUMTREE).unwrap();
        let printed = print_script(&s);
        let again = parse_script(&printed).unwrap();
        assert_eq!(print_script(&again), printed);
        assert_eq!(again.commands, s.commands);
    }

    #[test]
    fn both_tester_spellings() {
        let a = parse_script(SUMTREE).unwrap();
        let b = parse_script(&SUMTREE.replace("(is-Leaf t)", "((_ is Leaf) t)")).unwrap();
        assert_eq!(a.signature.catas, b.signature.catas);
    }

    #[test]
    fn new_style_datatypes_parse_identically() {
        let src = SUMTREE.replace(
            "(declare-datatypes () ((RealTree (Leaf) (Node (left RealTree) (elem Real) (right RealTree)))))",
            "(declare-datatypes ((RealTree 0)) (((Leaf) (Node (left RealTree) (elem Real) (right RealTree)))))",
        );
        let a = parse_script(SUMTREE).unwrap();
        let b = parse_script(&src).unwrap();
        assert_eq!(a.signature.datatypes, b.signature.datatypes);
    }

    #[test]
    fn ill_sorted_assertion_points_at_argument() {
        let src = SUMTREE.replace("(Node t2 5.0 t3)", "(Node 5.0 t2 t3)");
        match parse_script(&src).unwrap_err() {
            FrontendError::Validation { span: Some(span), message } => {
                assert_eq!(span.line, 7);
                assert!(message.contains("expected RealTree"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn two_check_sats_rejected() {
        assert!(parse_script(&format!("{SUMTREE}(check-sat)\n")).is_err());
    }

    #[test]
    fn range_and_class_commands() {
        let src = SUMTREE.replace(
            "(declare-fun t1",
            "(declare-range SumTree ((c Real)) (>= c 0.0))\n(set-cata-class SumTree associative)\n(declare-fun t1",
        );
        let s = parse_script(&src).unwrap();
        let c = &s.signature.catas[0];
        assert!(c.range.is_some());
        assert_eq!(c.class, crate::ast::CataClass::Associative);
        let again = parse_script(&print_script(&s)).unwrap();
        assert_eq!(again.signature.catas, s.signature.catas);
    }

    #[test]
    fn core_lowering_has_no_extensions() {
        let s = parse_script(SUMTREE).unwrap();
        let core = lower_to_core(&s, Dialect::Z3);
        assert!(!core.contains("define-catamorphism"));
        assert!(core.contains("(declare-fun SumTree (RealTree) Real)"));
        assert!(core.contains("SumTree_GeneratedUnrollDefineFun"));
    }
}
