use std::collections::HashMap;

use num_rational::Rational64;

use super::lexer::{read_all, AtomKind, Sexp, SourceSpan};
use super::FrontendError;
use crate::ast::{
    well_sorted, Binder, CataCase, CataClass, CataDef, Command, Constructor, DatatypeDecl, Field, Formula, FunDecl,
    FunDef, Literal, Op, RangePred, Script, Signature, Sort, SortError, Term, Var,
};

/// Name of the placeholder standing for field `selector` in a catamorphism
/// case. `#` cannot occur in a surface symbol, so placeholders never clash
/// with declared names.
pub fn placeholder(selector: &str) -> String {
    format!("#{selector}")
}

type Scope = HashMap<String, Term>;

/// Parses and validates a complete script.
pub fn parse_script(text: &str) -> Result<Script, FrontendError> {
    let sexps = read_all(text)?;
    if sexps.is_empty() {
        let span = SourceSpan { offset: 0, line: 1, column: 1, len: 1 };
        return Err(FrontendError::parse(span, "expected command", &["("]));
    }
    let mut p = ScriptParser { sig: Signature::new(), commands: Vec::new(), check_sat: None };
    for s in &sexps {
        p.command(s)?;
    }
    if p.check_sat.is_none() {
        let last = sexps.last().unwrap().span();
        return Err(FrontendError::validation(Some(last), "script has no check-sat command"));
    }
    Ok(Script { signature: p.sig, commands: p.commands })
}

/// Parses a single term against an existing signature. Free symbols must be
/// declared constants.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, FrontendError> {
    let sexps = read_all(text)?;
    match sexps.as_slice() {
        [s] => TermParser { sig }.term(s, &Scope::new()),
        [] => {
            Err(FrontendError::parse(SourceSpan { offset: 0, line: 1, column: 1, len: 1 }, "expected term", &["term"]))
        }
        [_, extra, ..] => Err(FrontendError::parse(extra.span(), "trailing input after term", &["end of input"])),
    }
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, FrontendError> {
    let t = parse_term(text, sig)?;
    if well_sorted(&t, sig).map_err(|e| FrontendError::validation(None, e.to_string()))? != Sort::Bool {
        return Err(FrontendError::validation(None, "formula is not Bool-sorted"));
    }
    Ok(Formula::from_term(&t, sig))
}

pub fn parse_sort(s: &Sexp, sig: &Signature, pending: &[String]) -> Result<Sort, FrontendError> {
    match s {
        Sexp::Atom { kind: AtomKind::Symbol, text, span } => match text.as_str() {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "Real" => Ok(Sort::Real),
            "String" => Ok(Sort::String),
            name if sig.datatype(&name.into()).is_some() || pending.iter().any(|p| p == name) => {
                Ok(Sort::datatype(name))
            }
            name => Err(FrontendError::validation(Some(*span), format!("unknown sort {name}"))),
        },
        Sexp::List { items, span } => match items.as_slice() {
            [head, elem] => {
                let e = Box::new(parse_sort(elem, sig, pending)?);
                match head.symbol() {
                    Some("Set") => Ok(Sort::Set(e)),
                    Some("Bag") => Ok(Sort::Bag(e)),
                    Some("Seq") => Ok(Sort::Seq(e)),
                    _ => Err(FrontendError::parse(head.span(), "unknown sort constructor", &["Set", "Bag", "Seq"])),
                }
            }
            _ => Err(FrontendError::parse(*span, "malformed sort", &["sort"])),
        },
        other => Err(FrontendError::parse(other.span(), "expected a sort", &["sort"])),
    }
}

struct ScriptParser {
    sig: Signature,
    commands: Vec<Command>,
    check_sat: Option<SourceSpan>,
}

fn expect_symbol(s: &Sexp, what: &str) -> Result<String, FrontendError> {
    s.symbol()
        .map(str::to_string)
        .ok_or_else(|| FrontendError::parse(s.span(), format!("expected {what}"), &["symbol"]))
}

fn expect_list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], FrontendError> {
    s.list().ok_or_else(|| FrontendError::parse(s.span(), format!("expected {what}"), &["("]))
}

fn arity_error(span: SourceSpan, cmd: &str, shape: &str) -> FrontendError {
    FrontendError::parse(span, format!("malformed {cmd}, expected {shape}"), &[shape])
}

fn sort_err(span: SourceSpan, e: SortError) -> FrontendError {
    FrontendError::validation(Some(span), e.to_string())
}

impl ScriptParser {
    fn command(&mut self, s: &Sexp) -> Result<(), FrontendError> {
        let span = s.span();
        let items = match s {
            Sexp::List { items, .. } if !items.is_empty() => items,
            _ => return Err(FrontendError::parse(span, "expected command", &["("])),
        };
        let head = expect_symbol(&items[0], "command name")?;
        if self.check_sat.is_some() && !matches!(head.as_str(), "get-model" | "exit" | "set-info" | "check-sat") {
            return Err(FrontendError::validation(Some(span), format!("{head} after check-sat")));
        }
        let args = &items[1..];
        match head.as_str() {
            "set-logic" => {
                let [l] = args else { return Err(arity_error(span, "set-logic", "(set-logic <symbol>)")) };
                self.commands.push(Command::SetLogic(expect_symbol(l, "logic name")?));
            }
            "set-option" => {
                let text: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                self.commands.push(Command::SetOption(text.join(" ")));
            }
            "set-info" => {}
            "declare-datatypes" => self.declare_datatypes(span, args)?,
            "declare-datatype" => {
                let [name, ctors] = args else {
                    return Err(arity_error(span, "declare-datatype", "(declare-datatype <name> (<ctor>+))"));
                };
                let name = expect_symbol(name, "datatype name")?;
                let pending = vec![name.clone()];
                let dt = self.datatype_body(&name, ctors, &pending)?;
                self.add_datatypes(span, vec![dt])?;
            }
            "declare-fun" => {
                let [name, params, result] = args else {
                    return Err(arity_error(span, "declare-fun", "(declare-fun <name> (<sort>*) <sort>)"));
                };
                let name = expect_symbol(name, "function name")?;
                let params: Vec<Sort> = expect_list(params, "parameter sorts")?
                    .iter()
                    .map(|p| parse_sort(p, &self.sig, &[]))
                    .collect::<Result<_, _>>()?;
                let result = parse_sort(result, &self.sig, &[])?;
                if params.is_empty() {
                    self.sig.add_constant(Var::new(name.as_str(), result)).map_err(|e| sort_err(span, e))?;
                    self.commands.push(Command::DeclareConst(name.into()));
                } else {
                    self.sig
                        .add_function(FunDecl { name: name.as_str().into(), params, result })
                        .map_err(|e| sort_err(span, e))?;
                    self.commands.push(Command::DeclareFun(name.into()));
                }
            }
            "declare-const" => {
                let [name, sort] = args else {
                    return Err(arity_error(span, "declare-const", "(declare-const <name> <sort>)"));
                };
                let name = expect_symbol(name, "constant name")?;
                let sort = parse_sort(sort, &self.sig, &[])?;
                self.sig.add_constant(Var::new(name.as_str(), sort)).map_err(|e| sort_err(span, e))?;
                self.commands.push(Command::DeclareConst(name.into()));
            }
            "define-fun" => {
                let [name, params, result, body] = args else {
                    return Err(arity_error(span, "define-fun", "(define-fun <name> ((<var> <sort>)*) <sort> <term>)"));
                };
                let name = expect_symbol(name, "function name")?;
                let params = self.sorted_vars(params)?;
                let result = parse_sort(result, &self.sig, &[])?;
                let scope: Scope = params.iter().map(|v| (v.name.to_string(), Term::Var(v.clone()))).collect();
                let body = TermParser { sig: &self.sig }.term(body, &scope)?;
                self.sig
                    .add_define(FunDef { name: name.as_str().into(), params, result, body })
                    .map_err(|e| sort_err(span, e))?;
                self.commands.push(Command::DefineFun(name.into()));
            }
            "define-catamorphism" => self.define_cata(span, args)?,
            "declare-range" => {
                let [name, params, body] = args else {
                    return Err(arity_error(span, "declare-range", "(declare-range <cata> ((<var> <sort>)) <term>)"));
                };
                let name = expect_symbol(name, "catamorphism name")?;
                let cata = self.sig.cata(&name.as_str().into()).ok_or_else(|| {
                    FrontendError::validation(Some(args[0].span()), format!("unknown catamorphism {name}"))
                })?;
                if cata.range.is_some() {
                    return Err(FrontendError::validation(Some(span), format!("range of {name} declared twice")));
                }
                let params = self.sorted_vars(params)?;
                let [var] = params.as_slice() else {
                    return Err(FrontendError::validation(
                        Some(args[1].span()),
                        "a range predicate takes exactly one parameter",
                    ));
                };
                if var.sort != cata.result {
                    return Err(FrontendError::validation(
                        Some(args[1].span()),
                        format!("range parameter has sort {}, catamorphism result is {}", var.sort, cata.result),
                    ));
                }
                let mut scope = Scope::new();
                scope.insert(var.name.to_string(), Term::Var(var.clone()));
                let body_t = TermParser { sig: &self.sig }.term(body, &scope)?;
                let s = well_sorted(&body_t, &self.sig).map_err(|e| sort_err(body.span(), e))?;
                if s != Sort::Bool {
                    return Err(FrontendError::validation(Some(body.span()), "range predicate must be Bool-sorted"));
                }
                let pred = RangePred { var: var.clone(), body: body_t };
                self.sig.cata_mut(&name.as_str().into()).unwrap().range = Some(pred);
                self.commands.push(Command::DeclareRange(name.into()));
            }
            "set-cata-class" => {
                let [name, class] = args else {
                    return Err(arity_error(span, "set-cata-class", "(set-cata-class <cata> <class>)"));
                };
                let name = expect_symbol(name, "catamorphism name")?;
                let class = parse_class(class)?;
                let cata = self.sig.cata_mut(&name.as_str().into()).ok_or_else(|| {
                    FrontendError::validation(Some(args[0].span()), format!("unknown catamorphism {name}"))
                })?;
                cata.class = class;
                self.commands.push(Command::SetCataClass(name.into()));
            }
            "assert" => {
                let [body] = args else { return Err(arity_error(span, "assert", "(assert <term>)")) };
                let t = TermParser { sig: &self.sig }.term(body, &Scope::new())?;
                let s = well_sorted(&t, &self.sig).map_err(|e| sort_err(body.span(), e))?;
                if s != Sort::Bool {
                    return Err(FrontendError::validation(
                        Some(body.span()),
                        format!("assertion has sort {s}, expected Bool"),
                    ));
                }
                self.commands.push(Command::Assert(Formula::from_term(&t, &self.sig)));
            }
            "check-sat" => {
                if !args.is_empty() {
                    return Err(arity_error(span, "check-sat", "(check-sat)"));
                }
                if let Some(prev) = self.check_sat {
                    return Err(FrontendError::validation(
                        Some(span),
                        format!("second check-sat (first at {prev}); exactly one is allowed"),
                    ));
                }
                self.check_sat = Some(span);
                self.commands.push(Command::CheckSat);
            }
            "get-model" => {
                if self.check_sat.is_none() {
                    return Err(FrontendError::validation(Some(span), "get-model before check-sat"));
                }
                self.commands.push(Command::GetModel);
            }
            "exit" => self.commands.push(Command::Exit),
            other => {
                return Err(FrontendError::parse(
                    items[0].span(),
                    format!("unsupported command {other}"),
                    &[
                        "declare-datatypes",
                        "declare-fun",
                        "declare-const",
                        "define-fun",
                        "define-catamorphism",
                        "declare-range",
                        "set-cata-class",
                        "assert",
                        "check-sat",
                        "get-model",
                    ],
                ))
            }
        }
        Ok(())
    }

    fn sorted_vars(&self, s: &Sexp) -> Result<Vec<Var>, FrontendError> {
        expect_list(s, "parameter list")?
            .iter()
            .map(|p| match p.list() {
                Some([n, sort]) => Ok(Var::new(expect_symbol(n, "parameter name")?, parse_sort(sort, &self.sig, &[])?)),
                _ => Err(FrontendError::parse(p.span(), "expected (<name> <sort>)", &["("])),
            })
            .collect()
    }

    fn declare_datatypes(&mut self, span: SourceSpan, args: &[Sexp]) -> Result<(), FrontendError> {
        let [heads, bodies] = args else {
            return Err(arity_error(
                span,
                "declare-datatypes",
                "(declare-datatypes (<sort-decl>*) (<datatype-decl>+))",
            ));
        };
        let heads = expect_list(heads, "sort declarations")?;
        let bodies = expect_list(bodies, "datatype declarations")?;
        let mut dts = Vec::new();
        if heads.is_empty() {
            // legacy form: (declare-datatypes () ((Name ctor...) ...))
            let names: Vec<String> = bodies
                .iter()
                .map(|b| match b.list() {
                    Some([n, ..]) => expect_symbol(n, "datatype name"),
                    _ => Err(FrontendError::parse(b.span(), "expected (<name> <ctor>+)", &["("])),
                })
                .collect::<Result<_, _>>()?;
            for (b, name) in bodies.iter().zip(&names) {
                let items = b.list().unwrap();
                let ctors = Sexp::List { items: items[1..].to_vec(), span: b.span() };
                dts.push(self.datatype_body(name, &ctors, &names)?);
            }
        } else {
            if heads.len() != bodies.len() {
                return Err(FrontendError::parse(
                    span,
                    "sort declarations and datatype bodies differ in number",
                    &["datatype-decl"],
                ));
            }
            let names: Vec<String> = heads
                .iter()
                .map(|h| match h.list() {
                    Some([n, arity]) => {
                        if arity.to_string() != "0" {
                            return Err(FrontendError::validation(
                                Some(arity.span()),
                                "parametric datatypes are not supported",
                            ));
                        }
                        expect_symbol(n, "datatype name")
                    }
                    _ => Err(FrontendError::parse(h.span(), "expected (<name> 0)", &["("])),
                })
                .collect::<Result<_, _>>()?;
            for (b, name) in bodies.iter().zip(&names) {
                dts.push(self.datatype_body(name, b, &names)?);
            }
        }
        self.add_datatypes(span, dts)
    }

    fn add_datatypes(&mut self, span: SourceSpan, dts: Vec<DatatypeDecl>) -> Result<(), FrontendError> {
        let names = dts.iter().map(|d| d.name.clone()).collect();
        for dt in dts {
            self.sig.add_datatype(dt).map_err(|e| sort_err(span, e))?;
        }
        self.commands.push(Command::DeclareDatatypes(names));
        Ok(())
    }

    fn datatype_body(&self, name: &str, ctors: &Sexp, pending: &[String]) -> Result<DatatypeDecl, FrontendError> {
        let list = expect_list(ctors, "constructor list")?;
        let mut out = Vec::new();
        for c in list {
            let ctor = match c {
                Sexp::Atom { .. } => Constructor { name: expect_symbol(c, "constructor name")?.into(), fields: vec![] },
                Sexp::List { items, span } => {
                    let Some((n, fields)) = items.split_first() else {
                        return Err(FrontendError::parse(*span, "empty constructor declaration", &["symbol"]));
                    };
                    let fields = fields
                        .iter()
                        .map(|f| match f.list() {
                            Some([sel, sort]) => Ok(Field {
                                selector: expect_symbol(sel, "selector name")?.into(),
                                sort: parse_sort(sort, &self.sig, pending)?,
                            }),
                            _ => Err(FrontendError::parse(f.span(), "expected (<selector> <sort>)", &["("])),
                        })
                        .collect::<Result<_, _>>()?;
                    Constructor { name: expect_symbol(n, "constructor name")?.into(), fields }
                }
            };
            out.push(ctor);
        }
        DatatypeDecl::new(name, out).map_err(|e| sort_err(ctors.span(), e))
    }

    fn define_cata(&mut self, span: SourceSpan, args: &[Sexp]) -> Result<(), FrontendError> {
        let [name_s, params, result, body] = args else {
            return Err(arity_error(
                span,
                "define-catamorphism",
                "(define-catamorphism <name> ((<var> <datatype>)) <sort> <term>)",
            ));
        };
        let name = expect_symbol(name_s, "catamorphism name")?;
        let params = self.sorted_vars(params)?;
        let [param] = params.as_slice() else {
            return Err(FrontendError::validation(Some(args[1].span()), "a catamorphism takes exactly one parameter"));
        };
        let dt = self
            .sig
            .datatype_of_sort(&param.sort)
            .ok_or_else(|| {
                FrontendError::validation(Some(args[1].span()), "catamorphism parameter must have a datatype sort")
            })?
            .clone();
        let result = parse_sort(result, &self.sig, &[])?;
        if self.sig.is_declared(&name.as_str().into()) {
            return Err(FrontendError::validation(Some(name_s.span()), format!("symbol {name} already declared")));
        }

        // parse the body with the catamorphism itself in scope
        let mut tmp = self.sig.clone();
        tmp.catas.push(CataDef {
            name: name.as_str().into(),
            input: dt.name.clone(),
            result: result.clone(),
            param: param.name.clone(),
            cases: vec![],
            range: None,
            assoc: None,
            class: CataClass::Unclassified,
        });
        let mut scope = Scope::new();
        scope.insert(param.name.to_string(), Term::Var(param.clone()));
        let body_t = TermParser { sig: &tmp }.term(body, &scope)?;
        let s = well_sorted(&body_t, &tmp).map_err(|e| sort_err(body.span(), e))?;
        if s != result {
            return Err(FrontendError::validation(
                Some(body.span()),
                format!("catamorphism body has sort {s}, declared {result}"),
            ));
        }
        let cases = decompose_cata_body(&name, param, &dt, &result, &body_t)
            .map_err(|m| FrontendError::validation(Some(body.span()), m))?;
        let def = CataDef {
            name: name.as_str().into(),
            input: dt.name.clone(),
            result,
            param: param.name.clone(),
            cases,
            range: None,
            assoc: None,
            class: CataClass::Unclassified,
        };
        self.sig.add_cata(def).map_err(|e| sort_err(body.span(), e))?;
        self.commands.push(Command::DefineCata(name.into()));
        Ok(())
    }
}

fn parse_class(s: &Sexp) -> Result<CataClass, FrontendError> {
    match s {
        Sexp::Atom { text, .. } if text == "associative" => Ok(CataClass::Associative),
        Sexp::Atom { text, .. } if text == "unclassified" => Ok(CataClass::Unclassified),
        Sexp::List { items, .. } if items.len() == 2 && items[0].symbol() == Some("monotonic") => match &items[1] {
            Sexp::Atom { kind: AtomKind::Numeral, text, span } => text
                .parse::<u32>()
                .map(CataClass::Monotonic)
                .map_err(|_| FrontendError::validation(Some(*span), "height constant out of range")),
            other => Err(FrontendError::parse(other.span(), "expected a numeral", &["numeral"])),
        },
        other => Err(FrontendError::parse(
            other.span(),
            "expected catamorphism class",
            &["associative", "(monotonic <numeral>)", "unclassified"],
        )),
    }
}

/// Splits an ite cascade over testers of `param` into one case per
/// constructor, replacing recursive calls and field reads by placeholders.
pub fn decompose_cata_body(
    name: &str,
    param: &Var,
    dt: &DatatypeDecl,
    result: &Sort,
    body: &Term,
) -> Result<Vec<CataCase>, String> {
    let subject = Term::Var(param.clone());
    let mut branches: Vec<(crate::ast::Symbol, Term)> = Vec::new();
    let mut rest = body.clone();
    loop {
        let next = match &rest {
            Term::Op { op: Op::Ite, args } => match &args[0] {
                Term::Test { ctor, arg } if **arg == subject => Some((ctor.clone(), args[1].clone(), args[2].clone())),
                _ => None,
            },
            _ => None,
        };
        match next {
            Some((ctor, then, els)) => {
                if dt.constructor(&ctor).is_none() {
                    return Err(format!("{ctor} is not a constructor of {}", dt.name));
                }
                if branches.iter().any(|(c, _)| c == &ctor) {
                    return Err(format!("constructor {ctor} tested twice"));
                }
                branches.push((ctor, then));
                rest = els;
                if branches.len() + 1 == dt.constructors.len() {
                    break;
                }
            }
            None => break,
        }
    }
    let remaining: Vec<&Constructor> =
        dt.constructors.iter().filter(|c| !branches.iter().any(|(b, _)| b == &c.name)).collect();
    match remaining.as_slice() {
        [last] => branches.push((last.name.clone(), rest)),
        _ => {
            return Err(format!(
                "body of {name} must be an ite cascade over testers of {} with one branch per constructor",
                param.name
            ))
        }
    }

    let mut cases = Vec::new();
    for c in &dt.constructors {
        let (_, branch) = branches.iter().find(|(b, _)| b == &c.name).unwrap();
        let rec = dt.recursive_positions(&c.name);
        let mut binders = Vec::new();
        let mut t = branch.clone();
        for (i, f) in c.fields.iter().enumerate() {
            let recursive = rec.contains(&i);
            let sel = Term::select(f.selector.clone(), subject.clone());
            let var =
                Var::new(placeholder(f.selector.as_str()), if recursive { result.clone() } else { f.sort.clone() });
            if recursive {
                t = t.replace(&Term::cata(name, sel), &Term::Var(var.clone()));
            } else {
                t = t.replace(&sel, &Term::Var(var.clone()));
            }
            binders.push(Binder { selector: f.selector.clone(), var, recursive });
        }
        if t.any(&mut |x| matches!(x, Term::Cata { cata, .. } if cata.as_str() == name)) {
            return Err(format!("non-structural recursion in {name}"));
        }
        if t.contains(&subject) {
            return Err(format!(
                "in the {} case of {name}, {} may only be used through its own fields",
                c.name, param.name
            ));
        }
        cases.push(CataCase { ctor: c.name.clone(), binders, body: t });
    }
    Ok(cases)
}

struct TermParser<'a> {
    sig: &'a Signature,
}

fn parse_decimal(text: &str, span: SourceSpan) -> Result<Rational64, FrontendError> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    let digits = format!("{int}{frac}");
    let n: i64 = digits.parse().map_err(|_| FrontendError::validation(Some(span), "decimal literal out of range"))?;
    let d = 10i64
        .checked_pow(frac.len() as u32)
        .ok_or_else(|| FrontendError::validation(Some(span), "decimal literal out of range"))?;
    Ok(Rational64::new(n, d))
}

/// Follows a sort-error path into the s-expression for a precise span.
fn span_at_path(s: &Sexp, path: &[usize]) -> SourceSpan {
    match (s, path.split_first()) {
        (Sexp::List { items, .. }, Some((&i, rest))) if i < items.len() => span_at_path(&items[i], rest),
        _ => s.span(),
    }
}

impl TermParser<'_> {
    fn check(&self, t: Term, s: &Sexp) -> Result<Term, FrontendError> {
        match well_sorted(&t, self.sig) {
            Ok(_) => Ok(t),
            Err(e) => Err(FrontendError::validation(Some(span_at_path(s, &e.path)), e.to_string())),
        }
    }

    fn sort_of(&self, t: &Term, s: &Sexp) -> Result<Sort, FrontendError> {
        well_sorted(t, self.sig).map_err(|e| FrontendError::validation(Some(span_at_path(s, &e.path)), e.to_string()))
    }

    fn term(&self, s: &Sexp, scope: &Scope) -> Result<Term, FrontendError> {
        match s {
            Sexp::Atom { kind, text, span } => match kind {
                AtomKind::Numeral => text
                    .parse::<i64>()
                    .map(Term::int)
                    .map_err(|_| FrontendError::validation(Some(*span), "numeral out of range")),
                AtomKind::Decimal => Ok(Term::Lit(Literal::Real(parse_decimal(text, *span)?))),
                AtomKind::Str => Ok(Term::string(text.clone())),
                AtomKind::Keyword => Err(FrontendError::parse(*span, "unexpected keyword", &["term"])),
                AtomKind::Symbol => self.symbol(text, *span, scope),
            },
            Sexp::List { items, span } => {
                let Some((head, args)) = items.split_first() else {
                    return Err(FrontendError::parse(*span, "empty application", &["term"]));
                };
                match head {
                    Sexp::List { items: h, .. } => {
                        if let [u, is, c] = h.as_slice() {
                            if u.symbol() == Some("_") && is.symbol() == Some("is") {
                                let ctor = expect_symbol(c, "constructor name")?;
                                if self.sig.constructor(&ctor.as_str().into()).is_none() {
                                    return Err(FrontendError::validation(
                                        Some(c.span()),
                                        format!("unknown constructor {ctor}"),
                                    ));
                                }
                                let [arg] = args else {
                                    return Err(FrontendError::parse(*span, "tester takes one argument", &["term"]));
                                };
                                let t = Term::test(ctor, self.term(arg, scope)?);
                                return self.check(t, s);
                            }
                        }
                        Err(FrontendError::parse(head.span(), "unsupported indexed identifier", &["(_ is <ctor>)"]))
                    }
                    Sexp::Atom { kind: AtomKind::Symbol, text, .. } => self.application(text, args, s, scope),
                    other => Err(FrontendError::parse(other.span(), "expected function symbol", &["symbol"])),
                }
            }
        }
    }

    fn symbol(&self, name: &str, span: SourceSpan, scope: &Scope) -> Result<Term, FrontendError> {
        if let Some(t) = scope.get(name) {
            return Ok(t.clone());
        }
        match name {
            "true" => return Ok(Term::bool(true)),
            "false" => return Ok(Term::bool(false)),
            _ => {}
        }
        let sym = name.into();
        if let Some(v) = self.sig.constant(&sym) {
            return Ok(Term::Var(v.clone()));
        }
        if let Some((_, c)) = self.sig.constructor(&sym) {
            if c.fields.is_empty() {
                return Ok(Term::ctor(name, vec![]));
            }
            return Err(FrontendError::validation(Some(span), format!("constructor {name} needs arguments")));
        }
        if self.sig.define(&sym).is_some_and(|d| d.params.is_empty()) {
            return Ok(Term::apply(name, vec![]));
        }
        Err(FrontendError::validation(Some(span), format!("unknown symbol {name}")))
    }

    fn application(&self, head: &str, args: &[Sexp], s: &Sexp, scope: &Scope) -> Result<Term, FrontendError> {
        let span = s.span();
        match head {
            "as" => return self.qualified(args, s),
            "let" => return self.let_term(args, s, scope),
            _ => {}
        }
        let sym: crate::ast::Symbol = head.into();

        if let Some(ctor) = head.strip_prefix("is-") {
            if self.sig.constructor(&ctor.into()).is_some() && !scope.contains_key(head) {
                let [arg] = args else {
                    return Err(FrontendError::parse(span, "tester takes one argument", &["term"]));
                };
                return self.check(Term::test(ctor, self.term(arg, scope)?), s);
            }
        }

        let targs: Vec<Term> = args.iter().map(|a| self.term(a, scope)).collect::<Result<_, _>>()?;

        if self.sig.constructor(&sym).is_some() {
            return self.check(Term::ctor(sym, targs), s);
        }
        if self.sig.selector(&sym).is_some() || self.sig.cata(&sym).is_some() {
            let [arg] = <[Term; 1]>::try_from(targs)
                .map_err(|_| FrontendError::validation(Some(span), format!("{head} takes exactly one argument")))?;
            let t = if self.sig.selector(&sym).is_some() { Term::select(sym, arg) } else { Term::cata(sym, arg) };
            return self.check(t, s);
        }
        if self.sig.function(&sym).is_some() || self.sig.define(&sym).is_some() {
            return self.check(Term::apply(sym, targs), s);
        }
        // folds of negative and fractional literals
        if head == "-" {
            if let [Term::Lit(l)] = targs.as_slice() {
                match l {
                    Literal::Int(n) => return Ok(Term::int(-n)),
                    Literal::Real(r) => return Ok(Term::Lit(Literal::Real(-r))),
                    _ => {}
                }
            }
        }
        if head == "/" {
            if let [Term::Lit(Literal::Real(a)), Term::Lit(Literal::Real(b))] = targs.as_slice() {
                if *b != Rational64::from_integer(0) {
                    return Ok(Term::Lit(Literal::Real(a / b)));
                }
            }
        }

        let Some(mut op) = Op::from_symbol(head) else {
            return Err(FrontendError::validation(Some(args_head_span(s)), format!("unknown function {head}")));
        };
        match &mut op {
            Op::SetSingleton(e) | Op::BagMake(e) | Op::SeqUnit(e) => {
                let first = targs
                    .first()
                    .ok_or_else(|| FrontendError::validation(Some(span), format!("{head} needs an argument")))?;
                *e = self.sort_of(first, &args[0])?;
            }
            _ => {}
        }
        self.check(Term::op(op, targs), s)
    }

    fn qualified(&self, args: &[Sexp], s: &Sexp) -> Result<Term, FrontendError> {
        let [id, sort] = args else {
            return Err(FrontendError::parse(s.span(), "expected (as <identifier> <sort>)", &["(as"]));
        };
        let id = expect_symbol(id, "identifier")?;
        let sort = parse_sort(sort, self.sig, &[])?;
        let t = match (id.as_str(), &sort) {
            ("set.empty", Sort::Set(e)) => Term::op(Op::SetEmpty((**e).clone()), vec![]),
            ("bag.empty", Sort::Bag(e)) => Term::op(Op::BagEmpty((**e).clone()), vec![]),
            ("seq.empty", Sort::Seq(e)) => Term::op(Op::SeqEmpty((**e).clone()), vec![]),
            (c, Sort::Datatype(_)) if self.sig.constructor(&c.into()).is_some() => Term::ctor(c, vec![]),
            _ => {
                return Err(FrontendError::validation(Some(s.span()), format!("cannot qualify {id} with sort {sort}")))
            }
        };
        let got = self.sort_of(&t, s)?;
        if got != sort {
            return Err(FrontendError::validation(Some(s.span()), format!("{id} has sort {got}, not {sort}")));
        }
        Ok(t)
    }

    fn let_term(&self, args: &[Sexp], s: &Sexp, scope: &Scope) -> Result<Term, FrontendError> {
        let [bindings, body] = args else {
            return Err(FrontendError::parse(s.span(), "expected (let ((<var> <term>)+) <term>)", &["(let"]));
        };
        let mut inner = scope.clone();
        for b in expect_list(bindings, "let bindings")? {
            match b.list() {
                Some([n, t]) => {
                    let name = expect_symbol(n, "variable name")?;
                    inner.insert(name, self.term(t, scope)?);
                }
                _ => return Err(FrontendError::parse(b.span(), "expected (<var> <term>)", &["("])),
            }
        }
        self.term(body, &inner)
    }
}

fn args_head_span(s: &Sexp) -> SourceSpan {
    match s {
        Sexp::List { items, .. } if !items.is_empty() => items[0].span(),
        _ => s.span(),
    }
}
