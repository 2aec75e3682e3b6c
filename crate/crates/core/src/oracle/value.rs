use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;

use crate::ast::{Literal, Sort, Symbol, Term};
use crate::frontend::print_literal;

/// A concrete value of any sort.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(Rational64),
    Str(String),
    Data {
        ctor: Symbol,
        fields: Arc<Vec<Value>>,
    },
    Set(BTreeSet<Value>),
    /// Element to multiplicity; multiplicities are always positive.
    Bag(BTreeMap<Value, u64>),
    Seq(Vec<Value>),
}

impl Value {
    pub fn data(ctor: impl Into<Symbol>, fields: Vec<Value>) -> Value {
        Value::Data { ctor: ctor.into(), fields: Arc::new(fields) }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(n) => Value::Int(*n),
            Literal::Real(r) => Value::Real(*r),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }

    /// Parses a domain element written as a literal of sort `sort`.
    pub fn parse_element(text: &str, sort: &Sort) -> Option<Value> {
        let text = text.trim();
        match sort {
            Sort::Int => text.parse().ok().map(Value::Int),
            Sort::Real => {
                let (neg, body) = match text.strip_prefix('-') {
                    Some(b) => (true, b),
                    None => (false, text),
                };
                let (int, frac) = body.split_once('.').unwrap_or((body, ""));
                let n: i64 = format!("{int}{frac}").parse().ok()?;
                let r = Rational64::new(n, 10i64.checked_pow(frac.len() as u32)?);
                Some(Value::Real(if neg { -r } else { r }))
            }
            Sort::Bool => text.parse().ok().map(Value::Bool),
            Sort::String => Some(Value::Str(text.trim_matches('"').to_string())),
            _ => None,
        }
    }

    /// The value as a closed term, when it has one in the surface syntax
    /// (collections are rendered by [`fmt::Display`] only).
    pub fn to_term(&self) -> Option<Term> {
        Some(match self {
            Value::Bool(b) => Term::bool(*b),
            Value::Int(n) => Term::int(*n),
            Value::Real(r) => Term::Lit(Literal::Real(*r)),
            Value::Str(s) => Term::string(s.clone()),
            Value::Data { ctor, fields } => {
                Term::ctor(ctor.clone(), fields.iter().map(Value::to_term).collect::<Option<Vec<_>>>()?)
            }
            _ => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => f.write_str(&print_literal(&Literal::Int(*n))),
            Value::Real(r) => f.write_str(&print_literal(&Literal::Real(*r))),
            Value::Str(s) => f.write_str(&print_literal(&Literal::Str(s.clone()))),
            Value::Data { ctor, fields } => {
                if fields.is_empty() {
                    return write!(f, "{ctor}");
                }
                write!(f, "({ctor}")?;
                for x in fields.iter() {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
            Value::Set(s) => {
                let items: Vec<String> = s.iter().map(Value::to_string).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            Value::Bag(b) => {
                let mut items = Vec::new();
                for (v, n) in b {
                    for _ in 0..*n {
                        items.push(v.to_string());
                    }
                }
                write!(f, "{{|{}|}}", items.join(", "))
            }
            Value::Seq(s) => {
                let items: Vec<String> = s.iter().map(Value::to_string).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}
