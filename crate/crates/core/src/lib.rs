//! Satisfiability of quantifier-free formulas over algebraic datatypes
//! abstracted by catamorphisms, decided by incremental unrolling against an
//! external SMT solver.

pub mod analysis;
pub mod ast;
pub mod backend;
pub mod engine;
pub mod frontend;
pub mod normalizer;
pub mod oracle;

pub use ast::*;
pub use frontend::{parse_script, parse_term, print_term, FrontendError};
