//! Catamorphism analysis: unrolling bounds and shape combinatorics,
//! associativity and range checks against a solver, componentwise
//! combination, and the catalog of builtin catamorphisms.

mod builtins;
mod combine;
mod detect;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::ast::{CataClass, SortError, Symbol};
use crate::backend::BackendError;

pub use builtins::{builtin, builtin_signature, BUILTIN_NAMES};
pub use combine::combine_catas;
pub use detect::{
    check_range_overapprox, classify_associative, detect_associative_semantic, detect_associative_syntactic,
    AnalysisResult, AnalysisVerdict, Property,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("{0} is not classified as monotonic or associative; no unrolling bound can be claimed")]
    Unclassified(Symbol),
    #[error("shape size must be odd, got {0}")]
    EvenSize(u64),
    #[error("unknown builtin catamorphism {0}")]
    UnknownBuiltin(String),
    #[error("unknown catamorphism {0}")]
    UnknownCata(Symbol),
    #[error(
        "cannot combine {0}: it is not associative, and a product with a non-associative \
         component need not be sufficiently surjective, so the decision procedure would lose completeness"
    )]
    NotAssociative(Symbol),
    #[error("{0}")]
    Incompatible(String),
    #[error("{0} has no range predicate")]
    MissingRange(Symbol),
    #[error(transparent)]
    Sort(#[from] SortError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// The `n`-th Catalan number by `C(n+1) = 2(2n+1) C(n) / (n+2)`.
pub fn catalan(n: u64) -> BigUint {
    let mut c = BigUint::one();
    for k in 0..n {
        // multiply first: the division is exact
        c = c * BigUint::from(2 * (2 * k + 1)) / BigUint::from(k + 2);
    }
    c
}

/// Number of tree shapes with `size` vertices: `C((size-1)/2)`.
pub fn num_shapes(size: u64) -> Result<BigUint, AnalysisError> {
    if size % 2 == 0 {
        return Err(AnalysisError::EvenSize(size));
    }
    Ok(catalan((size - 1) / 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundMode {
    Linear,
    Catalan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundReport {
    /// Number of tree disequalities the bound accounts for.
    pub p: u64,
    pub mode: BoundMode,
    pub h_p: u64,
    pub justification: CataClass,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            BoundMode::Linear => "linear",
            BoundMode::Catalan => "catalan",
        };
        write!(f, "bound {} ({mode}, p = {}, {})", self.h_p, self.p, self.justification)
    }
}

/// Height after which `p` disequalities can no longer force
/// unsatisfiability: `h_α + p` for a monotonic catamorphism and
/// `min{h | C(h) > p}` for an associative one.
pub fn unroll_bound(name: &Symbol, class: CataClass, p: u64) -> Result<BoundReport, AnalysisError> {
    match class {
        CataClass::Monotonic(h) => {
            Ok(BoundReport { p, mode: BoundMode::Linear, h_p: u64::from(h) + p, justification: class })
        }
        CataClass::Associative => {
            let target = BigUint::from(p);
            let mut h = 0u64;
            let mut c = BigUint::one();
            while c <= target {
                c = c * BigUint::from(2 * (2 * h + 1)) / BigUint::from(h + 2);
                h += 1;
            }
            Ok(BoundReport { p, mode: BoundMode::Catalan, h_p: h, justification: class })
        }
        CataClass::Unclassified => Err(AnalysisError::Unclassified(name.clone())),
    }
}

/// `catalan(n)` as a machine integer when it fits.
pub fn catalan_u64(n: u64) -> Option<u64> {
    catalan(n).to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Symbol {
        Symbol::new("alpha")
    }

    #[test]
    fn first_catalan_numbers() {
        let got: Vec<u64> = (0..8).map(|n| catalan_u64(n).unwrap()).collect();
        assert_eq!(got, [1, 1, 2, 5, 14, 42, 132, 429]);
        assert_eq!(catalan(10), BigUint::from(16796u32));
        assert_eq!(catalan(11), BigUint::from(58786u32));
    }

    #[test]
    fn catalan_is_strictly_increasing_after_one() {
        for n in 1..30 {
            assert!(catalan(n + 1) > catalan(n));
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(num_shapes(1).unwrap(), BigUint::one());
        assert_eq!(num_shapes(3).unwrap(), BigUint::one());
        assert_eq!(num_shapes(5).unwrap(), BigUint::from(2u8));
        assert_eq!(num_shapes(7).unwrap(), BigUint::from(5u8));
        assert_eq!(num_shapes(4), Err(AnalysisError::EvenSize(4)));
    }

    #[test]
    fn bounds() {
        let a = |p| unroll_bound(&s(), CataClass::Associative, p).unwrap().h_p;
        assert_eq!(a(10_000), 10);
        assert_eq!(a(50_000), 11);
        assert_eq!(a(0), 0);
        let m = unroll_bound(&s(), CataClass::Monotonic(2), 3).unwrap();
        assert_eq!((m.h_p, m.mode), (5, BoundMode::Linear));
        assert!(unroll_bound(&s(), CataClass::Unclassified, 3).is_err());
    }

    #[test]
    fn catalan_bound_is_minimal() {
        for p in [1u64, 2, 5, 13, 14, 15, 1000] {
            let h = unroll_bound(&s(), CataClass::Associative, p).unwrap().h_p;
            assert!(catalan(h) > BigUint::from(p));
            assert!(h == 0 || catalan(h - 1) <= BigUint::from(p));
        }
    }
}
