//! Exact arithmetic for graded shuffle algebras over a mixed alphabet,
//! together with the cocycle matrices and kernel bounds built on top of them.
//!
//! The layers, bottom to top:
//!
//! * [`alphabet`]: letters, words, Lyndon words, Chen-Fox-Lyndon factorization.
//! * [`shuffle`]: the shuffle algebra on words and its deconcatenation coproduct.
//! * [`pbw`]: rewriting shuffle elements as polynomials in Lyndon-word variables.
//! * [`dims`]: dimension counts of the graded pieces on both sides of theta.
//! * [`theta`]: the cocycle evaluation map and its graded matrices.
//! * [`linalg`]: exact and modular rank and kernel computations.
//! * [`upper`]: the randomized specialization bound on kernel dimension.
//! * [`resultant`]: the hand-built depth-6 kernel element and its certificates.
//! * [`diskcache`]: persisted Lyndon rewrites keyed by alphabet parameters.

pub mod alphabet;
pub mod dims;
pub mod diskcache;
pub mod error;
pub mod flat;
pub mod linalg;
pub mod par;
pub mod pbw;
pub mod poly;
pub mod resultant;
pub mod shuffle;
pub mod store;
pub mod theta;
pub mod upper;

pub use error::{Error, Result};

/// Exact scalar type used everywhere outside the modular fast paths.
pub type Rat = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Convenience constructor for small integers as rationals.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(n.into())
}
