//! Exact verification toolkit for 2-class groups of real quadratic fields
//! Q(sqrt d) with d = p1*q1*q2, their genus and Redei invariants, fundamental
//! units, and the first layer of the cyclotomic Z_2-tower.
//!
//! Module map:
//! * [`arith`]    - primality, factoring, Kronecker/Hilbert symbols, square classes
//! * [`forms`]    - indefinite binary quadratic forms: reduction, cycles, composition,
//!   narrow/wide 2-class groups
//! * [`quadfield`] - fields, fundamental units by continued fractions, norm equations,
//!   congruence patterns
//! * [`genus`]    - prime discriminants, genus fields, Redei S1/S2 decompositions,
//!   the fixed-point order formula
//! * [`tower`]    - c-invariants, Hasse unit index, Kuroda count for the first layer,
//!   stabilization and the per-triple report
//! * [`scan`]     - family sweeps (parallel when the `parallel` feature is on) and the
//!   append-only result cache

pub mod arith;
pub mod error;
pub mod forms;
pub mod genus;
pub mod quadfield;
pub mod scan;
pub mod tower;

pub use error::{Error, Result};
