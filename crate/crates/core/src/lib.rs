//! Exact-arithmetic laboratory for the sum S_M(α) = Σ_{m=1}^{M} 1/‖mα‖,
//! where ‖x‖ is the distance from x to the nearest integer.
//!
//! Everything here is computed with arbitrary-precision integers and
//! rationals; real quantities (α itself, ‖mα‖, logarithms) are returned as
//! intervals with exact rational endpoints that are guaranteed to contain
//! the true value. No floating point is used anywhere in the computational
//! paths, so results are reproducible bit for bit across runs and across
//! sequential/parallel execution.
//!
//! Module map:
//! - [`cf`] — continued-fraction expansions, convergents, α generators;
//! - [`surd`] — exact arithmetic on quadratic irrationals (also the
//!   independent oracle for ‖mα‖ used by the test suite);
//! - [`interval`] — exact rational intervals with outward dyadic rounding;
//! - [`logenc`] — rigorous enclosures of ln, exp and n-th roots;
//! - [`enclose`] — enclosures of α and ‖mα‖ from convergent data;
//! - [`sums`] — the summation kernel for S_M and its variants;
//! - [`bounds`] — reference bounds M ln q_k / M ln q_k + a_{k+1}M and scans;
//! - [`metric`] — seeded Monte Carlo experiments for the almost-sure theory
//!   (Lévy/Khinchin constants, exceedance statistics, growth criteria).

pub mod bounds;
pub mod cf;
pub mod enclose;
pub mod error;
pub mod interval;
pub mod logenc;
pub mod metric;
pub mod render;
pub mod sums;
pub mod surd;

pub use error::{Error, Result};
pub use interval::RationalInterval;
