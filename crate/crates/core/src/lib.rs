//! Numerical laboratory for meromorphic kernel sums `f(z) = Σ cₙ/(z−tₙ)^m`.
//!
//! The crate is organized around one object — a kernel sum with certified
//! truncation error — and the analyses one runs against it:
//!
//! - [`kernel_sum`]: pole data, generators with closed-form tail bounds,
//!   certified evaluation, and the exclusion set `F` of unsafe radii.
//! - [`nevanlinna`]: counting function `n(r)`, integrated counting `N(r)`,
//!   proximity `m(r)`, characteristic `T(r)`, order and defect estimates.
//! - [`zero_finder`]: winding numbers by continuous argument tracking,
//!   zero counting and location through quadtree subdivision.
//! - [`good_radii`]: octave tail sums, subsequence selection, circle `L¹`/`Lᵖ`
//!   means, good-radius searches and the circle deviation diagnostic.
//! - [`ode_bridge`]: the correspondence `f = P/g²  ↔  Pg″ − P′g′ + Qg = 0`,
//!   polynomial recovery of `Q`, critical rays and hypothesis checks.
//! - [`entire_zoo`]: concrete instances — the sine family, `z/cos²(z²)`,
//!   Airy functions by Taylor-series ODE continuation, canonical products,
//!   regularized Cauchy-kernel sums and the defect-½ construction.
//!
//! All computations are double precision with explicit error reporting;
//! truncated models are labelled as such rather than silently rounded.

// Guards written as `!(x > 0.0)` also reject NaN inputs; `x <= 0.0` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entire_zoo;
pub mod error;
pub mod good_radii;
pub mod kernel_sum;
pub mod nevanlinna;
pub mod ode_bridge;
pub mod poly;
pub mod quad;
pub mod util;
pub mod zero_finder;
pub mod zeta;

pub use error::Error;
pub use num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
