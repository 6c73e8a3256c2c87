//! Tail-vega fragility, robustness and antifragility for one-parameter
//! distribution families, plus a perturbation heuristic for detecting
//! fragility from model outputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// quadrature node tables are kept digit-for-digit
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod families;
pub mod fragility;
pub mod payoff;
pub mod robustness;
pub mod heuristic;
pub mod numerics;

pub use error::{Error, ErrorCategory, Result};
pub use families::{FamilyKind, ParametricFamily, SemiDeviations};
