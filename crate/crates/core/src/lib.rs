//! Single-threshold stopping rules for the classical prophet inequality.
//!
//! Independent nonnegative values `X_1, ..., X_n` arrive in order; a threshold
//! rule accepts the first value strictly above `tau`, where `tau` is either
//! fixed or drawn independently of the values. This crate provides:
//!
//! - [`distributions`] and [`instance`]: the item laws, the CDF `F` of the
//!   maximum `M`, the exceedance probability `p(tau)` and the aggregate
//!   surplus `R(tau)`.
//! - [`thresholds`]: the median, half-mean and balanced-surplus thresholds
//!   and the certified interval of deterministic thresholds built from them.
//! - [`engines`]: execution of deterministic and randomized rules, exact
//!   evaluation by enumeration or closed form, and seeded Monte Carlo.
//! - [`certificates`]: numeric checks of every inequality and identity that
//!   underpins the one-half guarantee, reported with signed margins.

pub mod certificates;
pub mod distributions;
pub mod engines;
pub mod error;
pub mod fuzz;
pub mod instance;
mod poly;
pub mod quadrature;
pub mod streams;
pub mod thresholds;

pub use distributions::Distribution;
pub use engines::{EvalResult, RuleSpec};
pub use error::{Error, Result};
pub use instance::{Instance, MaxDistribution};
