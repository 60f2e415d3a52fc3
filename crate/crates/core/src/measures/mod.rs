//! Uncertainty measures for credal sets.
//!
//! [`tv`] holds the total-variation family (total, aleatoric interval,
//! epistemic); [`baselines`] holds the entropy envelopes and the
//! generalized Hartley measure they are usually compared against.

pub mod baselines;
pub mod tv;

pub use baselines::{HartleyConfig, MoebiusMass};
pub use tv::{AUInterval, UncertaintyRecord};
