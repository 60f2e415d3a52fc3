//! Uncertainty quantification for finitely generated credal sets.
//!
//! A credal set here is the convex hull of a finite list of categorical
//! distributions, typically the members of an ensemble. The crate provides:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`simplex`] | [`Distribution`], [`CredalSet`], envelopes, total variation |
//! | [`optimize`] | minimax LP and entropy maximization over the generator weights |
//! | [`measures`] | total / aleatoric / epistemic uncertainty under total variation, plus entropy and Hartley baselines |
//! | [`selective`] | voting prediction, rejection ordering, accuracy–rejection curves |
//! | [`ingest`] | JSONL / CSV prediction datasets, likelihood filtering |
//! | [`synthetic`] | seeded ensembles around known conditionals |
//!
//! ```
//! use credal_core::{CredalSet, Distribution, measures::tv};
//!
//! let cs = CredalSet::new(vec![
//!     Distribution::new(vec![0.6, 0.3, 0.1]).unwrap(),
//!     Distribution::new(vec![0.2, 0.5, 0.3]).unwrap(),
//! ])
//! .unwrap();
//! let record = tv::evaluate_tv(&cs).unwrap();
//! assert!((record.tu - 0.7).abs() < 1e-12);
//! assert!((record.eu - 0.2).abs() < 1e-12);
//! ```

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod measures;
pub mod optimize;
pub mod selective;
pub mod simplex;
pub mod synthetic;

pub use error::{Error, Result};
pub use simplex::{tv_distance, CredalSet, Distribution, EnvelopePair, SimplexPolicy};
