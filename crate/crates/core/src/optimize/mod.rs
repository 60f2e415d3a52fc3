//! Solvers over the generator-weight simplex `Δ_{M-1}`.
//!
//! Both problems are small and dense: at most a few thousand generators and
//! labels per instance. [`minimax_max_coordinate`] is an exact LP;
//! [`maximize_entropy_over_hull`] is a conditional-gradient scheme whose
//! duality gap bounds the distance to the optimum.

mod entropy;
mod lp;

pub use entropy::{
    entropy_bits, maximize_entropy_over_hull, maximize_entropy_over_hull_with, EntropySolverConfig,
};
pub use lp::{minimax_max_coordinate, minimax_max_coordinate_with, LpConfig};

use serde::Serialize;

use crate::error::{Error, Result};

/// Mixture weights over the generators of a credal set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidWeights);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights);
        }
        Ok(Self(weights))
    }

    /// Clamps negatives and rescales; used on solver output carrying rounding noise.
    pub(crate) fn normalized(mut weights: Vec<f64>) -> Self {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 {
            weights.iter_mut().for_each(|w| *w /= sum);
        } else {
            let m = weights.len() as f64;
            weights.iter_mut().for_each(|w| *w = 1.0 / m);
        }
        Self(weights)
    }

    pub fn vertex(m: usize, j: usize) -> Self {
        let mut w = vec![0.0; m];
        w[j] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Outcome of a solve over the weight simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Objective value at `weights`.
    pub optimum: f64,
    pub weights: WeightVector,
    pub iterations: usize,
    /// Upper bound on `|optimum − true optimum|`.
    pub certified_gap: f64,
    /// False when the iteration cap was hit before the gap tolerance.
    pub converged: bool,
}
