//! `min_{w ∈ Δ} max_y Σ_j w_j p^(j)(y)` as a dense LP.
//!
//! The problem is the value of a matrix game with nonnegative payoffs, and
//! that value is at least `1/K`. Substituting `x = w / t` turns it into
//!
//! ```text
//! maximize  Σ_j x_j   subject to   Σ_j x_j p^(j)(y) ≤ 1  ∀y,   x ≥ 0
//! ```
//!
//! whose slack basis is feasible, so a single-phase primal simplex on a
//! condensed (Tucker) tableau suffices. The optimum is `t* = 1 / Σ x`.
//! The reduced costs of the slacks give the dual strategy over labels,
//! and the pair (primal weights, dual label mixture) certifies the result.

use log::warn;

use super::{SolveReport, WeightVector};
use crate::error::{Error, Result};
use crate::simplex::CredalSet;

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-12;
const RATIO_TIE: f64 = 1e-15;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    /// Gap above which the report is flagged as not converged.
    pub gap_tolerance: f64,
    /// Pivot cap; `None` uses `50 (M + K) + 1000`.
    pub max_pivots: Option<usize>,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-9,
            max_pivots: None,
        }
    }
}

/// Solves `t* = min_{w ∈ Δ_{M-1}} max_y Σ_j w_j p^(j)(y)` with the default configuration.
pub fn minimax_max_coordinate(cs: &CredalSet) -> Result<SolveReport> {
    minimax_max_coordinate_with(cs, &LpConfig::default())
}

pub fn minimax_max_coordinate_with(cs: &CredalSet, config: &LpConfig) -> Result<SolveReport> {
    let m = cs.m();
    if m == 1 {
        let (_, max) = cs.generators()[0].max_entry();
        return Ok(SolveReport {
            optimum: max,
            weights: WeightVector::vertex(1, 0),
            iterations: 0,
            certified_gap: 0.0,
            converged: true,
        });
    }
    let k = cs.k();
    let max_pivots = config.max_pivots.unwrap_or(50 * (m + k) + 1000);
    let mut tableau = Tableau::new(cs);
    let pivots = tableau.solve(max_pivots)?;
    let (x, u) = tableau.primal_dual();
    let weights = WeightVector::normalized(x);
    let label_mix = WeightVector::normalized(u);

    // Primal value at `weights` and dual value at `label_mix` bracket t*.
    let upper = crate::simplex::mix(cs.generators(), weights.as_slice())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = cs
        .generators()
        .iter()
        .map(|g| {
            g.probs()
                .iter()
                .zip(label_mix.as_slice())
                .map(|(p, q)| p * q)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let certified_gap = (upper - lower).max(0.0);
    let converged = certified_gap <= config.gap_tolerance;
    if !converged {
        warn!("minimax LP finished with gap {certified_gap:e} after {pivots} pivots");
    }
    Ok(SolveReport {
        optimum: upper,
        weights,
        iterations: pivots,
        certified_gap,
        converged,
    })
}

/// Dictionary `basic_r = rhs_r − Σ_c a[r][c] · nonbasic_c`, objective
/// `z = value + Σ_c cost_c · nonbasic_c`. Variables `0..M` are the scaled
/// weights, `M..M+K` the slacks.
struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    value: f64,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl Tableau {
    fn new(cs: &CredalSet) -> Self {
        let (m, k) = (cs.m(), cs.k());
        let mut a = vec![0.0; k * m];
        for (j, g) in cs.generators().iter().enumerate() {
            for (y, &p) in g.probs().iter().enumerate() {
                a[y * m + j] = p;
            }
        }
        Self {
            rows: k,
            cols: m,
            a,
            rhs: vec![1.0; k],
            cost: vec![1.0; m],
            value: 0.0,
            basic: (m..m + k).collect(),
            nonbasic: (0..m).collect(),
        }
    }

    fn solve(&mut self, max_pivots: usize) -> Result<usize> {
        let mut degenerate = 0;
        for pivots in 0..=max_pivots {
            let bland = degenerate >= DEGENERATE_RUN;
            let Some(col) = self.entering(bland) else {
                return Ok(pivots);
            };
            if pivots == max_pivots {
                break;
            }
            let row = self
                .leaving(col)
                .ok_or(Error::SolverNonConvergence { iterations: pivots })?;
            if self.rhs[row] <= PIVOT_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
        Err(Error::SolverNonConvergence {
            iterations: max_pivots,
        })
    }

    /// Dantzig's rule (largest reduced cost), or Bland's rule once degenerate
    /// pivots pile up. Ties go to the lowest variable index.
    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for c in 0..self.cols {
            if self.cost[c] <= COST_TOL {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(b) => {
                    let better = if bland {
                        self.nonbasic[c] < self.nonbasic[b]
                    } else {
                        self.cost[c] > self.cost[b]
                            || (self.cost[c] == self.cost[b] && self.nonbasic[c] < self.nonbasic[b])
                    };
                    Some(if better { c } else { b })
                }
            };
        }
        best
    }

    /// Minimum ratio test, ties to the lowest basic variable index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let coef = self.a[r * self.cols + col];
            if coef <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs[r].max(0.0) / coef;
            best = match best {
                None => Some((r, ratio)),
                Some((b, br)) => {
                    if ratio < br - RATIO_TIE
                        || (ratio <= br + RATIO_TIE && self.basic[r] < self.basic[b])
                    {
                        Some((r, ratio))
                    } else {
                        Some((b, br))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.cols;
        let piv = self.a[row * cols + col];
        let inv = 1.0 / piv;

        let pivot_row: Vec<f64> = self.a[row * cols..(row + 1) * cols]
            .iter()
            .enumerate()
            .map(|(c, &v)| if c == col { inv } else { v * inv })
            .collect();
        let pivot_rhs = self.rhs[row] * inv;

        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let factor = self.a[r * cols + col];
            if factor == 0.0 {
                continue;
            }
            let line = &mut self.a[r * cols..(r + 1) * cols];
            for (c, v) in line.iter_mut().enumerate() {
                if c == col {
                    *v = -factor * inv;
                } else {
                    *v -= factor * pivot_row[c];
                }
            }
            self.rhs[r] -= factor * pivot_rhs;
        }

        let factor = self.cost[col];
        for (c, v) in self.cost.iter_mut().enumerate() {
            if c == col {
                *v = -factor * inv;
            } else {
                *v -= factor * pivot_row[c];
            }
        }
        self.value += factor * pivot_rhs;

        self.a[row * cols..(row + 1) * cols].copy_from_slice(&pivot_row);
        self.rhs[row] = pivot_rhs;
        std::mem::swap(&mut self.basic[row], &mut self.nonbasic[col]);
    }

    /// Scaled primal weights `x` and dual label prices `u` at the current basis.
    fn primal_dual(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.cols;
        let mut x = vec![0.0; m];
        let mut u = vec![0.0; self.rows];
        for (r, &var) in self.basic.iter().enumerate() {
            if var < m {
                x[var] = self.rhs[r].max(0.0);
            }
        }
        for (c, &var) in self.nonbasic.iter().enumerate() {
            if var >= m {
                u[var - m] = (-self.cost[c]).max(0.0);
            }
        }
        (x, u)
    }
}
