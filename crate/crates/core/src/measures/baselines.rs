//! Entropy envelopes and the generalized Hartley measure.
//!
//! Both decompositions are additive: `S* = S_* + (S* − S_*)` for entropy and
//! `S* = (S* − GH) + GH` for Hartley. The residual components are rounded so
//! that adding them back reproduces `S*` exactly in `f64`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{entropy_bits, maximize_entropy_over_hull, SolveReport};
use crate::simplex::{CredalSet, Distribution};

/// Largest `K` for which the Möbius transform is tabulated unless overridden.
pub const DEFAULT_HARTLEY_K_MAX: usize = 14;
/// Hard ceiling: the table has `2^K` entries.
const HARTLEY_K_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HartleyConfig {
    pub k_max: usize,
}

impl Default for HartleyConfig {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_HARTLEY_K_MAX,
        }
    }
}

pub fn shannon_entropy(p: &Distribution) -> f64 {
    entropy_bits(p.probs())
}

/// `S_*(Q)`: entropy is concave, so the hull minimum sits at a generator.
pub fn entropy_lower(cs: &CredalSet) -> f64 {
    cs.generators()
        .iter()
        .map(shannon_entropy)
        .fold(f64::INFINITY, f64::min)
}

/// `S*(Q)` together with the solver's certificate.
///
/// The optimum is floored at `S_*(Q)` and its lowest mantissa bit is cleared.
/// The 1-ulp shift is far below the solver tolerance, and an even significand
/// is what lets `split_exact` always find a residual that adds back to it.
pub fn entropy_upper(cs: &CredalSet) -> SolveReport {
    let mut report = maximize_entropy_over_hull(cs);
    report.optimum = even_significand(report.optimum.max(entropy_lower(cs)));
    report
}

fn even_significand(x: f64) -> f64 {
    if x.is_finite() && x > 0.0 {
        f64::from_bits(x.to_bits() & !1)
    } else {
        x
    }
}

/// `S*(Q) − S_*(Q)`.
pub fn entropy_epistemic(cs: &CredalSet) -> f64 {
    entropy_decomposition(cs).epistemic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyDecomposition {
    pub upper: f64,
    pub lower: f64,
    pub epistemic: f64,
    pub upper_gap: f64,
    pub converged: bool,
}

pub fn entropy_decomposition(cs: &CredalSet) -> EntropyDecomposition {
    let report = entropy_upper(cs);
    let lower = entropy_lower(cs);
    let upper = report.optimum;
    EntropyDecomposition {
        upper,
        lower,
        epistemic: split_exact(upper, lower),
        upper_gap: report.certified_gap,
        converged: report.converged,
    }
}

/// Möbius inverse of the lower probability, indexed by label bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMass {
    k: usize,
    mass: Vec<f64>,
}

impl MoebiusMass {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Mass of the subset whose members are the set bits of `mask`.
    pub fn mass(&self, mask: usize) -> f64 {
        self.mass[mask]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `Σ_A m(A) · log2|A|` with `log2|∅| = 0`.
    pub fn hartley(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(mask, _)| mask.count_ones() > 1)
            .map(|(mask, m)| m * f64::from(mask.count_ones()).log2())
            .sum()
    }
}

/// `p̲_Q(A)` for every `A ⊆ Y` in increasing bitmask order.
pub fn lower_probability_table(cs: &CredalSet) -> Vec<f64> {
    let k = cs.k();
    let size = 1usize << k;
    let full = size - 1;
    let mut lower = vec![f64::INFINITY; size];
    let mut sums = vec![0.0; size];
    for g in cs.generators() {
        let p = g.probs();
        for mask in 1..size {
            let low = mask & mask.wrapping_neg();
            sums[mask] = sums[mask ^ low] + p[low.trailing_zeros() as usize];
            lower[mask] = lower[mask].min(sums[mask]);
        }
    }
    lower[0] = 0.0;
    lower[full] = 1.0;
    lower
}

pub fn moebius_transform(cs: &CredalSet, config: &HartleyConfig) -> Result<MoebiusMass> {
    let k = cs.k();
    if k > config.k_max.min(HARTLEY_K_LIMIT) {
        return Err(Error::HartleyUnavailable {
            k,
            cap: config.k_max.min(HARTLEY_K_LIMIT),
        });
    }
    let size = 1usize << k;
    if cs.is_precise() {
        // Additive lower probability: all mass sits on singletons.
        let mut mass = vec![0.0; size];
        for (y, &p) in cs.generators()[0].probs().iter().enumerate() {
            mass[1 << y] = p;
        }
        return Ok(MoebiusMass { k, mass });
    }
    let mut mass = lower_probability_table(cs);
    // m(A) = Σ_{B ⊆ A} (−1)^{|A∖B|} p̲(B), one label at a time.
    for bit in 0..k {
        let b = 1usize << bit;
        for mask in 0..size {
            if mask & b != 0 {
                mass[mask] -= mass[mask ^ b];
            }
        }
    }
    let total: f64 = mass.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-9, "Möbius masses sum to {total}");
    Ok(MoebiusMass { k, mass })
}

/// Generalized Hartley measure `GH(Q) = Σ_A m_Q(A) log2|A|`.
///
/// Lower envelopes of finitely generated sets need not be 2-monotone, so
/// `GH` is not guaranteed nonnegative; negative values below `−1e-9` are logged.
pub fn generalized_hartley(cs: &CredalSet, config: &HartleyConfig) -> Result<f64> {
    let gh = moebius_transform(cs, config)?.hartley();
    if gh < -1e-9 {
        warn!(
            "generalized Hartley measure is negative ({gh:e}) for K = {}",
            cs.k()
        );
    }
    Ok(gh)
}

/// `S*(Q) − GH(Q)`.
pub fn hartley_aleatoric(cs: &CredalSet, config: &HartleyConfig) -> Result<f64> {
    Ok(hartley_decomposition(cs, config, entropy_upper(cs).optimum)?.aleatoric)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HartleyDecomposition {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
}

/// Splits a precomputed `S*` into `(S* − GH) + GH`.
pub fn hartley_decomposition(
    cs: &CredalSet,
    config: &HartleyConfig,
    entropy_upper: f64,
) -> Result<HartleyDecomposition> {
    let gh = generalized_hartley(cs, config)?;
    Ok(HartleyDecomposition {
        total: entropy_upper,
        aleatoric: split_exact(entropy_upper, gh),
        epistemic: gh,
    })
}

/// Returns `r ≈ total − part` such that `r + part == total` in `f64`,
/// when such an `r` exists within a few ulps of the rounded difference.
/// For `0 ≤ part ≤ total` it always does if `total` has an even significand.
pub fn split_exact(total: f64, part: f64) -> f64 {
    let guess = total - part;
    if guess + part == total || !guess.is_finite() {
        return guess;
    }
    let mut up = guess;
    let mut down = guess;
    for _ in 0..8 {
        up = up.next_up();
        if up + part == total {
            return up;
        }
        down = down.next_down();
        if down + part == total {
            return down;
        }
    }
    guess
}
