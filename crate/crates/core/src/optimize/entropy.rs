//! Maximum Shannon entropy over the convex hull of the generators.
//!
//! `f(w) = S(Σ_j w_j p^(j))` is concave in `w`. Each iteration either takes a
//! pairwise conditional-gradient step (weight moves from the worst active
//! vertex to the vertex picked by the linear oracle) or a damped Newton step
//! inside the current face. Both use an exact one-dimensional line search.
//! The Frank–Wolfe gap `max_j ∇f(w)_j − ⟨∇f(w), w⟩` upper-bounds `f* − f(w)`.
//!
//! Dropping the additive constant `−1/ln 2`, the gradient is
//! `∇f(w)_j = Σ_y p^(j)(y) · (−log2 q(y))` with `q = Σ_j w_j p^(j)`, so
//! `⟨∇f(w), w⟩ = S(q)` and the gap is `max_j CE(p^(j), q) − S(q)`.

use std::f64::consts::LN_2;

use log::warn;
use nalgebra::{DMatrix, DVector};

use super::{SolveReport, WeightVector};
use crate::simplex::{mix, CredalSet, Distribution};

/// Newton corrections are skipped on faces with more active generators than this.
const NEWTON_MAX_ACTIVE: usize = 128;

/// Shannon entropy in bits with `0 · log2 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    s.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySolverConfig {
    /// Stop once the Frank–Wolfe gap (in bits) falls to this value.
    pub gap_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EntropySolverConfig {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-7,
            max_iterations: 10_000,
        }
    }
}

/// `S*(Q) = max_{w ∈ Δ_{M-1}} S(Σ_j w_j p^(j))` with the default configuration.
pub fn maximize_entropy_over_hull(cs: &CredalSet) -> SolveReport {
    maximize_entropy_over_hull_with(cs, &EntropySolverConfig::default())
}

pub fn maximize_entropy_over_hull_with(
    cs: &CredalSet,
    config: &EntropySolverConfig,
) -> SolveReport {
    let gens = cs.generators();
    let m = gens.len();
    if m == 1 || cs.is_precise() {
        return SolveReport {
            optimum: entropy_bits(gens[0].probs()),
            weights: WeightVector::vertex(m, 0),
            iterations: 0,
            certified_gap: 0.0,
            converged: true,
        };
    }

    let k = cs.k();
    let mut w = vec![1.0 / m as f64; m];
    let mut q = mix(gens, &w);
    let mut neg_log = vec![0.0; k];
    let mut grad = vec![0.0; m];
    let mut dq = vec![0.0; k];
    let mut gap: f64;
    let mut iterations = 0;

    loop {
        for (nl, &qy) in neg_log.iter_mut().zip(&q) {
            *nl = if qy > 0.0 { -qy.log2() } else { f64::INFINITY };
        }
        for (g, p) in grad.iter_mut().zip(gens) {
            *g = p
                .probs()
                .iter()
                .zip(&neg_log)
                .filter(|(&py, _)| py > 0.0)
                .map(|(py, nl)| py * nl)
                .sum();
        }
        let value = entropy_bits(&q);

        let (toward, g_toward) = argmax(&grad);
        let fw_gap = g_toward - value;
        gap = fw_gap.max(0.0);
        if gap <= config.gap_tolerance || iterations >= config.max_iterations {
            break;
        }
        let (away, _) = grad.iter().enumerate().filter(|(j, _)| w[*j] > 0.0).fold(
            (usize::MAX, f64::INFINITY),
            |best, (j, &g)| {
                if g < best.1 {
                    (j, g)
                } else {
                    best
                }
            },
        );
        iterations += 1;

        if iterations % 2 == 0 && newton_step(gens, &mut w, &q, &grad) {
            q = mix(gens, &w);
            continue;
        }

        // Pairwise step: shift weight from the worst active vertex to the best one.
        for (d, (pt, pa)) in dq
            .iter_mut()
            .zip(gens[toward].probs().iter().zip(gens[away].probs()))
        {
            *d = pt - pa;
        }
        let max_step = w[away];
        let step = if toward == away {
            0.0
        } else {
            line_search(&q, &dq, max_step)
        };
        if step <= 0.0 {
            // Numerically stationary along the chosen direction.
            break;
        }
        w[toward] += step;
        w[away] = if step >= max_step {
            0.0
        } else {
            w[away] - step
        };
        renormalize(&mut w);
        q = mix(gens, &w);
    }

    let converged = gap <= config.gap_tolerance;
    if !converged {
        warn!(
            "entropy maximization stopped after {iterations} iterations with gap {gap:e} (tolerance {:e})",
            config.gap_tolerance
        );
    }
    SolveReport {
        optimum: entropy_bits(&q),
        weights: WeightVector::normalized(w),
        iterations,
        certified_gap: gap,
        converged,
    }
}

fn renormalize(w: &mut [f64]) {
    for x in w.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
}

/// Damped Newton step on the face spanned by the active generators.
///
/// With `B = Σ_y p_A(y) p_A(y)ᵀ / (q(y) ln 2)` the negative Hessian restricted to
/// the active set, the direction solves `B d = g − μ1`, `Σ d = 0`. The step
/// length comes from the same exact line search, clipped at the face boundary.
/// Returns false when no ascent was made.
fn newton_step(gens: &[Distribution], w: &mut [f64], q: &[f64], grad: &[f64]) -> bool {
    let active: Vec<usize> = (0..w.len()).filter(|&j| w[j] > 0.0).collect();
    let n = active.len();
    if !(2..=NEWTON_MAX_ACTIVE).contains(&n) {
        return false;
    }
    let support: Vec<usize> = (0..q.len()).filter(|&y| q[y] > 0.0).collect();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for (r, &a) in active.iter().enumerate() {
        let pa = gens[a].probs();
        for (c, &other) in active.iter().enumerate().skip(r) {
            let pb = gens[other].probs();
            let v = support.iter().map(|&y| pa[y] * pb[y] / q[y]).sum::<f64>() / LN_2;
            b[(r, c)] = v;
            b[(c, r)] = v;
        }
    }
    // Active generators are often affinely dependent; a tiny ridge keeps B definite.
    let ridge = 1e-10 * b.diagonal().max().max(f64::MIN_POSITIVE);
    for i in 0..n {
        b[(i, i)] += ridge;
    }
    let Some(chol) = b.cholesky() else {
        return false;
    };
    let g = DVector::from_iterator(n, active.iter().map(|&j| grad[j]));
    let x = chol.solve(&g);
    let z = chol.solve(&DVector::from_element(n, 1.0));
    let d = &x - &z * (x.sum() / z.sum());

    let mut bound = 1.0f64;
    let mut blocking = None;
    for (i, &j) in active.iter().enumerate() {
        if d[i] < 0.0 && w[j] / -d[i] < bound {
            bound = w[j] / -d[i];
            blocking = Some(j);
        }
    }
    let mut dq = vec![0.0; q.len()];
    for (i, &j) in active.iter().enumerate() {
        for (acc, &p) in dq.iter_mut().zip(gens[j].probs()) {
            *acc += d[i] * p;
        }
    }
    let step = line_search(q, &dq, bound);
    if !(step > 0.0) {
        return false;
    }
    for (i, &j) in active.iter().enumerate() {
        w[j] += step * d[i];
    }
    if step >= bound {
        if let Some(j) = blocking {
            w[j] = 0.0;
        }
    }
    renormalize(w);
    true
}

/// Lowest index attaining the maximum.
fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, &v)| {
            if v > best.1 {
                (j, v)
            } else {
                best
            }
        })
}

/// Derivative of `γ ↦ S(q + γ dq)` up to the positive factor `1/ln 2`.
/// Uses `Σ dq = 0`, so only `−Σ dq_y ln q_γ(y)` remains.
fn slope(q: &[f64], dq: &[f64], gamma: f64) -> (f64, f64) {
    let mut first = 0.0;
    let mut second = 0.0;
    for (&qy, &d) in q.iter().zip(dq) {
        if d == 0.0 {
            continue;
        }
        let at = qy + gamma * d;
        if at <= 0.0 {
            // d > 0 at the left end pushes mass into an empty label: +∞ slope.
            // d < 0 at the right end empties a label: −∞ slope.
            return if d > 0.0 {
                (f64::INFINITY, f64::NEG_INFINITY)
            } else {
                (f64::NEG_INFINITY, f64::NEG_INFINITY)
            };
        }
        first -= d * at.ln();
        second -= d * d / at;
    }
    (first, second)
}

/// Exact maximizer of the concave `γ ↦ S(q + γ dq)` on `[0, max_step]`:
/// safeguarded Newton on the slope, falling back to bisection.
fn line_search(q: &[f64], dq: &[f64], max_step: f64) -> f64 {
    let (start, _) = slope(q, dq, 0.0);
    if !(start > 0.0) {
        return 0.0;
    }
    let (end, _) = slope(q, dq, max_step);
    if end >= 0.0 {
        return max_step;
    }
    let (mut lo, mut hi) = (0.0, max_step);
    let mut gamma = 0.5 * max_step;
    for _ in 0..200 {
        let (d1, d2) = slope(q, dq, gamma);
        if d1 == 0.0 {
            return gamma;
        }
        if d1 > 0.0 {
            lo = gamma;
        } else {
            hi = gamma;
        }
        if hi - lo <= f64::EPSILON * hi.max(1e-300) {
            break;
        }
        let newton = gamma - d1 / d2;
        gamma = if d2 < 0.0 && newton > lo && newton < hi {
            if (newton - gamma).abs() <= 4.0 * f64::EPSILON * gamma {
                return newton;
            }
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    0.5 * (lo + hi)
}
