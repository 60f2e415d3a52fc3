//! Distributions on the probability simplex, finitely generated credal sets,
//! envelope probabilities and the total variation distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sums within this distance of 1 are renormalized under [`SimplexPolicy::Renormalize`].
pub const RENORMALIZE_BAND: f64 = 1e-6;
/// Negative entries above this are rounding noise and get clamped to zero.
pub const NEGATIVE_CLAMP: f64 = -1e-12;
/// Sum tolerance under [`SimplexPolicy::Strict`], and the post-construction guarantee.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Deviation of the sum from 1 that is left alone, so that reloading a
/// renormalized vector does not perturb it again.
const SUM_NOISE: f64 = 1e-12;

/// How [`Distribution::with_policy`] treats slightly off-simplex input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimplexPolicy {
    /// Clamp tiny negatives and rescale sums within [`RENORMALIZE_BAND`] of 1.
    #[default]
    Renormalize,
    /// Reject any negative entry and any sum further than [`SUM_TOLERANCE`] from 1.
    Strict,
}

/// A categorical distribution over `K >= 2` labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates under the default [`SimplexPolicy::Renormalize`] policy.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_policy(probs, SimplexPolicy::Renormalize)
    }

    pub fn with_policy(mut probs: Vec<f64>, policy: SimplexPolicy) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::TooFewLabels(probs.len()));
        }
        for (index, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if *p < 0.0 {
                if policy == SimplexPolicy::Renormalize && *p >= NEGATIVE_CLAMP {
                    *p = 0.0;
                } else {
                    return Err(Error::NegativeMass { index, value: *p });
                }
            }
        }
        let sum: f64 = probs.iter().sum();
        let band = match policy {
            SimplexPolicy::Renormalize => RENORMALIZE_BAND,
            SimplexPolicy::Strict => SUM_TOLERANCE,
        };
        if !((1.0 - band)..=(1.0 + band)).contains(&sum) {
            return Err(Error::NotNormalized { sum });
        }
        if policy == SimplexPolicy::Renormalize && (sum - 1.0).abs() > SUM_NOISE {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self { probs })
    }

    /// Point mass on `label`.
    pub fn dirac(k: usize, label: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewLabels(k));
        }
        if label >= k {
            return Err(Error::LabelOutOfRange { label, k });
        }
        let mut probs = vec![0.0; k];
        probs[label] = 1.0;
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewLabels(k));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, label: usize) -> f64 {
        self.probs[label]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    /// Largest mass and the lowest label attaining it.
    pub fn max_entry(&self) -> (usize, f64) {
        let mut best = (0, self.probs[0]);
        for (y, &p) in self.probs.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (y, p);
            }
        }
        best
    }

    /// Labels whose mass is within `tol` of the maximum, in increasing order.
    pub fn argmax_set(&self, tol: f64) -> Vec<usize> {
        let (_, max) = self.max_entry();
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= max - tol)
            .map(|(y, _)| y)
            .collect()
    }

    /// Applies a label permutation: entry `y` of the result is `self[perm[y]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: perm.len(),
            });
        }
        Ok(Self {
            probs: perm.iter().map(|&y| self.probs[y]).collect(),
        })
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(deserializer)?;
        Distribution::new(probs).map_err(serde::de::Error::custom)
    }
}

/// Total variation distance `½ Σ_y |p(y) − q(y)|`.
///
/// Evaluated through the overlap form `1 − Σ_y min(p(y), q(y))`, which is
/// symmetric bit for bit and gives exactly `1 − p(y)` against a Dirac `δ_y`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.k() != q.k() {
        return Err(Error::DimensionMismatch {
            expected: p.k(),
            found: q.k(),
        });
    }
    Ok(tv_unchecked(p.probs(), q.probs()))
}

pub(crate) fn tv_unchecked(p: &[f64], q: &[f64]) -> f64 {
    if p == q {
        return 0.0;
    }
    let overlap: f64 = p.iter().zip(q).map(|(a, b)| a.min(*b)).sum();
    (1.0 - overlap).max(0.0)
}

/// `Σ_y |p(y) − q(y)|`.
pub(crate) fn l1_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Lower and upper probabilities of every singleton label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// The convex hull of a nonempty, ordered list of generators sharing one label space.
///
/// Duplicates are kept; every measure in this crate is invariant to them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CredalSet {
    generators: Vec<Distribution>,
}

impl CredalSet {
    pub fn new(generators: Vec<Distribution>) -> Result<Self> {
        let first = generators.first().ok_or(Error::EmptyCredalSet)?;
        let k = first.k();
        if let Some(bad) = generators.iter().find(|g| g.k() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: bad.k(),
            });
        }
        Ok(Self { generators })
    }

    pub fn singleton(p: Distribution) -> Self {
        Self {
            generators: vec![p],
        }
    }

    /// Builds from raw rows under the default construction policy.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            rows.into_iter()
                .map(Distribution::new)
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// The vertex set of the simplex: all `K` Dirac measures.
    pub fn vacuous(k: usize) -> Result<Self> {
        Self::new(
            (0..k)
                .map(|y| Distribution::dirac(k, y))
                .collect::<Result<_>>()?,
        )
    }

    pub fn generators(&self) -> &[Distribution] {
        &self.generators
    }

    pub fn k(&self) -> usize {
        self.generators[0].k()
    }

    pub fn m(&self) -> usize {
        self.generators.len()
    }

    /// True when every generator equals the first, i.e. the hull is a single point.
    pub fn is_precise(&self) -> bool {
        let first = &self.generators[0];
        self.generators[1..].iter().all(|g| g == first)
    }

    /// A copy with `p` appended as an extra generator.
    pub fn with_generator(&self, p: Distribution) -> Result<Self> {
        if p.k() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: p.k(),
            });
        }
        let mut generators = self.generators.clone();
        generators.push(p);
        Ok(Self { generators })
    }

    /// Keeps the generators whose index satisfies `keep`; `None` if nothing survives.
    pub fn retain_indices(&self, mut keep: impl FnMut(usize) -> bool) -> Option<Self> {
        let generators: Vec<_> = self
            .generators
            .iter()
            .enumerate()
            .filter(|(j, _)| keep(*j))
            .map(|(_, g)| g.clone())
            .collect();
        (!generators.is_empty()).then_some(Self { generators })
    }

    /// Relabels every generator with the same permutation.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(
            self.generators
                .iter()
                .map(|g| g.permuted(perm))
                .collect::<Result<_>>()?,
        )
    }

    /// `Σ_j w_j p^(j)`.
    pub fn mixture(&self, weights: &[f64]) -> Result<Distribution> {
        if weights.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidWeights);
        }
        Distribution::new(mix(&self.generators, weights)).map_err(|_| Error::InvalidWeights)
    }

    /// Singleton lower and upper probabilities, attained at generators.
    pub fn singleton_envelopes(&self) -> EnvelopePair {
        let k = self.k();
        let mut lower = vec![f64::INFINITY; k];
        let mut upper = vec![f64::NEG_INFINITY; k];
        for g in &self.generators {
            for (y, &p) in g.probs().iter().enumerate() {
                lower[y] = lower[y].min(p);
                upper[y] = upper[y].max(p);
            }
        }
        EnvelopePair { lower, upper }
    }

    /// `min_j p^(j)(A)`; 0 for the empty set, 1 for the full label set.
    pub fn lower_probability(&self, labels: &[usize]) -> Result<f64> {
        self.event_extreme(labels, f64::min, f64::INFINITY)
    }

    /// `max_j p^(j)(A)`; 0 for the empty set, 1 for the full label set.
    pub fn upper_probability(&self, labels: &[usize]) -> Result<f64> {
        self.event_extreme(labels, f64::max, f64::NEG_INFINITY)
    }

    fn event_extreme(&self, labels: &[usize], pick: fn(f64, f64) -> f64, init: f64) -> Result<f64> {
        let k = self.k();
        let mut member = vec![false; k];
        for &y in labels {
            if y >= k {
                return Err(Error::LabelOutOfRange { label: y, k });
            }
            member[y] = true;
        }
        let size = member.iter().filter(|&&b| b).count();
        if size == 0 {
            return Ok(0.0);
        }
        if size == k {
            return Ok(1.0);
        }
        Ok(self
            .generators
            .iter()
            .map(|g| {
                g.probs()
                    .iter()
                    .zip(&member)
                    .filter(|(_, &inside)| inside)
                    .map(|(p, _)| p)
                    .sum::<f64>()
            })
            .fold(init, pick))
    }
}

pub(crate) fn mix(generators: &[Distribution], weights: &[f64]) -> Vec<f64> {
    let k = generators[0].k();
    let mut out = vec![0.0; k];
    for (g, &w) in generators.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(g.probs()) {
            *o += w * p;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_policy() {
        let noisy = Distribution::new(vec![0.5, 0.5 + 5e-7]).unwrap();
        assert!((noisy.probs().iter().sum::<f64>() - 1.0).abs() < SUM_TOLERANCE);
        assert!(matches!(
            Distribution::new(vec![0.2, 1.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert_eq!(
            Distribution::new(vec![-1e-13, 1.0]).unwrap().probs(),
            &[0.0, 1.0]
        );
        assert!(matches!(
            Distribution::new(vec![-1e-9, 1.0 + 1e-9]),
            Err(Error::NegativeMass { index: 0, .. })
        ));
        assert_eq!(Distribution::new(vec![1.0]), Err(Error::TooFewLabels(1)));
        assert!(matches!(
            Distribution::new(vec![f64::NAN, 1.0]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(Distribution::with_policy(vec![0.5, 0.5 + 5e-7], SimplexPolicy::Strict).is_err());
        assert!(Distribution::with_policy(vec![-1e-13, 1.0], SimplexPolicy::Strict).is_err());
    }

    #[test]
    fn renormalized_rows_are_stable_on_reload() {
        let once = Distribution::new(vec![0.3, 0.3, 0.4 + 3e-7]).unwrap();
        let twice = Distribution::new(once.probs().to_vec()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn credal_set_construction() {
        assert_eq!(CredalSet::new(vec![]), Err(Error::EmptyCredalSet));
        assert!(matches!(
            CredalSet::new(vec![d(&[0.5, 0.5]), d(&[0.2, 0.3, 0.5])]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn singleton_envelope_examples() {
        let cs = CredalSet::from_rows(vec![vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        let env = cs.singleton_envelopes();
        assert_eq!(env.lower, vec![0.2, 0.3]);
        assert_eq!(env.upper, vec![0.7, 0.8]);

        let p = d(&[0.1, 0.6, 0.3]);
        let env = CredalSet::singleton(p.clone()).singleton_envelopes();
        assert_eq!(env.lower, p.probs());
        assert_eq!(env.upper, p.probs());

        let cs = CredalSet::from_rows(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3]]).unwrap();
        let env = cs.singleton_envelopes();
        assert_eq!(env.lower, vec![0.2, 0.3, 0.1]);
        assert_eq!(env.upper, vec![0.6, 0.5, 0.3]);
    }

    #[test]
    fn lower_probability_examples() {
        let cs = CredalSet::from_rows(vec![vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        assert_eq!(cs.lower_probability(&[]).unwrap(), 0.0);
        assert_eq!(cs.lower_probability(&[0, 1]).unwrap(), 1.0);
        assert_eq!(cs.lower_probability(&[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(cs.lower_probability(&[0]).unwrap(), 0.2);
        assert_eq!(cs.upper_probability(&[0]).unwrap(), 0.7);
        assert_eq!(
            cs.lower_probability(&[2]),
            Err(Error::LabelOutOfRange { label: 2, k: 2 })
        );
    }

    #[test]
    fn tv_examples() {
        let p = d(&[0.6, 0.3, 0.1]);
        let q = d(&[0.2, 0.5, 0.3]);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        let dirac0 = Distribution::dirac(2, 0).unwrap();
        let dirac1 = Distribution::dirac(2, 1).unwrap();
        assert_eq!(tv_distance(&dirac0, &dirac1).unwrap(), 1.0);
        assert!((tv_distance(&p, &q).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            tv_distance(&p, &dirac0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn dist_strategy(k: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.0f64..1.0, k).prop_map(|mut v| {
            v[0] += 1e-3;
            let s: f64 = v.iter().sum();
            Distribution::new(v.into_iter().map(|x| x / s).collect()).unwrap()
        })
    }

    fn triple() -> impl Strategy<Value = (Distribution, Distribution, Distribution)> {
        (2usize..=50).prop_flat_map(|k| (dist_strategy(k), dist_strategy(k), dist_strategy(k)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn tv_is_a_metric((p, q, r) in triple()) {
            let pq = tv_distance(&p, &q).unwrap();
            let qp = tv_distance(&q, &p).unwrap();
            let qr = tv_distance(&q, &r).unwrap();
            let pr = tv_distance(&p, &r).unwrap();
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert_eq!(pq, qp);
            prop_assert!(tv_distance(&p, &p).unwrap() <= 1e-12);
            prop_assert!(pr <= pq + qr + 1e-12);
            // agrees with the half-l1 definition
            prop_assert!((pq - 0.5 * l1_unchecked(p.probs(), q.probs())).abs() <= 1e-12);
        }

        #[test]
        fn tv_to_dirac_is_one_minus_mass(p in (2usize..=50).prop_flat_map(dist_strategy)) {
            for y in 0..p.k() {
                let dirac = Distribution::dirac(p.k(), y).unwrap();
                prop_assert_eq!(tv_distance(&p, &dirac).unwrap(), 1.0 - p.prob(y));
            }
        }

        #[test]
        fn envelopes_match_event_probabilities(
            rows in (2usize..=12, 1usize..=6)
                .prop_flat_map(|(k, m)| prop::collection::vec(dist_strategy(k), m))
        ) {
            let cs = CredalSet::new(rows).unwrap();
            let env = cs.singleton_envelopes();
            for y in 0..cs.k() {
                prop_assert_eq!(env.lower[y], cs.lower_probability(&[y]).unwrap());
                prop_assert_eq!(env.upper[y], cs.upper_probability(&[y]).unwrap());
                prop_assert!(0.0 <= env.lower[y] && env.lower[y] <= env.upper[y] && env.upper[y] <= 1.0);
            }
            prop_assert!(env.lower.iter().sum::<f64>() <= 1.0 + 1e-12);
            prop_assert!(env.upper.iter().sum::<f64>() >= 1.0 - 1e-12);
        }
    }
}
