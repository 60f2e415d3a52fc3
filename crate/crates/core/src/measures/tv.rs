//! Distance-based uncertainty under the total-variation test class.
//!
//! With test functions `{1_A : A ⊆ Y}` every quantity has a closed form over
//! the generators:
//!
//! | Quantity | Value | Cost |
//! |----------|-------|------|
//! | total | `1 − max_y min_j p^(j)(y)` | `O(MK)` |
//! | aleatoric, precise `p` | `1 − max_y p(y)` | `O(K)` |
//! | aleatoric, lower end | `min_j (1 − max_y p^(j)(y))` | `O(MK)` |
//! | aleatoric, upper end | shared-argmax envelope, else `1 − t*` from the minimax LP | `Ω(MK)` |
//! | epistemic | `¼ max_{i,j} ‖p^(i) − p^(j)‖₁` | `O(M²K)` |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::optimize::minimax_max_coordinate;
use crate::simplex::{l1_unchecked, CredalSet, Distribution};

/// Tolerance for membership in a generator's argmax set.
pub const ARGMAX_TOL: f64 = 1e-12;

/// The set of aleatoric uncertainties over the credal set, summarized by its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AUInterval {
    pub lo: f64,
    pub hi: f64,
}

impl AUInterval {
    /// Key for ranking: lower endpoint first, upper endpoint as tie-break.
    pub fn lexicographic_key(&self) -> [f64; 2] {
        [self.lo, self.hi]
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Per-instance scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRecord {
    pub tu: f64,
    pub au: AUInterval,
    pub eu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BTreeMap<String, f64>>,
}

impl UncertaintyRecord {
    /// Checks the ordering constraints `eu ≤ tu`, `lo ≤ hi ≤ tu`, `hi ≤ 1 − 1/K`.
    pub fn is_consistent(&self, k: usize, tol: f64) -> bool {
        let cap = 1.0 - 1.0 / k as f64;
        let in_unit = |x: f64| (-tol..=1.0 + tol).contains(&x);
        in_unit(self.tu)
            && in_unit(self.eu)
            && self.au.lo >= -tol
            && self.au.lo <= self.au.hi + tol
            && self.au.hi <= cap + tol
            && self.au.hi <= self.tu + tol
            && self.eu <= self.tu + tol
    }
}

/// Total uncertainty: distance from the credal set to the nearest Dirac measure.
pub fn tu_tv(cs: &CredalSet) -> f64 {
    let best_lower = cs
        .singleton_envelopes()
        .lower
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    1.0 - best_lower
}

/// Aleatoric uncertainty of one distribution: its Bayes error under 0–1 loss.
pub fn au_tv_precise(p: &Distribution) -> f64 {
    1.0 - p.max_entry().1
}

/// Lower endpoint of the aleatoric interval, attained at a generator.
pub fn au_tv_lower(cs: &CredalSet) -> f64 {
    cs.generators()
        .iter()
        .map(au_tv_precise)
        .fold(f64::INFINITY, f64::min)
}

/// Upper endpoint of the aleatoric interval.
///
/// When some label is in the argmax set of every generator, the maximum is
/// attained at a generator and equals `1 − p̲({y*})`. Otherwise it is
/// `1 − min_{w ∈ Δ} max_y Σ_j w_j p^(j)(y)`.
pub fn au_tv_upper(cs: &CredalSet) -> Result<f64> {
    let k = cs.k();
    let cap = 1.0 - 1.0 / k as f64;
    let floor = au_tv_lower(cs);
    let value = match shared_argmax(cs) {
        Some(label) => 1.0 - cs.singleton_envelopes().lower[label],
        None => 1.0 - minimax_max_coordinate(cs)?.optimum,
    };
    // The LP result is certified to ~1e-15; keep the interval well formed.
    Ok(value.min(cap).max(floor))
}

/// Lowest label in the intersection of all generators' argmax sets.
pub fn shared_argmax(cs: &CredalSet) -> Option<usize> {
    let mut shared = vec![true; cs.k()];
    for g in cs.generators() {
        let (_, max) = g.max_entry();
        for (flag, &p) in shared.iter_mut().zip(g.probs()) {
            *flag &= p >= max - ARGMAX_TOL;
        }
    }
    shared.iter().position(|&b| b)
}

pub fn au_tv_interval(cs: &CredalSet) -> Result<AUInterval> {
    Ok(AUInterval {
        lo: au_tv_lower(cs),
        hi: au_tv_upper(cs)?,
    })
}

/// Epistemic uncertainty: half the total-variation diameter of the credal set.
pub fn eu_tv(cs: &CredalSet) -> f64 {
    let gens = cs.generators();
    let mut widest: f64 = 0.0;
    for (j, p) in gens.iter().enumerate() {
        for q in &gens[j + 1..] {
            widest = widest.max(l1_unchecked(p.probs(), q.probs()));
        }
    }
    0.25 * widest
}

/// Total, aleatoric interval and epistemic uncertainty in one record.
pub fn evaluate_tv(cs: &CredalSet) -> Result<UncertaintyRecord> {
    let record = UncertaintyRecord {
        tu: tu_tv(cs),
        au: au_tv_interval(cs)?,
        eu: eu_tv(cs),
        baselines: None,
    };
    debug_assert!(record.is_consistent(cs.k(), 1e-9), "{record:?}");
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::tv_distance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cs(rows: &[&[f64]]) -> CredalSet {
        CredalSet::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn binary(a: f64, b: f64) -> CredalSet {
        cs(&[&[a, 1.0 - a], &[b, 1.0 - b]])
    }

    const PAIR: [&[f64]; 2] = [&[0.6, 0.3, 0.1], &[0.2, 0.5, 0.3]];

    #[test]
    fn total_uncertainty_examples() {
        let k = 3;
        assert_eq!(
            tu_tv(&CredalSet::singleton(Distribution::dirac(k, 2).unwrap())),
            0.0
        );
        assert!((tu_tv(&binary(0.2, 0.7)) - 0.7).abs() < 1e-15);
        let pair = cs(&PAIR);
        assert!((tu_tv(&pair) - 0.7).abs() < 1e-15);
        // brute force: min_y max_j TV(p_j, δ_y)
        let brute = (0..3)
            .map(|y| {
                let dirac = Distribution::dirac(3, y).unwrap();
                pair.generators()
                    .iter()
                    .map(|p| tv_distance(p, &dirac).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(tu_tv(&pair), brute);
    }

    #[test]
    fn precise_aleatoric_examples() {
        assert_eq!(au_tv_precise(&Distribution::dirac(4, 1).unwrap()), 0.0);
        assert_eq!(au_tv_precise(&Distribution::uniform(4).unwrap()), 0.75);
        let p = Distribution::new(vec![0.6, 0.3, 0.1]).unwrap();
        assert!((au_tv_precise(&p) - 0.4).abs() < 1e-15);
        let by_distance = (0..3)
            .map(|y| tv_distance(&p, &Distribution::dirac(3, y).unwrap()).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(au_tv_precise(&p), by_distance);
    }

    #[test]
    fn lower_aleatoric_examples() {
        assert!((au_tv_lower(&binary(0.2, 0.7)) - 0.2).abs() < 1e-15);
        let with_dirac = cs(&PAIR)
            .with_generator(Distribution::dirac(3, 1).unwrap())
            .unwrap();
        assert_eq!(au_tv_lower(&with_dirac), 0.0);
        assert!((au_tv_lower(&cs(&PAIR)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lower_aleatoric_is_hull_minimum() {
        let pair = cs(&PAIR);
        let lo = au_tv_lower(&pair);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let w: f64 = rng.random();
            let q = pair.mixture(&[w, 1.0 - w]).unwrap();
            assert!(au_tv_precise(&q) >= lo - 1e-12);
        }
    }

    #[test]
    fn upper_aleatoric_examples() {
        let agree = cs(&[&[0.7, 0.2, 0.1], &[0.5, 0.4, 0.1]]);
        assert_eq!(shared_argmax(&agree), Some(0));
        assert!((au_tv_upper(&agree).unwrap() - 0.5).abs() < 1e-15);

        let pair = cs(&PAIR);
        assert_eq!(shared_argmax(&pair), None);
        assert!((au_tv_upper(&pair).unwrap() - 0.6).abs() < 1e-12);

        // segment p0 ∈ [0.3, 0.6]: AU = min{p0, 1 − p0} peaks at 0.5
        let grid = (0..=300_000)
            .map(|i| 0.3 + 0.3 * i as f64 / 300_000.0)
            .map(|p0: f64| p0.min(1.0 - p0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((au_tv_upper(&binary(0.3, 0.6)).unwrap() - grid).abs() < 1e-9);
        assert!((grid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_use_the_intersection() {
        // both generators tie labels 0 and 1; intersection is {0, 1}
        let tied = cs(&[&[0.4, 0.4, 0.2], &[0.45, 0.45, 0.1]]);
        assert_eq!(shared_argmax(&tied), Some(0));
        assert!((au_tv_upper(&tied).unwrap() - 0.6).abs() < 1e-15);
        // argmax sets {0,1} and {1}: intersection {1}
        let partial = cs(&[&[0.4, 0.4, 0.2], &[0.3, 0.5, 0.2]]);
        assert_eq!(shared_argmax(&partial), Some(1));
        assert!((au_tv_upper(&partial).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn epistemic_examples() {
        let p = Distribution::new(vec![0.6, 0.3, 0.1]).unwrap();
        assert_eq!(eu_tv(&CredalSet::singleton(p)), 0.0);
        assert!((eu_tv(&binary(0.2, 0.7)) - 0.25).abs() < 1e-15);
        let pair = cs(&PAIR);
        assert!((eu_tv(&pair) - 0.2).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            let x = pair.mixture(&[a, 1.0 - a]).unwrap();
            let y = pair.mixture(&[b, 1.0 - b]).unwrap();
            assert!(0.5 * tv_distance(&x, &y).unwrap() <= eu_tv(&pair) + 1e-12);
        }
    }

    #[test]
    fn record_examples() {
        let rec = evaluate_tv(&CredalSet::singleton(Distribution::dirac(3, 0).unwrap())).unwrap();
        assert_eq!((rec.tu, rec.au.lo, rec.au.hi, rec.eu), (0.0, 0.0, 0.0, 0.0));

        let rec = evaluate_tv(&binary(0.2, 0.7)).unwrap();
        assert!((rec.tu - 0.7).abs() < 1e-12);
        assert!((rec.au.lo - 0.2).abs() < 1e-12);
        assert!((rec.au.hi - 0.5).abs() < 1e-12);
        assert!((rec.eu - 0.25).abs() < 1e-12);
        assert!((rec.tu - (rec.au.lo + 2.0 * rec.eu)).abs() < 1e-12);

        let rec = evaluate_tv(&cs(&PAIR)).unwrap();
        assert!((rec.tu - 0.7).abs() < 1e-12);
        assert!((rec.au.lo - 0.4).abs() < 1e-12);
        assert!((rec.au.hi - 0.6).abs() < 1e-12);
        assert!((rec.eu - 0.2).abs() < 1e-12);
    }

    fn dist(k: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.0f64..1.0, k).prop_map(|mut v| {
            v[0] += 1e-6;
            let s: f64 = v.iter().sum();
            Distribution::new(v.into_iter().map(|x| x / s).collect()).unwrap()
        })
    }

    fn credal(max_k: usize, max_m: usize) -> impl Strategy<Value = CredalSet> {
        (2..=max_k, 1..=max_m).prop_flat_map(|(k, m)| {
            prop::collection::vec(dist(k), m).prop_map(|g| CredalSet::new(g).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn dominance_and_range(set in credal(100, 32)) {
            let rec = evaluate_tv(&set).unwrap();
            prop_assert!(rec.eu <= rec.tu + 1e-12);
            prop_assert!(rec.au.hi <= rec.tu + 1e-12);
            for p in set.generators() {
                prop_assert!(au_tv_precise(p) <= rec.tu + 1e-12);
            }
            prop_assert!(rec.is_consistent(set.k(), 1e-12));
        }

        #[test]
        fn monotone_under_generator_addition(
            (set, extra) in (2usize..=20, 1usize..=8).prop_flat_map(|(k, m)| {
                (prop::collection::vec(dist(k), m).prop_map(|g| CredalSet::new(g).unwrap()), dist(k))
            })
        ) {
            let before = evaluate_tv(&set).unwrap();
            let after = evaluate_tv(&set.with_generator(extra).unwrap()).unwrap();
            prop_assert!(after.tu >= before.tu - 1e-12);
            prop_assert!(after.eu >= before.eu - 1e-12);
            prop_assert!(after.au.hi >= before.au.hi - 1e-12);
            prop_assert!(after.au.lo <= before.au.lo + 1e-12);
        }

        #[test]
        fn permutation_equivariance(
            (set, perm) in (2usize..=12, 1usize..=6).prop_flat_map(|(k, m)| {
                (
                    prop::collection::vec(dist(k), m).prop_map(|g| CredalSet::new(g).unwrap()),
                    Just((0..k).collect::<Vec<_>>()).prop_shuffle(),
                )
            })
        ) {
            let a = evaluate_tv(&set).unwrap();
            let b = evaluate_tv(&set.permuted(&perm).unwrap()).unwrap();
            prop_assert!((a.tu - b.tu).abs() <= 1e-12);
            prop_assert!((a.eu - b.eu).abs() <= 1e-12);
            prop_assert!((a.au.lo - b.au.lo).abs() <= 1e-12);
            prop_assert!((a.au.hi - b.au.hi).abs() <= 1e-9);
        }

        #[test]
        fn binary_recovery(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (a, b) = (a.min(b), a.max(b));
            let rec = evaluate_tv(&binary(a, b)).unwrap();
            prop_assert!((rec.tu - (1.0 - a).min(b)).abs() <= 1e-12);
            prop_assert!((rec.au.lo - a.min(1.0 - b)).abs() <= 1e-12);
            prop_assert!((rec.eu - 0.5 * (b - a)).abs() <= 1e-12);
            prop_assert!((rec.tu - (rec.au.lo + 2.0 * rec.eu)).abs() <= 1e-12);
        }

        #[test]
        fn dirac_member_anchors_total_uncertainty(set in credal(30, 8), pick in 0usize..30) {
            let label = pick % set.k();
            let augmented = set.with_generator(Distribution::dirac(set.k(), label).unwrap()).unwrap();
            let lower = augmented.singleton_envelopes().lower[label];
            prop_assert_eq!(tu_tv(&augmented), 1.0 - lower);
            prop_assert!(eu_tv(&augmented) >= eu_tv(&set));
        }
    }
}
