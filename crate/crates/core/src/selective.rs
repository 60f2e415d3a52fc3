//! Selective prediction: voting predictions, uncertainty ranking and
//! accuracy–rejection curves summarized by AUC and the monotonicity ratio.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::CredalSet;

pub const DEFAULT_BINS: usize = 30;
/// Curve differences are rounded to this grid before the sign test.
const MR_RESOLUTION: f64 = 1e-12;

/// Plurality vote over the generators' argmax labels. Ties among the leaders
/// go to the highest mean probability, then to the lowest label.
pub fn credal_predict(cs: &CredalSet) -> usize {
    let k = cs.k();
    let m = cs.m() as f64;
    let mut votes = vec![0usize; k];
    let mut mean = vec![0.0; k];
    for g in cs.generators() {
        votes[g.max_entry().0] += 1;
        for (acc, p) in mean.iter_mut().zip(g.probs()) {
            *acc += p / m;
        }
    }
    let top = *votes.iter().max().expect("k >= 2");
    let mut best: Option<usize> = None;
    for y in (0..k).filter(|&y| votes[y] == top) {
        match best {
            Some(b) if mean[y] <= mean[b] => {}
            _ => best = Some(y),
        }
    }
    best.expect("at least one leader")
}

/// One instance in a selective-prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub instance_id: String,
    pub predicted_label: usize,
    pub true_label: Option<usize>,
    /// Primary score first, then tie-break components. Larger means more uncertain.
    pub score_key: Vec<f64>,
}

impl ScoredInstance {
    pub fn is_correct(&self) -> Option<bool> {
        self.true_label.map(|y| y == self.predicted_label)
    }
}

fn compare_keys(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Indices ordered from most to least uncertain, lexicographically over
/// `score_key`. Stable: full ties keep input order.
pub fn rank_by_uncertainty(records: &[ScoredInstance]) -> Result<Vec<usize>> {
    if records.is_empty() {
        return Err(Error::EmptyRanking);
    }
    if let Some(index) = records
        .iter()
        .position(|r| r.score_key.iter().any(|s| !s.is_finite()))
    {
        return Err(Error::NonFiniteScore { index });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&i, &j| compare_keys(&records[j].score_key, &records[i].score_key));
    Ok(order)
}

/// Fraction of adjacent pairs in ranked order whose keys tie completely.
pub fn tie_fraction(records: &[ScoredInstance], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let ties = order
        .windows(2)
        .filter(|w| records[w[0]].score_key == records[w[1]].score_key)
        .count();
    ties as f64 / (order.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArPoint {
    pub rejection_fraction: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ARCurve {
    pub bins: Vec<ArPoint>,
    pub auc: f64,
    pub mr: f64,
    pub bin_count: usize,
}

impl ARCurve {
    /// Builds a curve from explicit points, computing AUC and MR.
    pub fn from_points(bins: Vec<ArPoint>) -> Result<Self> {
        if bins.len() < 2 {
            return Err(Error::InvalidBinning {
                bins: bins.len(),
                instances: 0,
            });
        }
        if bins
            .windows(2)
            .any(|w| !(w[0].rejection_fraction < w[1].rejection_fraction))
        {
            return Err(Error::InvalidConfig(
                "rejection fractions must be strictly increasing".into(),
            ));
        }
        let mut curve = Self {
            bin_count: bins.len(),
            bins,
            auc: 0.0,
            mr: 0.0,
        };
        curve.auc = auc(&curve);
        curve.mr = monotonicity_ratio(&curve);
        Ok(curve)
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.accuracy).collect()
    }
}

/// Accuracy on the retained instances at rejection fractions `i / B`,
/// `i = 0..B`. `ranked` must already be ordered most-uncertain first; the
/// `ceil(i N / B)` leading instances are dropped at bin `i`.
pub fn accuracy_rejection_curve(ranked: &[ScoredInstance], bin_count: usize) -> Result<ARCurve> {
    let n = ranked.len();
    if bin_count < 2 || n < bin_count {
        return Err(Error::InvalidBinning {
            bins: bin_count,
            instances: n,
        });
    }
    let mut correct_from = vec![0usize; n + 1];
    for (i, inst) in ranked.iter().enumerate().rev() {
        let correct = inst.is_correct().ok_or(Error::MissingLabel { index: i })?;
        correct_from[i] = correct_from[i + 1] + usize::from(correct);
    }
    let bins = (0..bin_count)
        .map(|i| {
            let rejected = (i * n).div_ceil(bin_count);
            ArPoint {
                rejection_fraction: i as f64 / bin_count as f64,
                accuracy: correct_from[rejected] as f64 / (n - rejected) as f64,
            }
        })
        .collect();
    ARCurve::from_points(bins)
}

/// Ranks `records` and builds the curve in one step.
pub fn ar_curve_for(records: &[ScoredInstance], bin_count: usize) -> Result<ARCurve> {
    let order = rank_by_uncertainty(records)?;
    let ranked: Vec<ScoredInstance> = order.iter().map(|&i| records[i].clone()).collect();
    accuracy_rejection_curve(&ranked, bin_count)
}

/// Trapezoidal area under accuracy vs. rejection fraction, divided by the
/// covered span so a flat curve at `c` scores `c`.
pub fn auc(curve: &ARCurve) -> f64 {
    let pts = &curve.bins;
    let area: f64 = pts
        .windows(2)
        .map(|w| {
            0.5 * (w[0].accuracy + w[1].accuracy)
                * (w[1].rejection_fraction - w[0].rejection_fraction)
        })
        .sum();
    let span = pts[pts.len() - 1].rejection_fraction - pts[0].rejection_fraction;
    area / span
}

/// Share of consecutive steps along which accuracy does not drop.
pub fn monotonicity_ratio(curve: &ARCurve) -> f64 {
    let pts = &curve.bins;
    let steps = pts.len() - 1;
    let nondecreasing = pts
        .windows(2)
        .filter(|w| ((w[1].accuracy - w[0].accuracy) / MR_RESOLUTION).round() >= 0.0)
        .count();
    nondecreasing as f64 / steps as f64
}

/// Mean and sample standard deviation of several runs on the same bin grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatedCurve {
    pub rejection_fraction: Vec<f64>,
    pub accuracy_mean: Vec<f64>,
    pub accuracy_sd: Vec<f64>,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub mr_mean: f64,
    pub mr_sd: f64,
    pub runs: usize,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate_curves(curves: &[ARCurve]) -> Result<AggregatedCurve> {
    let first = curves.first().ok_or(Error::EmptyRanking)?;
    if curves.iter().any(|c| c.bin_count != first.bin_count) {
        return Err(Error::InvalidConfig(
            "curves use different bin counts".into(),
        ));
    }
    let (accuracy_mean, accuracy_sd) = (0..first.bin_count)
        .map(|i| mean_sd(curves.iter().map(move |c| c.bins[i].accuracy)))
        .unzip();
    let (auc_mean, auc_sd) = mean_sd(curves.iter().map(|c| c.auc));
    let (mr_mean, mr_sd) = mean_sd(curves.iter().map(|c| c.mr));
    Ok(AggregatedCurve {
        rejection_fraction: first.bins.iter().map(|b| b.rejection_fraction).collect(),
        accuracy_mean,
        accuracy_sd,
        auc_mean,
        auc_sd,
        mr_mean,
        mr_sd,
        runs: curves.len(),
    })
}
