//! Seeded ensembles around known conditionals.
//!
//! Each instance draws a true conditional `p ~ Dirichlet(1, …, 1)` and a label
//! `y ~ p`. Member `j` is `softmax(ln p + noise · z_j)` with `z_j` standard
//! normal, so `noise` sets the spread of the credal set around `p`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Instance, PredictionDataset};
use crate::simplex::{CredalSet, Distribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::TooFewLabels(self.k));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig(format!(
                "need n >= 1 and m >= 1, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise must be finite and >= 0, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

pub struct SyntheticData {
    pub dataset: PredictionDataset,
    pub true_conditionals: Vec<Distribution>,
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut instances = Vec::with_capacity(config.n);
    let mut truths = Vec::with_capacity(config.n);

    for i in 0..config.n {
        let truth = dirichlet_flat(&mut rng, config.k);
        let label = WeightedIndex::new(truth.probs())
            .expect("Dirichlet draw has positive mass")
            .sample(&mut rng);
        let members = (0..config.m)
            .map(|_| perturb(&mut rng, &truth, config.noise))
            .collect::<Result<Vec<_>>>()?;
        instances.push(Instance {
            id: format!("s{i}"),
            credal: CredalSet::new(members)?,
            label: Some(label),
        });
        truths.push(truth);
    }
    let model_ids = (0..config.m).map(|j| format!("member_{j}")).collect();
    Ok(SyntheticData {
        dataset: PredictionDataset::new(instances, model_ids)?,
        true_conditionals: truths,
    })
}

fn dirichlet_flat(rng: &mut ChaCha8Rng, k: usize) -> Distribution {
    loop {
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && draws.iter().all(|&x| x > 0.0) {
            let probs = draws.into_iter().map(|x| x / total).collect();
            return Distribution::new(probs).expect("normalized draw");
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, truth: &Distribution, noise: f64) -> Result<Distribution> {
    if noise == 0.0 {
        return Ok(truth.clone());
    }
    let logits: Vec<f64> = truth
        .probs()
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(rng);
            p.ln() + noise * z
        })
        .collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - top).exp()).collect();
    let total: f64 = exp.iter().sum();
    Distribution::new(exp.into_iter().map(|x| x / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::tv::{au_tv_interval, eu_tv};

    fn config(noise: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            k: 5,
            n: 200,
            m: 4,
            noise,
            seed,
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate(&config(0.5, 9)).unwrap();
        let b = generate(&config(0.5, 9)).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.dataset.write_jsonl(&mut x).unwrap();
        b.dataset.write_jsonl(&mut y).unwrap();
        assert_eq!(x, y);
        let c = generate(&config(0.5, 10)).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn zero_noise_collapses_to_truth() {
        let data = generate(&config(0.0, 3)).unwrap();
        for (inst, truth) in data.dataset.instances().iter().zip(&data.true_conditionals) {
            assert!(inst.credal.generators().iter().all(|g| g == truth));
            assert_eq!(eu_tv(&inst.credal), 0.0);
            let au = au_tv_interval(&inst.credal).unwrap();
            assert_eq!(au.lo, 1.0 - truth.max_entry().1);
            assert_eq!(au.hi, au.lo);
        }
    }

    #[test]
    fn single_member_has_no_epistemic_part() {
        let cfg = SyntheticConfig {
            m: 1,
            noise: 2.0,
            ..config(0.0, 4)
        };
        let data = generate(&cfg).unwrap();
        assert!(data
            .dataset
            .instances()
            .iter()
            .all(|i| eu_tv(&i.credal) == 0.0));
    }

    #[test]
    fn labels_follow_truth() {
        let cfg = SyntheticConfig {
            k: 2,
            n: 20_000,
            m: 1,
            noise: 0.0,
            seed: 1,
        };
        let data = generate(&cfg).unwrap();
        let expected: f64 = data
            .true_conditionals
            .iter()
            .map(|p| p.prob(1))
            .sum::<f64>()
            / cfg.n as f64;
        let observed = data
            .dataset
            .instances()
            .iter()
            .filter(|i| i.label == Some(1))
            .count() as f64
            / cfg.n as f64;
        assert!((expected - observed).abs() < 0.02);
    }

    #[test]
    fn mean_eu_grows_with_noise() {
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0];
        let mut previous: Option<(f64, f64)> = None;
        for &noise in &grid {
            let mut values = Vec::new();
            for seed in 0..10 {
                let data = generate(&config(noise, seed)).unwrap();
                values.extend(data.dataset.instances().iter().map(|i| eu_tv(&i.credal)));
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            if let Some((prev_mean, prev_se)) = previous {
                let pooled = (se * se + prev_se * prev_se).sqrt();
                assert!(
                    mean >= prev_mean - pooled,
                    "noise {noise}: {mean} < {prev_mean}"
                );
            }
            previous = Some((mean, se));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate(&SyntheticConfig {
            k: 1,
            ..config(0.1, 0)
        })
        .is_err());
        assert!(generate(&SyntheticConfig {
            n: 0,
            ..config(0.1, 0)
        })
        .is_err());
        assert!(generate(&SyntheticConfig {
            m: 0,
            ..config(0.1, 0)
        })
        .is_err());
        assert!(generate(&config(-0.1, 0)).is_err());
        assert!(generate(&config(f64::NAN, 0)).is_err());
    }
}
