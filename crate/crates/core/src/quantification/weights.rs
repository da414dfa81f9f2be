use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{linf, StatePoint};

/// Class-K comparison function `α(x) = x^p`, `p >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub power: f64,
}

impl Alpha {
    pub const IDENTITY: Alpha = Alpha { power: 1.0 };

    pub fn eval(&self, x: f64) -> f64 {
        if self.power == 1.0 {
            x
        } else {
            x.powf(self.power)
        }
    }
}

/// Sampling distribution over live centres, biased toward the pruned set.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    pub probabilities: Vec<f64>,
    pub alpha: Alpha,
}

impl SamplingWeights {
    /// `ρ_i = α(d* - d_i) / Σ_j α(d* - d_j)`; uniform when every `d_i` is equal.
    pub fn from_distances(d: &[f64], alpha: Alpha) -> Self {
        let k = d.len();
        let uniform = || SamplingWeights { probabilities: vec![1.0 / k as f64; k], alpha };
        if k == 0 {
            return SamplingWeights { probabilities: Vec::new(), alpha };
        }
        let first = d[0];
        if d.iter().all(|x| *x == first) {
            return uniform();
        }
        let d_star = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = d.iter().map(|x| alpha.eval(d_star - x)).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return uniform();
        }
        SamplingWeights { probabilities: raw.into_iter().map(|x| x / total).collect(), alpha }
    }

    pub fn sampler(&self) -> Option<WeightedIndex<f64>> {
        WeightedIndex::new(&self.probabilities).ok()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        self.sampler().map(|w| w.sample(rng))
    }
}

/// Distance of every centre to the nearest pruned point.
pub fn prioritized_weights(centers: &[StatePoint], pruned: &[StatePoint], alpha: Alpha) -> SamplingWeights {
    let d: Vec<f64> = centers
        .iter()
        .map(|c| pruned.iter().map(|p| linf(c, p)).fold(f64::INFINITY, f64::min))
        .collect();
    SamplingWeights::from_distances(&d, alpha)
}
