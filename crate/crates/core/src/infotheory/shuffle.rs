//! Permutation null distribution for (conditional) mutual information.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate_cmi;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShuffleTestConfig {
    /// Percentile of the null distribution used as the threshold.
    pub alpha: f64,
    pub n_shuffles: usize,
    pub seed: u64,
}

impl Default for ShuffleTestConfig {
    fn default() -> Self {
        ShuffleTestConfig {
            alpha: 0.95,
            n_shuffles: 100,
            seed: 0,
        }
    }
}

impl ShuffleTestConfig {
    /// Zero-based position of the threshold in the sorted null sample.
    fn rank(&self) -> Result<usize> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let r = (self.alpha * self.n_shuffles as f64).ceil() as usize;
        if r < 1 || r > self.n_shuffles {
            return Err(Error::InvalidArgument(format!(
                "ceil(alpha * n_shuffles) = {r} is outside [1, {}]",
                self.n_shuffles
            )));
        }
        Ok(r - 1)
    }

    pub fn validate(&self) -> Result<()> {
        self.rank().map(|_| ())
    }
}

/// The ⌈α·n_s⌉-th smallest of `n_s` estimates of `I(X;Y_π|Z)`, each with
/// the rows of `y` under an independent random permutation `π`.
///
/// Replica `i` draws its permutation from ChaCha stream `i` of `config.seed`,
/// so the result does not depend on scheduling.
pub fn shuffle_threshold(
    x: &[&[f64]],
    y: &[&[f64]],
    z: &[&[f64]],
    k: usize,
    config: &ShuffleTestConfig,
) -> Result<f64> {
    let rank = config.rank()?;
    let n = y.first().map_or(0, |c| c.len());
    let mut null = (0..config.n_shuffles)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled: Vec<Vec<f64>> = y.iter().map(|c| perm.iter().map(|&p| c[p]).collect()).collect();
            let refs: Vec<&[f64]> = shuffled.iter().map(Vec::as_slice).collect();
            estimate_cmi(x, &refs, z, k)
        })
        .collect::<Result<Vec<f64>>>()?;
    null.sort_unstable_by(f64::total_cmp);
    Ok(null[rank])
}
