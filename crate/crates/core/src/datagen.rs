//! Deterministic Zipf and uniform columns over power-of-two domains.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator recorded in store manifests; seeds are portable across platforms.
pub const PRNG: &str = "chacha8";

/// How frequency ranks map to column values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueOrder {
    /// Rank `k` becomes value `k - 1`: the most frequent values are the smallest.
    #[default]
    Rank,
    /// Ranks are assigned to values through a seeded permutation, so value
    /// order and frequency are unrelated.
    Shuffled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec {
    /// `0` is uniform.
    pub skew: f64,
    /// Domain is `[0, 2^domain_bits)`.
    pub domain_bits: u32,
    pub n_rows: usize,
    pub seed: u64,
    #[serde(default)]
    pub order: ValueOrder,
}

impl ZipfSpec {
    pub fn new(skew: f64, domain_bits: u32, n_rows: usize, seed: u64) -> Self {
        Self { skew, domain_bits, n_rows, seed, order: ValueOrder::Rank }
    }

    pub fn shuffled(self) -> Self {
        Self { order: ValueOrder::Shuffled, ..self }
    }

    pub fn domain(&self) -> usize {
        1 << self.domain_bits
    }

    pub fn validate(&self) -> Result<()> {
        if !(4..=24).contains(&self.domain_bits) {
            return Err(Error::InvalidConfig(format!("domain bits {} outside 4..=24", self.domain_bits)));
        }
        if !(self.skew >= 0.0 && self.skew.is_finite()) {
            return Err(Error::InvalidConfig(format!("skew {} must be finite and non-negative", self.skew)));
        }
        Ok(())
    }

    /// Value taken by each rank (index `k - 1`).
    pub fn rank_values(&self) -> Vec<i64> {
        let mut values: Vec<i64> = (0..self.domain() as i64).collect();
        if self.order == ValueOrder::Shuffled {
            // A separate stream so the draws do not depend on the order.
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5EED_0F0D_DE55);
            values.shuffle(&mut rng);
        }
        values
    }
}

/// `cdf[k - 1] = P(rank <= k)` for `P(rank k) ∝ k^-skew`.
pub fn zipf_cdf(skew: f64, domain: usize) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(domain);
    let mut acc = 0.0;
    for k in 1..=domain {
        acc += (k as f64).powf(-skew);
        cdf.push(acc);
    }
    for c in &mut cdf {
        *c /= acc;
    }
    *cdf.last_mut().unwrap() = 1.0;
    cdf
}

/// Zero-based ranks drawn by inverse CDF.
pub fn gen_ranks(spec: &ZipfSpec) -> Result<Vec<u32>> {
    spec.validate()?;
    let cdf = zipf_cdf(spec.skew, spec.domain());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.n_rows)
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u32
        })
        .collect())
}

pub fn gen_zipf(spec: &ZipfSpec) -> Result<Vec<i64>> {
    let values = spec.rank_values();
    Ok(gen_ranks(spec)?.into_iter().map(|r| values[r as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bins_within_three_sigma() {
        let spec = ZipfSpec::new(0.0, 6, 200_000, 1);
        let mut counts = vec![0f64; 64];
        for v in gen_zipf(&spec).unwrap() {
            counts[v as usize] += 1.0;
        }
        let mean: f64 = 200_000.0 / 64.0;
        let sigma = (mean * (1.0 - 1.0 / 64.0)).sqrt();
        assert!(counts.iter().all(|c| (c - mean).abs() < 3.5 * sigma), "{counts:?}");
    }

    #[test]
    fn rank_one_frequency_matches_harmonic_normalisation() {
        let spec = ZipfSpec::new(1.0, 12, 1_000_000, 7);
        let ones = gen_zipf(&spec).unwrap().iter().filter(|&&v| v == 0).count() as f64;
        let h: f64 = (1..=4096).map(|k| 1.0 / k as f64).sum();
        assert!((h - 8.895).abs() < 0.001);
        assert!((ones / 1e6 - 1.0 / h).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_sequence() {
        let spec = ZipfSpec::new(1.2, 10, 1000, 99);
        assert_eq!(gen_zipf(&spec).unwrap(), gen_zipf(&spec).unwrap());
        assert_ne!(gen_zipf(&spec).unwrap(), gen_zipf(&ZipfSpec { seed: 100, ..spec }).unwrap());
        let shuffled = spec.shuffled();
        assert_eq!(gen_ranks(&spec).unwrap(), gen_ranks(&shuffled).unwrap());
        let mut vals = shuffled.rank_values();
        vals.sort_unstable();
        assert_eq!(vals, (0..1024).collect::<Vec<_>>());
    }

    #[test]
    fn domain_bounds() {
        assert!(gen_zipf(&ZipfSpec::new(1.0, 3, 10, 0)).is_err());
        assert!(gen_zipf(&ZipfSpec::new(1.0, 25, 10, 0)).is_err());
        assert!(gen_zipf(&ZipfSpec::new(-1.0, 8, 10, 0)).is_err());
    }

    #[test]
    fn empirical_cdf_close_to_target() {
        let spec = ZipfSpec::new(1.0, 12, 1_000_000, 3);
        let cdf = zipf_cdf(1.0, 4096);
        let mut counts = vec![0u64; 4096];
        for r in gen_ranks(&spec).unwrap() {
            counts[r as usize] += 1;
        }
        let mut acc = 0u64;
        let worst = counts
            .iter()
            .zip(&cdf)
            .map(|(&c, &t)| {
                acc += c;
                (acc as f64 / 1e6 - t).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "{worst}");
    }
}
