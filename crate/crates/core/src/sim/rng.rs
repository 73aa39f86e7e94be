//! Seeded random streams.
//!
//! Every generator in a run draws from its own stream, derived from the
//! master seed and a stable label. Adding a stream never shifts the draws
//! of another one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::time::SimDuration;
use super::SimError;

/// Rejections before falling back to clamping; only reachable when the
/// bounds sit far out in a tail.
const MAX_REJECTIONS: u32 = 10_000;

#[derive(Clone, Debug)]
pub struct RngStream {
    label: String,
    seed: u64,
    rng: ChaCha8Rng,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(label: impl Into<String>, seed: u64) -> Self {
        RngStream {
            label: label.into(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent stream for `label` from a master seed.
    pub fn derive(master_seed: u64, label: &str) -> Self {
        let seed = splitmix64(master_seed ^ fnv1a64(label.as_bytes()));
        Self::new(label, seed)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn uniform_u64(&mut self, lo: u64, hi_inclusive: u64) -> u64 {
        self.rng.random_range(lo..=hi_inclusive)
    }

    pub fn uniform_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.rng.random_range(0..len)
    }

    /// Picks an index with probability proportional to `weights`.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut x = self.uniform_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.len() - 1
    }

    /// Truncated normal sample in `[min, max]`, rounded to whole nanoseconds.
    /// Out-of-range draws are rejected and redrawn.
    pub fn sample_normal(
        &mut self,
        mean: SimDuration,
        stddev: SimDuration,
        min: SimDuration,
        max: SimDuration,
    ) -> Result<SimDuration, SimError> {
        if min > max {
            return Err(SimError::InvalidRange { min, max });
        }
        let clamp = |v: f64| {
            let ns = v
                .round()
                .clamp(min.as_nanos() as f64, max.as_nanos() as f64);
            SimDuration::from_nanos(ns as u64)
        };
        if stddev == SimDuration::ZERO {
            return Ok(clamp(mean.as_nanos() as f64));
        }
        let normal = Normal::new(mean.as_nanos() as f64, stddev.as_nanos() as f64)
            .expect("stddev is finite and positive");
        let (lo, hi) = (min.as_nanos() as f64, max.as_nanos() as f64);
        for _ in 0..MAX_REJECTIONS {
            let v = normal.sample(&mut self.rng);
            if (lo..=hi).contains(&v) {
                return Ok(clamp(v));
            }
        }
        Ok(clamp(normal.sample(&mut self.rng)))
    }
}
