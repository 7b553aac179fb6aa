//! Seeded generators and streaming moment accumulators for Monte Carlo runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for trial `index` of a run seeded with `seed`.
///
/// Each trial gets its own ChaCha stream, so results do not depend on how
/// trials are scheduled across threads.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Trials are accumulated in fixed-size blocks, then blocks are merged in
/// order. Keeps sums bit-identical across thread counts.
pub(crate) const BLOCK: usize = 50;

/// Per-coordinate running mean and variance (Welford, with Chan's merge).
#[derive(Debug, Clone, PartialEq)]
pub struct VecStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VecStats {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, sample: &[f64]) {
        debug_assert_eq!(sample.len(), self.mean.len());
        self.count += 1;
        let c = self.count as f64;
        for ((m, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let d = v - *m;
            *m += d / c;
            *m2 += d * (v - *m);
        }
    }

    pub fn merge(&mut self, other: &VecStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance per coordinate (zero with fewer than two samples).
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let d = (self.count - 1) as f64;
        self.m2.iter().map(|m2| (m2 / d).max(0.0)).collect()
    }

    /// Standard error of the mean per coordinate.
    pub fn stderr(&self) -> Vec<f64> {
        let c = self.count.max(1) as f64;
        self.variance().into_iter().map(|v| (v / c).sqrt()).collect()
    }
}
