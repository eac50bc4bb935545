//! Deterministic randomness: one counter-based generator, with per-trial
//! substreams derived from (seed, trial index).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A substream of the experiment generator.
#[derive(Clone, Debug)]
pub struct SubRng(ChaCha8Rng);

impl SubRng {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(trial);
        SubRng(r)
    }

    pub fn f64(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.f64()
    }

    pub fn usize_below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.f64().max(1e-300);
        let u2 = self.f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.0.random_range(0..=i);
            xs.swap(i, j);
        }
    }
}
