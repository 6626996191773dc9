#![allow(dead_code)]

use gknn::{PredictorVector, TrainingSet};

/// xorshift64* for test fixtures; independent of the engine's ChaCha stream.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize
    }
}

pub fn scalars(xs: &[f64]) -> Vec<PredictorVector> {
    xs.iter().map(|&x| PredictorVector::scalar(x).unwrap()).collect()
}

/// Scalar predictors on [0, 10) with yields on [0, 1000).
pub fn random_scalar_set(rng: &mut TestRng, n: usize) -> TrainingSet {
    TrainingSet::from_pairs((0..n).map(|_| (vec![rng.range(0.0, 10.0)], rng.range(0.0, 1000.0)))).unwrap()
}

/// Pearson chi-square statistic of observed counts against probabilities.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}
