use crate::error::{GknnError, Result};

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum RankKind {
    TopKUniform(usize),
    Harmonic(usize),
    Explicit(Vec<f64>),
}

/// Probabilities `p_1..p_N` over neighbour ranks.
///
/// Stored 0-based: `probabilities()[0]` is the weight of the nearest record.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDistribution {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    support_size: usize,
}

impl RankDistribution {
    pub fn new(kind: RankKind, n: usize) -> Result<Self> {
        let probabilities = match kind {
            RankKind::TopKUniform(k) => {
                check_k(k, n)?;
                let mut p = vec![0.0; n];
                p[..k].fill(1.0 / k as f64);
                p
            }
            RankKind::Harmonic(k) => {
                check_k(k, n)?;
                let norm: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
                let mut p = vec![0.0; n];
                for (i, pi) in p[..k].iter_mut().enumerate() {
                    *pi = (1.0 / (i + 1) as f64) / norm;
                }
                p
            }
            RankKind::Explicit(mut p) => {
                if p.len() > n {
                    return Err(GknnError::InvalidDistribution(format!(
                        "{} probabilities for {n} training records",
                        p.len()
                    )));
                }
                p.resize(n, 0.0);
                p
            }
        };
        Self::from_probabilities(probabilities)
    }

    pub fn top_k_uniform(k: usize, n: usize) -> Result<Self> {
        Self::new(RankKind::TopKUniform(k), n)
    }

    pub fn harmonic(k: usize, n: usize) -> Result<Self> {
        Self::new(RankKind::Harmonic(k), n)
    }

    pub fn explicit(p: Vec<f64>) -> Result<Self> {
        let n = p.len();
        Self::new(RankKind::Explicit(p), n)
    }

    fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(GknnError::InvalidDistribution("no probabilities".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(GknnError::InvalidDistribution(format!("probability {p} is negative or non-finite")));
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if (acc - 1.0).abs() > SUM_TOLERANCE {
            return Err(GknnError::InvalidDistribution(format!("probabilities sum to {acc}")));
        }
        let support_size = probabilities.iter().rposition(|p| *p > 0.0).map_or(0, |i| i + 1);
        Ok(Self {
            probabilities,
            cumulative,
            support_size,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Non-zero prefix of the probabilities.
    pub fn support(&self) -> &[f64] {
        &self.probabilities[..self.support_size]
    }

    /// Largest rank with positive probability (1-based count).
    pub fn support_size(&self) -> usize {
        self.support_size
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.probabilities.iter().filter(|p| **p > 0.0).count() == 1
    }

    /// Inverse CDF: smallest 0-based rank whose cumulative sum exceeds `u`.
    /// Falls back to the last supported rank when rounding leaves the total
    /// just below `u`.
    pub fn select(&self, u: f64) -> usize {
        let support = &self.cumulative[..self.support_size];
        let i = support.partition_point(|c| *c <= u);
        i.min(self.support_size - 1)
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(GknnError::KOutOfRange { k, n });
    }
    Ok(())
}
