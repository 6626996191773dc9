//! Visit frequencies of a query series over ranking classes.
//!
//! A class is the set of queries sharing the same supported ranking prefix.
//! Only classes the series actually visits are represented.

use crate::analytics::prefix_moments;
use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::rank::RankDistribution;
use crate::simulate::{check_distribution, RankedSeries};
use crate::types::{PredictorVector, TrainingSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassFrequency {
    /// Supported ranking prefix (0-based training indices).
    pub key: Vec<usize>,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    /// Sorted by key.
    pub classes: Vec<ClassFrequency>,
    pub series_len: usize,
    pub support: usize,
    pub training_len: usize,
}

impl EmpiricalDistribution {
    pub fn from_ranked(ranked: &RankedSeries, training_len: usize) -> Self {
        let mut counts = vec![0usize; ranked.classes().len()];
        for &c in ranked.class_indices() {
            counts[c] += 1;
        }
        let t = ranked.len() as f64;
        let mut classes: Vec<ClassFrequency> = ranked
            .classes()
            .iter()
            .zip(counts)
            .map(|(key, count)| ClassFrequency {
                key: key.clone(),
                count,
                frequency: count as f64 / t,
            })
            .collect();
        classes.sort_by(|a, b| a.key.cmp(&b.key));
        Self {
            classes,
            series_len: ranked.len(),
            support: ranked.support(),
            training_len,
        }
    }

    pub fn total_frequency(&self) -> f64 {
        self.classes.iter().map(|c| c.frequency).sum()
    }

    pub fn frequency_of(&self, key: &[usize]) -> f64 {
        self.classes
            .binary_search_by(|c| c.key.as_slice().cmp(key))
            .map_or(0.0, |i| self.classes[i].frequency)
    }

    fn check(&self, ts: &TrainingSet, rd: &RankDistribution) -> Result<()> {
        check_distribution(ts, rd)?;
        if self.training_len != ts.len() || self.support != rd.support_size() {
            return Err(GknnError::Provenance(format!(
                "distribution built for N = {}, k = {}; got N = {}, k = {}",
                self.training_len,
                self.support,
                ts.len(),
                rd.support_size()
            )));
        }
        Ok(())
    }

    /// Frequency-weighted sum of a per-class moment.
    fn weighted(&self, ts: &TrainingSet, rd: &RankDistribution, pick: impl Fn((f64, f64)) -> f64) -> Result<f64> {
        self.check(ts, rd)?;
        Ok(self
            .classes
            .iter()
            .map(|c| c.frequency * pick(prefix_moments(&c.key, ts.yields(), rd)))
            .sum())
    }
}

pub fn estimate_nu(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
) -> Result<EmpiricalDistribution> {
    let ranked = RankedSeries::build(series, ts, m, rd)?;
    Ok(EmpiricalDistribution::from_ranked(&ranked, ts.len()))
}

/// `12 sum_pi nu(pi) <y | pi>`, the long-run average annual yield.
pub fn limit_annual_yield(nu: &EmpiricalDistribution, ts: &TrainingSet, rd: &RankDistribution) -> Result<f64> {
    Ok(12.0 * nu.weighted(ts, rd, |(mean, _)| mean)?)
}

/// `12 sum_pi nu(pi) Var(y | pi)`, the limit of `m Var(Y)`.
///
/// The factor 12 comes from `T = 12 m`: `m Var(Y) = (1/m) sum_t Var(y_t)`,
/// and each of the `12 m` steps lands in class `pi` with frequency `nu(pi)`.
pub fn limit_m_var(nu: &EmpiricalDistribution, ts: &TrainingSet, rd: &RankDistribution) -> Result<f64> {
    Ok(12.0 * nu.weighted(ts, rd, |(_, var)| var)?)
}
