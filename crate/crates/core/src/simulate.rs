use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::neighbors::rank_prefix;
use crate::rank::RankDistribution;
use crate::sampler::SeededSampler;
use crate::types::{PredictorVector, TrainingSet};

/// The supported ranking prefix for every step of a query series.
///
/// Steps whose rankings agree on the first `support_size` indices share a
/// class; classes are numbered in order of first appearance. Only the prefix
/// matters because ranks beyond the support carry zero probability.
#[derive(Debug, Clone)]
pub struct RankedSeries {
    support: usize,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl RankedSeries {
    pub fn build(series: &[PredictorVector], ts: &TrainingSet, m: &MetricSpec, rd: &RankDistribution) -> Result<Self> {
        if series.is_empty() {
            return Err(GknnError::EmptySeries);
        }
        check_distribution(ts, rd)?;
        let support = rd.support_size();

        let mut vector_ids: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut unique: Vec<&PredictorVector> = Vec::new();
        let vector_of: Vec<usize> = series
            .iter()
            .map(|v| {
                *vector_ids.entry(v.bits()).or_insert_with(|| {
                    unique.push(v);
                    unique.len() - 1
                })
            })
            .collect();

        let prefixes = unique
            .par_iter()
            .map(|v| rank_prefix(v, ts, m, support).map(|r| r.permutation))
            .collect::<Result<Vec<_>>>()?;

        let mut class_ids: HashMap<&[usize], usize> = HashMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of_vector = Vec::with_capacity(prefixes.len());
        for p in &prefixes {
            let id = *class_ids.entry(p.as_slice()).or_insert_with(|| {
                classes.push(p.clone());
                classes.len() - 1
            });
            class_of_vector.push(id);
        }
        let class_of = vector_of.iter().map(|&u| class_of_vector[u]).collect();
        Ok(Self {
            support,
            classes,
            class_of,
        })
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn support(&self) -> usize {
        self.support
    }

    /// Distinct ranking prefixes in order of first appearance.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, t: usize) -> usize {
        self.class_of[t]
    }

    pub fn class_indices(&self) -> &[usize] {
        &self.class_of
    }

    pub fn prefix(&self, t: usize) -> &[usize] {
        &self.classes[self.class_of[t]]
    }

    /// One realisation: `y_t = u[prefix_t[selected rank]]`.
    pub fn simulate(&self, ts: &TrainingSet, rd: &RankDistribution, sampler: SeededSampler) -> Vec<f64> {
        let mut stream = sampler.stream();
        let yields = ts.yields();
        (0..self.len())
            .map(|t| {
                let rank = rd.select(stream.uniform(t, 0));
                yields[self.prefix(t)[rank]]
            })
            .collect()
    }
}

pub(crate) fn check_distribution(ts: &TrainingSet, rd: &RankDistribution) -> Result<()> {
    if rd.len() != ts.len() {
        return Err(GknnError::LengthMismatch {
            what: "rank distribution",
            expected: ts.len(),
            actual: rd.len(),
        });
    }
    Ok(())
}

/// Runs the GkNN resampler once over `series`.
pub fn gknn_simulate(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
    sampler: SeededSampler,
) -> Result<Vec<f64>> {
    Ok(RankedSeries::build(series, ts, m, rd)?.simulate(ts, rd, sampler))
}
