use std::cmp::Ordering;

use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::types::{PredictorVector, TrainingSet};

/// Training indices ordered by distance to a query, ties by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRanking {
    pub permutation: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborRanking {
    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn candidates(v: &PredictorVector, ts: &TrainingSet, m: &MetricSpec) -> Result<Vec<(f64, usize)>> {
    if v.dim() != ts.dim() {
        return Err(GknnError::DimensionMismatch {
            expected: ts.dim(),
            actual: v.dim(),
        });
    }
    m.validate(ts.dim())?;
    let label = v[0];
    let out: Vec<(f64, usize)> = ts
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| !m.month_filter || r.predictor[0] == label)
        .map(|(i, _)| (m.distance_to(v, ts, i), i))
        .collect();
    if out.is_empty() {
        return Err(GknnError::NoCandidates(label));
    }
    Ok(out)
}

fn into_ranking(pairs: Vec<(f64, usize)>) -> NeighborRanking {
    let (distances, permutation) = pairs.into_iter().unzip();
    NeighborRanking {
        permutation,
        distances,
    }
}

/// Full ranking of every candidate record.
pub fn rank_neighbors(v: &PredictorVector, ts: &TrainingSet, m: &MetricSpec) -> Result<NeighborRanking> {
    let mut pairs = candidates(v, ts, m)?;
    pairs.sort_unstable_by(by_distance_then_index);
    Ok(into_ranking(pairs))
}

/// The first `k` entries of [`rank_neighbors`], computed by partial
/// selection. Identical to truncating the full ranking because the
/// (distance, index) order is total.
pub fn rank_prefix(v: &PredictorVector, ts: &TrainingSet, m: &MetricSpec, k: usize) -> Result<NeighborRanking> {
    let mut pairs = candidates(v, ts, m)?;
    if k > pairs.len() {
        return Err(GknnError::SupportTooLarge {
            support: k,
            available: pairs.len(),
        });
    }
    if k == 0 {
        return Ok(into_ranking(Vec::new()));
    }
    if k < pairs.len() {
        pairs.select_nth_unstable_by(k - 1, by_distance_then_index);
        pairs.truncate(k);
    }
    pairs.sort_unstable_by(by_distance_then_index);
    Ok(into_ranking(pairs))
}
