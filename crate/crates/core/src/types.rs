use crate::error::{GknnError, Result};

/// An ordered list of finite predictor components.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorVector(Vec<f64>);

impl PredictorVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(GknnError::EmptyPredictor);
        }
        if let Some((component, &value)) = components.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(GknnError::NonFinite { component, value });
        }
        Ok(Self(components))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    /// Bit pattern of the components, used as a cache key for rankings.
    pub(crate) fn bits(&self) -> Vec<u64> {
        self.0.iter().map(|x| x.to_bits()).collect()
    }
}

impl std::ops::Index<usize> for PredictorVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub predictor: PredictorVector,
    pub yield_value: f64,
}

impl TrainingRecord {
    pub fn new(predictor: PredictorVector, yield_value: f64) -> Result<Self> {
        if !yield_value.is_finite() || yield_value < 0.0 {
            return Err(GknnError::InvalidYield(yield_value));
        }
        Ok(Self {
            predictor,
            yield_value,
        })
    }
}

/// Training pairs plus per-column statistics of the predictors.
///
/// Column standard deviations use the population (N) denominator. Only
/// their ratios enter the normalized Euclidean metric, so the choice of
/// denominator never changes a ranking.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    records: Vec<TrainingRecord>,
    yields: Vec<f64>,
    column_mean: Vec<f64>,
    column_sd: Vec<f64>,
}

impl TrainingSet {
    pub fn new(records: Vec<TrainingRecord>) -> Result<Self> {
        let first = records.first().ok_or(GknnError::EmptyTrainingSet)?;
        let dim = first.predictor.dim();
        for r in &records {
            if r.predictor.dim() != dim {
                return Err(GknnError::DimensionMismatch {
                    expected: dim,
                    actual: r.predictor.dim(),
                });
            }
        }
        let n = records.len() as f64;
        let mut column_mean = vec![0.0; dim];
        for r in &records {
            for (m, x) in column_mean.iter_mut().zip(r.predictor.components()) {
                *m += x;
            }
        }
        column_mean.iter_mut().for_each(|m| *m /= n);
        let mut column_sd = vec![0.0; dim];
        for r in &records {
            for ((s, x), m) in column_sd.iter_mut().zip(r.predictor.components()).zip(&column_mean) {
                *s += (x - m) * (x - m);
            }
        }
        column_sd.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        let yields = records.iter().map(|r| r.yield_value).collect();
        Ok(Self {
            records,
            yields,
            column_mean,
            column_sd,
        })
    }

    /// Builds a training set from `(predictor components, yield)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let records = pairs
            .into_iter()
            .map(|(p, y)| TrainingRecord::new(PredictorVector::new(p)?, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.column_sd.len()
    }

    pub fn records(&self) -> &[TrainingRecord] {
        &self.records
    }

    pub fn yields(&self) -> &[f64] {
        &self.yields
    }

    pub fn column_mean(&self) -> &[f64] {
        &self.column_mean
    }

    pub fn column_sd(&self) -> &[f64] {
        &self.column_sd
    }

    pub fn max_yield(&self) -> f64 {
        self.yields.iter().copied().fold(0.0, f64::max)
    }
}
