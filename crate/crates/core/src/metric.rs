//! Distances between predictor vectors.
//!
//! Component 0 is the month label whenever month filtering is enabled, and
//! the weighted Manhattan variant always skips it: the label restricts the
//! candidate set instead of entering the distance.

use crate::error::{GknnError, Result};
use crate::types::{PredictorVector, TrainingSet};

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// `sum_{p>=1} w_p |a_p - b_p|`, one weight per non-label component.
    WeightedManhattan { weights: Vec<f64> },
    /// `sqrt(sum_p ((a_p - b_p) / s_p)^2)` with `s_p` the training column
    /// standard deviation. Columns with `s_p == 0` contribute nothing.
    StdNormalizedEuclidean,
    /// `|a_c - b_c|` for one component `c`.
    ComponentAbsDiff(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub metric: Metric,
    /// Only records whose month label (component 0) equals the query's are
    /// candidates.
    pub month_filter: bool,
}

impl MetricSpec {
    pub fn new(metric: Metric) -> Self {
        Self {
            metric,
            month_filter: false,
        }
    }

    pub fn with_month_filter(mut self) -> Self {
        self.month_filter = true;
        self
    }

    pub fn weighted_manhattan(weights: Vec<f64>) -> Self {
        Self::new(Metric::WeightedManhattan { weights })
    }

    pub fn std_normalized_euclidean() -> Self {
        Self::new(Metric::StdNormalizedEuclidean)
    }

    pub fn component_abs_diff(component: usize) -> Self {
        Self::new(Metric::ComponentAbsDiff(component))
    }

    /// Checks the metric against a predictor dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match &self.metric {
            Metric::WeightedManhattan { weights } => {
                if dim < 2 {
                    return Err(GknnError::InvalidMetric(
                        "weighted Manhattan needs a label plus at least one component".into(),
                    ));
                }
                if weights.len() != dim - 1 {
                    return Err(GknnError::InvalidMetric(format!(
                        "{} weights for {} non-label components",
                        weights.len(),
                        dim - 1
                    )));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(GknnError::InvalidMetric("weights must be finite and >= 0".into()));
                }
            }
            Metric::StdNormalizedEuclidean => {}
            Metric::ComponentAbsDiff(c) => {
                if *c >= dim {
                    return Err(GknnError::InvalidMetric(format!(
                        "component {c} out of range for dimension {dim}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distance between two vectors of equal dimension. `column_sd` is only
    /// read by the normalized Euclidean variant.
    pub fn distance(&self, a: &[f64], b: &[f64], column_sd: &[f64]) -> f64 {
        match &self.metric {
            Metric::WeightedManhattan { weights } => a[1..]
                .iter()
                .zip(&b[1..])
                .zip(weights)
                .map(|((x, y), w)| w * (x - y).abs())
                .sum(),
            Metric::StdNormalizedEuclidean => a
                .iter()
                .zip(b)
                .zip(column_sd)
                .filter(|(_, s)| **s > 0.0)
                .map(|((x, y), s)| {
                    let d = (x - y) / s;
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            Metric::ComponentAbsDiff(c) => (a[*c] - b[*c]).abs(),
        }
    }

    /// Distance from a query to training record `i`.
    pub fn distance_to(&self, v: &PredictorVector, ts: &TrainingSet, i: usize) -> f64 {
        self.distance(
            v.components(),
            ts.records()[i].predictor.components(),
            ts.column_sd(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn metrics() -> Vec<MetricSpec> {
        vec![
            MetricSpec::weighted_manhattan(vec![1.0, 0.5, 2.0]),
            MetricSpec::std_normalized_euclidean(),
            MetricSpec::component_abs_diff(2),
        ]
    }

    #[test]
    fn validation() {
        assert!(MetricSpec::weighted_manhattan(vec![1.0]).validate(3).is_err());
        assert!(MetricSpec::weighted_manhattan(vec![1.0, -1.0]).validate(3).is_err());
        assert!(MetricSpec::weighted_manhattan(vec![1.0, 1.0]).validate(3).is_ok());
        assert!(MetricSpec::component_abs_diff(3).validate(3).is_err());
        assert!(MetricSpec::std_normalized_euclidean().validate(1).is_ok());
    }

    #[test]
    fn manhattan_skips_label() {
        let m = MetricSpec::weighted_manhattan(vec![1.0, 2.0]);
        assert_eq!(m.distance(&[1.0, 0.0, 0.0], &[12.0, 1.0, 1.0], &[]), 3.0);
    }

    #[test]
    fn zero_sd_column_dropped() {
        let m = MetricSpec::std_normalized_euclidean();
        let d = m.distance(&[0.0, 4.0], &[3.0, 9.0], &[1.5, 0.0]);
        assert_eq!(d, 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn metric_axioms(a in prop::collection::vec(-1e3f64..1e3, 4),
                         b in prop::collection::vec(-1e3f64..1e3, 4),
                         sd in prop::collection::vec(0f64..10.0, 4)) {
            for m in metrics() {
                let ab = m.distance(&a, &b, &sd);
                let ba = m.distance(&b, &a, &sd);
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(m.distance(&a, &a, &sd), 0.0);
            }
        }
    }
}
