//! The monthly upscaling method suite: NN, kNN, bootstrap and modified
//! bootstrap.
//!
//! Training rows are `(month_label?, climatic..., yield)` and query rows
//! the same without yield. Which climatic columns are present is fixed by
//! the [`Schema`].

use std::ops::Range;

use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::rank::RankDistribution;
use crate::sampler::SeededSampler;
use crate::simulate::RankedSeries;
use crate::types::{PredictorVector, TrainingSet};

/// Samples per bootstrap band, and the modified-bootstrap neighbourhood.
pub const BAND_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schema {
    /// month label, average temperature, rain days, rainfall depth
    Coombes,
    /// month label, rainfall depth
    Knn,
    /// rainfall depth
    Bootstrap,
}

impl Schema {
    pub fn name(&self) -> &'static str {
        match self {
            Schema::Coombes => "coombes",
            Schema::Knn => "knn",
            Schema::Bootstrap => "bootstrap",
        }
    }

    pub fn has_month_label(&self) -> bool {
        !matches!(self, Schema::Bootstrap)
    }

    pub fn climatic_columns(&self) -> &'static [&'static str] {
        match self {
            Schema::Coombes => &["avg_temp_c", "rain_days", "rain_depth_mm"],
            Schema::Knn | Schema::Bootstrap => &["rain_depth_mm"],
        }
    }

    /// Position of rainfall depth among the climatic columns.
    pub fn rainfall_index(&self) -> usize {
        match self {
            Schema::Coombes => 2,
            Schema::Knn | Schema::Bootstrap => 0,
        }
    }
}

impl std::str::FromStr for Schema {
    type Err = GknnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coombes" => Ok(Schema::Coombes),
            "knn" => Ok(Schema::Knn),
            "bootstrap" => Ok(Schema::Bootstrap),
            other => Err(GknnError::SchemaMismatch(format!("unknown schema {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyQueryRecord {
    pub month_label: Option<u8>,
    pub climatic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyTrainingRecord {
    pub month_label: Option<u8>,
    pub climatic: Vec<f64>,
    pub yield_value: f64,
}

impl MonthlyTrainingRecord {
    pub fn query(&self) -> MonthlyQueryRecord {
        MonthlyQueryRecord {
            month_label: self.month_label,
            climatic: self.climatic.clone(),
        }
    }
}

fn check_row(schema: Schema, index: usize, label: Option<u8>, climatic: &[f64]) -> Result<()> {
    match (schema.has_month_label(), label) {
        (true, None) => return Err(GknnError::MissingMonthLabel { index }),
        (false, Some(_)) => {
            return Err(GknnError::SchemaMismatch(format!(
                "record {index} has a month label but schema {} has none",
                schema.name()
            )))
        }
        (_, Some(l)) if !(1..=12).contains(&l) => return Err(GknnError::InvalidMonth(l as i64)),
        _ => {}
    }
    let expected = schema.climatic_columns().len();
    if climatic.len() != expected {
        return Err(GknnError::SchemaMismatch(format!(
            "record {index} has {} climatic values, schema {} expects {expected}",
            climatic.len(),
            schema.name()
        )));
    }
    if let Some((component, &value)) = climatic.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(GknnError::NonFinite { component, value });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTable {
    pub schema: Schema,
    pub records: Vec<MonthlyTrainingRecord>,
}

impl TrainingTable {
    pub fn new(schema: Schema, records: Vec<MonthlyTrainingRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(GknnError::EmptyTrainingSet);
        }
        for (i, r) in records.iter().enumerate() {
            check_row(schema, i, r.month_label, &r.climatic)?;
            if !r.yield_value.is_finite() || r.yield_value < 0.0 {
                return Err(GknnError::InvalidYield(r.yield_value));
            }
        }
        Ok(Self { schema, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn yields(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.yield_value).collect()
    }

    pub fn rainfall(&self) -> Vec<f64> {
        let i = self.schema.rainfall_index();
        self.records.iter().map(|r| r.climatic[i]).collect()
    }

    /// The query part of every row.
    pub fn queries(&self) -> QueryTable {
        QueryTable {
            schema: self.schema,
            records: self.records.iter().map(MonthlyTrainingRecord::query).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryTable {
    pub schema: Schema,
    pub records: Vec<MonthlyQueryRecord>,
}

impl QueryTable {
    pub fn new(schema: Schema, records: Vec<MonthlyQueryRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(GknnError::EmptySeries);
        }
        for (i, r) in records.iter().enumerate() {
            check_row(schema, i, r.month_label, &r.climatic)?;
        }
        Ok(Self { schema, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rainfall(&self) -> Vec<f64> {
        let i = self.schema.rainfall_index();
        self.records.iter().map(|r| r.climatic[i]).collect()
    }
}

fn check_schemas(queries: &QueryTable, training: &TrainingTable) -> Result<()> {
    if queries.schema != training.schema {
        return Err(GknnError::SchemaMismatch(format!(
            "training schema {} but query schema {}",
            training.schema.name(),
            queries.schema.name()
        )));
    }
    Ok(())
}

fn labelled(label: Option<u8>, climatic: &[f64], index: usize) -> Result<Vec<f64>> {
    let label = label.ok_or(GknnError::MissingMonthLabel { index })?;
    let mut v = Vec::with_capacity(climatic.len() + 1);
    v.push(label as f64);
    v.extend_from_slice(climatic);
    Ok(v)
}

/// The GkNN problem a schema induces: predictor vectors, training set and
/// metric.
///
/// * labelled schemas with several climatic columns: `(month_label,
///   climatic...)` under weighted Manhattan (unit weights) within the month;
/// * kNN schema: `(month_label, rainfall)` under the normalized Euclidean
///   metric;
/// * bootstrap schema: `(rainfall)` under absolute difference.
pub fn gknn_problem(training: &TrainingTable, queries: &QueryTable) -> Result<(Vec<PredictorVector>, TrainingSet, MetricSpec)> {
    check_schemas(queries, training)?;
    match training.schema {
        Schema::Coombes => {
            let weights = vec![1.0; training.schema.climatic_columns().len()];
            let (series, ts) = labelled_problem(training, queries)?;
            Ok((series, ts, MetricSpec::weighted_manhattan(weights).with_month_filter()))
        }
        Schema::Knn => {
            let (series, ts) = labelled_problem(training, queries)?;
            Ok((series, ts, MetricSpec::std_normalized_euclidean()))
        }
        Schema::Bootstrap => {
            let (series, ts) = rainfall_problem(training, queries)?;
            Ok((series, ts, MetricSpec::component_abs_diff(0)))
        }
    }
}

fn labelled_problem(training: &TrainingTable, queries: &QueryTable) -> Result<(Vec<PredictorVector>, TrainingSet)> {
    let ts = TrainingSet::from_pairs(
        training
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| Ok((labelled(r.month_label, &r.climatic, i)?, r.yield_value)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let series = queries
        .records
        .iter()
        .enumerate()
        .map(|(i, q)| PredictorVector::new(labelled(q.month_label, &q.climatic, i)?))
        .collect::<Result<Vec<_>>>()?;
    Ok((series, ts))
}

fn rainfall_problem(training: &TrainingTable, queries: &QueryTable) -> Result<(Vec<PredictorVector>, TrainingSet)> {
    let ts = TrainingSet::from_pairs(training.rainfall().into_iter().zip(training.yields()).map(|(r, y)| (vec![r], y)))?;
    let series = queries
        .rainfall()
        .into_iter()
        .map(PredictorVector::scalar)
        .collect::<Result<Vec<_>>>()?;
    Ok((series, ts))
}

/// Deterministic nearest neighbour within the query's month under weighted
/// Manhattan distance on the climatic columns.
pub fn upscale_nn(queries: &QueryTable, training: &TrainingTable, weights: &[f64]) -> Result<Vec<f64>> {
    Ok(Upscaler::nn(queries, training, weights)?.run(SeededSampler::new(0, 0)))
}

/// Harmonic-weighted kNN over `(month_label, climatic...)` with the
/// column-normalized Euclidean metric.
pub fn upscale_knn(queries: &QueryTable, training: &TrainingTable, k: usize, sampler: SeededSampler) -> Result<Vec<f64>> {
    Ok(Upscaler::knn(queries, training, k)?.run(sampler))
}

pub fn upscale_bootstrap(queries: &QueryTable, training: &TrainingTable, sampler: SeededSampler) -> Result<Vec<f64>> {
    Ok(Upscaler::bootstrap(queries, training)?.run(sampler))
}

pub fn upscale_modified_bootstrap(queries: &QueryTable, training: &TrainingTable, sampler: SeededSampler) -> Result<Vec<f64>> {
    Ok(Upscaler::modified_bootstrap(queries, training)?.run(sampler))
}

/// Rainfall-sorted training samples cut into consecutive bands.
///
/// Bands hold [`BAND_SIZE`] samples each except the last, which takes the
/// remainder. Band `i > 0` starts at the midpoint between the largest
/// rainfall of band `i - 1` and the smallest of band `i`; the first and last
/// bands extend to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct BandIndex {
    order: Vec<usize>,
    bands: Vec<Range<usize>>,
    lower_bounds: Vec<f64>,
}

impl BandIndex {
    pub fn build(rainfall: &[f64]) -> Result<Self> {
        Self::with_band_size(rainfall, BAND_SIZE)
    }

    pub fn with_band_size(rainfall: &[f64], size: usize) -> Result<Self> {
        if rainfall.len() < size {
            return Err(GknnError::TooFewRecords {
                needed: size,
                got: rainfall.len(),
            });
        }
        let mut order: Vec<usize> = (0..rainfall.len()).collect();
        order.sort_by(|&a, &b| rainfall[a].total_cmp(&rainfall[b]).then(a.cmp(&b)));
        let bands: Vec<Range<usize>> = (0..rainfall.len())
            .step_by(size)
            .map(|s| s..(s + size).min(rainfall.len()))
            .collect();
        let lower_bounds = bands
            .windows(2)
            .map(|w| 0.5 * (rainfall[order[w[0].end - 1]] + rainfall[order[w[1].start]]))
            .collect();
        Ok(Self {
            order,
            bands,
            lower_bounds,
        })
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// Band whose half-open range contains `x`, clamped to the end bands.
    pub fn band_of(&self, x: f64) -> usize {
        self.lower_bounds.partition_point(|b| *b <= x)
    }

    /// Training indices in the band, in rainfall order.
    pub fn members(&self, band: usize) -> &[usize] {
        &self.order[self.bands[band].clone()]
    }

    /// `[low, high)` rainfall range of a band.
    pub fn range(&self, band: usize) -> (f64, f64) {
        let low = if band == 0 { f64::NEG_INFINITY } else { self.lower_bounds[band - 1] };
        let high = self.lower_bounds.get(band).copied().unwrap_or(f64::INFINITY);
        (low, high)
    }

    /// Training indices sorted by (rainfall, index).
    pub fn sorted(&self) -> &[usize] {
        &self.order
    }
}

/// Indices of the [`BAND_SIZE`] training records nearest in rainfall to
/// `rainfall`, nearest first (ties to the lower index).
pub fn modified_bootstrap_set(rainfall: f64, training: &TrainingTable) -> Result<Vec<usize>> {
    if training.len() < BAND_SIZE {
        return Err(GknnError::TooFewRecords {
            needed: BAND_SIZE,
            got: training.len(),
        });
    }
    let ts = TrainingSet::from_pairs(training.rainfall().into_iter().zip(training.yields()).map(|(r, y)| (vec![r], y)))?;
    let r = crate::neighbors::rank_prefix(&PredictorVector::scalar(rainfall)?, &ts, &MetricSpec::component_abs_diff(0), BAND_SIZE)?;
    Ok(r.permutation)
}

/// A prepared upscaling problem; `run` produces one realisation.
#[derive(Debug, Clone)]
pub enum Upscaler {
    Deterministic(Vec<f64>),
    Ranked {
        ranked: RankedSeries,
        training: TrainingSet,
        distribution: RankDistribution,
    },
    Banded {
        index: BandIndex,
        band_per_step: Vec<usize>,
        yields: Vec<f64>,
    },
}

impl Upscaler {
    pub fn nn(queries: &QueryTable, training: &TrainingTable, weights: &[f64]) -> Result<Self> {
        check_schemas(queries, training)?;
        let (series, ts) = labelled_problem(training, queries)?;
        let metric = MetricSpec::weighted_manhattan(weights.to_vec()).with_month_filter();
        let rd = RankDistribution::top_k_uniform(1, ts.len())?;
        let ranked = RankedSeries::build(&series, &ts, &metric, &rd)?;
        Ok(Upscaler::Deterministic(
            (0..ranked.len()).map(|t| ts.yields()[ranked.prefix(t)[0]]).collect(),
        ))
    }

    pub fn knn(queries: &QueryTable, training: &TrainingTable, k: usize) -> Result<Self> {
        check_schemas(queries, training)?;
        let (series, ts) = labelled_problem(training, queries)?;
        let rd = RankDistribution::harmonic(k, ts.len())?;
        let metric = MetricSpec::std_normalized_euclidean();
        let ranked = RankedSeries::build(&series, &ts, &metric, &rd)?;
        Ok(Upscaler::Ranked {
            ranked,
            training: ts,
            distribution: rd,
        })
    }

    pub fn bootstrap(queries: &QueryTable, training: &TrainingTable) -> Result<Self> {
        check_schemas(queries, training)?;
        let index = BandIndex::build(&training.rainfall())?;
        let band_per_step = queries.rainfall().iter().map(|&x| index.band_of(x)).collect();
        Ok(Upscaler::Banded {
            index,
            band_per_step,
            yields: training.yields(),
        })
    }

    pub fn modified_bootstrap(queries: &QueryTable, training: &TrainingTable) -> Result<Self> {
        check_schemas(queries, training)?;
        if training.len() < BAND_SIZE {
            return Err(GknnError::TooFewRecords {
                needed: BAND_SIZE,
                got: training.len(),
            });
        }
        let (series, ts) = rainfall_problem(training, queries)?;
        let rd = RankDistribution::top_k_uniform(BAND_SIZE, ts.len())?;
        let ranked = RankedSeries::build(&series, &ts, &MetricSpec::component_abs_diff(0), &rd)?;
        Ok(Upscaler::Ranked {
            ranked,
            training: ts,
            distribution: rd,
        })
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Upscaler::Deterministic(_))
    }

    pub fn run(&self, sampler: SeededSampler) -> Vec<f64> {
        match self {
            Upscaler::Deterministic(y) => y.clone(),
            Upscaler::Ranked {
                ranked,
                training,
                distribution,
            } => ranked.simulate(training, distribution, sampler),
            Upscaler::Banded {
                index,
                band_per_step,
                yields,
            } => {
                let mut stream = sampler.stream();
                band_per_step
                    .iter()
                    .enumerate()
                    .map(|(t, &band)| {
                        let members = index.members(band);
                        let pick = ((stream.uniform(t, 0) * members.len() as f64) as usize).min(members.len() - 1);
                        yields[members[pick]]
                    })
                    .collect()
            }
        }
    }
}
