//! Monte Carlo ensembles of the GkNN process and their comparison with the
//! closed-form moments.
//!
//! Runs are generated in fixed-size batches (in parallel or sequentially)
//! and always folded into the accumulators in run-index order, so both
//! execution modes give bit-identical aggregates.

use rayon::prelude::*;

use crate::analytics::MomentReport;
use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::rank::RankDistribution;
use crate::sampler::SeededSampler;
use crate::simulate::RankedSeries;
use crate::types::{PredictorVector, TrainingSet};

const BATCH: u64 = 4096;

/// Default z-score threshold for flagging a disagreement.
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Streaming mean and central moments up to fourth order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (denominator `n - 1`).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance,
    /// `sqrt((mu4 - s^4 (n-3)/(n-1)) / n)`.
    pub fn variance_se(&self) -> f64 {
        let n = self.n as f64;
        if self.n < 4 {
            return 0.0;
        }
        let mu4 = self.m4 / n;
        let s2 = self.variance();
        ((mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)).max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub runs: usize,
    pub per_t_mean: Vec<Estimate>,
    pub per_t_var: Vec<Estimate>,
    /// Statistics of `Y = (1/m) sum_t y_t`; present for whole years.
    pub annual_mean: Option<Estimate>,
    pub annual_var: Option<Estimate>,
    /// `(1/R) sum_r (y_t - z_t)^2` per step; present with actual yields.
    pub per_t_sq_error: Option<Vec<Estimate>>,
    /// `(1/R) sum_r sum_t (y_t - z_t)^2`; present with actual yields.
    pub total_sq_error: Option<Estimate>,
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleOptions<'a> {
    pub actual: Option<&'a [f64]>,
    pub execution: Execution,
}

struct Accumulators {
    per_t: Vec<Moments>,
    annual: Moments,
    per_t_err: Vec<Moments>,
    total_err: Moments,
}

impl Accumulators {
    fn new(t: usize, with_error: bool) -> Self {
        Self {
            per_t: vec![Moments::default(); t],
            annual: Moments::default(),
            per_t_err: if with_error { vec![Moments::default(); t] } else { Vec::new() },
            total_err: Moments::default(),
        }
    }

    fn push(&mut self, run: &[f64], years: Option<usize>, actual: Option<&[f64]>) {
        for (acc, y) in self.per_t.iter_mut().zip(run) {
            acc.push(*y);
        }
        if let Some(m) = years {
            self.annual.push(run.iter().sum::<f64>() / m as f64);
        }
        if let Some(z) = actual {
            let mut total = 0.0;
            for ((acc, y), z) in self.per_t_err.iter_mut().zip(run).zip(z) {
                let e = (y - z) * (y - z);
                acc.push(e);
                total += e;
            }
            self.total_err.push(total);
        }
    }
}

fn estimates(acc: &[Moments]) -> (Vec<Estimate>, Vec<Estimate>) {
    acc.iter()
        .map(|m| {
            (
                Estimate { value: m.mean(), se: m.mean_se() },
                Estimate { value: m.variance(), se: m.variance_se() },
            )
        })
        .unzip()
}

pub fn run_ensemble(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
    seed: u64,
    runs: usize,
) -> Result<EnsembleResult> {
    run_ensemble_with(series, ts, m, rd, seed, runs, &EnsembleOptions::default())
}

/// Runs `r = 1..=runs` with `run_index = r` and aggregates sample moments.
pub fn run_ensemble_with(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
    seed: u64,
    runs: usize,
    opts: &EnsembleOptions<'_>,
) -> Result<EnsembleResult> {
    let ranked = RankedSeries::build(series, ts, m, rd)?;
    ensemble_from_ranked(&ranked, ts, rd, seed, runs, opts)
}

pub fn ensemble_from_ranked(
    ranked: &RankedSeries,
    ts: &TrainingSet,
    rd: &RankDistribution,
    seed: u64,
    runs: usize,
    opts: &EnsembleOptions<'_>,
) -> Result<EnsembleResult> {
    if runs < 2 {
        return Err(GknnError::TooFewRuns { needed: 2, got: runs });
    }
    let t_len = ranked.len();
    if let Some(z) = opts.actual {
        if z.len() != t_len {
            return Err(GknnError::LengthMismatch {
                what: "actual yield series",
                expected: t_len,
                actual: z.len(),
            });
        }
    }
    let years = t_len.is_multiple_of(12).then_some(t_len / 12);
    let mut acc = Accumulators::new(t_len, opts.actual.is_some());
    let simulate = |r: u64| ranked.simulate(ts, rd, SeededSampler::new(seed, r));

    let runs = runs as u64;
    let mut start = 1u64;
    while start <= runs {
        let end = (start + BATCH * rayon::current_num_threads().max(1) as u64).min(runs + 1);
        let batch: Vec<Vec<f64>> = match opts.execution {
            Execution::Parallel => (start..end).into_par_iter().map(simulate).collect(),
            Execution::Sequential => (start..end).map(simulate).collect(),
        };
        for run in &batch {
            acc.push(run, years, opts.actual);
        }
        start = end;
    }

    let (per_t_mean, per_t_var) = estimates(&acc.per_t);
    let (annual_mean, annual_var) = match years {
        Some(_) => (
            Some(Estimate { value: acc.annual.mean(), se: acc.annual.mean_se() }),
            Some(Estimate { value: acc.annual.variance(), se: acc.annual.variance_se() }),
        ),
        None => (None, None),
    };
    let (per_t_sq_error, total_sq_error) = match opts.actual {
        Some(_) => (
            Some(estimates(&acc.per_t_err).0),
            Some(Estimate { value: acc.total_err.mean(), se: acc.total_err.mean_se() }),
        ),
        None => (None, None),
    };
    Ok(EnsembleResult {
        runs: runs as usize,
        per_t_mean,
        per_t_var,
        annual_mean,
        annual_var,
        per_t_sq_error,
        total_sq_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    MonthMean,
    MonthVariance,
    MonthError,
    AnnualMean,
    AnnualVariance,
    TotalError,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::MonthMean => "month_mean",
            Quantity::MonthVariance => "month_variance",
            Quantity::MonthError => "month_error",
            Quantity::AnnualMean => "annual_mean",
            Quantity::AnnualVariance => "annual_variance",
            Quantity::TotalError => "total_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub quantity: Quantity,
    /// Time step for per-month quantities.
    pub t: Option<usize>,
    pub analytic: f64,
    pub empirical: f64,
    pub se: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub threshold: f64,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn flagged(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.flagged)
    }

    pub fn all_pass(&self) -> bool {
        self.flagged().next().is_none()
    }

    pub fn rows_of(&self, q: Quantity) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(move |r| r.quantity == q)
    }
}

/// `z = (empirical - analytic) / se`. A zero standard error gives `z = 0`
/// on exact agreement and an infinite score otherwise.
pub fn z_score(analytic: f64, empirical: f64, se: f64) -> f64 {
    let diff = empirical - analytic;
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

pub fn compare_to_analytic(e: &EnsembleResult, a: &MomentReport, threshold: f64) -> Result<Comparison> {
    if e.per_t_mean.len() != a.months.len() {
        return Err(GknnError::Provenance(format!(
            "ensemble has {} steps, analytic report has {}",
            e.per_t_mean.len(),
            a.months.len()
        )));
    }
    let mut rows = Vec::new();
    let mut row = |quantity, t, analytic: f64, est: Estimate| {
        let z = z_score(analytic, est.value, est.se);
        rows.push(ComparisonRow {
            quantity,
            t,
            analytic,
            empirical: est.value,
            se: est.se,
            z,
            flagged: z.abs() > threshold,
        });
    };
    for (t, mm) in a.months.iter().enumerate() {
        row(Quantity::MonthMean, Some(t), mm.expected_yield, e.per_t_mean[t]);
        row(Quantity::MonthVariance, Some(t), mm.variance, e.per_t_var[t]);
        if let (Some(errs), Some(expected)) = (&e.per_t_sq_error, mm.expected_error) {
            row(Quantity::MonthError, Some(t), expected, errs[t]);
        }
    }
    if let (Some(annual), Some(mean), Some(var)) = (&a.annual, e.annual_mean, e.annual_var) {
        row(Quantity::AnnualMean, None, annual.expected_annual_yield, mean);
        row(Quantity::AnnualVariance, None, annual.variance, var);
    }
    if let (Some(total), Some(est)) = (a.total_expected_error, e.total_sq_error) {
        row(Quantity::TotalError, None, total, est);
    }
    Ok(Comparison { threshold, rows })
}
