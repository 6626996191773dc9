//! Closed-form moments of the GkNN process.
//!
//! For a step whose ranking is `pi`, the output is `u[pi(i)]` with
//! probability `p_i`, so
//!
//! ```text
//! <y_t>    = sum_i p_i u[pi(i)]
//! Var(y_t) = sum_i p_i (u[pi(i)] - <y_t>)^2
//! E_t      = Var(y_t) + (<y_t> - z_t)^2
//! ```
//!
//! With independent selections across steps and `T = 12 m`, the annual
//! average `Y = (1/m) sum_t y_t` has `<Y> = (1/m) sum_t <y_t>` and
//! `Var(Y) = (1/m^2) sum_t Var(y_t) <= C / m` where `C` is twelve times the
//! summed per-class variance over the realised ranking classes.

use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::neighbors::{rank_prefix, NeighborRanking};
use crate::rank::RankDistribution;
use crate::simulate::{check_distribution, RankedSeries};
use crate::types::{PredictorVector, TrainingSet};

#[derive(Debug, Clone, PartialEq)]
pub struct MonthMoments {
    pub t: usize,
    pub expected_yield: f64,
    pub variance: f64,
    /// `(<y_t> - z_t)^2`; absent without an actual yield.
    pub bias_sq: Option<f64>,
    /// `Var(y_t) + bias_sq`; absent without an actual yield.
    pub expected_error: Option<f64>,
}

impl MonthMoments {
    /// Base part of the error, identical to the base error map at `v_t`.
    pub fn base_error(&self) -> f64 {
        self.variance
    }

    /// Prediction part of the error (squared bias).
    pub fn prediction_error(&self) -> Option<f64> {
        self.bias_sq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnualMoments {
    pub years: usize,
    pub expected_annual_yield: f64,
    pub variance: f64,
    pub variance_constant: f64,
    pub bound_ok: bool,
    pub total_yield_variance: f64,
}

impl AnnualMoments {
    pub fn variance_bound(&self) -> f64 {
        self.variance_constant / self.years as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub months: Vec<MonthMoments>,
    /// Present when the series covers whole years.
    pub annual: Option<AnnualMoments>,
    /// `sum_t E_t`; present with actual yields.
    pub total_expected_error: Option<f64>,
}

/// Mean and variance of the yields at `prefix` under the rank weights.
pub(crate) fn prefix_moments(prefix: &[usize], yields: &[f64], rd: &RankDistribution) -> (f64, f64) {
    let p = rd.support();
    let mean: f64 = p.iter().zip(prefix).map(|(pi, &j)| pi * yields[j]).sum();
    let var: f64 = p
        .iter()
        .zip(prefix)
        .map(|(pi, &j)| {
            let d = yields[j] - mean;
            pi * d * d
        })
        .sum();
    (mean, var)
}

fn checked_prefix<'a>(ranking: &'a NeighborRanking, ts: &TrainingSet, rd: &RankDistribution) -> Result<&'a [usize]> {
    check_distribution(ts, rd)?;
    let k = rd.support_size();
    if ranking.len() < k {
        return Err(GknnError::SupportTooLarge {
            support: k,
            available: ranking.len(),
        });
    }
    let prefix = &ranking.permutation[..k];
    if let Some(&bad) = prefix.iter().find(|&&j| j >= ts.len()) {
        return Err(GknnError::Provenance(format!(
            "ranking refers to record {bad} but the training set has {}",
            ts.len()
        )));
    }
    Ok(prefix)
}

pub fn expected_month_yield(ranking: &NeighborRanking, ts: &TrainingSet, rd: &RankDistribution) -> Result<f64> {
    let prefix = checked_prefix(ranking, ts, rd)?;
    Ok(prefix_moments(prefix, ts.yields(), rd).0)
}

pub fn month_variance(ranking: &NeighborRanking, ts: &TrainingSet, rd: &RankDistribution) -> Result<f64> {
    let prefix = checked_prefix(ranking, ts, rd)?;
    Ok(prefix_moments(prefix, ts.yields(), rd).1)
}

fn month_moments(t: usize, mean: f64, variance: f64, actual: Option<f64>) -> MonthMoments {
    let bias_sq = actual.map(|z| (mean - z) * (mean - z));
    MonthMoments {
        t,
        expected_yield: mean,
        variance,
        bias_sq,
        expected_error: bias_sq.map(|b| variance + b),
    }
}

fn check_actual(z: f64) -> Result<()> {
    if !z.is_finite() || z < 0.0 {
        return Err(GknnError::InvalidYield(z));
    }
    Ok(())
}

/// Expected squared error of step `t` against the actual yield `z_t`.
pub fn expected_month_error(
    ranking: &NeighborRanking,
    ts: &TrainingSet,
    rd: &RankDistribution,
    t: usize,
    actual: f64,
) -> Result<MonthMoments> {
    check_actual(actual)?;
    let prefix = checked_prefix(ranking, ts, rd)?;
    let (mean, var) = prefix_moments(prefix, ts.yields(), rd);
    Ok(month_moments(t, mean, var, Some(actual)))
}

/// `E(v) = Var` of the GkNN output at query `v`.
pub fn base_error_map(v: &PredictorVector, ts: &TrainingSet, m: &MetricSpec, rd: &RankDistribution) -> Result<f64> {
    check_distribution(ts, rd)?;
    let ranking = rank_prefix(v, ts, m, rd.support_size())?;
    Ok(prefix_moments(&ranking.permutation, ts.yields(), rd).1)
}

/// The coarse bound `N (1 + N)^2 u_max^2` on the base error map.
pub fn base_error_coarse_bound(n: usize, u_max: f64) -> f64 {
    let n = n as f64;
    n * (1.0 + n) * (1.0 + n) * u_max * u_max
}

/// Popoviciu's bound `u_max^2 / 4` on any variance over `[0, u_max]`.
pub fn base_error_variance_bound(u_max: f64) -> f64 {
    u_max * u_max / 4.0
}

pub fn moment_report(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
    actual: Option<&[f64]>,
) -> Result<MomentReport> {
    let ranked = RankedSeries::build(series, ts, m, rd)?;
    report_from_ranked(&ranked, ts, rd, actual)
}

pub fn report_from_ranked(
    ranked: &RankedSeries,
    ts: &TrainingSet,
    rd: &RankDistribution,
    actual: Option<&[f64]>,
) -> Result<MomentReport> {
    if let Some(z) = actual {
        if z.len() != ranked.len() {
            return Err(GknnError::LengthMismatch {
                what: "actual yield series",
                expected: ranked.len(),
                actual: z.len(),
            });
        }
        z.iter().try_for_each(|&x| check_actual(x))?;
    }
    let class_moments: Vec<(f64, f64)> = ranked
        .classes()
        .iter()
        .map(|p| prefix_moments(p, ts.yields(), rd))
        .collect();
    let months: Vec<MonthMoments> = (0..ranked.len())
        .map(|t| {
            let (mean, var) = class_moments[ranked.class_of(t)];
            month_moments(t, mean, var, actual.map(|z| z[t]))
        })
        .collect();
    let total_expected_error = actual.map(|_| months.iter().filter_map(|mm| mm.expected_error).sum());
    let annual = if ranked.len().is_multiple_of(12) {
        Some(annual_from(&months, &class_moments))
    } else {
        None
    };
    Ok(MomentReport {
        months,
        annual,
        total_expected_error,
    })
}

fn annual_from(months: &[MonthMoments], class_moments: &[(f64, f64)]) -> AnnualMoments {
    let years = months.len() / 12;
    let m = years as f64;
    let expected_annual_yield = months.iter().map(|mm| mm.expected_yield).sum::<f64>() / m;
    let variance = months.iter().map(|mm| mm.variance).sum::<f64>() / (m * m);
    let variance_constant = 12.0 * class_moments.iter().map(|(_, v)| v).sum::<f64>();
    AnnualMoments {
        years,
        expected_annual_yield,
        variance,
        variance_constant,
        bound_ok: variance <= variance_constant / m,
        total_yield_variance: m * m * variance,
    }
}

/// Sum of the per-step expected errors against actual yields `z`.
pub fn total_expected_error(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
    actual: &[f64],
) -> Result<f64> {
    if actual.len() != series.len() {
        return Err(GknnError::LengthMismatch {
            what: "actual yield series",
            expected: series.len(),
            actual: actual.len(),
        });
    }
    let report = moment_report(series, ts, m, rd, Some(actual))?;
    Ok(report.total_expected_error.unwrap_or(0.0))
}

pub fn annual_moments(
    series: &[PredictorVector],
    ts: &TrainingSet,
    m: &MetricSpec,
    rd: &RankDistribution,
) -> Result<AnnualMoments> {
    if series.is_empty() || !series.len().is_multiple_of(12) {
        return Err(GknnError::NotWholeYears(series.len()));
    }
    let report = moment_report(series, ts, m, rd, None)?;
    Ok(report.annual.expect("whole years checked above"))
}
