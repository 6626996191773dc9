//! Stochastic-dependence kernels and the `K_N -> K` convergence experiment.
//!
//! The GkNN process at query `v` emits yield `u[pi_v(i)]` with probability
//! `p_i`, i.e. it has the discrete kernel `K(v, .) = sum_i p_i delta_{u[pi_v(i)]}`.
//! Training on `N` draws from a process with continuous kernel `psi` and
//! using `k_N = floor(sqrt(N))` uniform neighbours, `K_N(v, (a, b))` should
//! approach `psi(v, b) - psi(v, a)`.

use rayon::prelude::*;

use crate::error::{GknnError, Result};
use crate::metric::MetricSpec;
use crate::neighbors::rank_prefix;
use crate::rank::RankDistribution;
use crate::sampler::SeededSampler;
use crate::simulate::check_distribution;
use crate::types::{PredictorVector, TrainingSet};

#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    pub training: TrainingSet,
    pub distribution: RankDistribution,
    pub metric: MetricSpec,
}

impl DiscreteKernel {
    pub fn new(training: TrainingSet, distribution: RankDistribution, metric: MetricSpec) -> Result<Self> {
        check_distribution(&training, &distribution)?;
        metric.validate(training.dim())?;
        Ok(Self {
            training,
            distribution,
            metric,
        })
    }

    /// `K(v, (a, b))`, open interval.
    pub fn eval(&self, v: &PredictorVector, a: f64, b: f64) -> Result<f64> {
        eval_discrete_kernel(self, v, a, b)
    }
}

pub fn eval_discrete_kernel(k: &DiscreteKernel, v: &PredictorVector, a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(GknnError::InvalidInterval { a, b });
    }
    let ranking = rank_prefix(v, &k.training, &k.metric, k.distribution.support_size())?;
    let yields = k.training.yields();
    Ok(k.distribution
        .support()
        .iter()
        .zip(&ranking.permutation)
        .filter(|(_, &j)| a < yields[j] && yields[j] < b)
        .map(|(p, _)| p)
        .sum())
}

/// Exponential yields with rate `1 / (1 + v)` for `v` in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SyntheticProcess;

impl SyntheticProcess {
    pub fn rate(&self, v: f64) -> f64 {
        1.0 / (1.0 + v)
    }

    /// Density `phi(v, xi)`.
    pub fn density(&self, v: f64, xi: f64) -> f64 {
        if xi < 0.0 {
            return 0.0;
        }
        let l = self.rate(v);
        l * (-l * xi).exp()
    }

    /// Cumulative `psi(v, xi) = 1 - exp(-xi / (1 + v))`.
    pub fn psi(&self, v: f64, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        -(-xi * self.rate(v)).exp_m1()
    }

    /// Inverse of `psi(v, .)` at `rho` in `[0, 1)`.
    pub fn psi_inverse(&self, v: f64, rho: f64) -> f64 {
        -(1.0 + v) * (-rho).ln_1p()
    }

    /// Interval mass `psi(v, b) - psi(v, a)`.
    pub fn mass(&self, v: f64, a: f64, b: f64) -> f64 {
        self.psi(v, b) - self.psi(v, a)
    }
}

/// Draws `T` pairs `(v_t, z_t)`: `v_t` uniform on `[0, 1)` and
/// `z_t = psi^{-1}(v_t, rho_t)` with `rho_t` uniform.
pub fn generate_synthetic_series(sp: &SyntheticProcess, t_len: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut stream = SeededSampler::new(seed, 0).stream();
    (0..t_len)
        .map(|t| {
            let v = stream.uniform(t, 0);
            let rho = stream.uniform(t, 1);
            (v, sp.psi_inverse(v, rho))
        })
        .unzip()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub v_points: Vec<f64>,
    pub endpoints: Vec<f64>,
}

impl Default for EvalGrid {
    fn default() -> Self {
        Self {
            v_points: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            endpoints: vec![0.0, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

impl EvalGrid {
    /// All intervals `(a, b)` with `a < b` drawn from the endpoints.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, &a) in self.endpoints.iter().enumerate() {
            for &b in &self.endpoints[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.v_points.is_empty() || self.endpoints.len() < 2 {
            return Err(GknnError::InvalidGrid("need at least one v point and two endpoints".into()));
        }
        if self.v_points.iter().chain(&self.endpoints).any(|x| !x.is_finite()) {
            return Err(GknnError::InvalidGrid("grid values must be finite".into()));
        }
        if self.endpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GknnError::InvalidGrid("endpoints must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub k_n: usize,
    pub seed: u64,
    pub sup_error: f64,
    pub mean_error: f64,
}

pub fn k_for(n: usize) -> usize {
    n.isqrt()
}

/// Kernel error of a single `(N, seed)` cell over the grid.
pub fn kernel_error(
    sp: &SyntheticProcess,
    predictors: &[f64],
    yields: &[f64],
    n: usize,
    grid: &EvalGrid,
) -> Result<(f64, f64)> {
    let k = k_for(n);
    let ts = TrainingSet::from_pairs(predictors[..n].iter().zip(&yields[..n]).map(|(&v, &z)| (vec![v], z)))?;
    let kernel = DiscreteKernel::new(ts, RankDistribution::top_k_uniform(k, n)?, MetricSpec::component_abs_diff(0))?;
    let intervals = grid.intervals();
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    for &v in &grid.v_points {
        let q = PredictorVector::scalar(v)?;
        for &(a, b) in &intervals {
            let err = (kernel.eval(&q, a, b)? - sp.mass(v, a, b)).abs();
            sup = sup.max(err);
            sum += err;
        }
    }
    Ok((sup, sum / (grid.v_points.len() * intervals.len()) as f64))
}

/// Rows ordered by seed, then by `N`.
pub fn convergence_experiment(
    sp: &SyntheticProcess,
    n_values: &[usize],
    seeds: &[u64],
    grid: &EvalGrid,
) -> Result<Vec<ConvergenceRow>> {
    grid.validate()?;
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GknnError::InvalidGrid("N values must be non-empty and strictly increasing".into()));
    }
    if k_for(n_values[0]) < 1 {
        return Err(GknnError::KOutOfRange { k: 0, n: n_values[0] });
    }
    let n_max = *n_values.last().expect("non-empty");
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let (v, z) = generate_synthetic_series(sp, n_max, seed);
            n_values
                .par_iter()
                .map(|&n| {
                    let (sup_error, mean_error) = kernel_error(sp, &v, &z, n, grid)?;
                    Ok(ConvergenceRow {
                        n,
                        k_n: k_for(n),
                        seed,
                        sup_error,
                        mean_error,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kernel_10_20_30() -> DiscreteKernel {
        let ts = TrainingSet::from_pairs(vec![(vec![0.0], 10.0), (vec![1.0], 20.0), (vec![2.0], 30.0)]).unwrap();
        DiscreteKernel::new(ts, RankDistribution::harmonic(3, 3).unwrap(), MetricSpec::component_abs_diff(0)).unwrap()
    }

    #[test]
    fn interval_mass() {
        let k = kernel_10_20_30();
        let v = PredictorVector::scalar(0.0).unwrap();
        assert_relative_eq!(k.eval(&v, 15.0, 35.0).unwrap(), 5.0 / 11.0, max_relative = 1e-15);
        assert_relative_eq!(k.eval(&v, 0.0, 100.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(k.eval(&v, 40.0, 50.0).unwrap(), 0.0);
        // open interval: endpoints excluded
        assert_eq!(k.eval(&v, 10.0, 20.0).unwrap(), 0.0);
        assert!(matches!(k.eval(&v, 2.0, 2.0), Err(GknnError::InvalidInterval { .. })));
    }

    #[test]
    fn psi_inverse_roundtrip() {
        let sp = SyntheticProcess;
        assert_eq!(sp.psi_inverse(0.4, 0.0), 0.0);
        assert_eq!(sp.psi(0.4, 0.0), 0.0);
        for i in 0..100 {
            let rho = i as f64 / 100.0;
            let v = (i % 7) as f64 / 7.0;
            assert!((sp.psi(v, sp.psi_inverse(v, rho)) - rho).abs() < 1e-12);
        }
        assert!(sp.psi(0.5, 1e3) > 1.0 - 1e-12);
    }

    #[test]
    fn psi_monotone() {
        let sp = SyntheticProcess;
        let mut prev = 0.0;
        for i in 0..1000 {
            let x = sp.psi(0.3, i as f64 * 0.01);
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn density_integrates_to_psi() {
        let sp = SyntheticProcess;
        let (v, b, steps) = (0.6, 2.5, 20_000);
        let h = b / steps as f64;
        let integral: f64 = (0..steps).map(|i| sp.density(v, (i as f64 + 0.5) * h) * h).sum();
        assert!((integral - sp.psi(v, b)).abs() < 1e-8);
    }

    #[test]
    fn synthetic_series_is_reproducible() {
        let sp = SyntheticProcess;
        let a = generate_synthetic_series(&sp, 100, 3);
        assert_eq!(a, generate_synthetic_series(&sp, 100, 3));
        assert!(a.0.iter().all(|v| (0.0..1.0).contains(v)));
        assert!(a.1.iter().all(|z| *z >= 0.0));
        // prefix property: shorter series are prefixes of longer ones
        let b = generate_synthetic_series(&sp, 40, 3);
        assert_eq!(&a.0[..40], &b.0[..]);
    }

    #[test]
    fn grid_validation() {
        let sp = SyntheticProcess;
        let bad = EvalGrid { v_points: vec![0.5], endpoints: vec![1.0, 0.5] };
        assert!(convergence_experiment(&sp, &[100], &[1], &bad).is_err());
        assert!(convergence_experiment(&sp, &[400, 100], &[1], &EvalGrid::default()).is_err());
        assert_eq!(EvalGrid::default().intervals().len(), 10);
    }
}
