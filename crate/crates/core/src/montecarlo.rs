//! Order-statistic simulation: the ratio of expected revenue to the expected
//! highest price as the number of solvers grows.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::PriceDistribution;
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::stats::{self, Estimate, RunningStats, TopTwo};

const LABEL_RATIO: u64 = 0x5241_0000_0000;
const LABEL_BOOTSTRAP: u64 = 0x4253_0000_0000;
const LABEL_ORDER: u64 = 0x4F53_0000_0000;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RatioExperimentConfig<T: Real> {
    #[serde(default = "PriceDistribution::pareto_reference")]
    pub price_dist: PriceDistribution<T>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<u32>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_grid() -> Vec<u32> {
    vec![2, 10, 50, 250, 1000]
}

fn default_trials() -> u64 {
    10_000
}

impl<T: Real> Default for RatioExperimentConfig<T> {
    fn default() -> Self {
        Self {
            price_dist: PriceDistribution::pareto_reference(),
            n_grid: default_n_grid(),
            trials: default_trials(),
            seed: 0,
        }
    }
}

impl<T: Real> RatioExperimentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "must not be empty"));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(invalid("n_grid", "entries must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow<T> {
    pub n: u32,
    /// `E[p_{n-1:n}] / E[p_{n:n}]`
    pub mean_ratio: T,
    /// `median(p_{n-1:n}) / median(p_{n:n})`
    pub median_ratio: T,
    /// Bootstrap standard error of `mean_ratio`.
    pub std_error: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioExperimentResult<T> {
    pub rows: Vec<RatioRow<T>>,
    /// Set when the price law has infinite mean, so the empirical means do
    /// not settle as trials grow.
    pub heavy_tailed: bool,
}

/// Top two of `n` draws for each of `trials` trials, in trial order.
fn top_two_samples<T: Real>(dist: &PriceDistribution<T>, n: u32, trials: u64, seed: u64) -> (Vec<T>, Vec<T>) {
    let chunks = stats::run_chunked(trials, seed, LABEL_RATIO | n as u64, |rng, count| {
        (0..count)
            .map(|_| {
                let mut top = TopTwo::new();
                for _ in 0..n {
                    top.push(dist.sample(rng));
                }
                (top.first, top.second)
            })
            .collect::<Vec<_>>()
    });
    chunks.into_iter().flatten().unzip()
}

fn bootstrap_ratio_se<T: Real>(first: &[T], second: &[T], seed: u64, n: u32) -> T {
    let len = first.len();
    if len < 2 {
        return T::zero();
    }
    let ratios: Vec<T> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stats::stream_rng(seed, LABEL_BOOTSTRAP | n as u64, b as u64);
            let (mut num, mut den) = (T::zero(), T::zero());
            for _ in 0..len {
                let i = rng.random_range(0..len);
                num = num + second[i];
                den = den + first[i];
            }
            num / den
        })
        .collect();
    let mut acc = RunningStats::new();
    ratios.iter().for_each(|&r| acc.push(r));
    acc.variance().sqrt()
}

pub fn run_ratio_experiment<T: Real>(cfg: &RatioExperimentConfig<T>) -> Result<RatioExperimentResult<T>> {
    cfg.validate()?;
    let rows = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let (first, second) = top_two_samples(&cfg.price_dist, n, cfg.trials, cfg.seed);
            let sum = |v: &[T]| {
                let mut s = crate::scalar::CompensatedSum::new();
                v.iter().for_each(|&x| s.add(x));
                s.value()
            };
            RatioRow {
                n,
                mean_ratio: sum(&second) / sum(&first),
                median_ratio: stats::median(&second) / stats::median(&first),
                std_error: bootstrap_ratio_se(&first, &second, cfg.seed, n),
            }
        })
        .collect();
    Ok(RatioExperimentResult {
        rows,
        heavy_tailed: cfg.price_dist.is_heavy_tailed(),
    })
}

/// Monte Carlo estimate of `E[p_{j:n}]`, the `j`-th smallest of `n` draws.
pub fn order_statistic_mean<T: Real>(
    dist: &PriceDistribution<T>,
    n: u32,
    j: u32,
    trials: u64,
    seed: u64,
) -> Result<Estimate<T>> {
    if !(1..=n).contains(&j) {
        return Err(invalid("j", "must satisfy 1 <= j <= n"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let label = LABEL_ORDER | ((n as u64) << 16) | j as u64;
    let parts = stats::run_chunked(trials, seed, label, |rng, count| {
        let mut acc = RunningStats::new();
        let mut buf = vec![T::zero(); n as usize];
        for _ in 0..count {
            buf.iter_mut().for_each(|x| *x = dist.sample(rng));
            let (_, v, _) = buf.select_nth_unstable_by(j as usize - 1, |a, b| a.partial_cmp(b).unwrap());
            acc.push(*v);
        }
        acc
    });
    Ok(stats::merge_all(&parts).estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pair_ratio() {
        let cfg = RatioExperimentConfig {
            price_dist: PriceDistribution::<f64>::uniform_unit(),
            n_grid: vec![2],
            trials: 200_000,
            seed: 3,
        };
        let r = run_ratio_experiment(&cfg).unwrap();
        let row = r.rows[0];
        assert!((row.mean_ratio - 0.5).abs() < 4.0 * row.std_error, "{row:?}");
        assert!(row.std_error > 0.0 && row.std_error < 0.01);
        assert!(!r.heavy_tailed);
    }

    #[test]
    fn single_trial() {
        let cfg = RatioExperimentConfig {
            n_grid: vec![2],
            trials: 1,
            ..RatioExperimentConfig::<f64>::default()
        };
        let row = run_ratio_experiment(&cfg).unwrap().rows[0];
        assert!(row.mean_ratio > 0.0 && row.mean_ratio <= 1.0);
        assert_eq!(row.mean_ratio, row.median_ratio);
    }

    #[test]
    fn deterministic_and_flagged() {
        let cfg = RatioExperimentConfig::<f64> {
            trials: 2_000,
            seed: 17,
            ..Default::default()
        };
        let a = run_ratio_experiment(&cfg).unwrap();
        assert_eq!(a, run_ratio_experiment(&cfg).unwrap());
        assert!(a.heavy_tailed);
        for row in &a.rows {
            assert!(row.mean_ratio > 0.0 && row.mean_ratio <= 1.0);
            assert!(row.median_ratio > 0.0 && row.median_ratio <= 1.0);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = |f: fn(&mut RatioExperimentConfig<f64>)| {
            let mut c = RatioExperimentConfig::default();
            f(&mut c);
            run_ratio_experiment(&c).is_err()
        };
        assert!(bad(|c| c.trials = 0));
        assert!(bad(|c| c.n_grid = vec![]));
        assert!(bad(|c| c.n_grid = vec![1, 5]));
    }

    #[test]
    fn order_statistics() {
        let u = PriceDistribution::<f64>::uniform_unit();
        let max3 = order_statistic_mean(&u, 3, 3, 200_000, 1).unwrap();
        assert!(max3.within(0.75, 4.0), "{max3:?}");
        let mid3 = order_statistic_mean(&u, 3, 2, 200_000, 1).unwrap();
        assert!(mid3.within(0.5, 4.0), "{mid3:?}");
        let e = PriceDistribution::exponential(1.0).unwrap();
        let max2 = order_statistic_mean(&e, 2, 2, 200_000, 2).unwrap();
        assert!(max2.within(1.5, 4.0), "{max2:?}");
        let one = order_statistic_mean(&e, 1, 1, 200_000, 3).unwrap();
        assert!(one.within(1.0, 4.0), "{one:?}");
        assert!(order_statistic_mean(&e, 2, 3, 10, 1).is_err());
        assert!(order_statistic_mean(&e, 2, 0, 10, 1).is_err());
    }
}
