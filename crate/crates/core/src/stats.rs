//! Monte Carlo plumbing: seeded streams, chunked trials, summary statistics.
//!
//! Trials are split into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! stream derived from `(seed, label, i)`, so results are identical regardless
//! of how many worker threads execute the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Trials per chunk. Part of the reproducibility contract; changing it changes
/// every seeded result.
pub const CHUNK_TRIALS: u64 = 4_096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for chunk `chunk` of the experiment identified by `(seed, label)`.
pub fn stream_rng(seed: u64, label: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(label)));
    rng.set_stream(chunk);
    rng
}

/// Runs `trials` trials in deterministic chunks and returns the per-chunk
/// results in chunk order.
pub fn run_chunked<A, F>(trials: u64, seed: u64, label: u64, per_chunk: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> A + Sync,
{
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS);
            let mut rng = stream_rng(seed, label, c);
            per_chunk(&mut rng, count)
        })
        .collect()
}

/// Mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_error: T,
    pub samples: u64,
}

impl<T: Real> Estimate<T> {
    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn within(&self, target: T, k: T) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Welford accumulator with Chan's parallel merge.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats<T> {
    n: u64,
    mean: T,
    m2: T,
}

impl<T: Real> RunningStats<T> {
    pub fn new() -> Self {
        Self {
            n: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }

    pub fn push(&mut self, x: T) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean = self.mean + delta / T::from_count(self.n);
        self.m2 = self.m2 + delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let (na, nb, nt) = (
            T::from_count(self.n),
            T::from_count(other.n),
            T::from_count(n),
        );
        let delta = other.mean - self.mean;
        self.mean = self.mean + delta * nb / nt;
        self.m2 = self.m2 + other.m2 + delta * delta * na * nb / nt;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn variance(&self) -> T {
        if self.n < 2 {
            T::zero()
        } else {
            self.m2 / T::from_count(self.n - 1)
        }
    }

    pub fn estimate(&self) -> Estimate<T> {
        let se = if self.n == 0 {
            T::zero()
        } else {
            (self.variance() / T::from_count(self.n)).sqrt()
        };
        Estimate {
            mean: self.mean,
            std_error: se,
            samples: self.n,
        }
    }
}

/// Merges per-chunk accumulators in order.
pub fn merge_all<T: Real>(parts: &[RunningStats<T>]) -> RunningStats<T> {
    let mut acc = RunningStats::new();
    for p in parts {
        acc.merge(p);
    }
    acc
}

/// Largest and second-largest values seen so far.
#[derive(Debug, Clone, Copy)]
pub struct TopTwo<T> {
    pub first: T,
    pub second: T,
}

impl<T: Real> TopTwo<T> {
    pub fn new() -> Self {
        Self {
            first: T::neg_infinity(),
            second: T::neg_infinity(),
        }
    }

    #[inline]
    pub fn push(&mut self, x: T) {
        if x > self.first {
            self.second = self.first;
            self.first = x;
        } else if x > self.second {
            self.second = x;
        }
    }
}

impl<T: Real> Default for TopTwo<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Median of a sample (mean of the two middle values for even sizes).
/// Returns NaN for an empty sample.
pub fn median<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::nan();
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Ordinary least squares slope of `ys` against `xs`.
pub fn ols_slope<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = T::from_count(xs.len() as u64);
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx == T::zero() {
        None
    } else {
        Some(sxy / sxx)
    }
}
