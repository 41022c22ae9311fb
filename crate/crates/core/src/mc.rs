//! Parallel Monte-Carlo harness and sample statistics.
//!
//! Samples are produced in parallel but collected in index order, and all
//! reductions run sequentially over that ordered vector, so results do not
//! depend on the worker count.

use rayon::prelude::*;

use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub base_seed: u64,
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(n_samples: usize, base_seed: u64) -> Self {
        Self {
            n_samples,
            base_seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Runs `f(sample_seed, index)` for every sample. `workers == 0` uses
    /// rayon's global pool.
    pub fn collect<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, usize) -> T + Sync + Send,
    {
        let base = self.base_seed;
        let job = || {
            (0..self.n_samples)
                .into_par_iter()
                .map(|i| f(derive_seed(base, i as u64), i))
                .collect::<Vec<T>>()
        };
        if self.workers == 0 {
            job()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .expect("thread pool")
                .install(job)
        }
    }
}

/// Mean, variance and standard errors of a real sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub se_mean: f64,
    /// Standard error of the variance estimate, `sqrt((m4 - var²) / n)`.
    pub se_variance: f64,
}

impl SampleStats {
    pub fn from_slice(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                variance: f64::NAN,
                se_mean: f64::NAN,
                se_variance: f64::NAN,
            };
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let pop_var = m2 / nf;
        let m4 = m4 / nf;
        Self {
            n,
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_variance: ((m4 - pop_var * pop_var).max(0.0) / nf).sqrt(),
        }
    }

    pub fn mean_within(&self, target: f64, n_se: f64) -> bool {
        (self.mean - target).abs() <= n_se * self.se_mean
    }

    pub fn variance_within(&self, target: f64, n_se: f64, slack: f64) -> bool {
        (self.variance - target).abs() <= n_se * self.se_variance + slack
    }
}
