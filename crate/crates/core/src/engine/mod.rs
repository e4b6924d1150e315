//! Seeded Monte Carlo sweeps over `(ensemble, N)`.
//!
//! Every sample owns a random stream derived from the master seed, the
//! ensemble tag, `N` and the sample index, and results are folded in sample
//! order. Output is therefore the same for any worker count.

pub mod io;
pub mod stats;
pub mod validate;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::{maxent_target, BellError, BellKernel};
use crate::ensembles::{
    metropolis_fixed_trace, shuffle_spectrum, EnsembleError, EnsembleKind, EnsembleSpec,
    SchmidtSpectrum,
};
use crate::stream::RandomStream;

pub use stats::{estimate_moments, ks_distance, Histogram, Moments, StatsError};

/// `round(sqrt(2)^j)` for `j = 2..=18`.
pub const DEFAULT_GRID: [usize; 17] = [
    2, 3, 4, 6, 8, 11, 16, 23, 32, 45, 64, 91, 128, 181, 256, 362, 512,
];

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling {kind} at N = {n} failed at sample {sample_index}: {source}")]
    Sampler {
        kind: EnsembleKind,
        n: usize,
        sample_index: usize,
        #[source]
        source: EnsembleError,
    },
    #[error("evaluating {kind} at N = {n}: {source}")]
    Target {
        kind: EnsembleKind,
        n: usize,
        #[source]
        source: BellError,
    },
    #[error("statistics for {kind} at N = {n}: {source}")]
    Stats {
        kind: EnsembleKind,
        n: usize,
        #[source]
        source: StatsError,
    },
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

fn default_ensembles() -> Vec<EnsembleKind> {
    vec![
        EnsembleKind::Hs,
        EnsembleKind::MaxEntangled,
        EnsembleKind::Structured { k: 2 },
        EnsembleKind::Structured { k: 3 },
        EnsembleKind::Structured { k: 6 },
        EnsembleKind::Structured { k: 12 },
    ]
}

fn default_grid() -> Vec<usize> {
    DEFAULT_GRID.to_vec()
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_ensembles")]
    pub ensembles: Vec<EnsembleKind>,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples_per_point: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Worker threads; `None` lets the pool decide. Never affects output.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ensembles: default_ensembles(),
            n_grid: default_grid(),
            samples_per_point: DEFAULT_SAMPLES,
            master_seed: DEFAULT_SEED,
            output_path: None,
            histogram_bins: DEFAULT_BINS,
            threads: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::InvalidConfig(m));
        if self.ensembles.is_empty() {
            return bad("no ensembles selected".into());
        }
        for kind in &self.ensembles {
            if let Err(e) = kind.validate() {
                return bad(format!("{kind}: {e}"));
            }
        }
        if self.n_grid.is_empty() {
            return bad("empty N grid".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            return bad(format!("N = {n} is below 2"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("N grid must be strictly increasing".into());
        }
        if self.samples_per_point < 2 {
            return bad(format!(
                "samples_per_point = {} (need at least 2)",
                self.samples_per_point
            ));
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }
}

/// Grid points `round(sqrt(2)^j)` inside `[n_min, n_max]`, plus both ends.
pub fn exp_grid(n_min: usize, n_max: usize) -> Result<Vec<usize>, SweepError> {
    if n_min < 2 || n_max < n_min {
        return Err(SweepError::InvalidConfig(format!(
            "bad grid bounds [{n_min}, {n_max}]"
        )));
    }
    let mut grid = vec![n_min, n_max];
    for j in 2.. {
        let n = 2f64.sqrt().powi(j).round() as usize;
        if n > n_max {
            break;
        }
        if n >= n_min {
            grid.push(n);
        }
    }
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

/// Aggregated target values at one `(kind, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub kind: EnsembleKind,
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    /// Share of samples with `A_N < 1`.
    pub violation_fraction: f64,
    pub histogram: Histogram,
}

impl PointStats {
    pub fn from_values(
        kind: EnsembleKind,
        n: usize,
        values: &[f64],
        bins: usize,
    ) -> Result<Self, StatsError> {
        let histogram = Histogram::from_values(values, bins)?;
        let samples = values.len();
        let std = if samples < 2 {
            0.0
        } else {
            stats::variance(values)?.sqrt()
        };
        let violations = values.iter().filter(|&&a| a < 1.0).count();
        Ok(Self {
            kind,
            n,
            samples,
            mean: stats::mean(values),
            std,
            stderr: std / (samples as f64).sqrt(),
            violation_fraction: violations as f64 / samples as f64,
            histogram,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub samples_per_point: usize,
    pub master_seed: u64,
    pub points: Vec<PointStats>,
}

impl SweepResult {
    pub fn point(&self, kind: &EnsembleKind, n: usize) -> Option<&PointStats> {
        self.points.iter().find(|p| p.kind == *kind && p.n == n)
    }
}

fn sample_tag(kind: &EnsembleKind, n: usize) -> [u64; 3] {
    let [a, b] = kind.stream_tag();
    [a, b, n as u64]
}

/// Target values for `samples` draws at one `(kind, N)`, in sample order.
pub fn sample_targets(
    kind: EnsembleKind,
    n: usize,
    samples: usize,
    master_seed: u64,
) -> Result<Vec<f64>, SweepError> {
    let spec = EnsembleSpec::new(kind, n).map_err(|source| SweepError::Sampler {
        kind,
        n,
        sample_index: 0,
        source,
    })?;
    let kernel = BellKernel::new(n).map_err(|source| SweepError::Target { kind, n, source })?;
    let tag = sample_tag(&kind, n);
    let evaluate = |s: &SchmidtSpectrum| {
        kernel
            .target_value(s)
            .map_err(|source| SweepError::Target { kind, n, source })
    };

    match kind {
        EnsembleKind::MaxEntangled => {
            let value = maxent_target(n).map_err(|source| SweepError::Target { kind, n, source })?;
            Ok(vec![value; samples])
        }
        EnsembleKind::CoulombGas(_) => {
            // One chain per point; the chain itself is sequential.
            let cfg = spec.mcmc_config().expect("coulomb spec");
            let mut rng = RandomStream::for_sample(master_seed, &tag, u64::MAX).rng();
            let run = metropolis_fixed_trace(n, &cfg, &mut rng, samples).map_err(|source| {
                SweepError::Sampler {
                    kind,
                    n,
                    sample_index: 0,
                    source,
                }
            })?;
            map_indexed(samples, |i| {
                let mut rng = RandomStream::for_sample(master_seed, &tag, i as u64).rng();
                evaluate(&shuffle_spectrum(&run.samples[i], &mut rng))
            })
        }
        EnsembleKind::Hs | EnsembleKind::Structured { .. } => map_indexed(samples, |i| {
            let mut rng = RandomStream::for_sample(master_seed, &tag, i as u64).rng();
            let sorted = spec.sample(&mut rng).map_err(|source| SweepError::Sampler {
                kind,
                n,
                sample_index: i,
                source,
            })?;
            evaluate(&shuffle_spectrum(&sorted, &mut rng))
        }),
    }
}

/// Order-preserving map over `0..count`; the first error by index wins.
#[cfg(feature = "parallel")]
fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>, SweepError>
where
    T: Send,
    F: Fn(usize) -> Result<T, SweepError> + Sync,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>, SweepError>
where
    F: Fn(usize) -> Result<T, SweepError>,
{
    (0..count).map(f).collect()
}

fn run_points(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    let mut points = Vec::with_capacity(cfg.ensembles.len() * cfg.n_grid.len());
    for &kind in &cfg.ensembles {
        for &n in &cfg.n_grid {
            let values = sample_targets(kind, n, cfg.samples_per_point, cfg.master_seed)?;
            let point = PointStats::from_values(kind, n, &values, cfg.histogram_bins)
                .map_err(|source| SweepError::Stats { kind, n, source })?;
            points.push(point);
        }
    }
    Ok(SweepResult {
        samples_per_point: cfg.samples_per_point,
        master_seed: cfg.master_seed,
        points,
    })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    if let Some(threads) = cfg.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
        return pool.install(|| run_points(cfg));
    }
    run_points(cfg)
}
