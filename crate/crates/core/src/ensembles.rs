//! Samplers for Schmidt spectra of random bipartite pure states.
//!
//! * Hilbert-Schmidt: normalized eigenvalues of `X X^dagger` for a Ginibre `X`.
//! * Structured(k): the same with `X` replaced by a sum of `k` Haar unitaries.
//! * Maximally entangled: the uniform spectrum.
//! * Coulomb gas: a Metropolis chain on the simplex whose stationary law is
//!   the fixed-trace density `prod_{i<j} (l_i - l_j)^2`, kept as an
//!   independent cross-check of the Wishart route.
//!
//! Eigensolvers return spectra sorted ascending. Anything fed to the Bell
//! target must go through [`shuffle_spectrum`] first, because the target is
//! not symmetric under permutations for `N >= 3`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, LinalgError};
use crate::sum::compensated_sum;

/// Resampling attempts after a failed draw before giving up.
pub const MAX_RETRIES: usize = 3;

/// Eigenvalues in `[-NEGATIVE_CLAMP, 0)` are floating-point noise and become 0.
pub const NEGATIVE_CLAMP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid dimension {n} (minimum {min})")]
    InvalidDimension { n: usize, min: usize },
    #[error("invalid structured ensemble parameter k = {k} (need k >= 1)")]
    InvalidK { k: u32 },
    #[error("Metropolis step size must be positive, got {step_size}")]
    NonErgodicConfig { step_size: f64 },
    #[error("invalid Metropolis configuration: {0}")]
    InvalidMcmcConfig(String),
    #[error("at least one sample is required")]
    NoSamples,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("draw failed after {attempts} attempts: {source}")]
    Linalg {
        attempts: usize,
        #[source]
        source: LinalgError,
    },
}

/// Normalized Schmidt coefficients of a bipartite pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Normalizes nonnegative weights to unit sum. Weights that are negative
    /// by at most [`NEGATIVE_CLAMP`] after normalization are set to zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, EnsembleError> {
        if weights.len() < 2 {
            return Err(EnsembleError::InvalidDimension {
                n: weights.len(),
                min: 2,
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(EnsembleError::InvalidSpectrum(format!(
                "non-finite weight {w}"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(EnsembleError::InvalidSpectrum(format!(
                "weights sum to {total}"
            )));
        }
        let mut lambdas: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let mut clamped = false;
        for l in lambdas.iter_mut() {
            if *l < 0.0 {
                if *l < -NEGATIVE_CLAMP {
                    return Err(EnsembleError::InvalidSpectrum(format!(
                        "negative coefficient {l:e}"
                    )));
                }
                *l = 0.0;
                clamped = true;
            }
        }
        if clamped {
            let total = compensated_sum(lambdas.iter().copied());
            lambdas.iter_mut().for_each(|l| *l /= total);
        }
        Ok(Self { lambdas })
    }

    /// The maximally entangled spectrum `1/N`.
    pub fn uniform(n: usize) -> Result<Self, EnsembleError> {
        if n < 2 {
            return Err(EnsembleError::InvalidDimension { n, min: 2 });
        }
        Ok(Self {
            lambdas: vec![1.0 / n as f64; n],
        })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn into_lambdas(self) -> Vec<f64> {
        self.lambdas
    }

    /// Compensated sum of the coefficients.
    pub fn total(&self) -> f64 {
        compensated_sum(self.lambdas.iter().copied())
    }

    pub fn sorted(&self) -> Self {
        let mut lambdas = self.lambdas.clone();
        lambdas.sort_by(|a, b| a.total_cmp(b));
        Self { lambdas }
    }

    pub fn reversed(&self) -> Self {
        Self {
            lambdas: self.lambdas.iter().rev().copied().collect(),
        }
    }
}

/// Metropolis settings for the fixed-trace Coulomb gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub burn_in_sweeps: u64,
    pub thinning_sweeps: u64,
    /// Half-width of the uniform transfer between two coefficients.
    pub step_size: f64,
}

impl McmcConfig {
    /// 10^4 burn-in sweeps, 100 sweeps between samples, step `1/N`.
    pub fn for_dimension(n: usize) -> Self {
        Self {
            burn_in_sweeps: 10_000,
            thinning_sweeps: 100,
            step_size: 1.0 / n.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.step_size.is_nan() || self.step_size <= 0.0 || self.step_size.is_infinite() {
            return Err(EnsembleError::NonErgodicConfig {
                step_size: self.step_size,
            });
        }
        if self.thinning_sweeps < 1 {
            return Err(EnsembleError::InvalidMcmcConfig(
                "thinning_sweeps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which ensemble to draw states from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EnsembleKind {
    Hs,
    Structured { k: u32 },
    MaxEntangled,
    /// `None` uses [`McmcConfig::for_dimension`] at each `N`.
    CoulombGas(Option<McmcConfig>),
}

impl EnsembleKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Hs => "hs",
            Self::Structured { .. } => "structured",
            Self::MaxEntangled => "maxent",
            Self::CoulombGas(_) => "coulomb",
        }
    }

    pub fn k(&self) -> Option<u32> {
        match self {
            Self::Structured { k } => Some(*k),
            _ => None,
        }
    }

    /// Stable numeric key used to derive per-sample random streams.
    pub fn stream_tag(&self) -> [u64; 2] {
        match self {
            Self::Hs => [1, 0],
            Self::Structured { k } => [2, *k as u64],
            Self::MaxEntangled => [3, 0],
            Self::CoulombGas(_) => [4, 0],
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::MaxEntangled)
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        match self {
            Self::Structured { k } if *k < 1 => Err(EnsembleError::InvalidK { k: *k }),
            Self::CoulombGas(Some(cfg)) => cfg.validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Structured { k } => write!(f, "structured:{k}"),
            other => f.write_str(other.label()),
        }
    }
}

impl FromStr for EnsembleKind {
    type Err = String;

    /// Accepts `hs`, `maxent`, `coulomb` and `structured:<k>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hs" => Ok(Self::Hs),
            "maxent" => Ok(Self::MaxEntangled),
            "coulomb" => Ok(Self::CoulombGas(None)),
            other => {
                let k = other
                    .strip_prefix("structured:")
                    .ok_or_else(|| format!("unknown ensemble '{other}'"))?;
                let k: u32 = k
                    .parse()
                    .map_err(|_| format!("invalid k in '{other}'"))?;
                let kind = Self::Structured { k };
                kind.validate().map_err(|e| e.to_string())?;
                Ok(kind)
            }
        }
    }
}

impl TryFrom<String> for EnsembleKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EnsembleKind> for String {
    fn from(k: EnsembleKind) -> Self {
        k.to_string()
    }
}

/// An ensemble together with the local dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize) -> Result<Self, EnsembleError> {
        if n < 2 {
            return Err(EnsembleError::InvalidDimension { n, min: 2 });
        }
        kind.validate()?;
        Ok(Self { kind, n })
    }

    /// Metropolis settings in effect for a Coulomb-gas spec.
    pub fn mcmc_config(&self) -> Option<McmcConfig> {
        match self.kind {
            EnsembleKind::CoulombGas(None) => Some(McmcConfig::for_dimension(self.n)),
            EnsembleKind::CoulombGas(Some(cfg)) => Some(cfg),
            _ => None,
        }
    }

    /// One independent spectrum, sorted ascending. Coulomb-gas draws are
    /// chain-based; use [`metropolis_fixed_trace`] for those.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SchmidtSpectrum, EnsembleError> {
        match self.kind {
            EnsembleKind::Hs => schmidt_hs(self.n, rng),
            EnsembleKind::Structured { k } => schmidt_structured(self.n, k, rng),
            EnsembleKind::MaxEntangled => schmidt_maxent(self.n),
            EnsembleKind::CoulombGas(_) => {
                let cfg = self.mcmc_config().expect("coulomb spec");
                let run = metropolis_fixed_trace(self.n, &cfg, rng, 1)?;
                Ok(run.samples.into_iter().next().expect("one sample"))
            }
        }
    }
}

/// `N x N` matrix with independent standard normal real and imaginary parts,
/// filled in row-major order.
pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix, EnsembleError> {
    if n < 1 {
        return Err(EnsembleError::InvalidDimension { n, min: 1 });
    }
    let m = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
    .expect("gaussian entries are finite");
    Ok(m)
}

fn retrying<R: Rng + ?Sized, T>(
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Result<T, LinalgError>,
) -> Result<T, EnsembleError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match draw(rng) {
            Ok(v) => return Ok(v),
            Err(LinalgError::RankDeficient { .. } | LinalgError::NoConvergence { .. })
                if attempts <= MAX_RETRIES => {}
            Err(source) => return Err(EnsembleError::Linalg { attempts, source }),
        }
    }
}

fn gram_spectrum(x: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(linalg::hermitian_eigenvalues(&x.gram())?.into_values())
}

/// Hilbert-Schmidt spectrum: eigenvalues of `X X^dagger / tr(X X^dagger)`.
pub fn schmidt_hs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SchmidtSpectrum, EnsembleError> {
    if n < 2 {
        return Err(EnsembleError::InvalidDimension { n, min: 2 });
    }
    let eigs = retrying(rng, |rng| {
        let x = sample_ginibre(n, rng).expect("n >= 1");
        gram_spectrum(&x)
    })?;
    SchmidtSpectrum::from_weights(eigs)
}

/// Haar-distributed `N x N` unitary.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix, EnsembleError> {
    if n < 1 {
        return Err(EnsembleError::InvalidDimension { n, min: 1 });
    }
    retrying(rng, |rng| {
        let g = sample_ginibre(n, rng).expect("n >= 1");
        linalg::unitary_from_qr(&g)
    })
}

/// Structured spectrum: Gram eigenvalues of a sum of `k` independent Haar
/// unitaries, normalized. `k = 1` is exactly the uniform spectrum.
pub fn schmidt_structured<R: Rng + ?Sized>(
    n: usize,
    k: u32,
    rng: &mut R,
) -> Result<SchmidtSpectrum, EnsembleError> {
    if n < 2 {
        return Err(EnsembleError::InvalidDimension { n, min: 2 });
    }
    match k {
        0 => Err(EnsembleError::InvalidK { k }),
        1 => SchmidtSpectrum::uniform(n),
        _ => {
            let eigs = retrying(rng, |rng| {
                let mut sum = ComplexMatrix::zeros(n, n)?;
                for _ in 0..k {
                    let g = sample_ginibre(n, rng).expect("n >= 1");
                    sum.add_assign(&linalg::unitary_from_qr(&g)?)?;
                }
                gram_spectrum(&sum)
            })?;
            SchmidtSpectrum::from_weights(eigs)
        }
    }
}

pub fn schmidt_maxent(n: usize) -> Result<SchmidtSpectrum, EnsembleError> {
    SchmidtSpectrum::uniform(n)
}

/// Uniformly random reordering of the coefficients.
pub fn shuffle_spectrum<R: Rng + ?Sized>(s: &SchmidtSpectrum, rng: &mut R) -> SchmidtSpectrum {
    let mut lambdas = s.lambdas.clone();
    lambdas.shuffle(rng);
    SchmidtSpectrum { lambdas }
}

#[derive(Debug, Clone)]
pub struct McmcRun {
    pub samples: Vec<SchmidtSpectrum>,
    pub acceptance_rate: f64,
    pub proposals: u64,
}

/// Metropolis chain for the fixed-trace density `prod_{i<j} (l_i - l_j)^2`
/// on the simplex. A move picks an ordered pair `(i, j)` and transfers
/// `d ~ U(-step, step)` from `l_i` to `l_j`; moves leaving the simplex are
/// rejected. One sweep is `N` proposals.
pub fn metropolis_fixed_trace<R: Rng + ?Sized>(
    n: usize,
    cfg: &McmcConfig,
    rng: &mut R,
    n_samples: usize,
) -> Result<McmcRun, EnsembleError> {
    if n < 2 {
        return Err(EnsembleError::InvalidDimension { n, min: 2 });
    }
    cfg.validate()?;
    if n_samples < 1 {
        return Err(EnsembleError::NoSamples);
    }
    // Distinct starting point: l_i proportional to i.
    let norm = (n * (n + 1)) as f64 / 2.0;
    let mut state: Vec<f64> = (1..=n).map(|i| i as f64 / norm).collect();
    let mut accepted = 0u64;
    let mut proposals = 0u64;
    let mut sweep = |state: &mut Vec<f64>, sweeps: u64| {
        for _ in 0..sweeps * n as u64 {
            proposals += 1;
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let delta = rng.random_range(-cfg.step_size..cfg.step_size);
            let (a, b) = (state[i], state[j]);
            let (a2, b2) = (a - delta, b + delta);
            if a2 < 0.0 || b2 < 0.0 {
                continue;
            }
            let log_ratio = log_vandermonde_ratio(state, i, j, a2, b2);
            if log_ratio.is_nan() {
                continue;
            }
            if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
                state[i] = a2;
                state[j] = b2;
                accepted += 1;
            }
        }
    };
    sweep(&mut state, cfg.burn_in_sweeps);
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        sweep(&mut state, cfg.thinning_sweeps);
        samples.push(SchmidtSpectrum::from_weights(state.clone())?);
    }
    Ok(McmcRun {
        samples,
        acceptance_rate: if proposals == 0 {
            0.0
        } else {
            accepted as f64 / proposals as f64
        },
        proposals,
    })
}

/// `ln` of the squared-Vandermonde ratio after replacing `l_i, l_j` by `a2, b2`.
fn log_vandermonde_ratio(state: &[f64], i: usize, j: usize, a2: f64, b2: f64) -> f64 {
    let (a, b) = (state[i], state[j]);
    let mut log = 2.0 * (((a2 - b2) / (a - b)).abs()).ln();
    let mut ratio = 1.0f64;
    for (l, &x) in state.iter().enumerate() {
        if l == i || l == j {
            continue;
        }
        ratio *= ((a2 - x) * (b2 - x)) / ((a - x) * (b - x));
        if !(1e-100..=1e100).contains(&ratio.abs()) {
            log += 2.0 * ratio.abs().ln();
            ratio = 1.0;
        }
    }
    log + 2.0 * ratio.abs().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;
    use std::f64::consts::PI;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        RandomStream::new(seed, 0).rng()
    }

    #[test]
    fn ginibre_is_reproducible_per_stream() {
        let a = sample_ginibre(1, &mut RandomStream::new(11, 2).rng()).unwrap();
        let b = sample_ginibre(1, &mut RandomStream::new(11, 2).rng()).unwrap();
        assert_eq!(a.get(0, 0).re.to_bits(), b.get(0, 0).re.to_bits());
        assert_eq!(a.get(0, 0).im.to_bits(), b.get(0, 0).im.to_bits());
        let c = sample_ginibre(4, &mut RandomStream::new(11, 2).rng()).unwrap();
        let d = sample_ginibre(4, &mut RandomStream::new(11, 3).rng()).unwrap();
        assert!(c
            .to_row_major()
            .iter()
            .zip(d.to_row_major())
            .all(|(x, y)| x != &y));
        assert!(sample_ginibre(0, &mut rng(1)).is_err());
    }

    #[test]
    fn ginibre_second_moment() {
        // E|X_ij|^2 = 2, so tr(X X^dagger) / (2 N^2) has mean 1.
        let n = 50;
        let draws = 10_000;
        let mut r = rng(5);
        let mut acc = 0.0;
        for _ in 0..draws {
            let x = sample_ginibre(n, &mut r).unwrap();
            acc += x.frobenius_norm().powi(2) / (2.0 * (n * n) as f64);
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn maxent_spectra() {
        assert_eq!(schmidt_maxent(2).unwrap().lambdas(), &[0.5, 0.5]);
        assert_eq!(
            schmidt_maxent(3).unwrap().lambdas(),
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]
        );
        assert_eq!(schmidt_maxent(10).unwrap().total(), 1.0);
        assert!(schmidt_maxent(1).is_err());
    }

    #[test]
    fn hs_normalized() {
        let mut r = rng(2);
        for n in [2, 3, 7, 40] {
            for _ in 0..20 {
                let s = schmidt_hs(n, &mut r).unwrap();
                assert_eq!(s.n(), n);
                assert!((s.total() - 1.0).abs() < 1e-12);
                assert!(s.lambdas().iter().all(|&l| l >= 0.0));
            }
        }
        assert!(matches!(
            schmidt_hs(1, &mut r),
            Err(EnsembleError::InvalidDimension { .. })
        ));
    }

    #[test]
    fn hs_two_by_two_sqrt_moment() {
        let mut r = rng(3);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let s = schmidt_hs(2, &mut r).unwrap();
            acc += (s.lambdas()[0] * s.lambdas()[1]).sqrt();
        }
        let mean = acc / draws as f64;
        assert!((mean - 3.0 * PI / 32.0).abs() < 0.001, "{mean}");
    }

    #[test]
    fn structured_k1_is_uniform() {
        let mut r = rng(4);
        for n in [2, 5, 16] {
            let s = schmidt_structured(n, 1, &mut r).unwrap();
            assert!(s.lambdas().iter().all(|&l| l == 1.0 / n as f64));
        }
        assert!(matches!(
            schmidt_structured(4, 0, &mut r),
            Err(EnsembleError::InvalidK { k: 0 })
        ));
    }

    #[test]
    fn structured_k2_support_edge() {
        let mut r = rng(6);
        let n = 200;
        for _ in 0..5 {
            let s = schmidt_structured(n, 2, &mut r).unwrap();
            let top = s.lambdas().iter().cloned().fold(0.0, f64::max) * n as f64;
            assert!(top <= 2.3, "{top}");
            assert!((s.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let mut r = rng(7);
        let s = SchmidtSpectrum::from_weights(vec![0.5, 0.5]).unwrap();
        assert_eq!(shuffle_spectrum(&s, &mut r), s);
        let sorted = schmidt_hs(16, &mut r).unwrap();
        let shuffled = shuffle_spectrum(&sorted, &mut r);
        assert_eq!(shuffled.sorted(), sorted);
    }

    #[test]
    fn shuffle_is_uniform_over_orderings() {
        let s = SchmidtSpectrum::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
        let mut r = rng(8);
        let trials = 60_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let t = shuffle_spectrum(&s, &mut r);
            let key: Vec<u64> = t.lambdas().iter().map(|x| x.to_bits()).collect();
            *counts.entry(key).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            let f = *c as f64 / trials as f64;
            assert!((f - 1.0 / 6.0).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn from_weights_clamps_noise_only() {
        let s = SchmidtSpectrum::from_weights(vec![1.0, -1e-16, 1.0]).unwrap();
        assert_eq!(s.lambdas()[1], 0.0);
        assert!((s.total() - 1.0).abs() < 1e-15);
        assert!(SchmidtSpectrum::from_weights(vec![1.0, -0.1]).is_err());
        assert!(SchmidtSpectrum::from_weights(vec![1.0]).is_err());
        assert!(SchmidtSpectrum::from_weights(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn kind_strings_round_trip() {
        for k in [
            EnsembleKind::Hs,
            EnsembleKind::MaxEntangled,
            EnsembleKind::Structured { k: 6 },
            EnsembleKind::CoulombGas(None),
        ] {
            assert_eq!(k.to_string().parse::<EnsembleKind>().unwrap(), k);
        }
        assert!("structured:0".parse::<EnsembleKind>().is_err());
        assert!("bures".parse::<EnsembleKind>().is_err());
    }

    #[test]
    fn metropolis_rejects_bad_config() {
        let mut r = rng(9);
        let bad = McmcConfig {
            step_size: 0.0,
            ..McmcConfig::for_dimension(4)
        };
        assert!(matches!(
            metropolis_fixed_trace(4, &bad, &mut r, 1),
            Err(EnsembleError::NonErgodicConfig { .. })
        ));
        let bad = McmcConfig {
            thinning_sweeps: 0,
            ..McmcConfig::for_dimension(4)
        };
        assert!(metropolis_fixed_trace(4, &bad, &mut r, 1).is_err());
        assert!(metropolis_fixed_trace(4, &McmcConfig::for_dimension(4), &mut r, 0).is_err());
    }

    #[test]
    fn metropolis_states_stay_on_simplex() {
        let mut r = rng(10);
        let cfg = McmcConfig {
            burn_in_sweeps: 200,
            thinning_sweeps: 5,
            step_size: 0.1,
        };
        let run = metropolis_fixed_trace(8, &cfg, &mut r, 200).unwrap();
        assert_eq!(run.samples.len(), 200);
        assert!(run.acceptance_rate > 0.0 && run.acceptance_rate < 1.0);
        for s in &run.samples {
            assert!((s.total() - 1.0).abs() < 1e-12);
            assert!(s.lambdas().iter().all(|&l| l >= 0.0));
        }
    }

    #[test]
    fn metropolis_two_level_marginal() {
        // At N = 2 the fixed-trace density of l_1 is 3 (2x - 1)^2 on [0, 1],
        // CDF ((2x - 1)^3 + 1) / 2.
        let mut r = rng(11);
        let cfg = McmcConfig::for_dimension(2);
        let n_samples = 100_000;
        let run = metropolis_fixed_trace(2, &cfg, &mut r, n_samples).unwrap();
        let mut xs: Vec<f64> = run.samples.iter().map(|s| s.lambdas()[0]).collect();
        let sqrt_mean =
            run.samples.iter().map(|s| (s.lambdas()[0] * s.lambdas()[1]).sqrt()).sum::<f64>()
                / n_samples as f64;
        assert!((sqrt_mean - 3.0 * PI / 32.0).abs() < 0.003, "{sqrt_mean}");
        xs.sort_by(|a, b| a.total_cmp(b));
        let cdf = |x: f64| ((2.0 * x - 1.0).powi(3) + 1.0) / 2.0;
        let nf = n_samples as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.02, "{ks}");
    }
}
