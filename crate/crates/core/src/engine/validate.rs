//! Oracle and invariant checks that tie the samplers to the analytic results.

use std::f64::consts::PI;

use serde::Serialize;

use super::{sample_targets, stats, SweepError};
use crate::analytic::{self, SpectralDensity};
use crate::ensembles::{metropolis_fixed_trace, schmidt_hs, EnsembleKind, McmcConfig};
use crate::stream::RandomStream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::new(name, false, format!("error: {err}"))
    }
}

/// Sample sizes and seed for the stochastic checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPlan {
    pub seed: u64,
    pub ks_n: usize,
    pub ks_draws: usize,
    pub cross_check_dims: [usize; 2],
    pub cross_check_samples: usize,
    pub sqrt_moment_samples: usize,
}

impl Default for ValidationPlan {
    fn default() -> Self {
        Self {
            seed: 2024,
            ks_n: 100,
            ks_draws: 1000,
            cross_check_dims: [2, 50],
            cross_check_samples: 4000,
            sqrt_moment_samples: 100_000,
        }
    }
}

pub const CK_VALUES: [u32; 5] = [2, 3, 6, 12, 64];
pub const CK_TOLERANCE: f64 = 1e-6;
pub const LUE_TOLERANCE: f64 = 1e-6;
pub const KS_THRESHOLD: f64 = 0.05;
pub const CROSS_CHECK_SIGMAS: f64 = 3.0;
pub const SQRT_MOMENT_TOLERANCE: f64 = 0.003;

pub fn catalan_check() -> Check {
    let series = analytic::catalan_series(40);
    let d = (series - analytic::CATALAN).abs();
    Check::new("catalan", d < 1e-15, format!("series {series:.17}, |diff| {d:.2e}"))
}

pub fn ck_checks() -> Vec<Check> {
    CK_VALUES
        .iter()
        .map(|&k| {
            let name = format!("c_k quadrature k={k}");
            match (analytic::c_k(k), analytic::c_k_quadrature(k, 1e-10)) {
                (Ok(closed), Ok(quad)) => {
                    let d = (closed - quad).abs();
                    Check::new(
                        name,
                        d <= CK_TOLERANCE,
                        format!("closed {closed:.12}, quadrature {quad:.12}, |diff| {d:.2e}"),
                    )
                }
                (Err(e), _) | (_, Err(e)) => Check::failed(name, e),
            }
        })
        .collect()
}

pub fn lue_check() -> Check {
    match analytic::lue_relation_check(LUE_TOLERANCE) {
        Ok(r) => Check::new(
            "lue relation N=2",
            r.passed,
            format!(
                "predicted {:.12}, exact {:.12}, |diff| {:.2e}",
                r.fixed_trace_prediction, r.fixed_trace_exact, r.deviation
            ),
        ),
        Err(e) => Check::failed("lue relation N=2", e),
    }
}

/// KS distance between `N lambda` pooled over HS draws and Marchenko-Pastur.
pub fn mp_ks_distance(n: usize, draws: usize, seed: u64) -> Result<f64, SweepError> {
    let tag = [5, 0, n as u64];
    let mut xs = Vec::with_capacity(n * draws);
    for i in 0..draws {
        let mut rng = RandomStream::for_sample(seed, &tag, i as u64).rng();
        let s = schmidt_hs(n, &mut rng).map_err(|source| SweepError::Sampler {
            kind: EnsembleKind::Hs,
            n,
            sample_index: i,
            source,
        })?;
        xs.extend(s.lambdas().iter().map(|l| l * n as f64));
    }
    let mp = SpectralDensity::MarchenkoPastur;
    stats::ks_distance(&xs, |x| mp.cdf(x).unwrap_or(f64::NAN))
        .map_err(|e| SweepError::InvalidConfig(e.to_string()))
}

pub fn ks_check(plan: &ValidationPlan) -> Check {
    let name = format!("ks vs marchenko-pastur N={}", plan.ks_n);
    match mp_ks_distance(plan.ks_n, plan.ks_draws, plan.seed) {
        Ok(d) => Check::new(name, d <= KS_THRESHOLD, format!("D = {d:.4}")),
        Err(e) => Check::failed(name, e),
    }
}

/// Mean and standard error of the target under both samplers at one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheck {
    pub n: usize,
    pub wishart_mean: f64,
    pub wishart_stderr: f64,
    pub metropolis_mean: f64,
    pub metropolis_stderr: f64,
}

impl CrossCheck {
    pub fn sigmas(&self) -> f64 {
        let combined = self.wishart_stderr.hypot(self.metropolis_stderr);
        (self.wishart_mean - self.metropolis_mean).abs() / combined
    }
}

pub fn cross_check(n: usize, samples: usize, seed: u64) -> Result<CrossCheck, SweepError> {
    let summarize = |v: &[f64]| -> Result<(f64, f64), SweepError> {
        let var = stats::variance(v).map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        Ok((stats::mean(v), (var / v.len() as f64).sqrt()))
    };
    let (wm, ws) = summarize(&sample_targets(EnsembleKind::Hs, n, samples, seed)?)?;
    let coulomb = EnsembleKind::CoulombGas(None);
    let (mm, ms) = summarize(&sample_targets(coulomb, n, samples, seed)?)?;
    Ok(CrossCheck {
        n,
        wishart_mean: wm,
        wishart_stderr: ws,
        metropolis_mean: mm,
        metropolis_stderr: ms,
    })
}

pub fn cross_checks(plan: &ValidationPlan) -> Vec<Check> {
    plan.cross_check_dims
        .iter()
        .map(|&n| {
            let name = format!("metropolis vs wishart N={n}");
            match cross_check(n, plan.cross_check_samples, plan.seed) {
                Ok(c) => Check::new(
                    name,
                    c.sigmas() <= CROSS_CHECK_SIGMAS,
                    format!(
                        "wishart {:.5} +- {:.5}, metropolis {:.5} +- {:.5}, {:.2} sigma",
                        c.wishart_mean,
                        c.wishart_stderr,
                        c.metropolis_mean,
                        c.metropolis_stderr,
                        c.sigmas()
                    ),
                ),
                Err(e) => Check::failed(name, e),
            }
        })
        .collect()
}

/// `E sqrt(l_1 l_2)` at `N = 2` from the Wishart route and from the chain.
pub fn sqrt_moments_n2(samples: usize, seed: u64) -> Result<(f64, f64), SweepError> {
    let err = |sample_index, source| SweepError::Sampler {
        kind: EnsembleKind::Hs,
        n: 2,
        sample_index,
        source,
    };
    let root = |l: &[f64]| (l[0] * l[1]).max(0.0).sqrt();
    let tag = [6, 0, 2];
    let mut wishart = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut rng = RandomStream::for_sample(seed, &tag, i as u64).rng();
        wishart.push(root(schmidt_hs(2, &mut rng).map_err(|e| err(i, e))?.lambdas()));
    }
    let mut rng = RandomStream::for_sample(seed, &tag, u64::MAX).rng();
    let run = metropolis_fixed_trace(2, &McmcConfig::for_dimension(2), &mut rng, samples)
        .map_err(|e| err(0, e))?;
    let chain: Vec<f64> = run.samples.iter().map(|s| root(s.lambdas())).collect();
    Ok((stats::mean(&wishart), stats::mean(&chain)))
}

pub fn sqrt_moment_check(plan: &ValidationPlan) -> Check {
    let exact = 3.0 * PI / 32.0;
    let name = "sqrt(l1 l2) moment N=2";
    match sqrt_moments_n2(plan.sqrt_moment_samples, plan.seed) {
        Ok((w, m)) => Check::new(
            name,
            (w - exact).abs() <= SQRT_MOMENT_TOLERANCE && (m - exact).abs() <= SQRT_MOMENT_TOLERANCE,
            format!("wishart {w:.5}, metropolis {m:.5}, exact {exact:.5}"),
        ),
        Err(e) => Check::failed(name, e),
    }
}

pub fn run_validation(plan: &ValidationPlan) -> Vec<Check> {
    let mut checks = vec![catalan_check(), lue_check()];
    checks.extend(ck_checks());
    checks.push(ks_check(plan));
    checks.extend(cross_checks(plan));
    checks.push(sqrt_moment_check(plan));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_checks_pass() {
        assert!(catalan_check().passed);
        assert!(lue_check().passed);
        assert!(ck_checks().iter().all(|c| c.passed));
    }

    #[test]
    fn small_cross_check_is_consistent() {
        let c = cross_check(3, 500, 1).unwrap();
        assert!(c.wishart_stderr > 0.0 && c.metropolis_stderr > 0.0);
        assert!(c.sigmas() < 4.0, "{c:?}");
    }
}
