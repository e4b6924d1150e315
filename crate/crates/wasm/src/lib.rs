//! Browser bindings. Each export returns a JSON string for the page script.

use bellrmt_core::analytic::{self, SpectralDensity};
use bellrmt_core::engine::{exp_grid, sample_targets, Histogram, PointStats};
use bellrmt_core::ensembles::{EnsembleKind, EnsembleSpec};
use bellrmt_core::stream::RandomStream;
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

/// Keeps a single call from freezing the tab.
const MAX_WORK: u64 = 2_000_000_000;

#[derive(Debug, Serialize)]
pub struct TargetHistogram {
    pub ensemble: String,
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub violation_fraction: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Serialize)]
pub struct DensityComparison {
    pub ensemble: String,
    pub n: usize,
    pub draws: usize,
    /// Bin edges over the limiting support, in units of `N lambda`.
    pub edges: Vec<f64>,
    /// Empirical density of `N lambda` per bin.
    pub empirical: Vec<f64>,
    /// Limiting density at the bin centers.
    pub analytic: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Serialize)]
pub struct MeanCurve {
    pub ensemble: String,
    pub points: Vec<CurvePoint>,
    pub asymptote: Option<f64>,
    pub maxent_asymptote: f64,
}

fn parse_kind(ensemble: &str) -> Result<EnsembleKind, String> {
    let kind: EnsembleKind = ensemble.parse()?;
    if matches!(kind, EnsembleKind::CoulombGas(_)) {
        return Err("the Coulomb-gas chain is not offered in the browser".into());
    }
    Ok(kind)
}

/// Rough cost of one draw at `N`, in flops.
fn draw_cost(kind: &EnsembleKind, n: usize) -> u64 {
    let cube = (n as u64).pow(3);
    match kind {
        EnsembleKind::MaxEntangled => n as u64,
        EnsembleKind::Structured { k } => cube * (*k as u64 + 2),
        _ => cube * 3,
    }
}

fn check_budget(kind: &EnsembleKind, n: usize, count: usize) -> Result<(), String> {
    if draw_cost(kind, n).saturating_mul(count as u64) > MAX_WORK {
        return Err(format!("N = {n} with {count} draws is too much work for the page"));
    }
    Ok(())
}

pub fn target_histogram_of(
    ensemble: &str,
    n: usize,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<TargetHistogram, String> {
    let kind = parse_kind(ensemble)?;
    check_budget(&kind, n, samples)?;
    let values = sample_targets(kind, n, samples, seed).map_err(|e| e.to_string())?;
    let p = PointStats::from_values(kind, n, &values, bins).map_err(|e| e.to_string())?;
    Ok(TargetHistogram {
        ensemble: kind.to_string(),
        n,
        samples,
        mean: p.mean,
        std: p.std,
        violation_fraction: p.violation_fraction,
        histogram: p.histogram,
    })
}

pub fn spectrum_density_of(
    ensemble: &str,
    n: usize,
    draws: usize,
    bins: usize,
    seed: u64,
) -> Result<DensityComparison, String> {
    let kind = parse_kind(ensemble)?;
    let density = match kind {
        EnsembleKind::Hs => SpectralDensity::MarchenkoPastur,
        EnsembleKind::Structured { k } => SpectralDensity::structured(k).map_err(|e| e.to_string())?,
        _ => return Err(format!("no limiting density for {kind}")),
    };
    if bins == 0 || draws == 0 {
        return Err("need at least one bin and one draw".into());
    }
    check_budget(&kind, n, draws)?;
    let spec = EnsembleSpec::new(kind, n).map_err(|e| e.to_string())?;
    let upper = density.support_upper();
    let width = upper / bins as f64;
    let mut counts = vec![0u64; bins];
    for i in 0..draws {
        let mut rng = RandomStream::for_sample(seed, &[7, kind.stream_tag()[1], n as u64], i as u64).rng();
        let s = spec.sample(&mut rng).map_err(|e| e.to_string())?;
        for &l in s.lambdas() {
            let idx = ((l * n as f64) / width) as usize;
            // Finite-N spectra can spill past the limiting edge; those are dropped.
            if let Some(c) = counts.get_mut(idx) {
                *c += 1;
            }
        }
    }
    let total = (draws * n) as f64;
    Ok(DensityComparison {
        ensemble: kind.to_string(),
        n,
        draws,
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        empirical: counts.iter().map(|&c| c as f64 / (total * width)).collect(),
        analytic: (0..bins)
            .map(|i| density.density((i as f64 + 0.5) * width))
            .collect(),
    })
}

pub fn mean_curve_of(
    ensemble: &str,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<MeanCurve, String> {
    let kind = parse_kind(ensemble)?;
    let grid = exp_grid(2, n_max).map_err(|e| e.to_string())?;
    let cost: u64 = grid.iter().map(|&n| draw_cost(&kind, n)).sum();
    if cost.saturating_mul(samples as u64) > MAX_WORK {
        return Err(format!("N up to {n_max} with {samples} samples is too much work for the page"));
    }
    let mut points = Vec::with_capacity(grid.len());
    for n in grid {
        let values = sample_targets(kind, n, samples, seed).map_err(|e| e.to_string())?;
        let p = PointStats::from_values(kind, n, &values, 1).map_err(|e| e.to_string())?;
        points.push(CurvePoint {
            n,
            mean: p.mean,
            std: p.std,
        });
    }
    let asymptote = match kind {
        EnsembleKind::Structured { k: 1 } => analytic::asymptotic_mean(&EnsembleKind::MaxEntangled),
        other => analytic::asymptotic_mean(&other),
    };
    Ok(MeanCurve {
        ensemble: kind.to_string(),
        points,
        asymptote: asymptote.ok(),
        maxent_asymptote: analytic::asymptotic_mean(&EnsembleKind::MaxEntangled)
            .map_err(|e| e.to_string())?,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, String> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
}

/// Histogram of the target value at one `N`.
#[wasm_bindgen]
pub fn target_histogram(ensemble: &str, n: u32, samples: u32, bins: u32, seed: u64) -> Result<String, String> {
    to_json(target_histogram_of(ensemble, n as usize, samples as usize, bins as usize, seed))
}

/// Empirical density of `N lambda` next to its large-`N` limit.
#[wasm_bindgen]
pub fn spectrum_density(ensemble: &str, n: u32, draws: u32, bins: u32, seed: u64) -> Result<String, String> {
    to_json(spectrum_density_of(ensemble, n as usize, draws as usize, bins as usize, seed))
}

/// Mean target value on the exponential grid up to `n_max`.
#[wasm_bindgen]
pub fn mean_curve(ensemble: &str, n_max: u32, samples: u32, seed: u64) -> Result<String, String> {
    to_json(mean_curve_of(ensemble, n_max as usize, samples as usize, seed))
}
