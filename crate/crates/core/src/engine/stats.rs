//! Sample statistics over Monte Carlo output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sum::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("histogram needs at least one bin")]
    NoBins,
}

/// Fixed-count histogram over `[min, max]` of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Values equal to the maximum land in the last bin. If every value is
    /// equal all edges coincide and the whole mass sits in bin 0.
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self, StatsError> {
        if bins == 0 {
            return Err(StatsError::NoBins);
        }
        if values.is_empty() {
            return Err(StatsError::InsufficientData { needed: 1, got: 0 });
        }
        check_finite(values)?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = if hi > lo {
                (((v - lo) / (hi - lo)) * bins as f64) as usize
            } else {
                0
            };
            counts[idx.min(bins - 1)] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Share of the mass in bins whose upper edge is strictly below `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let below: u64 = self
            .counts
            .iter()
            .zip(&self.edges[1..])
            .filter(|(_, &hi)| hi < x)
            .map(|(c, _)| c)
            .sum();
        below as f64 / total as f64
    }
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(StatsError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Mean with compensated summation; exact when all values are equal.
pub fn mean(values: &[f64]) -> f64 {
    if let Some(&first) = values.first() {
        if values.iter().all(|v| v.to_bits() == first.to_bits()) {
            return first;
        }
    }
    let mut acc = CompensatedSum::new();
    values.iter().for_each(|&v| acc.add(v));
    acc.value() / values.len() as f64
}

/// Unbiased sample variance (divisor `n - 1`), two-pass.
pub fn variance(values: &[f64]) -> Result<f64, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let m = mean(values);
    let mut acc = CompensatedSum::new();
    values.iter().for_each(|&v| acc.add((v - m) * (v - m)));
    Ok(acc.value() / (values.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    /// Raw moments `<x^m>` keyed by order `m`.
    pub raw: BTreeMap<u32, f64>,
    /// Unbiased second central moment.
    pub central_second: f64,
}

pub fn estimate_moments(values: &[f64], orders: &[u32]) -> Result<Moments, StatsError> {
    check_finite(values)?;
    let central_second = variance(values)?;
    let raw = orders
        .iter()
        .map(|&m| {
            let powered: Vec<f64> = values.iter().map(|v| v.powi(m as i32)).collect();
            (m, mean(&powered))
        })
        .collect();
    Ok(Moments {
        raw,
        central_second,
    })
}

/// Kolmogorov-Smirnov distance `sup |F_n - F|` between the empirical CDF of
/// `values` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}
