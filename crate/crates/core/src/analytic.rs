//! Closed-form reference values and the quadrature routes that check them.
//!
//! Large-`N` means use the rescaled limiting spectral densities
//! (Marchenko-Pastur for Hilbert-Schmidt states, `mu_k` for the structured
//! ensemble) together with the continuum limit of the secant kernel,
//! `(1/N^2) sum_{i<j} P_ij -> 8G/pi^2`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use thiserror::Error;

use crate::ensembles::EnsembleKind;
use crate::quad::{self, QuadratureError};

/// Catalan's constant to 20 significant digits.
#[allow(clippy::excessive_precision)]
pub const CATALAN: f64 = 0.915_965_594_177_219_015_05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid structured parameter k = {k} (need k >= 2)")]
    InvalidK { k: u32 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] QuadratureError),
}

pub fn catalan_constant() -> f64 {
    CATALAN
}

/// Catalan's constant from `sum (-1)^n / (2n+1)^2`, summed with the
/// Cohen-Villegas-Zagier acceleration over `terms` terms.
pub fn catalan_series(terms: usize) -> f64 {
    let n = terms as i32;
    let d = (3.0 + 8f64.sqrt()).powi(n);
    let d = (d + 1.0 / d) / 2.0;
    let (mut b, mut c, mut s) = (-1.0f64, -d, 0.0);
    for k in 0..terms {
        let kf = k as f64;
        c = b - c;
        s += c / (2.0 * kf + 1.0).powi(2);
        b *= (kf + n as f64) * (kf - n as f64) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

/// Rescaled Marchenko-Pastur density `sqrt(4 - x) / (2 pi sqrt(x))` on `(0, 4)`.
pub fn mp_density(x: f64) -> f64 {
    if x > 0.0 && x < 4.0 {
        (4.0 - x).sqrt() / (2.0 * PI * x.sqrt())
    } else {
        0.0
    }
}

/// Closed-form CDF of [`mp_density`]: `(2t + sin 2t) / pi` with `x = 4 sin^2 t`.
pub fn mp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 4.0 {
        1.0
    } else {
        let t = (0.5 * x.sqrt()).asin();
        (2.0 * t + (2.0 * t).sin()) / PI
    }
}

/// Rescaled density of the structured ensemble,
/// `sqrt(4k(k-1)x - k^2 x^2) / (2 pi (kx - x^2))` on `(0, 4(k-1)/k)`.
pub fn structured_density(k: u32, x: f64) -> Result<f64, AnalyticError> {
    if k < 2 {
        return Err(AnalyticError::InvalidK { k });
    }
    let kf = k as f64;
    let upper = 4.0 * (kf - 1.0) / kf;
    if !(x > 0.0 && x < upper) {
        return Ok(0.0);
    }
    let num = (4.0 * kf * (kf - 1.0) * x - kf * kf * x * x).max(0.0).sqrt();
    Ok(num / (2.0 * PI * (kf * x - x * x)))
}

/// Limiting spectral densities of `N * lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    MarchenkoPastur,
    Structured { k: u32 },
}

impl SpectralDensity {
    pub fn structured(k: u32) -> Result<Self, AnalyticError> {
        if k < 2 {
            return Err(AnalyticError::InvalidK { k });
        }
        Ok(Self::Structured { k })
    }

    pub fn support_upper(&self) -> f64 {
        match self {
            Self::MarchenkoPastur => 4.0,
            Self::Structured { k } => 4.0 * (*k as f64 - 1.0) / *k as f64,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::MarchenkoPastur => mp_density(x),
            Self::Structured { k } => structured_density(*k, x).expect("k >= 2 checked"),
        }
    }

    /// `mu(x(t)) dx/dt` under `x = s sin^2 t`, `t in (0, pi/2)`, written so
    /// that no endpoint singularity or cancellation remains.
    fn substituted_weight(&self, t: f64) -> f64 {
        let c2 = t.cos().powi(2);
        match self {
            Self::MarchenkoPastur => 4.0 / PI * c2,
            Self::Structured { k } => {
                let kf = *k as f64;
                let s = self.support_upper();
                // k - s sin^2 t = (k - 2)^2 / k + s cos^2 t
                kf * s * c2 / (PI * ((kf - 2.0).powi(2) / kf + s * c2))
            }
        }
    }

    /// `int g(x) mu(x) dx` over the support.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G, abs_tol: f64) -> Result<f64, AnalyticError> {
        let s = self.support_upper();
        let q = quad::integrate(
            |t| g(s * t.sin().powi(2)) * self.substituted_weight(t),
            0.0,
            FRAC_PI_2,
            abs_tol,
        )?;
        Ok(q.value)
    }

    pub fn cdf(&self, x: f64) -> Result<f64, AnalyticError> {
        match self {
            Self::MarchenkoPastur => Ok(mp_cdf(x)),
            Self::Structured { .. } => {
                let s = self.support_upper();
                if x <= 0.0 {
                    return Ok(0.0);
                }
                if x >= s {
                    return Ok(1.0);
                }
                let t_max = (x / s).sqrt().asin();
                let q = quad::integrate(|t| self.substituted_weight(t), 0.0, t_max, 1e-12)?;
                Ok(q.value.clamp(0.0, 1.0))
            }
        }
    }
}

/// `C_k = int int mu_k(x) mu_k(y) sqrt(xy) dx dy`, closed form.
pub fn c_k(k: u32) -> Result<f64, AnalyticError> {
    if k < 2 {
        return Err(AnalyticError::InvalidK { k });
    }
    let kf = k as f64;
    let r = (kf - 1.0).sqrt();
    let inner = 2.0 * r - (kf - 2.0) * (2.0 * r / kf).min(1.0).asin();
    Ok(kf / (PI * PI) * inner * inner)
}

/// `C_k` by iterated 2-d quadrature of its defining integral.
pub fn c_k_quadrature(k: u32, abs_tol: f64) -> Result<f64, AnalyticError> {
    let density = SpectralDensity::structured(k)?;
    let s = density.support_upper();
    let q = quad::integrate_2d(
        |t, u| {
            let x = s * t.sin().powi(2);
            let y = s * u.sin().powi(2);
            density.substituted_weight(t) * density.substituted_weight(u) * (x * y).sqrt()
        },
        (0.0, FRAC_PI_2),
        (0.0, FRAC_PI_2),
        abs_tol,
    )?;
    Ok(q.value)
}

/// `(1/N^2) sum_{i<j} P_ij` in the continuum limit.
pub fn secant_continuum() -> f64 {
    8.0 * CATALAN / (PI * PI)
}

/// Large-`N` mean target value.
pub fn asymptotic_mean(kind: &EnsembleKind) -> Result<f64, AnalyticError> {
    let kernel = 2.0 * secant_continuum();
    match kind {
        // The Coulomb gas samples the Hilbert-Schmidt eigenvalue law.
        EnsembleKind::Hs | EnsembleKind::CoulombGas(_) => {
            Ok(2.0 - 1024.0 * CATALAN / (9.0 * PI.powi(4)))
        }
        EnsembleKind::Structured { k } => Ok(2.0 - kernel * c_k(*k)?),
        EnsembleKind::MaxEntangled => Ok(2.0 - kernel),
    }
}

/// Exact Hilbert-Schmidt mean at `N = 2`: `3/2 - 3 pi / (16 sqrt 2)`.
pub fn exact_mean_a2() -> f64 {
    1.5 - 3.0 * PI / (16.0 * std::f64::consts::SQRT_2)
}

/// `E sqrt(l_1 l_2)` for the fixed-trace law at `N = 2`.
pub fn exact_sqrt_moment_n2() -> f64 {
    3.0 * PI / 32.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticTable {
    pub mean_a2_hs: f64,
    pub mean_ainf_hs: f64,
    pub mean_ainf_structured: BTreeMap<u32, f64>,
    pub catalan: f64,
    pub maxent_asymptote: f64,
}

impl AnalyticTable {
    pub fn new(ks: &[u32]) -> Result<Self, AnalyticError> {
        let mut structured = BTreeMap::new();
        for &k in ks {
            structured.insert(k, asymptotic_mean(&EnsembleKind::Structured { k })?);
        }
        Ok(Self {
            mean_a2_hs: exact_mean_a2(),
            mean_ainf_hs: asymptotic_mean(&EnsembleKind::Hs)?,
            mean_ainf_structured: structured,
            catalan: catalan_constant(),
            maxent_asymptote: asymptotic_mean(&EnsembleKind::MaxEntangled)?,
        })
    }
}

/// Fixed-trace versus Laguerre moment relation at `N = 2`, `eta = (1/2, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LueReport {
    /// `<sqrt(l_1 l_2)>` under the Laguerre weight `(l_1 - l_2)^2 e^{-2(l_1 + l_2)}`.
    pub lue_moment: f64,
    /// `Gamma(N^2) / Gamma(N^2 + eta) * N^eta`.
    pub gamma_factor: f64,
    pub fixed_trace_prediction: f64,
    pub fixed_trace_exact: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn lue_relation_check(tolerance: f64) -> Result<LueReport, AnalyticError> {
    const N: f64 = 2.0;
    const ETA: f64 = 1.0;
    // l = u^2 removes the square-root endpoint behaviour; e^{-2 u^2} is
    // negligible beyond u = 7.
    let upper = 7.0;
    let weight = |u: f64, v: f64| {
        let (a, b) = (u * u, v * v);
        (a - b).powi(2) * (-N * (a + b)).exp() * 4.0 * u * v
    };
    let tol = 1e-13;
    let z = quad::integrate_2d(weight, (0.0, upper), (0.0, upper), tol)?.value;
    let m = quad::integrate_2d(|u, v| weight(u, v) * u * v, (0.0, upper), (0.0, upper), tol)?.value;
    let lue_moment = m / z;
    let n2 = N * N;
    let gamma_factor = (libm::lgamma(n2) - libm::lgamma(n2 + ETA)).exp() * N.powf(ETA);
    let fixed_trace_prediction = gamma_factor * lue_moment;
    let fixed_trace_exact = exact_sqrt_moment_n2();
    let deviation = (fixed_trace_prediction - fixed_trace_exact).abs();
    Ok(LueReport {
        lue_moment,
        gamma_factor,
        fixed_trace_prediction,
        fixed_trace_exact,
        deviation,
        tolerance,
        passed: deviation <= tolerance,
    })
}
