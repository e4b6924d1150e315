//! Secant kernel and the Bell target value
//! `A_N = sum_ij M_ij sqrt(l_i l_j)`, `M_ij = 2 delta_ij - P_ij / N`,
//! `P_ij = sec((i - j) pi / 2N)`. Values below 1 violate the local-realist bound.

use std::f64::consts::PI;

use thiserror::Error;

use crate::ensembles::SchmidtSpectrum;
use crate::sum::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    #[error("invalid dimension {n} (need N >= 2)")]
    InvalidDimension { n: usize },
    #[error("kernel is built for N = {kernel} but the spectrum has N = {spectrum}")]
    DimensionMismatch { kernel: usize, spectrum: usize },
}

/// Precomputed `P` and `M` for one `N`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BellKernel {
    n: usize,
    /// `sec(d pi / 2N)` for offsets `d = 0..N`.
    secant: Vec<f64>,
    p: Vec<f64>,
    m: Vec<f64>,
}

impl BellKernel {
    pub fn new(n: usize) -> Result<Self, BellError> {
        if n < 2 {
            return Err(BellError::InvalidDimension { n });
        }
        let secant: Vec<f64> = (0..n)
            .map(|d| {
                if d == 0 {
                    1.0
                } else {
                    1.0 / (d as f64 * PI / (2.0 * n as f64)).cos()
                }
            })
            .collect();
        let mut p = vec![0.0; n * n];
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let s = secant[i.abs_diff(j)];
                p[i * n + j] = s;
                m[i * n + j] = if i == j { 2.0 } else { 0.0 } - s / n as f64;
            }
        }
        Ok(Self { n, secant, p, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `P_ij`, zero-based.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// `M_ij`, zero-based.
    pub fn m(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.n + j]
    }

    /// `sec(d pi / 2N)`.
    pub fn secant_at_offset(&self, d: usize) -> f64 {
        self.secant[d]
    }

    /// Target value for a spectrum in its given order.
    ///
    /// The diagonal contributes `(2 - 1/N) sum l_i = 2 - 1/N` exactly; the
    /// off-diagonal double sum is accumulated with compensation.
    pub fn target_value(&self, s: &SchmidtSpectrum) -> Result<f64, BellError> {
        if s.n() != self.n {
            return Err(BellError::DimensionMismatch {
                kernel: self.n,
                spectrum: s.n(),
            });
        }
        let roots: Vec<f64> = s
            .lambdas()
            .iter()
            .map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 })
            .collect();
        let n = self.n;
        let mut off = CompensatedSum::new();
        for d in 1..n {
            let mut lag = 0.0;
            for (a, b) in roots[..n - d].iter().zip(&roots[d..]) {
                lag += a * b;
            }
            off.add(self.secant[d] * lag);
        }
        let n_f = n as f64;
        Ok(2.0 - 1.0 / n_f - 2.0 * off.value() / n_f)
    }
}

/// Target value of the maximally entangled state, `2 - (1/N^2) sum_ij P_ij`.
pub fn maxent_target(n: usize) -> Result<f64, BellError> {
    if n < 2 {
        return Err(BellError::InvalidDimension { n });
    }
    let n_f = n as f64;
    let mut off = CompensatedSum::new();
    for d in 1..n {
        let sec = 1.0 / (d as f64 * PI / (2.0 * n_f)).cos();
        off.add((n - d) as f64 * sec);
    }
    Ok(2.0 - 1.0 / n_f - 2.0 * off.value() / (n_f * n_f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{schmidt_hs, shuffle_spectrum};
    use crate::stream::RandomStream;

    /// Direct double sum over `M`, used as the reference evaluation.
    fn brute_force(k: &BellKernel, s: &SchmidtSpectrum) -> f64 {
        let l = s.lambdas();
        let mut acc = 0.0;
        for i in 0..k.n() {
            for j in 0..k.n() {
                acc += k.m(i, j) * (l[i] * l[j]).sqrt();
            }
        }
        acc
    }

    #[test]
    fn kernel_entries() {
        let k2 = BellKernel::new(2).unwrap();
        assert_eq!(k2.p(0, 0), 1.0);
        assert!((k2.p(0, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(k2.p(0, 1), k2.p(1, 0));
        let k3 = BellKernel::new(3).unwrap();
        assert!((k3.p(0, 2) - 2.0).abs() < 1e-14);
        for n in [2, 5, 64] {
            let k = BellKernel::new(n).unwrap();
            for i in 0..n {
                assert_eq!(k.p(i, i), 1.0);
                for j in 0..n {
                    assert!(k.p(i, j) >= 1.0);
                    assert_eq!(k.p(i, j), k.p(j, i));
                    let delta = if i == j { 2.0 } else { 0.0 };
                    assert_eq!(k.m(i, j), delta - k.p(i, j) / n as f64);
                }
            }
            let corner = k.p(0, n - 1);
            assert!(corner.is_finite());
            assert!((0..n).all(|j| k.p(0, j) <= corner));
        }
        assert!(matches!(
            BellKernel::new(1),
            Err(BellError::InvalidDimension { n: 1 })
        ));
    }

    #[test]
    fn hand_evaluated_targets() {
        let k2 = BellKernel::new(2).unwrap();
        let half = SchmidtSpectrum::uniform(2).unwrap();
        let expected = (3.0 - 2f64.sqrt()) / 2.0;
        assert!((k2.target_value(&half).unwrap() - expected).abs() < 1e-15);

        let k3 = BellKernel::new(3).unwrap();
        let third = SchmidtSpectrum::uniform(3).unwrap();
        let expected = 2.0 - (7.0 + 8.0 / 3f64.sqrt()) / 9.0;
        assert!((k3.target_value(&third).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.70902).abs() < 1e-5);

        for n in [2, 3, 10, 100] {
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            let s = SchmidtSpectrum::from_weights(w).unwrap();
            let k = BellKernel::new(n).unwrap();
            assert!((k.target_value(&s).unwrap() - (2.0 - 1.0 / n as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let k = BellKernel::new(3).unwrap();
        let s = SchmidtSpectrum::uniform(4).unwrap();
        assert_eq!(
            k.target_value(&s),
            Err(BellError::DimensionMismatch {
                kernel: 3,
                spectrum: 4
            })
        );
    }

    #[test]
    fn maxent_closed_form_matches_kernel() {
        for n in 2..=64 {
            let k = BellKernel::new(n).unwrap();
            let u = SchmidtSpectrum::uniform(n).unwrap();
            let a = k.target_value(&u).unwrap();
            let b = maxent_target(n).unwrap();
            assert!((a - b).abs() < 1e-12, "n={n}");
        }
        assert!((maxent_target(2).unwrap() - 0.7928932).abs() < 1e-7);
        assert!((maxent_target(3).unwrap() - 0.70902).abs() < 1e-5);
        assert!(maxent_target(1).is_err());
    }

    #[test]
    fn maxent_always_violates_and_decreases() {
        let mut prev = f64::INFINITY;
        for n in 2..=512 {
            let v = maxent_target(n).unwrap();
            assert!(v < 1.0);
            assert!(v < prev, "n={n}");
            prev = v;
        }
    }

    #[test]
    fn agrees_with_direct_double_sum() {
        let mut rng = RandomStream::new(3, 0).rng();
        for n in [2, 3, 9, 31] {
            let k = BellKernel::new(n).unwrap();
            for _ in 0..10 {
                let s = shuffle_spectrum(&schmidt_hs(n, &mut rng).unwrap(), &mut rng);
                let a = k.target_value(&s).unwrap();
                assert!((a - brute_force(&k, &s)).abs() < 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn spectrum() -> impl Strategy<Value = SchmidtSpectrum> {
            prop::collection::vec(0.0f64..1.0, 2..40)
                .prop_filter("nonzero", |w| w.iter().any(|&x| x > 1e-9))
                .prop_map(|w| SchmidtSpectrum::from_weights(w).unwrap())
        }

        proptest! {
            #[test]
            fn reversal_invariant(s in spectrum()) {
                let k = BellKernel::new(s.n()).unwrap();
                let a = k.target_value(&s).unwrap();
                let b = k.target_value(&s.reversed()).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }

            #[test]
            fn bounded_above_by_two(s in spectrum()) {
                let k = BellKernel::new(s.n()).unwrap();
                prop_assert!(k.target_value(&s).unwrap() <= 2.0);
            }
        }
    }
}
