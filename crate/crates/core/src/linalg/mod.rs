//! Dense complex linear algebra for the samplers.
//!
//! Only two heavy operations are needed downstream: the eigenvalues of a
//! Hermitian matrix (Householder reduction to real tridiagonal form followed
//! by implicit QL) and a Haar-correct unitary from the QR factorization of a
//! square matrix. Storage is column-major so that the inner loops of both
//! reductions run over contiguous memory.

use std::fmt;

mod kernels;

use kernels::{Planes, QrOutcome};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("invalid shape {rows}x{cols}")]
    InvalidShape { rows: usize, cols: usize },
    #[error("entry count {got} does not match shape {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, got: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} steps (n = {n}, matrix fingerprint {fingerprint:016x})")]
    NoConvergence {
        n: usize,
        iterations: usize,
        fingerprint: u64,
    },
    #[error("rank deficient: |r_{column}{column}| = {magnitude:e} below threshold {threshold:e}")]
    RankDeficient {
        column: usize,
        magnitude: f64,
        threshold: f64,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Dense complex matrix, stored column-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.n_rows, self.n_cols)?;
        for i in 0..self.n_rows {
            write!(f, "  ")?;
            for j in 0..self.n_cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Result<Self, LinalgError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(LinalgError::InvalidShape {
                rows: n_rows,
                cols: n_cols,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            data: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        Ok(m)
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(
        n_rows: usize,
        n_cols: usize,
        entries: &[Complex64],
    ) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(n_rows, n_cols)?;
        if entries.len() != n_rows * n_cols {
            return Err(LinalgError::EntryCount {
                rows: n_rows,
                cols: n_cols,
                got: entries.len(),
            });
        }
        for i in 0..n_rows {
            for j in 0..n_cols {
                let z = entries[i * n_cols + j];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                m.set(i, j, z);
            }
        }
        Ok(m)
    }

    /// Builds an `n_rows x n_cols` matrix by evaluating `f(i, j)` in row-major order.
    pub fn from_fn(
        n_rows: usize,
        n_cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(n_rows, n_cols)?;
        for i in 0..n_rows {
            for j in 0..n_cols {
                let z = f(i, j);
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                m.set(i, j, z);
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[j * self.n_rows + i] = z;
    }

    #[inline]
    fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|z| *z *= c);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            data: vec![Complex64::new(0.0, 0.0); self.data.len()],
        };
        for j in 0..self.n_cols {
            for i in 0..self.n_rows {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), LinalgError> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(LinalgError::DimensionMismatch {
                left: self.n_rows * self.n_cols,
                right: other.n_rows * other.n_cols,
            });
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += *b);
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.n_cols != other.n_rows {
            return Err(LinalgError::DimensionMismatch {
                left: self.n_cols,
                right: other.n_rows,
            });
        }
        let mut out = Self::zeros(self.n_rows, other.n_cols)?;
        for j in 0..other.n_cols {
            let dst = &mut out.data[j * self.n_rows..(j + 1) * self.n_rows];
            for k in 0..self.n_cols {
                axpy(other.get(k, j), self.col(k), dst);
            }
        }
        Ok(out)
    }

    /// `A A^dagger`, Hermitian by construction (the upper triangle mirrors the lower).
    pub fn gram(&self) -> Self {
        let (n, m) = (self.n_rows, self.n_cols);
        let mut rows_re = vec![0.0; n * m];
        let mut rows_im = vec![0.0; n * m];
        for j in 0..m {
            for i in 0..n {
                let z = self.get(i, j);
                rows_re[i * m + j] = z.re;
                rows_im[i * m + j] = z.im;
            }
        }
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        kernels::gram_lower(&rows_re, &rows_im, n, m, &mut re, &mut im);
        for j in 0..n {
            for i in j + 1..n {
                re[i * n + j] = re[j * n + i];
                im[i * n + j] = -im[j * n + i];
            }
        }
        Self::from_planes(Planes { n, re, im })
    }

    fn to_planes(&self) -> Planes {
        Planes {
            n: self.n_rows,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
    }

    fn from_planes(p: Planes) -> Self {
        Self {
            n_rows: p.n,
            n_cols: p.n,
            data: p
                .re
                .iter()
                .zip(&p.im)
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
        }
    }

    /// Largest entrywise deviation `max |A - A^dagger|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for j in 0..self.n_cols {
            for i in j..self.n_rows {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// FNV-1a over the entry bits, used to identify a matrix in diagnostics.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for z in &self.data {
            for w in [z.re.to_bits(), z.im.to_bits()] {
                for b in w.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// `sum_k conj(x_k) y_k`
#[inline]
fn dotc(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let xs = x.chunks_exact(4);
    let ys = y.chunks_exact(4);
    let (xr, yr) = (xs.remainder(), ys.remainder());
    for (a, b) in xs.zip(ys) {
        for l in 0..4 {
            re[l] += a[l].re * b[l].re + a[l].im * b[l].im;
            im[l] += a[l].re * b[l].im - a[l].im * b[l].re;
        }
    }
    let mut acc = Complex64::new(re[0] + re[1] + re[2] + re[3], im[0] + im[1] + im[2] + im[3]);
    for (a, b) in xr.iter().zip(yr) {
        acc += a.conj() * b;
    }
    acc
}

/// `y += alpha x`
#[inline]
fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += alpha.re * xi.re - alpha.im * xi.im;
        yi.im += alpha.re * xi.im + alpha.im * xi.re;
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpectrum {
    values: Vec<f64>,
}

impl HermitianSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<HermitianSpectrum, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NonSquare {
            rows: h.n_rows,
            cols: h.n_cols,
        });
    }
    let tolerance = 1e-10 * h.max_abs();
    let deviation = h.hermitian_deviation();
    if deviation > tolerance {
        return Err(LinalgError::NotHermitian {
            deviation,
            tolerance,
        });
    }
    let n = h.n_rows;
    let (mut diag, off) = kernels::tridiagonalize(h.to_planes());
    tridiagonal_ql(&mut diag, &off, 64 * n).map_err(|iterations| {
        LinalgError::NoConvergence {
            n,
            iterations,
            fingerprint: h.fingerprint(),
        }
    })?;
    diag.sort_by(|a, b| a.total_cmp(b));
    Ok(HermitianSpectrum { values: diag })
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix,
/// eigenvalues only. `off[i]` couples `diag[i]` and `diag[i+1]`.
/// Returns the iteration count on failure.
fn tridiagonal_ql(diag: &mut [f64], off: &[f64], max_iter: usize) -> Result<(), usize> {
    let n = diag.len();
    if n < 2 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let d = diag;
    let mut total = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > max_iter {
                return Err(total);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Haar-correct unitary from the QR factorization of a square matrix:
/// returns `Q D` with `D = diag(r_ii / |r_ii|)`.
pub fn unitary_from_qr(g: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !g.is_square() {
        return Err(LinalgError::NonSquare {
            rows: g.n_rows,
            cols: g.n_cols,
        });
    }
    let threshold = 1e-12 * g.frobenius_norm();
    match kernels::qr_unitary(g.to_planes(), threshold) {
        QrOutcome::Unitary(p) => Ok(ComplexMatrix::from_planes(p)),
        QrOutcome::RankDeficient { column, magnitude } => Err(LinalgError::RankDeficient {
            column,
            magnitude,
            threshold,
        }),
    }
}

/// `max |U^dagger U - I|`
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.n_cols;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = dotc(u.col(i), u.col(j));
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((z - target).norm());
        }
    }
    worst
}
