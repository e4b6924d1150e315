//! Split-plane (separate real and imaginary arrays) kernels behind the
//! public linalg operations. Every routine has a fixed reduction order, so
//! the AVX2 build selected at runtime produces bit-identical results to the
//! baseline build.

const LANES: usize = 8;

/// Column-major complex matrix as two real planes.
pub(super) struct Planes {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

macro_rules! dispatch {
    ($(#[$m:meta])* $vis:vis fn $name:ident => $imp:ident ( $($arg:ident : $ty:ty),* ) -> $ret:ty) => {
        $(#[$m])*
        $vis fn $name($($arg: $ty),*) -> $ret {
            #[cfg(target_arch = "x86_64")]
            {
                if std::is_x86_feature_detected!("avx2") {
                    #[target_feature(enable = "avx2")]
                    unsafe fn wide($($arg: $ty),*) -> $ret {
                        $imp($($arg),*)
                    }
                    // SAFETY: the required CPU feature was detected above.
                    return unsafe { wide($($arg),*) };
                }
            }
            $imp($($arg),*)
        }
    };
}

#[inline(always)]
fn lane_sum(v: [f64; LANES]) -> f64 {
    ((v[0] + v[4]) + (v[1] + v[5])) + ((v[2] + v[6]) + (v[3] + v[7]))
}

/// `sum_k conj(x_k) y_k`
#[inline(always)]
fn dotc(xr: &[f64], xi: &[f64], yr: &[f64], yi: &[f64]) -> (f64, f64) {
    let n = xr.len();
    let (xi, yr, yi) = (&xi[..n], &yr[..n], &yi[..n]);
    let mut re = [0.0; LANES];
    let mut im = [0.0; LANES];
    let body = n - n % LANES;
    for o in (0..body).step_by(LANES) {
        let a: &[f64; LANES] = xr[o..o + LANES].try_into().unwrap();
        let b: &[f64; LANES] = xi[o..o + LANES].try_into().unwrap();
        let c: &[f64; LANES] = yr[o..o + LANES].try_into().unwrap();
        let d: &[f64; LANES] = yi[o..o + LANES].try_into().unwrap();
        for l in 0..LANES {
            re[l] += a[l] * c[l] + b[l] * d[l];
            im[l] += a[l] * d[l] - b[l] * c[l];
        }
    }
    let (mut sr, mut si) = (lane_sum(re), lane_sum(im));
    for k in body..n {
        sr += xr[k] * yr[k] + xi[k] * yi[k];
        si += xr[k] * yi[k] - xi[k] * yr[k];
    }
    (sr, si)
}

/// `sum_k conj(x_k) y_k` for four `y` rows at once.
#[inline(always)]
fn dotc4(xr: &[f64], xi: &[f64], ys: [(&[f64], &[f64]); 4]) -> [(f64, f64); 4] {
    let n = xr.len();
    let xi = &xi[..n];
    let ys = ys.map(|(r, i)| (&r[..n], &i[..n]));
    let mut re = [[0.0; LANES]; 4];
    let mut im = [[0.0; LANES]; 4];
    let body = n - n % LANES;
    for o in (0..body).step_by(LANES) {
        let a: &[f64; LANES] = xr[o..o + LANES].try_into().unwrap();
        let b: &[f64; LANES] = xi[o..o + LANES].try_into().unwrap();
        for (t, (yr, yi)) in ys.iter().enumerate() {
            let c: &[f64; LANES] = yr[o..o + LANES].try_into().unwrap();
            let d: &[f64; LANES] = yi[o..o + LANES].try_into().unwrap();
            for l in 0..LANES {
                re[t][l] += a[l] * c[l] + b[l] * d[l];
                im[t][l] += a[l] * d[l] - b[l] * c[l];
            }
        }
    }
    let mut out = [(0.0, 0.0); 4];
    for (t, (yr, yi)) in ys.iter().enumerate() {
        let (mut sr, mut si) = (lane_sum(re[t]), lane_sum(im[t]));
        for k in body..n {
            sr += xr[k] * yr[k] + xi[k] * yi[k];
            si += xr[k] * yi[k] - xi[k] * yr[k];
        }
        out[t] = (sr, si);
    }
    out
}

/// Applies `I - t v v^dagger` to two columns in one pass over `v`.
#[inline(always)]
fn reflect_pair(
    t: (f64, f64),
    vr: &[f64],
    vi: &[f64],
    (ar, ai): (&mut [f64], &mut [f64]),
    (br, bi): (&mut [f64], &mut [f64]),
) {
    let n = vr.len();
    let (vi, ar, ai, br, bi) = (&vi[..n], &mut ar[..n], &mut ai[..n], &mut br[..n], &mut bi[..n]);
    let mut acc = [[0.0; LANES]; 4];
    let body = n - n % LANES;
    for o in (0..body).step_by(LANES) {
        let p: &[f64; LANES] = vr[o..o + LANES].try_into().unwrap();
        let q: &[f64; LANES] = vi[o..o + LANES].try_into().unwrap();
        let c: &[f64; LANES] = ar[o..o + LANES].try_into().unwrap();
        let d: &[f64; LANES] = ai[o..o + LANES].try_into().unwrap();
        let e: &[f64; LANES] = br[o..o + LANES].try_into().unwrap();
        let f: &[f64; LANES] = bi[o..o + LANES].try_into().unwrap();
        for l in 0..LANES {
            acc[0][l] += p[l] * c[l] + q[l] * d[l];
            acc[1][l] += p[l] * d[l] - q[l] * c[l];
            acc[2][l] += p[l] * e[l] + q[l] * f[l];
            acc[3][l] += p[l] * f[l] - q[l] * e[l];
        }
    }
    let mut s = acc.map(lane_sum);
    for k in body..n {
        s[0] += vr[k] * ar[k] + vi[k] * ai[k];
        s[1] += vr[k] * ai[k] - vi[k] * ar[k];
        s[2] += vr[k] * br[k] + vi[k] * bi[k];
        s[3] += vr[k] * bi[k] - vi[k] * br[k];
    }
    let wa = cmul(t, (s[0], s[1]));
    let wb = cmul(t, (s[2], s[3]));
    for k in 0..n {
        let (p, q) = (vr[k], vi[k]);
        ar[k] -= wa.0 * p - wa.1 * q;
        ai[k] -= wa.0 * q + wa.1 * p;
        br[k] -= wb.0 * p - wb.1 * q;
        bi[k] -= wb.0 * q + wb.1 * p;
    }
}

/// Applies `I - t v v^dagger` to every length-`len` column starting at row
/// `row0` of columns `cols` of an `n`-row plane pair.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn reflect_columns(
    t: (f64, f64),
    vr: &[f64],
    vi: &[f64],
    re: &mut [f64],
    im: &mut [f64],
    n: usize,
    row0: usize,
    cols: std::ops::Range<usize>,
) {
    let len = vr.len();
    let mut c = cols.start;
    while c + 1 < cols.end {
        let (r1, r2) = re[c * n..(c + 2) * n].split_at_mut(n);
        let (i1, i2) = im[c * n..(c + 2) * n].split_at_mut(n);
        reflect_pair(
            t,
            vr,
            vi,
            (&mut r1[row0..row0 + len], &mut i1[row0..row0 + len]),
            (&mut r2[row0..row0 + len], &mut i2[row0..row0 + len]),
        );
        c += 2;
    }
    if c < cols.end {
        let (cr, ci) = (
            &mut re[c * n + row0..c * n + row0 + len],
            &mut im[c * n + row0..c * n + row0 + len],
        );
        let w = cmul(t, dotc(vr, vi, cr, ci));
        axpy((-w.0, -w.1), vr, vi, cr, ci);
    }
}

/// `y += a x`
#[inline(always)]
fn axpy(a: (f64, f64), xr: &[f64], xi: &[f64], yr: &mut [f64], yi: &mut [f64]) {
    let n = xr.len();
    let (xi, yr, yi) = (&xi[..n], &mut yr[..n], &mut yi[..n]);
    for k in 0..n {
        let (p, q) = (xr[k], xi[k]);
        yr[k] += a.0 * p - a.1 * q;
        yi[k] += a.0 * q + a.1 * p;
    }
}

/// `y += a x + b z`
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn axpy2(
    a: (f64, f64),
    xr: &[f64],
    xi: &[f64],
    b: (f64, f64),
    zr: &[f64],
    zi: &[f64],
    yr: &mut [f64],
    yi: &mut [f64],
) {
    let n = xr.len();
    let (xi, zr, zi, yr, yi) = (&xi[..n], &zr[..n], &zi[..n], &mut yr[..n], &mut yi[..n]);
    for k in 0..n {
        let (p, q, s, t) = (xr[k], xi[k], zr[k], zi[k]);
        yr[k] += (a.0 * p - a.1 * q) + (b.0 * s - b.1 * t);
        yi[k] += (a.0 * q + a.1 * p) + (b.0 * t + b.1 * s);
    }
}

#[inline(always)]
fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

#[inline(always)]
fn conj(a: (f64, f64)) -> (f64, f64) {
    (a.0, -a.1)
}

/// Reflector `H = I - tau v v^dagger`, `v[0] = 1`, with `H^dagger x = beta e_1`.
/// Overwrites `x[1..]` with `v[1..]` and `x[0]` with 1.
#[inline(always)]
fn householder(xr: &mut [f64], xi: &mut [f64]) -> ((f64, f64), f64) {
    let alpha = (xr[0], xi[0]);
    let mut ss = 0.0;
    for k in 1..xr.len() {
        ss += xr[k] * xr[k] + xi[k] * xi[k];
    }
    let xnorm = ss.sqrt();
    if xnorm == 0.0 && alpha.1 == 0.0 {
        return ((0.0, 0.0), alpha.0);
    }
    let norm = alpha.0.hypot(alpha.1).hypot(xnorm);
    let beta = if alpha.0 >= 0.0 { -norm } else { norm };
    let tau = ((beta - alpha.0) / beta, -alpha.1 / beta);
    // 1 / (alpha - beta)
    let (dr, di) = (alpha.0 - beta, alpha.1);
    let den = dr * dr + di * di;
    let scale = (dr / den, -di / den);
    for k in 1..xr.len() {
        let z = cmul(scale, (xr[k], xi[k]));
        xr[k] = z.0;
        xi[k] = z.1;
    }
    xr[0] = 1.0;
    xi[0] = 0.0;
    (tau, beta)
}

dispatch! {
    /// Lower triangle (column-major) of `A A^dagger` for a row-major copy of `A`
    /// given as `rows_re/rows_im` with `m` columns.
    pub(super) fn gram_lower => gram_lower_impl(rows_re: &[f64], rows_im: &[f64], n: usize, m: usize, out_re: &mut [f64], out_im: &mut [f64]) -> ()
}

#[inline(always)]
fn gram_lower_impl(
    rows_re: &[f64],
    rows_im: &[f64],
    n: usize,
    m: usize,
    out_re: &mut [f64],
    out_im: &mut [f64],
) {
    let row = |i: usize| (&rows_re[i * m..(i + 1) * m], &rows_im[i * m..(i + 1) * m]);
    for j in 0..n {
        let (jr, ji) = row(j);
        let mut i = j;
        while i + 4 <= n {
            let z = dotc4(jr, ji, [row(i), row(i + 1), row(i + 2), row(i + 3)]);
            for (t, (zr, zi)) in z.into_iter().enumerate() {
                out_re[j * n + i + t] = zr;
                out_im[j * n + i + t] = zi;
            }
            i += 4;
        }
        while i < n {
            let (ir, ii) = row(i);
            let (zr, zi) = dotc(jr, ji, ir, ii);
            out_re[j * n + i] = zr;
            out_im[j * n + i] = zi;
            i += 1;
        }
        out_im[j * n + j] = 0.0;
    }
}

dispatch! {
    /// Householder reduction of a Hermitian matrix (lower triangle read) to
    /// real symmetric tridiagonal form. Returns (diagonal, subdiagonal).
    pub(super) fn tridiagonalize => tridiagonalize_impl(a: Planes) -> (Vec<f64>, Vec<f64>)
}

#[inline(always)]
fn tridiagonalize_impl(a: Planes) -> (Vec<f64>, Vec<f64>) {
    let Planes {
        n,
        re: mut are,
        im: mut aim,
    } = a;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut pr = vec![0.0; n];
    let mut pi = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        diag[k] = are[k * n + k];
        let (hr, tr) = are.split_at_mut((k + 1) * n);
        let (hi, ti) = aim.split_at_mut((k + 1) * n);
        let vr = &mut hr[k * n + k + 1..];
        let vi = &mut hi[k * n + k + 1..];
        let (tau, beta) = householder(vr, vi);
        off[k] = beta;
        if tau == (0.0, 0.0) {
            continue;
        }
        let (vr, vi): (&[f64], &[f64]) = (vr, vi);
        let (pr, pi) = (&mut pr[..m], &mut pi[..m]);
        pr.fill(0.0);
        pi.fill(0.0);
        // p = A22 v from the lower triangle.
        for c in 0..m {
            let base = c * n + k + 1 + c;
            let (br, bi) = (&tr[base..(c + 1) * n], &ti[base..(c + 1) * n]);
            let vc = (vr[c], vi[c]);
            pr[c] += br[0] * vc.0;
            pi[c] += br[0] * vc.1;
            let (pr_lo, pr_hi) = pr.split_at_mut(c + 1);
            let (pi_lo, pi_hi) = pi.split_at_mut(c + 1);
            axpy(vc, &br[1..], &bi[1..], pr_hi, pi_hi);
            let d = dotc(&br[1..], &bi[1..], &vr[c + 1..], &vi[c + 1..]);
            pr_lo[c] += d.0;
            pi_lo[c] += d.1;
        }
        for c in 0..m {
            let z = cmul(tau, (pr[c], pi[c]));
            pr[c] = z.0;
            pi[c] = z.1;
        }
        // w = p - (conj(tau)/2)(v^dagger p) v
        let vp = dotc(vr, vi, pr, pi);
        let t = cmul(conj(tau), vp);
        axpy((-0.5 * t.0, -0.5 * t.1), vr, vi, pr, pi);
        // A22 -= v w^dagger + w v^dagger
        for c in 0..m {
            let base = c * n + k + 1 + c;
            let a = (-pr[c], pi[c]);
            let b = (-vr[c], vi[c]);
            axpy2(
                a,
                &vr[c..],
                &vi[c..],
                b,
                &pr[c..],
                &pi[c..],
                &mut tr[base..(c + 1) * n],
                &mut ti[base..(c + 1) * n],
            );
            ti[base] = 0.0;
        }
    }
    if n > 0 {
        diag[n - 1] = are[n * n - 1];
    }
    (diag, off)
}

/// Outcome of the QR-based unitary extraction.
pub(super) enum QrOutcome {
    Unitary(Planes),
    RankDeficient { column: usize, magnitude: f64 },
}

dispatch! {
    /// `Q D` from a Householder QR of `a`, with `D = diag(sign(r_ii))`; `r_ii` real.
    pub(super) fn qr_unitary => qr_unitary_impl(a: Planes, threshold: f64) -> QrOutcome
}

#[inline(always)]
fn qr_unitary_impl(a: Planes, threshold: f64) -> QrOutcome {
    let Planes {
        n,
        re: mut are,
        im: mut aim,
    } = a;
    let mut taus = vec![(0.0, 0.0); n];
    let mut signs = vec![1.0; n];
    for j in 0..n {
        let (hr, tr) = are.split_at_mut((j + 1) * n);
        let (hi, ti) = aim.split_at_mut((j + 1) * n);
        let vr = &mut hr[j * n + j..];
        let vi = &mut hi[j * n + j..];
        let (tau, beta) = householder(vr, vi);
        if beta.abs() <= threshold {
            return QrOutcome::RankDeficient {
                column: j,
                magnitude: beta.abs(),
            };
        }
        taus[j] = tau;
        signs[j] = beta.signum();
        let (vr, vi): (&[f64], &[f64]) = (vr, vi);
        reflect_columns(conj(tau), vr, vi, tr, ti, n, j, 0..n - j - 1);
    }
    let mut qr = vec![0.0; n * n];
    let mut qi = vec![0.0; n * n];
    for i in 0..n {
        qr[i * n + i] = 1.0;
    }
    let mut vr = vec![0.0; n];
    let mut vi = vec![0.0; n];
    for j in (0..n).rev() {
        let tau = taus[j];
        if tau == (0.0, 0.0) {
            continue;
        }
        let (vr, vi) = (&mut vr[j..], &mut vi[j..]);
        vr.copy_from_slice(&are[j * n + j..(j + 1) * n]);
        vi.copy_from_slice(&aim[j * n + j..(j + 1) * n]);
        vr[0] = 1.0;
        vi[0] = 0.0;
        let (vr, vi): (&[f64], &[f64]) = (vr, vi);
        reflect_columns(tau, vr, vi, &mut qr, &mut qi, n, j, j..n);
    }
    for (c, s) in signs.iter().enumerate() {
        if *s < 0.0 {
            qr[c * n..(c + 1) * n].iter_mut().for_each(|x| *x = -*x);
            qi[c * n..(c + 1) * n].iter_mut().for_each(|x| *x = -*x);
        }
    }
    QrOutcome::Unitary(Planes { n, re: qr, im: qi })
}
