//! Symmetric tridiagonal eigen-kernels: Sturm counts, bisection, twisted
//! factorizations and pivoted inverse iteration.
//!
//! Matrices are given by their diagonal `d` (length `n`) and off-diagonal
//! `e` (length `n - 1`).

use crate::error::{Error, Result};

/// Relative bracket width at which bisection stops.
pub const BISECTION_RTOL: f64 = 1e-12;
pub const MAX_BISECTION_STEPS: usize = 200;
pub const MAX_INVERSE_STEPS: usize = 5;

/// Gershgorin interval `[lo, hi]` containing the spectrum.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
        let right = if i < e.len() { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - left - right);
        hi = hi.max(d[i] + left + right);
    }
    (lo, hi)
}

/// Max-row-sum norm.
pub fn norm_inf(d: &[f64], e: &[f64]) -> f64 {
    let (lo, hi) = gershgorin(d, e);
    lo.abs().max(hi.abs())
}

fn pivmin(e: &[f64]) -> f64 {
    let emax = e.iter().fold(1.0f64, |m, &x| m.max(x * x));
    f64::MIN_POSITIVE * emax
}

/// Number of eigenvalues strictly below `sigma`.
pub fn sturm_count(d: &[f64], e: &[f64], sigma: f64) -> usize {
    let guard = pivmin(e);
    let mut count = 0;
    let mut q = d[0] - sigma;
    if q.abs() < guard {
        q = -guard;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - sigma - e[i - 1] * e[i - 1] / q;
        if q.abs() < guard {
            q = -guard;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on `[lo, hi]`.
pub fn bisect_eigenvalue(d: &[f64], e: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_RTOL * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A vector stored as `sign · exp(log_abs)` so that exponentially small tails
/// stay representable.
#[derive(Debug, Clone, PartialEq)]
pub struct LogVector {
    pub log_abs: Vec<f64>,
    pub positive: Vec<bool>,
}

impl LogVector {
    pub fn from_linear(v: &[f64]) -> Self {
        Self {
            log_abs: v.iter().map(|x| x.abs().ln()).collect(),
            positive: v.iter().map(|&x| x >= 0.0).collect(),
        }
    }

    /// Flip the global sign so the largest entry is positive.
    pub fn normalize_sign(&mut self) {
        let imax = argmax(&self.log_abs);
        if !self.positive[imax] {
            for s in self.positive.iter_mut() {
                *s = !*s;
            }
        }
    }

    /// Linear values scaled to max-abs 1.
    pub fn to_linear(&self) -> Vec<f64> {
        let top = self
            .log_abs
            .iter()
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        self.log_abs
            .iter()
            .zip(&self.positive)
            .map(|(&l, &p)| {
                let v = (l - top).exp();
                if p {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }

    pub fn one_signed(&self) -> bool {
        self.positive.iter().all(|&p| p) || self.positive.iter().all(|&p| !p)
    }
}

fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Eigenvector approximation from the twisted factorization of `A - σI`:
/// one step of inverse iteration started from the best-conditioned unit
/// vector `e_k`, accumulated in log space.
pub fn twisted_vector(d: &[f64], e: &[f64], sigma: f64) -> LogVector {
    let n = d.len();
    if n == 1 {
        return LogVector {
            log_abs: vec![0.0],
            positive: vec![true],
        };
    }
    let guard = pivmin(e);
    let fix = |q: f64| if q.abs() < guard { -guard } else { q };

    let mut dp = vec![0.0; n];
    dp[0] = fix(d[0] - sigma);
    for i in 1..n {
        dp[i] = fix(d[i] - sigma - e[i - 1] * e[i - 1] / dp[i - 1]);
    }
    let mut dm = vec![0.0; n];
    dm[n - 1] = fix(d[n - 1] - sigma);
    for i in (0..n - 1).rev() {
        dm[i] = fix(d[i] - sigma - e[i] * e[i] / dm[i + 1]);
    }
    let mut k = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let gamma = (dp[i] + dm[i] - (d[i] - sigma)).abs();
        if gamma < best {
            best = gamma;
            k = i;
        }
    }

    let mut log_abs = vec![0.0; n];
    let mut positive = vec![true; n];
    for i in (0..k).rev() {
        // z_i = -(e_i / D+_i) z_{i+1}
        let ratio = -e[i] / dp[i];
        log_abs[i] = log_abs[i + 1] + ratio.abs().ln();
        positive[i] = positive[i + 1] == (ratio > 0.0);
    }
    for i in k + 1..n {
        let ratio = -e[i - 1] / dm[i];
        log_abs[i] = log_abs[i - 1] + ratio.abs().ln();
        positive[i] = positive[i - 1] == (ratio > 0.0);
    }
    let mut v = LogVector { log_abs, positive };
    v.normalize_sign();
    v
}

/// `A v` for the tridiagonal matrix.
pub fn apply(d: &[f64], e: &[f64], v: &[f64]) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let mut acc = d[i] * v[i];
            if i > 0 {
                acc += e[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += e[i] * v[i + 1];
            }
            acc
        })
        .collect()
}

/// `max_i |(A v)_i - λ v_i| / max_i |v_i|`.
pub fn residual_sup(d: &[f64], e: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let av = apply(d, e, v);
    let num = av
        .iter()
        .zip(v)
        .fold(0.0f64, |m, (a, x)| m.max((a - lambda * x).abs()));
    let den = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    num / den
}

/// `vᵀAv / vᵀv`.
pub fn rayleigh_quotient(d: &[f64], e: &[f64], v: &[f64]) -> f64 {
    let av = apply(d, e, v);
    let num: f64 = av.iter().zip(v).map(|(a, x)| a * x).sum();
    let den: f64 = v.iter().map(|x| x * x).sum();
    num / den
}

/// LU factorization of `A - σI` with partial pivoting (one extra
/// super-diagonal from row swaps).
struct PivotedLu {
    diag: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl PivotedLu {
    fn new(d: &[f64], e: &[f64], sigma: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut a: Vec<f64> = d.iter().map(|x| x - sigma).collect();
        let mut bl = e.to_vec();
        let mut c = e.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if a[i].abs() >= bl[i].abs() {
                if a[i] == 0.0 {
                    a[i] = tiny;
                }
                let fact = bl[i] / a[i];
                bl[i] = fact;
                a[i + 1] -= fact * c[i];
            } else {
                let fact = a[i] / bl[i];
                a[i] = bl[i];
                bl[i] = fact;
                let temp = c[i];
                c[i] = a[i + 1];
                a[i + 1] = temp - fact * a[i + 1];
                if i + 2 < n {
                    du2[i] = c[i + 1];
                    c[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for x in a.iter_mut() {
            if *x == 0.0 {
                *x = tiny;
            }
        }
        Self {
            diag: a,
            lower: bl,
            upper: c,
            upper2: du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.lower[i] * b[i];
        }
        b[n - 1] /= self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
    }
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let uv: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        let c = uv / uu;
        for (x, y) in v.iter_mut().zip(u) {
            *x -= c * y;
        }
    }
}

fn scale_to_unit_max(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
}

/// Refines `start` by inverse iteration at shift `sigma`, orthogonalizing
/// against `against` after every solve, until the residual drops to `tol`.
/// `start` counts as the first iterate. A shift that lands exactly on an
/// eigenvalue is perturbed by a few ulps of the matrix norm.
pub fn inverse_iteration(
    d: &[f64],
    e: &[f64],
    sigma: f64,
    start: &[f64],
    against: &[Vec<f64>],
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let norm = norm_inf(d, e).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let lu = PivotedLu::new(d, e, sigma + tiny, tiny);
    let mut v = start.to_vec();
    orthogonalize(&mut v, against);
    scale_to_unit_max(&mut v);
    let mut res = residual_sup(d, e, sigma, &v);
    for _ in 1..MAX_INVERSE_STEPS {
        if res <= tol {
            break;
        }
        lu.solve(&mut v);
        orthogonalize(&mut v, against);
        scale_to_unit_max(&mut v);
        res = residual_sup(d, e, sigma, &v);
    }
    if !(res <= tol) {
        return Err(Error::Numerical(format!(
            "inverse iteration did not converge at shift {sigma}: residual {res:e} > {tol:e} \
             (clustered eigenvalues?)"
        )));
    }
    Ok((v, res))
}
