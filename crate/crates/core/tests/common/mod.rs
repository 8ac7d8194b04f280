//! Quadrature-based oracles shared by the integration tests. These evaluate
//! the truncated-beta integrals directly and stay independent of the
//! continued-fraction implementation they check.

#![allow(dead_code)]

/// Adaptive Simpson quadrature with recursive interval halving.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let (flmid, frmid) = (f(lmid), f(rmid));
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_step(f, lo, mid, flo, flmid, fmid, left, tol / 2.0, depth - 1)
            + simpson_step(f, mid, hi, fmid, frmid, fhi, right, tol / 2.0, depth - 1)
    }
}

/// The unnormalized beta integrand u^(t1-1) (1-u)^(t2-1).
pub fn integrand(t1: f64, t2: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| u.powf(t1 - 1.0) * (1.0 - u).powf(t2 - 1.0)
}

/// Oracle for the unnormalized incomplete beta integral over [0, c].
pub fn oracle_incomplete_beta(c: f64, t1: f64, t2: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    adaptive_simpson(&integrand(t1, t2), 0.0, c, 1e-13)
}

/// Oracle truncated-beta density at x via a Simpson-integrated normalizer.
pub fn oracle_pdf(x: f64, t1: f64, t2: f64, a: f64, b: f64) -> f64 {
    if x < a || x > b {
        return 0.0;
    }
    let norm = adaptive_simpson(&integrand(t1, t2), a, b, 1e-13);
    integrand(t1, t2)(x) / norm
}

/// Oracle truncated-beta CDF at x as a ratio of Simpson integrals.
pub fn oracle_cdf(x: f64, t1: f64, t2: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        return 0.0;
    }
    if x >= b {
        return 1.0;
    }
    let g = integrand(t1, t2);
    adaptive_simpson(&g, a, x, 1e-13) / adaptive_simpson(&g, a, b, 1e-13)
}

/// Oracle log-likelihood: sum of log oracle densities.
pub fn oracle_loglik(data: &[f64], t1: f64, t2: f64, a: f64, b: f64) -> f64 {
    let norm = adaptive_simpson(&integrand(t1, t2), a, b, 1e-13);
    data.iter()
        .map(|&x| (t1 - 1.0) * x.ln() + (t2 - 1.0) * (1.0 - x).ln() - norm.ln())
        .sum()
}

/// Two-sided K-S distance of a sample against an arbitrary CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}
