//! Truncated beta distribution primitives.
//!
//! The distribution is a beta density with shapes (theta1, theta2) restricted
//! to a support `[a, b]` inside `[0, 1]` and renormalized by the incomplete
//! beta mass on that interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::special::{beta_inc_reg, ln_beta};
use crate::{Error, Result};

/// Supports narrower than this destroy the conditioning of the normalizer.
const MIN_SUPPORT_WIDTH: f64 = 1e-6;

/// Quantile root-finding controls.
const QUANTILE_XTOL: f64 = 1e-12;
const QUANTILE_MAX_ITER: usize = 200;

/// Shape parameters and truncation support defining one truncated beta
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TbetaParams {
    theta1: f64,
    theta2: f64,
    a: f64,
    b: f64,
}

impl TbetaParams {
    /// Validates and builds a parameter set: shapes strictly positive,
    /// `0 <= a < b <= 1`, and `b - a` wide enough to normalize.
    pub fn new(theta1: f64, theta2: f64, a: f64, b: f64) -> Result<Self> {
        if !(theta1.is_finite() && theta1 > 0.0) || !(theta2.is_finite() && theta2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shapes must be positive and finite, got ({theta1}, {theta2})"
            )));
        }
        if !(0.0..1.0).contains(&a) || !(a < b && b <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation points must satisfy 0 <= a < b <= 1, got [{a}, {b}]"
            )));
        }
        if b - a < MIN_SUPPORT_WIDTH {
            return Err(Error::InvalidParameter(format!(
                "support width {} below {MIN_SUPPORT_WIDTH}",
                b - a
            )));
        }
        Ok(Self { theta1, theta2, a, b })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Same support, different shapes.
    pub fn with_shapes(&self, theta1: f64, theta2: f64) -> Result<Self> {
        Self::new(theta1, theta2, self.a, self.b)
    }

    /// Regularized incomplete beta values at the truncation points.
    fn reg_span(&self) -> (f64, f64) {
        (
            beta_inc_reg(self.theta1, self.theta2, self.a),
            beta_inc_reg(self.theta1, self.theta2, self.b),
        )
    }

    /// `ln(I_b - I_a)`, the log of the unnormalized mass on the support.
    pub(crate) fn ln_norm(&self) -> Result<f64> {
        let (reg_a, reg_b) = self.reg_span();
        let diff = reg_b - reg_a;
        if !diff.is_finite() || diff <= 0.0 {
            return Err(Error::DegenerateSupport { a: self.a, b: self.b });
        }
        Ok(ln_beta(self.theta1, self.theta2) + diff.ln())
    }

    /// Density at `x`: `x^(theta1-1) (1-x)^(theta2-1) / (I_b - I_a)` on the
    /// support, zero outside it.
    ///
    /// At a support endpoint sitting exactly on 0 or 1 with a shape below 1
    /// the density diverges; the signaled infinity is returned rather than an
    /// error so likelihood code can guard on its own terms.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < self.a || x > self.b || x.is_nan() {
            return Ok(0.0);
        }
        let ln_norm = self.ln_norm()?;
        // powf handles the 0^0 = 1 and 0^negative = inf endpoint conventions.
        if x == 0.0 || x == 1.0 {
            let num = x.powf(self.theta1 - 1.0) * (1.0 - x).powf(self.theta2 - 1.0);
            if num.is_infinite() {
                return Ok(f64::INFINITY);
            }
            return Ok(if num == 0.0 { 0.0 } else { (num.ln() - ln_norm).exp() });
        }
        let ln_num = (self.theta1 - 1.0) * x.ln() + (self.theta2 - 1.0) * (-x).ln_1p();
        Ok((ln_num - ln_norm).exp())
    }

    /// Distribution function: 0 below `a`, 1 above `b`, the normalized
    /// incomplete-beta ratio in between.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= self.a {
            return Ok(0.0);
        }
        if x >= self.b {
            return Ok(1.0);
        }
        let (reg_a, reg_b) = self.reg_span();
        let denom = reg_b - reg_a;
        if !denom.is_finite() || denom <= 0.0 {
            return Err(Error::DegenerateSupport { a: self.a, b: self.b });
        }
        let reg_x = beta_inc_reg(self.theta1, self.theta2, x);
        Ok(((reg_x - reg_a) / denom).clamp(0.0, 1.0))
    }

    /// Inverse CDF by Brent bracketing on `[a, b]`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "quantile probability must lie in (0, 1), got {p}"
            )));
        }
        // f is monotone with f(a) = -p < 0 and f(b) = 1 - p > 0.
        let f = |x: f64| -> Result<f64> { Ok(self.cdf(x)? - p) };
        let x = brent_root(f, self.a, self.b, -p, 1.0 - p)?;
        let resid = (self.cdf(x)? - p).abs();
        if resid > 1e-10 {
            return Err(Error::Convergence(format!(
                "quantile residual {resid:.3e} at p={p} for shapes ({}, {})",
                self.theta1, self.theta2
            )));
        }
        Ok(x)
    }

    /// Inverse-transform samples using a caller-owned RNG.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut u: f64 = rng.gen();
            while u == 0.0 {
                u = rng.gen();
            }
            out.push(self.quantile(u)?);
        }
        Ok(out)
    }

    /// Deterministic inverse-transform sampling from a seed.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::Domain("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }
}

/// Unnormalized incomplete beta integral of `u^(theta1-1) (1-u)^(theta2-1)`
/// over `[0, c]`; equals the complete beta function at `c = 1`.
pub fn incomplete_beta_unnorm(c: f64, theta1: f64, theta2: f64) -> Result<f64> {
    if !(theta1 > 0.0 && theta2 > 0.0) {
        return Err(Error::Domain(format!(
            "shapes must be positive, got ({theta1}, {theta2})"
        )));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Domain(format!(
            "integration endpoint must lie in [0, 1], got {c}"
        )));
    }
    Ok(beta_inc_reg(theta1, theta2, c) * ln_beta(theta1, theta2).exp())
}

/// Brent root bracketing on [lo, hi] with f(lo) = flo < 0 < fhi = f(hi).
fn brent_root<F>(mut f: F, lo: f64, hi: f64, flo: f64, fhi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (flo, fhi);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..QUANTILE_MAX_ITER {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * QUANTILE_XTOL;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, falling back to secant.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * xm.signum() };
        fb = f(b)?;
    }
    Err(Error::Convergence(format!(
        "root bracketing exhausted {QUANTILE_MAX_ITER} iterations on [{lo}, {hi}]"
    )))
}
