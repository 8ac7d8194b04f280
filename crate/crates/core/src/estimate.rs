//! Maximum-likelihood estimation for the truncated beta model, percentile
//! estimation, and Kolmogorov-Smirnov goodness of fit.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::TbetaParams;
use crate::optim::NelderMead;
use crate::{derive_seed, Error, Result};

/// Shape estimates are clamped to this box during the simplex search; the
/// method-of-moments warm start is clamped to [0.1, 100].
const SHAPE_LO: f64 = 1e-4;
const SHAPE_HI: f64 = 1e6;

/// Phase-I/Phase-II observations organized as `k` subgroups of size `n`.
#[derive(Debug, Clone)]
pub struct SubgroupData {
    groups: Vec<Vec<f64>>,
}

impl SubgroupData {
    /// Builds from explicit subgroups; all must share a size `n >= 2`.
    pub fn from_groups(groups: Vec<Vec<f64>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Domain("at least one subgroup is required".into()));
        }
        let n = groups[0].len();
        if n < 2 {
            return Err(Error::Domain("subgroup size must be at least 2".into()));
        }
        if groups.iter().any(|g| g.len() != n) {
            return Err(Error::Domain("subgroups must all have the same size".into()));
        }
        Ok(Self { groups })
    }

    /// Partitions pooled observations into subgroups of size `n` in order.
    pub fn from_pooled(observations: Vec<f64>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("subgroup size must be at least 2".into()));
        }
        if observations.is_empty() || !observations.len().is_multiple_of(n) {
            return Err(Error::Domain(format!(
                "{} observations cannot be partitioned into subgroups of size {n}",
                observations.len()
            )));
        }
        let groups = observations.chunks(n).map(|c| c.to_vec()).collect();
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<f64>] {
        &self.groups
    }

    /// Subgroup size.
    pub fn n(&self) -> usize {
        self.groups[0].len()
    }

    /// Subgroup count.
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Total observation count `n * k`.
    pub fn m(&self) -> usize {
        self.n() * self.k()
    }

    /// All observations in subgroup order.
    pub fn pooled(&self) -> Vec<f64> {
        self.groups.iter().flatten().copied().collect()
    }
}

/// Result of maximizing the truncated-beta log-likelihood.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: TbetaParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Sum of log densities over all observations. Returns negative infinity
/// when any observation has zero density under `params`.
pub fn log_likelihood(data: &[f64], params: &TbetaParams) -> Result<f64> {
    validate_support(data, params.a(), params.b())?;
    let mut total = 0.0;
    for &x in data {
        let d = params.pdf(x)?;
        if d == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += d.ln();
    }
    Ok(total)
}

/// Maximizes the log-likelihood over the shapes for a fixed support, using a
/// Nelder-Mead search in log-parameter space.
pub fn fit_mle(
    data: &SubgroupData,
    a: f64,
    b: f64,
    init: Option<(f64, f64)>,
) -> Result<FitResult> {
    fit_slice(&data.pooled(), a, b, init)
}

/// Flat-slice fitter used by `fit_mle` and by the per-subgroup and bootstrap
/// hot paths.
pub(crate) fn fit_slice(
    obs: &[f64],
    a: f64,
    b: f64,
    init: Option<(f64, f64)>,
) -> Result<FitResult> {
    if obs.len() < 2 {
        return Err(Error::Domain("need at least 2 observations to fit".into()));
    }
    validate_support(obs, a, b)?;

    let m = obs.len() as f64;
    let mean = obs.iter().sum::<f64>() / m;
    let var = obs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    if var < 1e-12 {
        return Err(Error::DegenerateData(
            "sample variance below 1e-12; shapes are not identifiable".into(),
        ));
    }

    // Sufficient statistics for the two-parameter exponential family.
    let s1: f64 = obs.iter().map(|x| x.ln()).sum();
    let s2: f64 = obs.iter().map(|x| (-x).ln_1p()).sum();
    if !s1.is_finite() || !s2.is_finite() {
        return Err(Error::DegenerateData(
            "observations at the unit-interval boundary make the likelihood degenerate".into(),
        ));
    }

    let (init1, init2) = init.unwrap_or_else(|| moment_start(mean, var, a, b));
    let x0 = [init1.ln(), init2.ln()];

    let neg_ll = |logs: &[f64; 2]| -> f64 {
        let t1 = logs[0].exp();
        let t2 = logs[1].exp();
        if !(SHAPE_LO..=SHAPE_HI).contains(&t1) || !(SHAPE_LO..=SHAPE_HI).contains(&t2) {
            return f64::INFINITY;
        }
        let params = match TbetaParams::new(t1, t2, a, b) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        match params.ln_norm() {
            Ok(ln_norm) => m * ln_norm - (t1 - 1.0) * s1 - (t2 - 1.0) * s2,
            Err(_) => f64::INFINITY,
        }
    };

    let result = NelderMead::default().minimize(neg_ll, x0);
    if !result.value.is_finite() {
        return Err(Error::Convergence(
            "likelihood not finite anywhere the search visited".into(),
        ));
    }
    let params = TbetaParams::new(result.x[0].exp(), result.x[1].exp(), a, b)?;
    Ok(FitResult {
        params,
        loglik: -result.value,
        converged: result.converged,
        iterations: result.iterations,
    })
}

/// Percentile of the fitted distribution via the inverse CDF at the MLEs.
pub fn percentile_estimate(fit: &FitResult, p: f64) -> Result<f64> {
    fit.params.quantile(p)
}

/// Two-sided Kolmogorov-Smirnov statistic of `data` against the model CDF.
pub fn ks_statistic(data: &[f64], params: &TbetaParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Domain("K-S statistic of empty data".into()));
    }
    validate_support(data, params.a(), params.b())?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = params.cdf(x)?;
        let d_plus = (i as f64 + 1.0) / n - f;
        let d_minus = f - i as f64 / n;
        d = d.max(d_plus).max(d_minus);
    }
    Ok(d)
}

/// Parametric-bootstrap K-S p-value with per-replicate re-estimation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsPvalue {
    pub p_value: f64,
    pub replicates: usize,
    pub failed_replicates: usize,
}

/// Fraction of simulated samples (drawn from `params`, re-fit per replicate)
/// whose K-S statistic meets or exceeds `stat`. Failed replicates are dropped
/// and counted. Deterministic for a fixed seed.
pub fn ks_pvalue(
    stat: f64,
    sample_size: usize,
    params: &TbetaParams,
    reps: usize,
    seed: u64,
) -> Result<KsPvalue> {
    if reps < 1000 {
        return Err(Error::Domain(format!(
            "bootstrap p-value needs at least 1000 replicates, got {reps}"
        )));
    }
    if sample_size < 2 {
        return Err(Error::Domain("sample size must be at least 2".into()));
    }
    let outcomes: Vec<Option<bool>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let sim = params.sample(sample_size, derive_seed(seed, i as u64)).ok()?;
            let fit = fit_slice(&sim, params.a(), params.b(), None).ok()?;
            if !fit.converged {
                return None;
            }
            let d = ks_statistic(&sim, &fit.params).ok()?;
            Some(d >= stat)
        })
        .collect();

    let successes = outcomes.iter().filter(|o| o.is_some()).count();
    let failed = reps - successes;
    if successes == 0 {
        return Err(Error::Convergence(
            "every bootstrap replicate failed to fit".into(),
        ));
    }
    let exceed = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(KsPvalue {
        p_value: exceed as f64 / successes as f64,
        replicates: successes,
        failed_replicates: failed,
    })
}

/// Method-of-moments start for an untruncated beta on data rescaled from
/// [a, b] to [0, 1], clamped to [0.1, 100].
fn moment_start(mean: f64, var: f64, a: f64, b: f64) -> (f64, f64) {
    let w = b - a;
    let y = ((mean - a) / w).clamp(1e-6, 1.0 - 1e-6);
    let vy = var / (w * w);
    let common = y * (1.0 - y) / vy - 1.0;
    let alpha = (y * common).clamp(0.1, 100.0);
    let beta = ((1.0 - y) * common).clamp(0.1, 100.0);
    (alpha, beta)
}

fn validate_support(data: &[f64], a: f64, b: f64) -> Result<()> {
    let bad: Vec<f64> = data
        .iter()
        .copied()
        .filter(|x| !(*x >= a && *x <= b))
        .take(5)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Domain(format!(
            "observations outside support [{a}, {b}]: {bad:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subgroup_construction_rules() {
        assert!(SubgroupData::from_groups(vec![]).is_err());
        assert!(SubgroupData::from_groups(vec![vec![0.5]]).is_err());
        assert!(SubgroupData::from_groups(vec![vec![0.4, 0.5], vec![0.6]]).is_err());
        let d = SubgroupData::from_pooled(vec![0.1, 0.2, 0.3, 0.4], 2).unwrap();
        assert_eq!((d.n(), d.k(), d.m()), (2, 2, 4));
        assert!(SubgroupData::from_pooled(vec![0.1, 0.2, 0.3], 2).is_err());
    }

    #[test]
    fn log_likelihood_trivial_cases() {
        let uniform = TbetaParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(log_likelihood(&[0.5], &uniform).unwrap(), 0.0);

        // truncated uniform on [0, 0.5] has density 2
        let tu = TbetaParams::new(1.0, 1.0, 0.0, 0.5).unwrap();
        let ll = log_likelihood(&[0.2, 0.4], &tu).unwrap();
        assert!((ll - 2.0 * 2.0f64.ln()).abs() < 1e-12);

        assert!(log_likelihood(&[0.7], &tu).is_err());
    }

    #[test]
    fn fit_rejects_degenerate_data() {
        let d = SubgroupData::from_pooled(vec![0.4; 10], 5).unwrap();
        let err = fit_mle(&d, 0.0, 1.0, None).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }

    #[test]
    fn fit_rejects_out_of_support_data() {
        let d = SubgroupData::from_pooled(vec![0.2, 0.4, 0.6, 0.8], 2).unwrap();
        assert!(fit_mle(&d, 0.3, 1.0, None).is_err());
    }

    #[test]
    fn ks_statistic_at_exact_quantiles() {
        // data placed at the (i - 0.5)/n model quantiles gives D = 0.5/n
        let p = TbetaParams::new(2.0, 5.0, 0.0, 1.0).unwrap();
        let n = 8;
        let data: Vec<f64> = (1..=n)
            .map(|i| p.quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect();
        let d = ks_statistic(&data, &p).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-9);
        assert!(ks_statistic(&[], &p).is_err());
    }

    #[test]
    fn ks_statistic_permutation_invariant() {
        let p = TbetaParams::new(2.0, 5.0, 0.0, 1.0).unwrap();
        let data = vec![0.3, 0.1, 0.7, 0.2, 0.55];
        let mut rev = data.clone();
        rev.reverse();
        assert_eq!(
            ks_statistic(&data, &p).unwrap(),
            ks_statistic(&rev, &p).unwrap()
        );
    }

    #[test]
    fn ks_pvalue_extremes() {
        let p = TbetaParams::new(2.0, 5.0, 0.0, 1.0).unwrap();
        let at_zero = ks_pvalue(0.0, 10, &p, 1000, 3).unwrap();
        assert_eq!(at_zero.p_value, 1.0);
        let at_one = ks_pvalue(1.0, 10, &p, 1000, 3).unwrap();
        assert!(at_one.p_value <= 1.0 / 1000.0);
        assert!(ks_pvalue(0.5, 10, &p, 999, 3).is_err());
    }
}
