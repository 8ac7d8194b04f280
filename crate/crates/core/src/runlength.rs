//! Monte Carlo run-length evaluation of the chart under parameter shifts.
//!
//! The study protocol has two stages. Stage one estimates the chart's
//! average control limits: every replication draws fresh Phase-I data from
//! the in-control process and builds its own bootstrap limits, and the limit
//! sets are averaged. Stage two streams shifted test subgroups against the
//! averaged limits until the first signal, once per replication. Averaging
//! first washes out the (large) sampling noise of the extreme bootstrap
//! quantiles, so in-control run lengths behave like the geometric model with
//! mean 1/far; skipping it would instead measure a mixture of geometric
//! distributions whose standard deviation far exceeds its mean.
//!
//! A fixed-limits engine is also provided, both for sensitivity analysis and
//! as an independent check of the run-length machinery against the geometric
//! model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{build_limits, evaluate_subgroup, ChartConfig, ControlLimits};
use crate::dist::TbetaParams;
use crate::estimate::SubgroupData;
use crate::{derive_seed, Error, Result};

/// Relative perturbation of the shape parameters defining an out-of-control
/// process: each shape moves to `theta * (1 + d_theta)`, so `d_theta2 = -0.3`
/// is a 30% drop in the second shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftSpec {
    pub d_theta1: f64,
    pub d_theta2: f64,
}

impl ShiftSpec {
    pub fn none() -> Self {
        Self { d_theta1: 0.0, d_theta2: 0.0 }
    }

    /// The shifted parameter set; errors if a shifted shape is non-positive
    /// (a relative shift at or below -1).
    pub fn apply(&self, params: &TbetaParams) -> Result<TbetaParams> {
        params.with_shapes(
            params.theta1() * (1.0 + self.d_theta1),
            params.theta2() * (1.0 + self.d_theta2),
        )
    }
}

/// ARL and SDRL with replication metadata.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunLengthSummary {
    /// Mean run length.
    pub arl: f64,
    /// Run-length standard deviation (sample divisor).
    pub sdrl: f64,
    /// Replications that produced a run length.
    pub replications: usize,
    /// Runs recorded at the cap.
    pub truncated_runs: usize,
    /// Replications dropped because Phase I failed.
    pub failed_replications: usize,
}

/// Two-stage study protocol. Stage one: each replication draws fresh Phase-I
/// data from `ic_params` (k subgroups of n) and builds its own bootstrap
/// limits; the limit sets are averaged. Stage two: each replication streams
/// test subgroups from the shifted process against the averaged limits until
/// the first out-of-control signal. Deterministic for a fixed seed; because
/// stage one depends only on the in-control process and the seed, cells that
/// share a seed compare different shifts against identical limits.
#[allow(clippy::too_many_arguments)]
pub fn simulate_run_length(
    ic_params: &TbetaParams,
    shift: &ShiftSpec,
    n: usize,
    k: usize,
    config: &ChartConfig,
    replications: usize,
    run_cap: usize,
    seed: u64,
) -> Result<RunLengthSummary> {
    config.validate()?;
    if replications < 1 {
        return Err(Error::Domain("at least 1 replication required".into()));
    }
    if run_cap < 100 {
        return Err(Error::Domain("run cap must be at least 100".into()));
    }
    let ooc_params = shift.apply(ic_params)?;

    let limit_sets: Vec<Option<ControlLimits>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
            let phase1 = draw_subgroups(ic_params, &mut rng, k, n).ok()?;
            let data = SubgroupData::from_groups(phase1).ok()?;
            let mut cfg = *config;
            cfg.seed = derive_seed(rep_seed, u64::MAX);
            build_limits(&data, ic_params.a(), ic_params.b(), &cfg).ok()
        })
        .collect();
    let failed = limit_sets.iter().filter(|l| l.is_none()).count();
    let limits = average_limit_sets(limit_sets.iter().flatten())?;

    let runs: Vec<Option<(usize, bool)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            // offset the stream index so stage two never reuses a stage-one seed
            let run_seed = derive_seed(seed, (replications + r) as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            Some(run_until_signal(&ooc_params, &limits, &mut rng, n, config.p, run_cap))
        })
        .collect();

    let mut summary = summarize(runs)?;
    summary.failed_replications = failed;
    Ok(summary)
}

/// Field-wise mean of a collection of limit sets (the Monte Carlo estimate of
/// the chart's average limits). The bootstrap replicate estimates are not
/// retained.
fn average_limit_sets<'a, I>(sets: I) -> Result<ControlLimits>
where
    I: Iterator<Item = &'a ControlLimits>,
{
    let mut count = 0usize;
    let mut acc = ControlLimits {
        lcl: 0.0,
        cl: 0.0,
        ucl: 0.0,
        boot_mean: 0.0,
        boot_se: 0.0,
        t_lower: 0.0,
        t_upper: 0.0,
        phase1_estimate: 0.0,
        replicate_failures: 0,
        boot_estimates: Vec::new(),
    };
    for l in sets {
        count += 1;
        acc.lcl += l.lcl;
        acc.cl += l.cl;
        acc.ucl += l.ucl;
        acc.boot_mean += l.boot_mean;
        acc.boot_se += l.boot_se;
        acc.t_lower += l.t_lower;
        acc.t_upper += l.t_upper;
        acc.phase1_estimate += l.phase1_estimate;
        acc.replicate_failures += l.replicate_failures;
    }
    if count == 0 {
        return Err(Error::Convergence(
            "every replication failed during Phase I".into(),
        ));
    }
    let m = count as f64;
    acc.lcl /= m;
    acc.cl /= m;
    acc.ucl /= m;
    acc.boot_mean /= m;
    acc.boot_se /= m;
    acc.t_lower /= m;
    acc.t_upper /= m;
    acc.phase1_estimate /= m;
    Ok(acc)
}

/// Run lengths against a fixed, externally supplied limit set. Used for the
/// fixed-limits sensitivity reading and for validating the engine against
/// known signal probabilities.
pub fn run_lengths_with_limits(
    limits: &ControlLimits,
    test_params: &TbetaParams,
    n: usize,
    p: f64,
    replications: usize,
    run_cap: usize,
    seed: u64,
) -> Result<RunLengthSummary> {
    if replications < 1 {
        return Err(Error::Domain("at least 1 replication required".into()));
    }
    if run_cap < 100 {
        return Err(Error::Domain("run cap must be at least 100".into()));
    }
    let runs: Vec<Option<(usize, bool)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            Some(run_until_signal(test_params, limits, &mut rng, n, p, run_cap))
        })
        .collect();
    summarize(runs)
}

fn draw_subgroups(
    params: &TbetaParams,
    rng: &mut ChaCha8Rng,
    k: usize,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..k).map(|_| params.sample_with(rng, n)).collect()
}

/// Index of the first signaling subgroup, with a flag marking runs recorded
/// at the cap. Indeterminate subgroups (fit failures) never signal.
fn run_until_signal(
    params: &TbetaParams,
    limits: &ControlLimits,
    rng: &mut ChaCha8Rng,
    n: usize,
    p: f64,
    run_cap: usize,
) -> (usize, bool) {
    for t in 1..=run_cap {
        let subgroup = match params.sample_with(rng, n) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if let Ok(v) = evaluate_subgroup(&subgroup, limits, params.a(), params.b(), p, t) {
            if !v.in_control {
                return (t, false);
            }
        }
    }
    (run_cap, true)
}

fn summarize(runs: Vec<Option<(usize, bool)>>) -> Result<RunLengthSummary> {
    let completed: Vec<(usize, bool)> = runs.iter().flatten().copied().collect();
    let failed = runs.len() - completed.len();
    if completed.is_empty() {
        return Err(Error::Convergence(
            "every replication failed during Phase I".into(),
        ));
    }
    let truncated = completed.iter().filter(|(_, capped)| *capped).count();
    let lengths: Vec<f64> = completed.iter().map(|&(t, _)| t as f64).collect();
    let n = lengths.len() as f64;
    let arl = lengths.iter().sum::<f64>() / n;
    let sdrl = if lengths.len() > 1 {
        (lengths.iter().map(|t| (t - arl).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RunLengthSummary {
        arl,
        sdrl,
        replications: lengths.len(),
        truncated_runs: truncated,
        failed_replications: failed,
    })
}

/// One grid cell: the shift and its summary, or the per-cell failure.
#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub shift: ShiftSpec,
    pub summary: Option<RunLengthSummary>,
    pub error: Option<String>,
}

/// Seed for a grid cell, derived from the shift's identity rather than its
/// position so reordering the grid leaves each cell unchanged.
pub fn cell_seed(base: u64, shift: &ShiftSpec) -> u64 {
    let s = derive_seed(base, shift.d_theta1.to_bits());
    derive_seed(s, shift.d_theta2.to_bits())
}

/// Runs `simulate_run_length` per shift with cell-derived seeds; per-cell
/// failures are recorded and the grid completes.
#[allow(clippy::too_many_arguments)]
pub fn shift_grid(
    ic_params: &TbetaParams,
    shifts: &[ShiftSpec],
    n: usize,
    k: usize,
    config: &ChartConfig,
    replications: usize,
    run_cap: usize,
    seed: u64,
) -> Result<Vec<GridCell>> {
    if shifts.is_empty() {
        return Err(Error::Domain("shift grid must be nonempty".into()));
    }
    Ok(shifts
        .iter()
        .map(|shift| {
            match simulate_run_length(
                ic_params,
                shift,
                n,
                k,
                config,
                replications,
                run_cap,
                cell_seed(seed, shift),
            ) {
                Ok(summary) => GridCell {
                    shift: *shift,
                    summary: Some(summary),
                    error: None,
                },
                Err(e) => GridCell {
                    shift: *shift,
                    summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Comparison of an in-control summary against the geometric run-length
/// model with mean 1/far.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConsistencyReport {
    pub nominal_arl: f64,
    pub nominal_sdrl: f64,
    /// (arl - 1/far) over the standard error of the mean run length.
    pub arl_z: f64,
    /// (sdrl - nominal) over an approximate standard error of the SD.
    pub sdrl_z: f64,
}

/// Z-scores of an in-control summary against the geometric model: mean 1/nu,
/// standard deviation sqrt(1-nu)/nu.
pub fn sdrl_consistency_check(summary: &RunLengthSummary, far: f64) -> ConsistencyReport {
    let nominal_arl = 1.0 / far;
    let nominal_sdrl = (1.0 - far).sqrt() / far;
    let reps = summary.replications as f64;
    let se_mean = summary.sdrl / reps.sqrt();
    // For a geometric run length the SD of the sample SD is close to
    // sdrl * sqrt(2/reps) (heavy-tailed; kurtosis near 9).
    let se_sd = nominal_sdrl * (2.0 / reps).sqrt();
    ConsistencyReport {
        nominal_arl,
        nominal_sdrl,
        arl_z: (summary.arl - nominal_arl) / se_mean,
        sdrl_z: (summary.sdrl - nominal_sdrl) / se_sd,
    }
}

/// CSV rows for a grid, aligned with the plot-tooling contract:
/// `d_theta1,d_theta2,p,nu,arl,sdrl,replications,truncated_runs`.
pub fn grid_to_csv(cells: &[GridCell], p: f64, far: f64) -> String {
    let mut out = String::from("d_theta1,d_theta2,p,nu,arl,sdrl,replications,truncated_runs\n");
    for cell in cells {
        match &cell.summary {
            Some(s) => out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                cell.shift.d_theta1,
                cell.shift.d_theta2,
                p,
                far,
                s.arl,
                s.sdrl,
                s.replications,
                s.truncated_runs
            )),
            None => out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},error,error,0,0\n",
                cell.shift.d_theta1, cell.shift.d_theta2, p, far
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_is_relative_and_validates_positivity() {
        let p = TbetaParams::new(2.0, 15.0, 0.0, 0.5).unwrap();
        let ok = ShiftSpec { d_theta1: -0.5, d_theta2: 1.0 };
        let shifted = ok.apply(&p).unwrap();
        assert!((shifted.theta1() - 1.0).abs() < 1e-12);
        assert!((shifted.theta2() - 30.0).abs() < 1e-12);
        let bad = ShiftSpec { d_theta1: -2.0, d_theta2: 0.0 };
        assert!(bad.apply(&p).is_err());
    }

    #[test]
    fn consistency_report_on_perfect_geometric_moments() {
        let summary = RunLengthSummary {
            arl: 200.0,
            sdrl: (1.0f64 - 0.005).sqrt() / 0.005,
            replications: 5000,
            truncated_runs: 0,
            failed_replications: 0,
        };
        let report = sdrl_consistency_check(&summary, 0.005);
        assert!((report.nominal_arl - 200.0).abs() < 1e-12);
        assert!((report.nominal_sdrl - 199.4993734).abs() < 1e-6);
        assert!(report.arl_z.abs() < 1e-10);
        assert!(report.sdrl_z.abs() < 1e-10);
    }

    #[test]
    fn nominal_targets_at_common_far_levels() {
        let summary = RunLengthSummary {
            arl: 370.0,
            sdrl: 369.0,
            replications: 5000,
            truncated_runs: 0,
            failed_replications: 0,
        };
        let report = sdrl_consistency_check(&summary, 0.0027);
        assert!((report.nominal_arl - 370.37037).abs() < 1e-4);
        assert!((report.nominal_sdrl - (1.0f64 - 0.0027).sqrt() / 0.0027).abs() < 1e-9);
    }

    #[test]
    fn cell_seed_depends_on_identity_not_position() {
        let s1 = ShiftSpec { d_theta1: 0.0, d_theta2: -0.3 };
        let s2 = ShiftSpec { d_theta1: 0.0, d_theta2: -0.2 };
        assert_eq!(cell_seed(9, &s1), cell_seed(9, &s1));
        assert_ne!(cell_seed(9, &s1), cell_seed(9, &s2));
    }

    #[test]
    fn grid_rejects_empty_shifts() {
        let p = TbetaParams::new(2.0, 15.0, 0.0, 0.5).unwrap();
        let cfg = ChartConfig::new(0.5, 0.0027, 100, 1);
        assert!(shift_grid(&p, &[], 10, 20, &cfg, 10, 100, 1).is_err());
    }
}
