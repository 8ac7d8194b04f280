//! Control-limit construction and monitoring tests.

mod common;

use tbeta_chart::chart::{
    build_limits, empirical_quantile, monitor_stream, BootMode, Breach, CenterMode, ChartConfig,
    ControlLimits, MonitorOutcome,
};
use tbeta_chart::data::{RH_MAY_2007, RH_MAY_2008};
use tbeta_chart::dist::TbetaParams;
use tbeta_chart::estimate::SubgroupData;

fn humidity_2007() -> SubgroupData {
    SubgroupData::from_pooled(RH_MAY_2007[1..].to_vec(), 10).unwrap()
}

fn limits_2007(seed: u64, boot_reps: usize) -> ControlLimits {
    let config = ChartConfig::new(0.9, 0.0027, boot_reps, seed);
    build_limits(&humidity_2007(), 0.3, 1.0, &config).unwrap()
}

#[test]
fn humidity_limits_near_published_values() {
    // published chart for the May-2007 reference month: roughly
    // UCL 0.976, CL 0.926, LCL 0.805 at p = 0.9, false-alarm rate 0.0027
    let limits = limits_2007(20070501, 5000);
    assert!((limits.ucl - 0.976).abs() < 0.02, "UCL {}", limits.ucl);
    assert!((limits.cl - 0.926).abs() < 0.02, "CL {}", limits.cl);
    assert!((limits.lcl - 0.805).abs() < 0.04, "LCL {}", limits.lcl);
    assert!(limits.lcl < limits.cl && limits.cl < limits.ucl);
    assert_eq!(limits.boot_estimates.len(), 5000);
}

#[test]
fn limits_are_seed_deterministic() {
    let a = limits_2007(7, 1000);
    let b = limits_2007(7, 1000);
    assert_eq!(a.lcl.to_bits(), b.lcl.to_bits());
    assert_eq!(a.cl.to_bits(), b.cl.to_bits());
    assert_eq!(a.ucl.to_bits(), b.ucl.to_bits());
    assert_eq!(a.boot_se.to_bits(), b.boot_se.to_bits());
    assert_eq!(a.boot_estimates, b.boot_estimates);

    let c = limits_2007(8, 1000);
    assert_ne!(a.ucl.to_bits(), c.ucl.to_bits());
}

#[test]
fn studentization_algebra_holds() {
    // Because studentizing is an affine map, the limits must equal
    //   boot_mean - phase1_estimate + (empirical tail quantile of estimates).
    let limits = limits_2007(3, 2000);
    let mut sorted = limits.boot_estimates.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let lo = empirical_quantile(&sorted, 0.0027 / 2.0);
    let hi = empirical_quantile(&sorted, 1.0 - 0.0027 / 2.0);
    let lcl = limits.boot_mean - limits.phase1_estimate + lo;
    let ucl = limits.boot_mean - limits.phase1_estimate + hi;
    assert!((limits.lcl - lcl).abs() < 1e-10, "{} vs {lcl}", limits.lcl);
    assert!((limits.ucl - ucl).abs() < 1e-10, "{} vs {ucl}", limits.ucl);
}

#[test]
fn smaller_false_alarm_rate_widens_limits() {
    let data = humidity_2007();
    let mut widths = Vec::new();
    for &far in &[0.05, 0.01, 0.0027] {
        let config = ChartConfig::new(0.9, far, 2000, 99);
        let l = build_limits(&data, 0.3, 1.0, &config).unwrap();
        widths.push(l.ucl - l.lcl);
    }
    assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
}

#[test]
fn center_mode_switches_the_center_line_only() {
    let data = humidity_2007();
    let mut config = ChartConfig::new(0.9, 0.0027, 1000, 5);
    let a = build_limits(&data, 0.3, 1.0, &config).unwrap();
    config.center_mode = CenterMode::Phase1Estimate;
    let b = build_limits(&data, 0.3, 1.0, &config).unwrap();
    assert_eq!(a.lcl.to_bits(), b.lcl.to_bits());
    assert_eq!(a.ucl.to_bits(), b.ucl.to_bits());
    assert_eq!(a.cl, a.boot_mean);
    assert_eq!(b.cl, b.phase1_estimate);
}

#[test]
fn pooled_resample_mode_builds_sane_limits() {
    let data = humidity_2007();
    let mut config = ChartConfig::new(0.9, 0.0027, 2000, 41);
    config.boot_mode = BootMode::PooledResample;
    let l = build_limits(&data, 0.3, 1.0, &config).unwrap();
    assert!(l.lcl < l.cl && l.cl < l.ucl);
    // both bootstrap flavors should land in the same neighborhood
    assert!((l.cl - 0.926).abs() < 0.05, "CL {}", l.cl);

    config.boot_mode = BootMode::Parametric;
    let p = build_limits(&data, 0.3, 1.0, &config).unwrap();
    assert_ne!(l.ucl.to_bits(), p.ucl.to_bits());
}

#[test]
fn rejects_bad_configs_and_tiny_phase1() {
    let data = humidity_2007();
    let bad_b = ChartConfig::new(0.9, 0.0027, 99, 1);
    assert!(build_limits(&data, 0.3, 1.0, &bad_b).is_err());

    let tiny = SubgroupData::from_pooled(vec![0.4, 0.5, 0.6, 0.7], 2).unwrap();
    let config = ChartConfig::new(0.9, 0.0027, 1000, 1);
    assert!(build_limits(&tiny, 0.0, 1.0, &config).is_err());
}

#[test]
fn in_control_subgroups_rarely_signal() {
    // draw fresh in-control subgroups from the Phase-I fitted model and
    // check the signal rate is of the right order for far = 0.05
    let data = humidity_2007();
    let config = ChartConfig::new(0.9, 0.05, 2000, 13);
    let limits = build_limits(&data, 0.3, 1.0, &config).unwrap();

    let fit = tbeta_chart::estimate::fit_mle(&data, 0.3, 1.0, None).unwrap();
    let mut signals = 0;
    let reps = 400;
    for i in 0..reps {
        let g = fit.params.sample(10, 1000 + i).unwrap();
        match monitor_stream(&[g], &limits, 0.3, 1.0, 0.9).remove(0) {
            MonitorOutcome::Verdict(v) => {
                if !v.in_control {
                    signals += 1;
                }
            }
            MonitorOutcome::Indeterminate { .. } => {}
        }
    }
    let rate = signals as f64 / reps as f64;
    // far = 0.05 plus limit-estimation noise: accept anything well below 0.25
    assert!(rate < 0.25, "in-control signal rate {rate}");
}

#[test]
fn drifted_month_signals_against_reference_limits() {
    // May 2008 ran much drier than May 2007; its subgroups should mostly
    // fall below the 2007 lower limit
    let limits = limits_2007(20070501, 5000);
    let groups: Vec<Vec<f64>> = RH_MAY_2008[1..].chunks(10).map(|c| c.to_vec()).collect();
    let outcomes = monitor_stream(&groups, &limits, 0.3, 1.0, 0.9);
    assert_eq!(outcomes.len(), 3);
    let below = outcomes
        .iter()
        .filter(|o| {
            matches!(
                o,
                MonitorOutcome::Verdict(v) if v.breach == Breach::BelowLcl
            )
        })
        .count();
    assert!(below >= 2, "only {below} of 3 subgroups signaled low");
}

#[test]
fn bootstrap_distribution_matches_direct_simulation() {
    // The parametric bootstrap draws from the fitted model, so the bootstrap
    // mean of the percentile estimates should match the mean obtained by
    // simulating the estimator directly from that model.
    let truth = TbetaParams::new(2.0, 15.0, 0.0, 0.5).unwrap();
    let phase1 = SubgroupData::from_pooled(truth.sample(200, 77).unwrap(), 10).unwrap();
    let config = ChartConfig::new(0.5, 0.0027, 4000, 5);
    let limits = build_limits(&phase1, 0.0, 0.5, &config).unwrap();

    let fit = tbeta_chart::estimate::fit_mle(&phase1, 0.0, 0.5, None).unwrap();
    let mut direct = Vec::new();
    let mut i = 0u64;
    while direct.len() < 4000 {
        i += 1;
        let s = fit.params.sample(10, 900_000 + i).unwrap();
        if let Ok(f) = tbeta_chart::estimate::fit_mle(
            &SubgroupData::from_pooled(s, 10).unwrap(),
            0.0,
            0.5,
            None,
        ) {
            if let Ok(q) = f.params.quantile(0.5) {
                direct.push(q);
            }
        }
    }
    let direct_mean = direct.iter().sum::<f64>() / direct.len() as f64;
    let direct_sd = (direct
        .iter()
        .map(|x| (x - direct_mean).powi(2))
        .sum::<f64>()
        / (direct.len() as f64 - 1.0))
        .sqrt();
    let se_of_mean = direct_sd / (direct.len() as f64).sqrt();
    let gap = (limits.boot_mean - direct_mean).abs();
    assert!(
        gap < 5.0 * se_of_mean * 2.0f64.sqrt(),
        "boot mean {} vs direct {} (gap {gap}, se {se_of_mean})",
        limits.boot_mean,
        direct_mean
    );
    // spreads should agree to within a modest factor
    assert!((limits.boot_se / direct_sd - 1.0).abs() < 0.15);
}
