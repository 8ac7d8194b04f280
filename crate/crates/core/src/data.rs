//! Embedded example datasets: daily relative-humidity proportions from the
//! Haarweg Wageningen weather station, May 2007 and May 2008 (31 daily
//! observations each). The first observation of each month is conventionally
//! dropped before fitting, leaving 30 values that partition into three
//! subgroups of ten.

/// Relative humidity, May 2007.
pub const RH_MAY_2007: [f64; 31] = [
    0.4, 0.44, 0.5, 0.55, 0.58, 0.62, 0.65, 0.69, 0.72, 0.72, 0.73, 0.75, 0.77, 0.8, 0.81, 0.81,
    0.83, 0.83, 0.85, 0.85, 0.85, 0.85, 0.86, 0.86, 0.87, 0.87, 0.89, 0.92, 0.94, 0.94, 0.97,
];

/// Relative humidity, May 2008.
pub const RH_MAY_2008: [f64; 31] = [
    0.39, 0.4, 0.42, 0.43, 0.43, 0.43, 0.44, 0.46, 0.48, 0.49, 0.51, 0.52, 0.53, 0.54, 0.56, 0.59,
    0.62, 0.64, 0.66, 0.73, 0.75, 0.76, 0.83, 0.85, 0.88, 0.91, 0.92, 0.92, 0.95, 0.97, 0.98,
];

/// Names of the embedded datasets as accepted by the CLI.
pub const EMBEDDED_NAMES: [&str; 2] = ["rh-may-2007", "rh-may-2008"];

/// Looks up an embedded dataset by name.
pub fn embedded(name: &str) -> Option<&'static [f64]> {
    match name {
        "rh-may-2007" => Some(&RH_MAY_2007),
        "rh-may-2008" => Some(&RH_MAY_2008),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::empirical_quantile;

    fn dropped_first(data: &[f64]) -> Vec<f64> {
        let mut v = data[1..].to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    #[test]
    fn summary_statistics_match_published_values() {
        let d07 = dropped_first(&RH_MAY_2007);
        assert_eq!(d07.len(), 30);
        assert_eq!(format!("{:.3}", empirical_quantile(&d07, 0.5)), "0.820");
        assert_eq!(*d07.last().unwrap(), 0.97);
        assert_eq!(d07[0], 0.44);

        let d08 = dropped_first(&RH_MAY_2008);
        assert_eq!(d08.len(), 30);
        assert_eq!(format!("{:.3}", empirical_quantile(&d08, 0.5)), "0.605");
        assert_eq!(*d08.last().unwrap(), 0.98);
        assert_eq!(d08[0], 0.4);
    }

    #[test]
    fn lookup_by_name() {
        assert!(embedded("rh-may-2007").is_some());
        assert!(embedded("rh-may-2008").is_some());
        assert!(embedded("rh-may-2009").is_none());
    }
}
