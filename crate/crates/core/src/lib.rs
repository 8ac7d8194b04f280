//! Control charts for percentiles of truncated-beta distributed proportion data.
//!
//! The chart statistic is an estimated percentile of a beta distribution
//! truncated to a support `[a, b]` inside the unit interval. Control limits
//! come from a studentized bootstrap over Phase-I reference subgroups, and
//! Phase-II subgroups signal when their fitted percentile falls outside the
//! limits. Run-length performance (ARL/SDRL) is evaluated by Monte Carlo.
//!
//! Module layout:
//! - [`dist`]: truncated-beta density, CDF, quantile, and sampling
//! - [`estimate`]: maximum-likelihood fitting, percentile estimation,
//!   Kolmogorov-Smirnov goodness of fit
//! - [`chart`]: control-limit construction and Phase-II monitoring
//! - [`runlength`]: ARL/SDRL Monte Carlo under parameter shifts
//! - [`data`]: embedded relative-humidity example datasets

pub mod chart;
pub mod data;
pub mod dist;
pub mod estimate;
pub mod runlength;

mod error;
mod optim;
mod special;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Derives an independent RNG seed for a work unit from a base seed and a
/// stream index, so parallel units are reproducible regardless of scheduling.
///
/// SplitMix64 finalizer over the base seed offset by the Weyl constant.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
