//! Percentile bootstrap.
//!
//! Resampling uses `Xoshiro256PlusPlus` seeded through SplitMix64
//! (`seed_from_u64`), drawn sequentially, so an interval depends only on
//! the data, the statistic, B and the seed.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use super::{mean, StatError};

pub const BOOTSTRAP_MIN_B: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapCI {
    /// The statistic on the original sample.
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    pub statistic_name: String,
}

/// Linear-interpolation quantile of sorted data (type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval of `statistic` over `b` resamples (with
/// replacement) of `items`.
pub fn bootstrap_ci<T: Clone, F: Fn(&[T]) -> f64>(
    items: &[T],
    statistic: F,
    statistic_name: &str,
    b: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapCI, StatError> {
    if items.is_empty() {
        return Err(StatError::TooFew {
            what: "bootstrap",
            need: 1,
            got: 0,
        });
    }
    if b < BOOTSTRAP_MIN_B {
        return Err(StatError::InvalidArgument(format!(
            "bootstrap needs B >= {BOOTSTRAP_MIN_B}, got {b}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatError::InvalidArgument(format!("confidence level {level} not in (0, 1)")));
    }
    let n = items.len();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut buf: Vec<T> = items.to_vec();
    let mut stats = Vec::with_capacity(b);
    for _ in 0..b {
        for slot in buf.iter_mut() {
            *slot = items[rng.random_range(0..n)].clone();
        }
        stats.push(statistic(&buf));
    }
    if stats.iter().any(|s| !s.is_finite()) {
        return Err(StatError::NonFinite);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(BootstrapCI {
        estimate: statistic(items),
        lower: quantile_sorted(&stats, alpha / 2.0),
        upper: quantile_sorted(&stats, 1.0 - alpha / 2.0),
        level,
        b,
        seed,
        statistic_name: statistic_name.to_string(),
    })
}

pub fn bootstrap_mean_ci(values: &[f64], b: usize, seed: u64, level: f64) -> Result<BootstrapCI, StatError> {
    bootstrap_ci(values, mean, "mean", b, seed, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let ci = bootstrap_mean_ci(&[3.5], 200, 1, 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper, ci.estimate), (3.5, 3.5, 3.5));
    }

    #[test]
    fn deterministic_per_seed() {
        let xs: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64).collect();
        let a = bootstrap_mean_ci(&xs, 1000, 42, 0.95).unwrap();
        let b = bootstrap_mean_ci(&xs, 1000, 42, 0.95).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_mean_ci(&xs, 1000, 43, 0.95).unwrap();
        assert_ne!((a.lower, a.upper), (c.lower, c.upper));
        assert!(a.lower <= a.estimate && a.estimate <= a.upper);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bootstrap_mean_ci(&[], 1000, 0, 0.95).is_err());
        assert!(bootstrap_mean_ci(&[1.0], 10, 0, 0.95).is_err());
        assert!(bootstrap_mean_ci(&[1.0], 100, 0, 1.5).is_err());
    }

    #[test]
    fn quantile_type7() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }
}
