//! Statistical kernel: rank tests, t/F/chi-square machinery, proportion
//! tests, bootstrap intervals, Bonferroni correction and least squares.
//!
//! Rank tests pick their p-value route through [`PMethod`]. With
//! [`PMethod::Auto`] small samples use the exact permutation distribution
//! (computed by integer dynamic programming over doubled ranks, so results
//! are bit-for-bit reproducible) and larger samples use the tie-corrected
//! normal or chi-square approximation. The reported statistic is always
//! the approximation's z or chi-square.

mod bootstrap;
pub mod dist;
mod ols;
mod param;
mod rank;

pub use bootstrap::{bootstrap_ci, bootstrap_mean_ci, BootstrapCI, BOOTSTRAP_MIN_B};
pub use ols::{ols_fit, ols_fit_named, OlsFit};
pub use param::{one_sample_t, two_proportion_z};
pub use rank::{
    average_ranks, friedman_test, friedman_test_with, rank_sum, rank_sum_with,
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, EXACT_FRIEDMAN_MAX_K,
    EXACT_FRIEDMAN_MAX_N, EXACT_RANKSUM_MAX_N, EXACT_WILCOXON_MAX_N,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    #[error("{what} needs at least {need} observations, got {got}")]
    TooFew {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("all differences are zero")]
    AllZero,
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("non-finite input value")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("design matrix is rank deficient; dependent columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StatisticName {
    FriedmanChi2,
    WilcoxonZ,
    RanksumZ,
    T,
    F,
    PropZ,
    /// Linear contrast of OLS coefficients over its standard error.
    WaldZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Df {
    One(f64),
    Two(f64, f64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum SampleSize {
    One(usize),
    /// Two independent groups.
    Two(usize, usize),
    /// Subjects by conditions.
    Grid { rows: usize, cols: usize },
}

/// How a rank test turns its statistic into a p value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    /// Exact for small samples, asymptotic otherwise.
    #[default]
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PRoute {
    Exact,
    Asymptotic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatResult {
    pub statistic_name: StatisticName,
    pub statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub df: Option<Df>,
    pub n: SampleSize,
    pub method: PRoute,
    /// The untransformed test statistic where it differs from `statistic`
    /// (W+ for signed-rank, U for rank-sum).
    pub raw_statistic: Option<f64>,
    /// Set when the test was undefined and reported as z = 0, p = 1.
    pub degenerate: bool,
}

impl StatResult {
    pub(crate) fn new(
        statistic_name: StatisticName,
        statistic: f64,
        p: f64,
        df: Option<Df>,
        n: SampleSize,
        method: PRoute,
    ) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            statistic_name,
            statistic,
            p_raw: p,
            p_adjusted: p,
            df,
            n,
            method,
            raw_statistic: None,
            degenerate: false,
        }
    }

    /// z = 0, p = 1, flagged degenerate: for tests undefined on the data,
    /// such as a signed-rank test whose differences are all zero.
    pub fn degenerate(statistic_name: StatisticName, n: SampleSize) -> Self {
        let mut r = Self::new(statistic_name, 0.0, 1.0, None, n, PRoute::Asymptotic);
        r.degenerate = true;
        r
    }

    /// Applies Bonferroni correction for a family of `m` tests.
    pub fn adjusted(mut self, m: usize) -> Self {
        self.p_adjusted = bonferroni_one(self.p_raw, m);
        self
    }
}

fn bonferroni_one(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

/// `min(1, m * p)` for each p.
///
/// # Panics
/// If `m` is smaller than the number of p values.
pub fn bonferroni(p_raws: &[f64], m: usize) -> Vec<f64> {
    assert!(
        m >= p_raws.len(),
        "Bonferroni family size {m} is smaller than the {} tests supplied",
        p_raws.len()
    );
    p_raws.iter().map(|&p| bonferroni_one(p, m)).collect()
}

/// Sets `p_adjusted` on every result for a family of size `m`.
pub fn apply_bonferroni(results: &mut [StatResult], m: usize) {
    assert!(m >= results.len());
    for r in results {
        r.p_adjusted = bonferroni_one(r.p_raw, m);
    }
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatError::NonFinite)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}
