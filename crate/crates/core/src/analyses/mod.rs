//! Experiment-level analyses over stores and human ratings.

mod compare;
mod exp1;
mod exp2;
mod head;
mod human;

use serde::Serialize;
use thiserror::Error;

use crate::interchange::StoreError;
use crate::probe::ProbeError;
use crate::repspace::RepError;
use crate::stats::{wilcoxon_signed_rank, SampleSize, StatError, StatResult, StatisticName};
use crate::stimgen::StimError;

pub use compare::{compare_fold_vs_human, compare_folds, FoldComparison, FoldComparisonRow, FoldFilter, HumanAccuracy};
pub use exp1::{run_exp1, ConditionContrast, ConditionMean, Exp1Report, Exp1SetRow, POSTHOC_CONTRASTS};
pub use exp2::{run_exp2_similarity, DistanceBucket, Exp2LayerReport, Exp2SimilarityReport};
pub use head::{characterize_head, logit, HeadCharacterization, HeadContrast, StructureDirection, TypeMeans, HEAD_CONTRASTS, LOGIT_EPS};
pub use human::{
    analyze_human_exp1, analyze_human_exp2, parse_ratings, read_ratings, zscore_ratings, DistanceContrast,
    ExcludedParticipant, HumanExp1Report, HumanExp2Report, HumanLabel, HumanRating, LevelSummary, PairedContrast,
    ScoredRating, ZScored, FILLER_LEVEL, RATINGS_HEADER,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Stim(#[from] StimError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("ratings line {line}: {message}")]
    Ratings { line: usize, message: String },
    #[error("head {head} out of range 1..={num_heads}")]
    HeadOutOfRange { head: usize, num_heads: usize },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unmatched structures: {0:?}")]
    UnmatchedStructures(Vec<u8>),
}

/// Shared resampling settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BootstrapSettings {
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self { b: 5000, seed: 0 }
    }
}

/// Signed-rank test that reports all-zero differences as a degenerate
/// result rather than an error.
pub(crate) fn signed_rank_or_degenerate(diffs: &[f64]) -> Result<StatResult, StatError> {
    match wilcoxon_signed_rank(diffs) {
        Err(StatError::AllZero) => Ok(StatResult::degenerate(StatisticName::WilcoxonZ, SampleSize::One(diffs.len()))),
        other => other,
    }
}

pub(crate) fn fraction_positive(xs: &[f64]) -> f64 {
    xs.iter().filter(|&&x| x > 0.0).count() as f64 / xs.len() as f64
}
