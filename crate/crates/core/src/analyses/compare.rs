use std::collections::BTreeSet;

use serde::Serialize;

use super::AnalysisError;
use crate::probe::{FoldOutcome, ProbeResult};
use crate::stats::{two_proportion_z, StatResult};
use crate::stimgen::NUM_STRUCTURES;

/// Participants whose implicit classification was correct, out of all
/// participants counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HumanAccuracy {
    pub successes: u64,
    pub participants: u64,
}

impl HumanAccuracy {
    /// Rounds `proportion * participants` to a count.
    pub fn from_proportion(proportion: f64, participants: u64) -> Self {
        Self {
            successes: (proportion * participants as f64).round() as u64,
            participants,
        }
    }

    pub fn proportion(&self) -> f64 {
        self.successes as f64 / self.participants as f64
    }
}

/// Which folds are compared.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldFilter {
    All,
    /// Folds whose held-out structures differ in this many features.
    Distance(u8),
    /// Folds holding out two structures from this list.
    Structures(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldComparisonRow {
    pub fold_id: usize,
    pub held_out: (u8, u8),
    pub feature_distance: u8,
    pub n_correct: usize,
    pub n_test: usize,
    pub accuracy: f64,
    /// Fold against humans; z > 0 when the fold is more accurate.
    pub test: StatResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldComparison {
    pub human: HumanAccuracy,
    pub filter: FoldFilter,
    pub alpha: f64,
    pub family_size: usize,
    pub rows: Vec<FoldComparisonRow>,
    /// Folds significantly above humans after correction.
    pub fraction_higher: f64,
    pub fraction_lower: f64,
}

pub fn compare_fold_vs_human(
    probe: &ProbeResult,
    human: HumanAccuracy,
    filter: &FoldFilter,
    alpha: f64,
) -> Result<FoldComparison, AnalysisError> {
    compare_folds(&probe.folds, human, filter, alpha)
}

/// As [`compare_fold_vs_human`], over fold outcomes read back from a report.
pub fn compare_folds(
    folds: &[FoldOutcome],
    human: HumanAccuracy,
    filter: &FoldFilter,
    alpha: f64,
) -> Result<FoldComparison, AnalysisError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::Input(format!("alpha {alpha} outside (0, 1)")));
    }
    if human.participants == 0 || human.successes > human.participants {
        return Err(AnalysisError::Input(format!(
            "human accuracy {} of {} participants",
            human.successes, human.participants
        )));
    }
    if let FoldFilter::Structures(ids) = filter {
        let available: BTreeSet<u8> = folds.iter().flat_map(|f| [f.held_out.0, f.held_out.1]).collect();
        let unmatched: Vec<u8> = ids
            .iter()
            .copied()
            .filter(|id| !(1..=NUM_STRUCTURES as u8).contains(id) || !available.contains(id))
            .collect();
        if !unmatched.is_empty() {
            return Err(AnalysisError::UnmatchedStructures(unmatched));
        }
    }
    let selected: Vec<_> = folds
        .iter()
        .filter(|f| match filter {
            FoldFilter::All => true,
            FoldFilter::Distance(d) => f.feature_distance == *d,
            FoldFilter::Structures(ids) => ids.contains(&f.held_out.0) && ids.contains(&f.held_out.1),
        })
        .collect();
    if selected.is_empty() {
        return Err(AnalysisError::Input(format!("no folds match {filter:?}")));
    }
    let family_size = selected.len();
    let rows = selected
        .iter()
        .map(|f| {
            let test = two_proportion_z(f.n_correct as u64, f.n_test as u64, human.successes, human.participants)?
                .adjusted(family_size);
            Ok(FoldComparisonRow {
                fold_id: f.fold_id,
                held_out: f.held_out,
                feature_distance: f.feature_distance,
                n_correct: f.n_correct,
                n_test: f.n_test,
                accuracy: f.accuracy,
                test,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let count = |sign: f64| {
        rows.iter()
            .filter(|r| r.test.p_adjusted < alpha && r.test.statistic * sign > 0.0)
            .count() as f64
            / rows.len() as f64
    };
    Ok(FoldComparison {
        human,
        filter: filter.clone(),
        alpha,
        family_size,
        fraction_higher: count(1.0),
        fraction_lower: count(-1.0),
        rows,
    })
}
