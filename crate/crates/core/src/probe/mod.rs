//! Linear probes for "same roles" decisions under structure-held-out
//! cross-validation.
//!
//! Each of the 66 folds withholds two of the twelve structures. Training
//! pairs have both sentences in the ten remaining structures; test pairs
//! pair one withheld structure with the other.

mod svm;

pub use svm::{
    primal_objective, train_linear_svm, train_view, LinearModel, SvmConfig, TrainReport, TrainingView,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interchange::{StoreAccess, StoreError, ATTENTION_SLOTS};
use crate::repspace::{normalize_layer, RepError};
use crate::stats::{apply_bonferroni, bootstrap_mean_ci, mean, one_sample_t, BootstrapCI, StatError, StatResult};
use crate::stimgen::{enumerate_pairs, PairRecord, StimError, StimulusSet, NUM_STRUCTURES};

pub const NUM_FOLDS: usize = 66;
pub const CHANCE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("feature mode {mode} is incompatible with this store: {reason}")]
    ModeMismatch { mode: FeatureMode, reason: String },
    #[error("fold {fold} leaks held-out structures into training")]
    FoldLeak { fold: usize },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Stim(#[from] StimError),
    #[error(transparent)]
    Stat(#[from] StatError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FoldSpec {
    /// 1-based.
    pub fold_id: usize,
    pub held_out: (u8, u8),
    pub train_structures: Vec<u8>,
}

impl FoldSpec {
    pub fn is_held_out(&self, structure_id: u8) -> bool {
        structure_id == self.held_out.0 || structure_id == self.held_out.1
    }

    pub fn is_training_pair(&self, p: &PairRecord) -> bool {
        !self.is_held_out(p.first_structure) && !self.is_held_out(p.second_structure)
    }

    /// One sentence from each withheld structure.
    pub fn is_test_pair(&self, p: &PairRecord) -> bool {
        let (a, b) = (p.first_structure.min(p.second_structure), p.first_structure.max(p.second_structure));
        (a, b) == self.held_out
    }
}

/// All C(12, 2) folds in lexicographic order of the withheld pair.
pub fn make_folds() -> Vec<FoldSpec> {
    let n = NUM_STRUCTURES as u8;
    let mut folds = Vec::with_capacity(NUM_FOLDS);
    for i in 1..=n {
        for j in i + 1..=n {
            folds.push(FoldSpec {
                fold_id: folds.len() + 1,
                held_out: (i, j),
                train_structures: (1..=n).filter(|&s| s != i && s != j).collect(),
            });
        }
    }
    folds
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureMode {
    /// Normalised `rep(first) - rep(second)`.
    HiddenDiff,
    /// Normalised `[rep(first), rep(second)]`.
    HiddenConcat,
    /// The 10 attention slot weights of one head for each sentence.
    AttentionConcat,
}

impl FeatureMode {
    pub fn cli_name(self) -> &'static str {
        match self {
            FeatureMode::HiddenDiff => "hidden-diff",
            FeatureMode::HiddenConcat => "hidden-concat",
            FeatureMode::AttentionConcat => "attention-concat",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "hidden-diff" => Ok(FeatureMode::HiddenDiff),
            "hidden-concat" => Ok(FeatureMode::HiddenConcat),
            "attention-concat" => Ok(FeatureMode::AttentionConcat),
            other => Err(format!("unknown feature mode `{other}`")),
        }
    }
}

/// Which sentence of a pair comes first in the feature vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Orientation {
    /// Ascending structure id, as enumerated.
    #[default]
    Canonical,
    /// Each pair swapped with probability 1/2.
    Randomized { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProbeTarget {
    pub layer: usize,
    /// 1-based head index for attention features.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head: Option<usize>,
}

impl ProbeTarget {
    pub fn layer(layer: usize) -> Self {
        Self { layer, head: None }
    }

    pub fn head(layer: usize, head: usize) -> Self {
        Self { layer, head: Some(head) }
    }
}

impl fmt::Display for ProbeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.head {
            Some(h) => write!(f, "L{}H{}", self.layer, h),
            None => write!(f, "L{}", self.layer),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeDataset {
    pub features: Vec<f64>,
    pub dim: usize,
    /// `true` for same-role pairs.
    pub labels: Vec<bool>,
    pub pairs: Vec<PairRecord>,
    /// Whether each pair was swapped relative to its enumeration order.
    pub swapped: Vec<bool>,
    pub mode: FeatureMode,
}

impl ProbeDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.features[k * self.dim..(k + 1) * self.dim]
    }
}

/// Every cross-structure pair of every set, in enumeration order.
pub fn all_pairs(sets: &[StimulusSet]) -> Result<Vec<PairRecord>, ProbeError> {
    let mut out = Vec::new();
    for set in sets {
        out.extend(enumerate_pairs(set)?);
    }
    Ok(out)
}

pub fn build_features(
    store: &dyn StoreAccess,
    pairs: &[PairRecord],
    target: ProbeTarget,
    mode: FeatureMode,
    orientation: Orientation,
) -> Result<ProbeDataset, ProbeError> {
    let manifest = store.manifest();
    manifest.check_layer(target.layer)?;
    let swapped: Vec<bool> = match orientation {
        Orientation::Canonical => vec![false; pairs.len()],
        Orientation::Randomized { seed } => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            pairs.iter().map(|_| rng.random_bool(0.5)).collect()
        }
    };
    let index = |id: &str| store.require_index(id).map_err(ProbeError::from);
    let ordered = |k: usize, p: &PairRecord| -> Result<(usize, usize), ProbeError> {
        let (a, b) = (index(&p.first)?, index(&p.second)?);
        Ok(if swapped[k] { (b, a) } else { (a, b) })
    };

    let (dim, features) = match mode {
        FeatureMode::HiddenDiff | FeatureMode::HiddenConcat => {
            if target.head.is_some() {
                return Err(ProbeError::ModeMismatch {
                    mode,
                    reason: "hidden-unit features take no head".into(),
                });
            }
            let norm = normalize_layer(store, target.layer)?;
            let h = norm.cols;
            let dim = if mode == FeatureMode::HiddenDiff { h } else { 2 * h };
            let mut features = Vec::with_capacity(pairs.len() * dim);
            for (k, p) in pairs.iter().enumerate() {
                let (a, b) = ordered(k, p)?;
                let (ra, rb) = (norm.row(a), norm.row(b));
                if mode == FeatureMode::HiddenDiff {
                    features.extend(ra.iter().zip(rb).map(|(x, y)| x - y));
                } else {
                    features.extend_from_slice(ra);
                    features.extend_from_slice(rb);
                }
            }
            (dim, features)
        }
        FeatureMode::AttentionConcat => {
            let head = target.head.ok_or_else(|| ProbeError::ModeMismatch {
                mode,
                reason: "a head index is required".into(),
            })?;
            if !manifest.bidirectional || manifest.num_heads == 0 {
                return Err(ProbeError::ModeMismatch {
                    mode,
                    reason: "store has no attention summaries".into(),
                });
            }
            if head == 0 || head > manifest.num_heads {
                return Err(ProbeError::ModeMismatch {
                    mode,
                    reason: format!("head {head} out of range 1..={}", manifest.num_heads),
                });
            }
            let att = store.attention(target.layer)?;
            let dim = 2 * ATTENTION_SLOTS;
            let mut features = Vec::with_capacity(pairs.len() * dim);
            for (k, p) in pairs.iter().enumerate() {
                let (a, b) = ordered(k, p)?;
                features.extend(att.slots(a, head - 1).iter().map(|&v| f64::from(v)));
                features.extend(att.slots(b, head - 1).iter().map(|&v| f64::from(v)));
            }
            (dim, features)
        }
    };
    Ok(ProbeDataset {
        features,
        dim,
        labels: pairs.iter().map(|p| p.same_roles).collect(),
        pairs: pairs.to_vec(),
        swapped,
        mode,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldOutcome {
    pub fold_id: usize,
    pub held_out: (u8, u8),
    pub feature_distance: u8,
    pub n_train: usize,
    pub n_test: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub epochs: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub target: ProbeTarget,
    pub feature_mode: FeatureMode,
    pub orientation: Orientation,
    pub c: f64,
    pub folds: Vec<FoldOutcome>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Test pairs pooled over folds, keyed by feature distance.
    pub per_distance_accuracy: BTreeMap<u8, f64>,
    /// `None` when every fold has the same accuracy.
    pub t_vs_chance: Option<StatResult>,
    pub ci95: BootstrapCI,
}

impl ProbeResult {
    pub fn accuracy_range(&self) -> (f64, f64) {
        let lo = self.fold_accuracies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.fold_accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub svm: SvmConfig,
    pub orientation: Orientation,
    pub bootstrap_b: usize,
    pub bootstrap_seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            svm: SvmConfig::default(),
            orientation: Orientation::Canonical,
            bootstrap_b: 5000,
            bootstrap_seed: 0,
        }
    }
}

/// Cross-validates a probe over all 66 folds.
pub fn evaluate_folds(dataset: &ProbeDataset, svm: &SvmConfig) -> Result<Vec<FoldOutcome>, ProbeError> {
    make_folds()
        .par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..dataset.len())
                .filter(|&k| fold.is_training_pair(&dataset.pairs[k]))
                .collect();
            let test: Vec<usize> = (0..dataset.len())
                .filter(|&k| fold.is_test_pair(&dataset.pairs[k]))
                .collect();
            let leak = train.iter().any(|&k| {
                let p = &dataset.pairs[k];
                fold.is_held_out(p.first_structure) || fold.is_held_out(p.second_structure)
            });
            if leak {
                return Err(ProbeError::FoldLeak { fold: fold.fold_id });
            }
            let report = train_view(
                &TrainingView {
                    features: &dataset.features,
                    dim: dataset.dim,
                    labels: &dataset.labels,
                    rows: &train,
                },
                svm,
            )?;
            let n_correct = test
                .iter()
                .filter(|&&k| report.model.predict(dataset.row(k)) == dataset.labels[k])
                .count();
            let feature_distance = test.first().map_or(0, |&k| dataset.pairs[k].feature_distance);
            Ok(FoldOutcome {
                fold_id: fold.fold_id,
                held_out: fold.held_out,
                feature_distance,
                n_train: train.len(),
                n_test: test.len(),
                n_correct,
                accuracy: if test.is_empty() { f64::NAN } else { n_correct as f64 / test.len() as f64 },
                epochs: report.epochs,
                converged: report.converged,
            })
        })
        .collect()
}

pub fn summarize(
    target: ProbeTarget,
    mode: FeatureMode,
    config: &ProbeConfig,
    folds: Vec<FoldOutcome>,
) -> Result<ProbeResult, ProbeError> {
    if folds.iter().any(|f| f.n_test == 0) {
        return Err(ProbeError::Shape("a fold has no test pairs".into()));
    }
    let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let mut by_distance: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    for f in &folds {
        let e = by_distance.entry(f.feature_distance).or_default();
        e.0 += f.n_correct;
        e.1 += f.n_test;
    }
    let t_vs_chance = match one_sample_t(&fold_accuracies, CHANCE) {
        Ok(r) => Some(r),
        Err(StatError::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let ci95 = bootstrap_mean_ci(&fold_accuracies, config.bootstrap_b, config.bootstrap_seed, 0.95)?;
    Ok(ProbeResult {
        target,
        feature_mode: mode,
        orientation: config.orientation,
        c: config.svm.c,
        mean_accuracy: mean(&fold_accuracies),
        fold_accuracies,
        per_distance_accuracy: by_distance
            .into_iter()
            .map(|(d, (c, n))| (d, c as f64 / n as f64))
            .collect(),
        folds,
        t_vs_chance,
        ci95,
    })
}

pub fn run_probe(
    store: &dyn StoreAccess,
    sets: &[StimulusSet],
    target: ProbeTarget,
    mode: FeatureMode,
    config: &ProbeConfig,
) -> Result<ProbeResult, ProbeError> {
    let pairs = all_pairs(sets)?;
    run_probe_on_pairs(store, &pairs, target, mode, config)
}

pub fn run_probe_on_pairs(
    store: &dyn StoreAccess,
    pairs: &[PairRecord],
    target: ProbeTarget,
    mode: FeatureMode,
    config: &ProbeConfig,
) -> Result<ProbeResult, ProbeError> {
    let dataset = build_features(store, pairs, target, mode, config.orientation)?;
    let folds = evaluate_folds(&dataset, &config.svm)?;
    summarize(target, mode, config, folds)
}

/// Every layer, or every (layer, head) cell for attention features.
pub fn sweep_targets(store: &dyn StoreAccess, mode: FeatureMode) -> Vec<ProbeTarget> {
    let m = store.manifest();
    match mode {
        FeatureMode::AttentionConcat => (1..=m.num_layers)
            .flat_map(|l| (1..=m.num_heads).map(move |h| ProbeTarget::head(l, h)))
            .collect(),
        _ => (1..=m.num_layers).map(ProbeTarget::layer).collect(),
    }
}

/// Runs a probe per target and Bonferroni-adjusts `t_vs_chance` over the
/// full family (L layers, or L x A heads).
pub fn probe_sweep(
    store: &dyn StoreAccess,
    sets: &[StimulusSet],
    targets: &[ProbeTarget],
    mode: FeatureMode,
    config: &ProbeConfig,
) -> Result<Vec<ProbeResult>, ProbeError> {
    let pairs = all_pairs(sets)?;
    let mut targets = targets.to_vec();
    targets.sort();
    targets.dedup();
    let family = sweep_targets(store, mode).len().max(targets.len());
    let mut results = targets
        .iter()
        .map(|&t| run_probe_on_pairs(store, &pairs, t, mode, config))
        .collect::<Result<Vec<_>, _>>()?;
    for r in &mut results {
        if let Some(t) = r.t_vs_chance.as_mut() {
            apply_bonferroni(std::slice::from_mut(t), family);
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_enumeration() {
        let folds = make_folds();
        assert_eq!(folds.len(), NUM_FOLDS);
        assert_eq!(folds[0].held_out, (1, 2));
        assert_eq!(folds[65].held_out, (11, 12));
        for s in 1..=12u8 {
            assert_eq!(folds.iter().filter(|f| f.is_held_out(s)).count(), 11);
        }
        for f in &folds {
            assert_eq!(f.train_structures.len(), 10);
            assert!(f.train_structures.iter().all(|&s| !f.is_held_out(s)));
        }
        let ones: Vec<(u8, u8)> = folds.iter().filter(|f| f.is_held_out(1)).map(|f| f.held_out).collect();
        assert_eq!(ones, (2..=12).map(|j| (1, j)).collect::<Vec<_>>());
    }

    #[test]
    fn mode_names() {
        for m in [FeatureMode::HiddenDiff, FeatureMode::HiddenConcat, FeatureMode::AttentionConcat] {
            assert_eq!(m.cli_name().parse::<FeatureMode>().unwrap(), m);
        }
        assert_eq!(ProbeTarget::head(11, 5).to_string(), "L11H5");
    }
}
