use std::collections::HashMap;

use serde::Serialize;

use super::{fraction_positive, signed_rank_or_degenerate, AnalysisError, BootstrapSettings};
use crate::interchange::{StoreAccess, Strategy};
use crate::repspace::{exp1_pairs, similarity_table, PairLabel};
use crate::stats::{bootstrap_ci, friedman_test, mean, BootstrapCI, StatResult};
use crate::stimgen::{Condition, StimulusSet};

use Condition::{SdYd, SdYs, SsYd, SsYs};

/// The six unordered condition pairs; each difference is first minus second.
pub const POSTHOC_CONTRASTS: [(Condition, Condition); 6] = [
    (SdYs, SsYd),
    (SsYs, SdYd),
    (SsYd, SdYd),
    (SsYd, SsYs),
    (SdYs, SdYd),
    (SdYs, SsYs),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionMean {
    pub condition: Condition,
    pub mean_r: f64,
    pub mean_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exp1SetRow {
    pub set_id: String,
    /// Fisher z against the base, in `Condition::VARIANTS` order.
    pub z: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionContrast {
    pub first: Condition,
    pub second: Condition,
    pub mean_difference: f64,
    pub test: StatResult,
    /// Proportion of sets where `first` is more similar to the base.
    pub directional: BootstrapCI,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exp1Report {
    pub layer: usize,
    pub strategy: Strategy,
    pub n_sets: usize,
    pub means: Vec<ConditionMean>,
    pub friedman: StatResult,
    pub posthoc: Vec<ConditionContrast>,
    pub per_set: Vec<Exp1SetRow>,
    pub degenerate_units: usize,
}

impl Exp1Report {
    pub fn contrast(&self, first: Condition, second: Condition) -> Option<&ConditionContrast> {
        self.posthoc.iter().find(|c| c.first == first && c.second == second)
    }
}

fn column(c: Condition) -> usize {
    Condition::VARIANTS.iter().position(|&v| v == c).expect("variant condition")
}

pub fn run_exp1(
    store: &dyn StoreAccess,
    sets: &[StimulusSet],
    layer: usize,
    bootstrap: BootstrapSettings,
) -> Result<Exp1Report, AnalysisError> {
    if sets.len() < 2 {
        return Err(AnalysisError::Input(format!("Experiment 1 needs at least 2 sets, got {}", sets.len())));
    }
    let pairs = exp1_pairs(sets)?;
    let strategy = store.manifest().representation_strategy;
    let table = similarity_table(store, &pairs, &[layer], strategy)?;
    let mut lookup: HashMap<(&str, Condition), (f64, f64)> = HashMap::new();
    for rec in &table.records {
        if let PairLabel::Condition(c) = rec.label {
            lookup.insert((rec.set_id.as_str(), c), (rec.r, rec.z));
        }
    }
    let mut per_set = Vec::with_capacity(sets.len());
    let mut r_cols: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(sets.len())).collect();
    for set in sets {
        let mut z = [0.0; 4];
        for (j, &c) in Condition::VARIANTS.iter().enumerate() {
            let (r, zj) = lookup[&(set.set_id.as_str(), c)];
            z[j] = zj;
            r_cols[j].push(r);
        }
        per_set.push(Exp1SetRow {
            set_id: set.set_id.clone(),
            z,
        });
    }
    let matrix: Vec<Vec<f64>> = per_set.iter().map(|row| row.z.to_vec()).collect();
    let friedman = friedman_test(&matrix)?;
    let means = Condition::VARIANTS
        .iter()
        .enumerate()
        .map(|(j, &condition)| ConditionMean {
            condition,
            mean_r: mean(&r_cols[j]),
            mean_z: mean(&matrix.iter().map(|row| row[j]).collect::<Vec<_>>()),
        })
        .collect();
    let posthoc = POSTHOC_CONTRASTS
        .iter()
        .map(|&(first, second)| {
            let (a, b) = (column(first), column(second));
            let diffs: Vec<f64> = per_set.iter().map(|row| row.z[a] - row.z[b]).collect();
            let test = signed_rank_or_degenerate(&diffs)?.adjusted(POSTHOC_CONTRASTS.len());
            let directional = bootstrap_ci(
                &diffs,
                fraction_positive,
                &format!("proportion {first} > {second}"),
                bootstrap.b,
                bootstrap.seed,
                0.95,
            )?;
            Ok(ConditionContrast {
                first,
                second,
                mean_difference: mean(&diffs),
                test,
                directional,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(Exp1Report {
        layer,
        strategy,
        n_sets: sets.len(),
        means,
        friedman,
        posthoc,
        per_set,
        degenerate_units: table.degenerate_units.first().map_or(0, |d| d.1),
    })
}
