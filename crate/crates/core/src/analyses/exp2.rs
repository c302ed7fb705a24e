use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalysisError;
use crate::interchange::{StoreAccess, Strategy};
use crate::repspace::{exp2_pairs, similarity_table, PairLabel};
use crate::stats::{mean, rank_sum, StatResult};
use crate::stimgen::StimulusSet;

type SameOpposite = (Vec<f64>, Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceBucket {
    pub feature_distance: u8,
    pub n_same: usize,
    pub n_opposite: usize,
    pub mean_same: f64,
    pub mean_opposite: f64,
    /// Rank-sum of same-role against opposite-role z values; z > 0 when
    /// same-role pairs are more similar.
    pub contrast: StatResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exp2LayerReport {
    pub layer: usize,
    pub degenerate_units: usize,
    pub buckets: Vec<DistanceBucket>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exp2SimilarityReport {
    pub strategy: Strategy,
    pub n_sets: usize,
    /// Bonferroni family size (number of layers).
    pub family_size: usize,
    pub layers: Vec<Exp2LayerReport>,
}

/// Same- versus opposite-role similarity per feature distance, at each
/// requested layer. Corrected across all layers of the store.
pub fn run_exp2_similarity(
    store: &dyn StoreAccess,
    sets: &[StimulusSet],
    layers: &[usize],
) -> Result<Exp2SimilarityReport, AnalysisError> {
    if sets.is_empty() {
        return Err(AnalysisError::Input("no Experiment 2 sets".into()));
    }
    let pairs = exp2_pairs(sets)?;
    let strategy = store.manifest().representation_strategy;
    let table = similarity_table(store, &pairs, layers, strategy)?;
    let family_size = store.manifest().num_layers.max(table.degenerate_units.len());

    // layer -> distance -> (same, opposite)
    let mut grouped: BTreeMap<usize, BTreeMap<u8, SameOpposite>> = BTreeMap::new();
    for rec in &table.records {
        if let PairLabel::Roles {
            same_roles,
            feature_distance,
        } = rec.label
        {
            let bucket = grouped.entry(rec.layer).or_default().entry(feature_distance).or_default();
            if same_roles {
                bucket.0.push(rec.z);
            } else {
                bucket.1.push(rec.z);
            }
        }
    }
    let mut out = Vec::new();
    for &(layer, degenerate_units) in &table.degenerate_units {
        let by_distance = grouped.remove(&layer).unwrap_or_default();
        let mut buckets = Vec::new();
        for distance in 0..=3u8 {
            let (same, opposite) = by_distance.get(&distance).cloned().unwrap_or_default();
            // complete sets populate every bucket with both labels
            assert!(
                !same.is_empty() && !opposite.is_empty(),
                "feature distance {distance} has an empty same or opposite bucket"
            );
            buckets.push(DistanceBucket {
                feature_distance: distance,
                n_same: same.len(),
                n_opposite: opposite.len(),
                mean_same: mean(&same),
                mean_opposite: mean(&opposite),
                contrast: rank_sum(&same, &opposite)?.adjusted(family_size),
            });
        }
        out.push(Exp2LayerReport {
            layer,
            degenerate_units,
            buckets,
        });
    }
    Ok(Exp2SimilarityReport {
        strategy,
        n_sets: sets.len(),
        family_size,
        layers: out,
    })
}
