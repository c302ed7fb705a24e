//! Unit normalization and Fisher-transformed cosine similarity.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interchange::{NormStats, StoreAccess, StoreError, Strategy};
use crate::stimgen::{enumerate_pairs, Condition, StimError, StimulusSet};

/// Clamp applied to r before the Fisher transform.
pub const FISHER_EPS: f64 = 1e-7;
/// Units whose reference SD falls below this are zeroed.
pub const DEGENERATE_SD: f64 = 1e-12;
const R_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RepError {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("correlation {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("store strategy is {found:?} but {expected:?} was requested")]
    StrategyMismatch { expected: Strategy, found: Strategy },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Stim(#[from] StimError),
}

/// `(v - mean) / sd` per unit. Returns the vector and the number of
/// degenerate units that were set to zero.
pub fn normalize_units(v: &[f32], stats: &NormStats) -> Result<(Vec<f64>, usize), RepError> {
    if v.len() != stats.mean.len() || v.len() != stats.sd.len() {
        return Err(RepError::Dimension {
            left: v.len(),
            right: stats.mean.len(),
        });
    }
    let mut degenerate = 0;
    let out = v
        .iter()
        .zip(stats.mean.iter().zip(&stats.sd))
        .map(|(&x, (&m, &s))| {
            let s = f64::from(s);
            if s < DEGENERATE_SD {
                degenerate += 1;
                0.0
            } else {
                (f64::from(x) - f64::from(m)) / s
            }
        })
        .collect();
    Ok((out, degenerate))
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, RepError> {
    if u.len() != v.len() {
        return Err(RepError::Dimension {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(RepError::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

pub fn fisher_z(r: f64) -> Result<f64, RepError> {
    if !r.is_finite() || r.abs() > 1.0 + R_TOLERANCE {
        return Err(RepError::OutOfRange(r));
    }
    // evaluated on |r| so the transform is exactly odd
    Ok(r.signum() * r.abs().min(1.0 - FISHER_EPS).atanh())
}

/// One layer of a store after normalization, rows in manifest order.
#[derive(Clone, Debug)]
pub struct NormalizedLayer {
    pub layer: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Units zeroed because their reference SD was degenerate.
    pub degenerate_units: usize,
}

impl NormalizedLayer {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub fn normalize_layer(store: &dyn StoreAccess, layer: usize) -> Result<NormalizedLayer, RepError> {
    let hidden = store.hidden(layer)?;
    let stats = store.norm(layer)?;
    let mut data = Vec::with_capacity(hidden.data.len());
    let mut degenerate_units = 0;
    for i in 0..hidden.rows {
        let (row, d) = normalize_units(hidden.row(i), &stats)?;
        degenerate_units = d;
        data.extend(row);
    }
    Ok(NormalizedLayer {
        layer,
        cols: hidden.cols,
        data,
        degenerate_units,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum PairLabel {
    /// Base sentence against a variant.
    Condition(Condition),
    Roles { same_roles: bool, feature_distance: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimilarityPair {
    pub set_id: String,
    pub first: String,
    pub second: String,
    pub label: PairLabel,
}

/// Base-versus-variant pairs for Experiment 1 sets, four per set.
pub fn exp1_pairs(sets: &[StimulusSet]) -> Result<Vec<SimilarityPair>, RepError> {
    let mut out = Vec::new();
    for set in sets {
        set.check_exp1()?;
        let base = set.by_condition(Condition::Base).expect("checked");
        for &c in &Condition::VARIANTS {
            let other = set.by_condition(c).expect("checked");
            out.push(SimilarityPair {
                set_id: set.set_id.clone(),
                first: base.sentence_id.clone(),
                second: other.sentence_id.clone(),
                label: PairLabel::Condition(c),
            });
        }
    }
    Ok(out)
}

/// All labelled cross-structure pairs for Experiment 2 sets.
pub fn exp2_pairs(sets: &[StimulusSet]) -> Result<Vec<SimilarityPair>, RepError> {
    let mut out = Vec::new();
    for set in sets {
        for p in enumerate_pairs(set)? {
            out.push(SimilarityPair {
                set_id: p.set_id,
                first: p.first,
                second: p.second,
                label: PairLabel::Roles {
                    same_roles: p.same_roles,
                    feature_distance: p.feature_distance,
                },
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityRecord {
    pub set_id: String,
    pub first: String,
    pub second: String,
    pub label: PairLabel,
    pub layer: usize,
    pub r: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SimilarityTable {
    pub records: Vec<SimilarityRecord>,
    /// Degenerate-unit count per requested layer.
    pub degenerate_units: Vec<(usize, usize)>,
}

/// Similarities for every pair at every requested layer. Output is ordered
/// by layer, then `(set_id, first, second)`, whatever the input order.
pub fn similarity_table(
    store: &dyn StoreAccess,
    pairs: &[SimilarityPair],
    layers: &[usize],
    strategy: Strategy,
) -> Result<SimilarityTable, RepError> {
    let found = store.manifest().representation_strategy;
    if found != strategy {
        return Err(RepError::StrategyMismatch {
            expected: strategy,
            found,
        });
    }
    let mut sorted: Vec<&SimilarityPair> = pairs.iter().collect();
    sorted.sort();
    sorted.dedup();
    let indexed = sorted
        .iter()
        .map(|p| Ok((*p, store.require_index(&p.first)?, store.require_index(&p.second)?)))
        .collect::<Result<Vec<_>, RepError>>()?;
    let mut layers = layers.to_vec();
    layers.sort_unstable();
    layers.dedup();

    let per_layer = layers
        .par_iter()
        .map(|&layer| {
            let norm = normalize_layer(store, layer)?;
            let records = indexed
                .iter()
                .map(|&(p, i, j)| {
                    let r = cosine(norm.row(i), norm.row(j))?;
                    Ok(SimilarityRecord {
                        set_id: p.set_id.clone(),
                        first: p.first.clone(),
                        second: p.second.clone(),
                        label: p.label,
                        layer,
                        r,
                        z: fisher_z(r)?,
                    })
                })
                .collect::<Result<Vec<_>, RepError>>()?;
            Ok((layer, norm.degenerate_units, records))
        })
        .collect::<Result<Vec<_>, RepError>>()?;

    let mut table = SimilarityTable::default();
    for (layer, degenerate, records) in per_layer {
        table.degenerate_units.push((layer, degenerate));
        table.records.extend(records);
    }
    Ok(table)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    set_id: &'a str,
    first: &'a str,
    second: &'a str,
    condition: &'a str,
    same_roles: Option<bool>,
    feature_distance: Option<u8>,
    layer: usize,
    r: f64,
    z: f64,
}

pub fn write_similarity_csv<W: Write>(records: &[SimilarityRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in records {
        let (condition, same_roles, feature_distance) = match rec.label {
            PairLabel::Condition(c) => (c.as_str(), None, None),
            PairLabel::Roles {
                same_roles,
                feature_distance,
            } => ("", Some(same_roles), Some(feature_distance)),
        };
        w.serialize(CsvRow {
            set_id: &rec.set_id,
            first: &rec.first,
            second: &rec.second,
            condition,
            same_roles,
            feature_distance,
            layer: rec.layer,
            r: rec.r,
            z: rec.z,
        })?;
    }
    w.flush()?;
    Ok(())
}
