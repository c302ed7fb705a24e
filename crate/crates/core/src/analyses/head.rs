use serde::Serialize;

use super::{signed_rank_or_degenerate, AnalysisError};
use crate::interchange::{slot, StoreAccess, StoreError, SLOT_NAMES};
use crate::stats::{mean, StatResult};
use crate::stimgen::{RoleVersion, StimulusSet, StructureDescriptor, NUM_STRUCTURES};

/// Attention weights are clamped to `[LOGIT_EPS, 1 - LOGIT_EPS]` before
/// the logit.
pub const LOGIT_EPS: f64 = 1e-6;

/// (agent-favouring slot, patient-favouring slot).
pub const HEAD_CONTRASTS: [(usize, usize); 3] = [
    (slot::VERB_TO_AGENT, slot::VERB_TO_PATIENT),
    (slot::THEME_TO_AGENT, slot::THEME_TO_PATIENT),
    (slot::PATIENT_TO_AGENT, slot::AGENT_TO_PATIENT),
];

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_EPS, 1.0 - LOGIT_EPS);
    (p / (1.0 - p)).ln()
}

/// Mean logit weights of one sentence type over sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeMeans {
    pub structure_id: u8,
    pub role_version: RoleVersion,
    pub higher: f64,
    pub lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureDirection {
    pub structure_id: u8,
    pub label: String,
    pub mean_difference: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeadContrast {
    pub name: String,
    pub higher_slot: &'static str,
    pub lower_slot: &'static str,
    /// The 24 sentence types, structure-major.
    pub per_type: Vec<TypeMeans>,
    pub per_structure: Vec<StructureDirection>,
    /// Structures whose mean difference favours the agent.
    pub agreeing_structures: usize,
    /// Signed-rank test over per-set mean differences.
    pub test: StatResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeadCharacterization {
    pub layer: usize,
    /// 1-based.
    pub head: usize,
    pub n_sets: usize,
    pub contrasts: Vec<HeadContrast>,
}

/// Agent- versus patient-directed attention of one head over Experiment 2
/// sets. p values are corrected over the three contrasts.
pub fn characterize_head(
    store: &dyn StoreAccess,
    sets: &[StimulusSet],
    layer: usize,
    head: usize,
) -> Result<HeadCharacterization, AnalysisError> {
    let manifest = store.manifest();
    if !manifest.bidirectional || manifest.num_heads == 0 {
        return Err(StoreError::Absent("attention summaries").into());
    }
    if head == 0 || head > manifest.num_heads {
        return Err(AnalysisError::HeadOutOfRange {
            head,
            num_heads: manifest.num_heads,
        });
    }
    if sets.is_empty() {
        return Err(AnalysisError::Input("no Experiment 2 sets".into()));
    }
    for set in sets {
        set.check_exp2()?;
    }
    let attention = store.attention(layer)?;
    let structures = StructureDescriptor::all();

    // rows[set][structure][version] -> store row
    let rows = sets
        .iter()
        .map(|set| {
            structures
                .iter()
                .map(|d| {
                    RoleVersion::BOTH
                        .iter()
                        .map(|&v| {
                            let s = set.by_structure(d.structure_id, v).expect("checked");
                            store.require_index(&s.sentence_id)
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, StoreError>>()?;

    let n_sets = sets.len() as f64;
    let mut contrasts = Vec::new();
    for &(hi, lo) in &HEAD_CONTRASTS {
        let value = |row: usize, s: usize| logit(f64::from(attention.slots(row, head - 1)[s]));
        let mut per_type = Vec::with_capacity(2 * NUM_STRUCTURES);
        let mut per_structure = Vec::with_capacity(NUM_STRUCTURES);
        for (k, d) in structures.iter().enumerate() {
            let mut structure_diff = 0.0;
            for (v, &version) in RoleVersion::BOTH.iter().enumerate() {
                let higher = rows.iter().map(|r| value(r[k][v], hi)).sum::<f64>() / n_sets;
                let lower = rows.iter().map(|r| value(r[k][v], lo)).sum::<f64>() / n_sets;
                structure_diff += 0.5 * (higher - lower);
                per_type.push(TypeMeans {
                    structure_id: d.structure_id,
                    role_version: version,
                    higher,
                    lower,
                });
            }
            per_structure.push(StructureDirection {
                structure_id: d.structure_id,
                label: d.label(),
                mean_difference: structure_diff,
                agrees: structure_diff > 0.0,
            });
        }
        let set_diffs: Vec<f64> = rows
            .iter()
            .map(|r| {
                let diffs: Vec<f64> = r.iter().flatten().map(|&row| value(row, hi) - value(row, lo)).collect();
                mean(&diffs)
            })
            .collect();
        contrasts.push(HeadContrast {
            name: format!("{} vs {}", SLOT_NAMES[hi], SLOT_NAMES[lo]),
            higher_slot: SLOT_NAMES[hi],
            lower_slot: SLOT_NAMES[lo],
            per_type,
            agreeing_structures: per_structure.iter().filter(|s| s.agrees).count(),
            per_structure,
            test: signed_rank_or_degenerate(&set_diffs)?.adjusted(HEAD_CONTRASTS.len()),
        });
    }
    Ok(HeadCharacterization {
        layer,
        head,
        n_sets: sets.len(),
        contrasts,
    })
}
