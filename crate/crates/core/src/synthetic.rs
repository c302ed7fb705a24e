//! Stores with known structure, for dry runs and tests.
//!
//! Every builder is deterministic in its seed. Hidden values are filled
//! layer by layer in manifest order.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::interchange::{
    ActivationManifest, ActivationStore, AttentionTensor, HiddenMatrix, NormStats, StoreError,
    Strategy, ATTENTION_SLOTS,
};
use crate::stimgen::{RoleVersion, SentenceRecord, StimulusSet, NUM_STRUCTURES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoreShape {
    pub num_layers: usize,
    pub hidden_size: usize,
    /// 0 for a unidirectional store without attention summaries.
    pub num_heads: usize,
}

/// Where the per-unit normalisation statistics come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormSource {
    /// Mean 0, SD 1: normalisation is a no-op.
    Identity,
    /// Population statistics of the store's own rows.
    OwnRows,
}

/// Sentence row context handed to fill closures.
pub struct Row<'a> {
    pub layer: usize,
    pub index: usize,
    pub sentence: &'a SentenceRecord,
    pub set_index: usize,
}

pub fn sentences(sets: &[StimulusSet]) -> Vec<(usize, &SentenceRecord)> {
    sets.iter()
        .enumerate()
        .flat_map(|(i, s)| s.sentences.iter().map(move |r| (i, r)))
        .collect()
}

/// Builds a store over all sentences of `sets`. `fill` writes one hidden
/// row; `attention` (used only when `shape.num_heads > 0`) writes the
/// `heads x 10` block of one row.
pub fn build_store<H, A>(
    sets: &[StimulusSet],
    shape: StoreShape,
    strategy: Strategy,
    norm: NormSource,
    mut fill: H,
    mut attention: A,
) -> Result<ActivationStore, StoreError>
where
    H: FnMut(&Row<'_>, &mut [f32]),
    A: FnMut(&Row<'_>, &mut [f32]),
{
    let rows = sentences(sets);
    let n = rows.len();
    let ids = rows.iter().map(|(_, r)| r.sentence_id.clone()).collect();
    let manifest = ActivationManifest::new(
        "synthetic",
        shape.num_layers,
        shape.hidden_size,
        shape.num_heads,
        shape.num_heads > 0,
        strategy,
        ids,
    );
    let mut hidden = Vec::with_capacity(shape.num_layers);
    let mut atts = Vec::new();
    let mut norms = Vec::with_capacity(shape.num_layers);
    for layer in 1..=shape.num_layers {
        let h = shape.hidden_size;
        let mut data = vec![0.0f32; n * h];
        for (index, ((set_index, sentence), out)) in rows.iter().zip(data.chunks_mut(h)).enumerate() {
            fill(&Row { layer, index, sentence, set_index: *set_index }, out);
        }
        let m = HiddenMatrix::new(layer, n, h, data)?;
        norms.push(match norm {
            NormSource::Identity => NormStats::identity(layer, h),
            NormSource::OwnRows => NormStats::from_rows(&m),
        });
        hidden.push(m);
        if shape.num_heads > 0 {
            let width = shape.num_heads * ATTENTION_SLOTS;
            let mut data = vec![0.0f32; n * width];
            for (index, ((set_index, sentence), out)) in rows.iter().zip(data.chunks_mut(width)).enumerate() {
                attention(&Row { layer, index, sentence, set_index: *set_index }, out);
            }
            atts.push(AttentionTensor::new(layer, n, shape.num_heads, data)?);
        }
    }
    ActivationStore::new(manifest, hidden, atts, norms)
}

fn no_attention(_: &Row<'_>, out: &mut [f32]) {
    out.fill(0.0);
}

fn gaussian(rng: &mut Xoshiro256PlusPlus, sd: f64) -> f32 {
    Normal::new(0.0, sd).expect("sd is finite and non-negative").sample(rng) as f32
}

/// Gaussian noise everywhere except `signal_unit` at `signal_layer`,
/// which holds +1 for role version V0 and -1 for V1.
pub fn role_encoding_store(
    sets: &[StimulusSet],
    shape: StoreShape,
    signal_layer: usize,
    signal_unit: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<ActivationStore, StoreError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    build_store(
        sets,
        shape,
        Strategy::Cls,
        NormSource::OwnRows,
        |row, out| {
            for v in out.iter_mut() {
                *v = gaussian(&mut rng, noise_sd);
            }
            if row.layer == signal_layer {
                out[signal_unit] = match row.sentence.role_version {
                    RoleVersion::V0 => 1.0,
                    RoleVersion::V1 => -1.0,
                };
            }
        },
        no_attention,
    )
}

/// Representations that carry syntax and nothing else: a per-set noise
/// vector shared by every sentence of the set, plus a one-hot of the
/// voice (Experiment 1) or of the structure (Experiment 2).
pub fn syntax_onehot_store(
    sets: &[StimulusSet],
    shape: StoreShape,
    noise_sd: f64,
    seed: u64,
) -> Result<ActivationStore, StoreError> {
    assert!(shape.hidden_size >= NUM_STRUCTURES, "need one unit per structure");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let set_noise: Vec<Vec<Vec<f32>>> = (0..shape.num_layers)
        .map(|_| {
            sets.iter()
                .map(|_| (0..shape.hidden_size).map(|_| gaussian(&mut rng, noise_sd)).collect())
                .collect()
        })
        .collect();
    build_store(
        sets,
        shape,
        Strategy::Cls,
        NormSource::Identity,
        |row, out| {
            out.copy_from_slice(&set_noise[row.layer - 1][row.set_index]);
            out[syntax_slot(row.sentence)] += 1.0;
        },
        no_attention,
    )
}

fn syntax_slot(s: &SentenceRecord) -> usize {
    match (s.structure, s.condition) {
        (Some(d), _) => d.structure_id as usize - 1,
        (None, Some(c)) => {
            if c.same_syntax() {
                0
            } else {
                1
            }
        }
        (None, None) => 0,
    }
}

/// One-hot of the structure id, normalisation disabled.
pub fn structure_onehot_store(sets: &[StimulusSet], num_layers: usize) -> Result<ActivationStore, StoreError> {
    let shape = StoreShape {
        num_layers,
        hidden_size: NUM_STRUCTURES,
        num_heads: 0,
    };
    build_store(
        sets,
        shape,
        Strategy::Cls,
        NormSource::Identity,
        |row, out| {
            out.fill(0.0);
            out[syntax_slot(row.sentence)] = 1.0;
        },
        no_attention,
    )
}

/// Pure Gaussian noise; attention slots uniform on [0, 1] when heads are
/// requested.
pub fn random_store(sets: &[StimulusSet], shape: StoreShape, seed: u64) -> Result<ActivationStore, StoreError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut att_rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    build_store(
        sets,
        shape,
        Strategy::Cls,
        NormSource::OwnRows,
        |_, out| {
            for v in out.iter_mut() {
                *v = gaussian(&mut rng, 1.0);
            }
        },
        |_, out| {
            for v in out.iter_mut() {
                *v = rand::Rng::random::<f32>(&mut att_rng);
            }
        },
    )
}

/// Noise hidden states with attention slots computed by `pattern(row, head)`
/// (head is 1-based).
pub fn attention_store<P>(
    sets: &[StimulusSet],
    shape: StoreShape,
    seed: u64,
    mut pattern: P,
) -> Result<ActivationStore, StoreError>
where
    P: FnMut(&Row<'_>, usize) -> [f32; ATTENTION_SLOTS],
{
    assert!(shape.num_heads > 0);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    build_store(
        sets,
        shape,
        Strategy::Cls,
        NormSource::OwnRows,
        |_, out| {
            for v in out.iter_mut() {
                *v = gaussian(&mut rng, 1.0);
            }
        },
        |row, out| {
            for (h, block) in out.chunks_mut(ATTENTION_SLOTS).enumerate() {
                block.copy_from_slice(&pattern(row, h + 1));
            }
        },
    )
}
