//! On-disk activation store shared with the extraction sidecar.
//!
//! Layout of a store directory (format version "1"):
//!
//! ```text
//! manifest.json
//! hidden/layer_{l}.bin      N x H     f32 little-endian, row-major
//! attention/layer_{l}.bin   N x A x 10 (only when A > 0)
//! norm/layer_{l}.bin        2 x H     row 0 = mean, row 1 = sd
//! ```
//!
//! Layers are numbered 1..=L and exclude the embedding layer. Row order in
//! every matrix is the order of `sentences` in the manifest. The manifest
//! records a CRC-32 for each file and for the sentence-id list, so a
//! permuted or corrupted store is detected by [`validate_store`].

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::atomic_write;
use crate::stimgen::SentenceRecord;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: &str = "1";
pub const DTYPE: &str = "f32le";
/// Number of directed word-pair attention weights per sentence and head.
pub const ATTENTION_SLOTS: usize = 10;
/// Attention values may exceed [0, 1] by this much before being flagged.
pub const ATTENTION_TOLERANCE: f32 = 1e-6;

/// Canonical attention slot order; `x->y` is the weight query word `x`
/// assigns to key word `y`.
pub const SLOT_NAMES: [&str; ATTENTION_SLOTS] = [
    "agent->patient",
    "patient->agent",
    "verb->agent",
    "agent->verb",
    "verb->patient",
    "patient->verb",
    "theme->agent",
    "agent->theme",
    "theme->patient",
    "patient->theme",
];

pub mod slot {
    pub const AGENT_TO_PATIENT: usize = 0;
    pub const PATIENT_TO_AGENT: usize = 1;
    pub const VERB_TO_AGENT: usize = 2;
    pub const AGENT_TO_VERB: usize = 3;
    pub const VERB_TO_PATIENT: usize = 4;
    pub const PATIENT_TO_VERB: usize = 5;
    pub const THEME_TO_AGENT: usize = 6;
    pub const AGENT_TO_THEME: usize = 7;
    pub const THEME_TO_PATIENT: usize = 8;
    pub const PATIENT_TO_THEME: usize = 9;
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("unsupported format version {found:?} (expected {FORMAT_VERSION:?})")]
    VersionMismatch { found: String },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("layer {layer} out of range 1..={num_layers}")]
    LayerOutOfRange { layer: usize, num_layers: usize },
    #[error("store has no {0}")]
    Absent(&'static str),
    #[error("unknown sentence `{0}`")]
    UnknownSentence(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            StoreError::MissingFile(path.to_path_buf())
        } else {
            StoreError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

/// Which token position stands for the sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    Cls,
    FinalPunct,
    MeanPool,
    VerbToken,
}

impl Strategy {
    pub fn cli_name(self) -> &'static str {
        match self {
            Strategy::Cls => "cls",
            Strategy::FinalPunct => "final-punct",
            Strategy::MeanPool => "mean-pool",
            Strategy::VerbToken => "verb-token",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cls" => Ok(Strategy::Cls),
            "final-punct" => Ok(Strategy::FinalPunct),
            "mean-pool" => Ok(Strategy::MeanPool),
            "verb-token" => Ok(Strategy::VerbToken),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub identity: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationManifest {
    pub format_version: String,
    pub model_id: String,
    pub num_layers: usize,
    pub hidden_size: usize,
    pub num_heads: usize,
    pub bidirectional: bool,
    pub representation_strategy: Strategy,
    pub sentences: Vec<String>,
    pub dtype: String,
    /// CRC-32 of each data file, keyed by path relative to the store root.
    #[serde(default)]
    pub checksums: BTreeMap<String, u32>,
    /// CRC-32 of the sentence ids joined with '\n'.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_order_crc32: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_corpus: Option<CorpusInfo>,
}

impl ActivationManifest {
    pub fn new(
        model_id: impl Into<String>,
        num_layers: usize,
        hidden_size: usize,
        num_heads: usize,
        bidirectional: bool,
        representation_strategy: Strategy,
        sentences: Vec<String>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            model_id: model_id.into(),
            num_layers,
            hidden_size,
            num_heads,
            bidirectional,
            representation_strategy,
            sentences,
            dtype: DTYPE.to_string(),
            checksums: BTreeMap::new(),
            sentence_order_crc32: None,
            norm_corpus: None,
        }
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    /// Checks header-level invariants (not file contents).
    pub fn check(&self) -> Result<(), StoreError> {
        if self.format_version != FORMAT_VERSION {
            return Err(StoreError::VersionMismatch {
                found: self.format_version.clone(),
            });
        }
        if self.dtype != DTYPE {
            return Err(StoreError::Manifest(format!("dtype must be {DTYPE:?}")));
        }
        if self.num_layers == 0 || self.hidden_size == 0 {
            return Err(StoreError::Manifest(
                "num_layers and hidden_size must be at least 1".into(),
            ));
        }
        if self.num_heads > 0 && !self.bidirectional {
            return Err(StoreError::Manifest(
                "attention summaries require a bidirectional model".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &self.sentences {
            if !seen.insert(id) {
                return Err(StoreError::Manifest(format!("duplicate sentence id `{id}`")));
            }
        }
        Ok(())
    }

    pub fn check_layer(&self, layer: usize) -> Result<(), StoreError> {
        if layer == 0 || layer > self.num_layers {
            Err(StoreError::LayerOutOfRange {
                layer,
                num_layers: self.num_layers,
            })
        } else {
            Ok(())
        }
    }

    pub fn sentence_order_checksum(&self) -> u32 {
        sentence_order_crc(&self.sentences)
    }

    pub fn index(&self) -> HashMap<String, usize> {
        self.sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect()
    }
}

fn sentence_order_crc(ids: &[String]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(id.as_bytes());
    }
    h.finalize()
}

pub fn hidden_file(layer: usize) -> String {
    format!("hidden/layer_{layer}.bin")
}

pub fn attention_file(layer: usize) -> String {
    format!("attention/layer_{layer}.bin")
}

pub fn norm_file(layer: usize) -> String {
    format!("norm/layer_{layer}.bin")
}

/// N x H hidden-state matrix for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenMatrix {
    pub layer: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl HiddenMatrix {
    pub fn new(layer: usize, rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, StoreError> {
        if data.len() != rows * cols {
            return Err(StoreError::Shape(format!(
                "hidden layer {layer}: {} values for {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self {
            layer,
            rows,
            cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// N x A x 10 attention summaries for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionTensor {
    pub layer: usize,
    pub rows: usize,
    pub heads: usize,
    pub data: Vec<f32>,
}

impl AttentionTensor {
    pub fn new(layer: usize, rows: usize, heads: usize, data: Vec<f32>) -> Result<Self, StoreError> {
        if data.len() != rows * heads * ATTENTION_SLOTS {
            return Err(StoreError::Shape(format!(
                "attention layer {layer}: {} values for {rows}x{heads}x{ATTENTION_SLOTS}",
                data.len()
            )));
        }
        Ok(Self {
            layer,
            rows,
            heads,
            data,
        })
    }

    /// The 10 slot weights of sentence `row` at `head` (0-based).
    pub fn slots(&self, row: usize, head: usize) -> &[f32] {
        let start = (row * self.heads + head) * ATTENTION_SLOTS;
        &self.data[start..start + ATTENTION_SLOTS]
    }
}

/// Per-unit reference-corpus statistics for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub layer: usize,
    pub mean: Vec<f32>,
    pub sd: Vec<f32>,
}

impl NormStats {
    pub fn identity(layer: usize, hidden: usize) -> Self {
        Self {
            layer,
            mean: vec![0.0; hidden],
            sd: vec![1.0; hidden],
        }
    }

    /// Population statistics of the rows of `m`.
    pub fn from_rows(m: &HiddenMatrix) -> Self {
        let n = m.rows as f64;
        let mut mean = vec![0.0f64; m.cols];
        for i in 0..m.rows {
            for (acc, &v) in mean.iter_mut().zip(m.row(i)) {
                *acc += f64::from(v);
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0f64; m.cols];
        for i in 0..m.rows {
            for ((acc, &v), mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
                let d = f64::from(v) - mu;
                *acc += d * d;
            }
        }
        Self {
            layer: m.layer,
            mean: mean.iter().map(|&v| v as f32).collect(),
            sd: var.iter().map(|&v| (v / n).sqrt() as f32).collect(),
        }
    }
}

/// Read access to a store, whether held in memory or read lazily from disk.
pub trait StoreAccess: Sync {
    fn manifest(&self) -> &ActivationManifest;
    fn sentence_index(&self, sentence_id: &str) -> Option<usize>;
    fn hidden(&self, layer: usize) -> Result<Cow<'_, HiddenMatrix>, StoreError>;
    fn attention(&self, layer: usize) -> Result<Cow<'_, AttentionTensor>, StoreError>;
    fn norm(&self, layer: usize) -> Result<Cow<'_, NormStats>, StoreError>;

    fn require_index(&self, sentence_id: &str) -> Result<usize, StoreError> {
        self.sentence_index(sentence_id)
            .ok_or_else(|| StoreError::UnknownSentence(sentence_id.to_string()))
    }
}

/// A fully materialised store.
#[derive(Clone, Debug)]
pub struct ActivationStore {
    pub manifest: ActivationManifest,
    pub hidden: Vec<HiddenMatrix>,
    /// Empty, or one tensor per layer.
    pub attention: Vec<AttentionTensor>,
    /// Empty, or one entry per layer.
    pub norm: Vec<NormStats>,
    index: HashMap<String, usize>,
}

impl ActivationStore {
    pub fn new(
        manifest: ActivationManifest,
        hidden: Vec<HiddenMatrix>,
        attention: Vec<AttentionTensor>,
        norm: Vec<NormStats>,
    ) -> Result<Self, StoreError> {
        let store = Self {
            index: manifest.index(),
            manifest,
            hidden,
            attention,
            norm,
        };
        store.check_shapes()?;
        Ok(store)
    }

    fn check_shapes(&self) -> Result<(), StoreError> {
        let m = &self.manifest;
        m.check()?;
        let n = m.num_sentences();
        let layers_ok = |len: usize, what: &str, optional: bool| {
            if len == m.num_layers || (optional && len == 0) {
                Ok(())
            } else {
                Err(StoreError::Shape(format!(
                    "{len} {what} layers for a {}-layer manifest",
                    m.num_layers
                )))
            }
        };
        layers_ok(self.hidden.len(), "hidden", false)?;
        layers_ok(self.attention.len(), "attention", true)?;
        layers_ok(self.norm.len(), "norm", true)?;
        if m.num_heads == 0 && !self.attention.is_empty() {
            return Err(StoreError::Shape("attention present but num_heads = 0".into()));
        }
        for (i, h) in self.hidden.iter().enumerate() {
            if h.layer != i + 1 || h.rows != n || h.cols != m.hidden_size {
                return Err(StoreError::Shape(format!(
                    "hidden entry {i} is layer {} with {}x{}, expected layer {} with {n}x{}",
                    h.layer,
                    h.rows,
                    h.cols,
                    i + 1,
                    m.hidden_size
                )));
            }
        }
        for (i, a) in self.attention.iter().enumerate() {
            if a.layer != i + 1 || a.rows != n || a.heads != m.num_heads {
                return Err(StoreError::Shape(format!(
                    "attention entry {i} is layer {} with {}x{}, expected layer {} with {n}x{}",
                    a.layer,
                    a.rows,
                    a.heads,
                    i + 1,
                    m.num_heads
                )));
            }
        }
        for (i, s) in self.norm.iter().enumerate() {
            if s.layer != i + 1 || s.mean.len() != m.hidden_size || s.sd.len() != m.hidden_size {
                return Err(StoreError::Shape(format!(
                    "norm entry {i} does not match layer {} with H = {}",
                    i + 1,
                    m.hidden_size
                )));
            }
        }
        Ok(())
    }
}

impl StoreAccess for ActivationStore {
    fn manifest(&self) -> &ActivationManifest {
        &self.manifest
    }

    fn sentence_index(&self, sentence_id: &str) -> Option<usize> {
        self.index.get(sentence_id).copied()
    }

    fn hidden(&self, layer: usize) -> Result<Cow<'_, HiddenMatrix>, StoreError> {
        self.manifest.check_layer(layer)?;
        Ok(Cow::Borrowed(&self.hidden[layer - 1]))
    }

    fn attention(&self, layer: usize) -> Result<Cow<'_, AttentionTensor>, StoreError> {
        self.manifest.check_layer(layer)?;
        self.attention
            .get(layer - 1)
            .map(Cow::Borrowed)
            .ok_or(StoreError::Absent("attention summaries"))
    }

    fn norm(&self, layer: usize) -> Result<Cow<'_, NormStats>, StoreError> {
        self.manifest.check_layer(layer)?;
        self.norm
            .get(layer - 1)
            .map(Cow::Borrowed)
            .ok_or(StoreError::Absent("normalization statistics"))
    }
}

fn encode_f32(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Writes `store` under `dir`. Each file is written atomically and the
/// manifest goes last, carrying the checksums of the files just written.
/// Returns the manifest as written.
pub fn write_store(store: &ActivationStore, dir: &Path) -> Result<ActivationManifest, StoreError> {
    store.check_shapes()?;
    let mut manifest = store.manifest.clone();
    manifest.checksums.clear();
    let mut put = |rel: String, values: &[f32]| -> Result<(), StoreError> {
        let bytes = encode_f32(values);
        manifest.checksums.insert(rel.clone(), crc32fast::hash(&bytes));
        let path = dir.join(&rel);
        atomic_write(&path, &bytes).map_err(io_err(&path))
    };
    for h in &store.hidden {
        put(hidden_file(h.layer), &h.data)?;
    }
    for a in &store.attention {
        put(attention_file(a.layer), &a.data)?;
    }
    for s in &store.norm {
        let mut both = s.mean.clone();
        both.extend_from_slice(&s.sd);
        put(norm_file(s.layer), &both)?;
    }
    manifest.sentence_order_crc32 = Some(manifest.sentence_order_checksum());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    let path = dir.join(MANIFEST_FILE);
    atomic_write(&path, format!("{json}\n").as_bytes()).map_err(io_err(&path))?;
    Ok(manifest)
}

fn read_manifest(dir: &Path) -> Result<ActivationManifest, StoreError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| StoreError::Manifest(e.to_string()))?;
    if let Some(v) = value.get("format_version").and_then(|v| v.as_str()) {
        if v != FORMAT_VERSION {
            return Err(StoreError::VersionMismatch { found: v.to_string() });
        }
    }
    serde_json::from_value(value).map_err(|e| StoreError::Manifest(e.to_string()))
}

/// Lazy reader over a store directory. Each accessor touches only the file
/// it needs.
#[derive(Clone, Debug)]
pub struct StoreReader {
    root: PathBuf,
    manifest: ActivationManifest,
    index: HashMap<String, usize>,
}

pub fn read_store(dir: &Path) -> Result<StoreReader, StoreError> {
    if !dir.is_dir() {
        return Err(StoreError::MissingFile(dir.to_path_buf()));
    }
    let manifest = read_manifest(dir)?;
    manifest.check()?;
    Ok(StoreReader {
        root: dir.to_path_buf(),
        index: manifest.index(),
        manifest,
    })
}

impl StoreReader {
    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_exact_file(&self, rel: &str, expected_values: usize) -> Result<Vec<f32>, StoreError> {
        let path = self.root.join(rel);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if bytes.len() != expected_values * 4 {
            return Err(StoreError::Shape(format!(
                "{rel}: {} bytes, expected {}",
                bytes.len(),
                expected_values * 4
            )));
        }
        Ok(decode_f32(&bytes))
    }

    /// Reads one hidden-state row by seeking to `index * H * 4`.
    pub fn hidden_row(&self, layer: usize, sentence_id: &str) -> Result<Vec<f32>, StoreError> {
        self.manifest.check_layer(layer)?;
        let i = self.require_index(sentence_id)?;
        let h = self.manifest.hidden_size;
        let path = self.root.join(hidden_file(layer));
        let mut file = File::open(&path).map_err(io_err(&path))?;
        file.seek(SeekFrom::Start((i * h * 4) as u64))
            .map_err(io_err(&path))?;
        let mut buf = vec![0u8; h * 4];
        file.read_exact(&mut buf).map_err(io_err(&path))?;
        Ok(decode_f32(&buf))
    }

    pub fn has_attention(&self) -> bool {
        self.manifest.num_heads > 0 && self.root.join(attention_file(1)).exists()
    }

    pub fn has_norm(&self) -> bool {
        self.root.join(norm_file(1)).exists()
    }

    /// Reads every file into memory.
    pub fn load(&self) -> Result<ActivationStore, StoreError> {
        let m = &self.manifest;
        let layers = 1..=m.num_layers;
        let hidden = layers
            .clone()
            .map(|l| self.hidden(l).map(Cow::into_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let attention = if self.has_attention() {
            layers
                .clone()
                .map(|l| self.attention(l).map(Cow::into_owned))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let norm = if self.has_norm() {
            layers
                .map(|l| self.norm(l).map(Cow::into_owned))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        ActivationStore::new(m.clone(), hidden, attention, norm)
    }
}

impl StoreAccess for StoreReader {
    fn manifest(&self) -> &ActivationManifest {
        &self.manifest
    }

    fn sentence_index(&self, sentence_id: &str) -> Option<usize> {
        self.index.get(sentence_id).copied()
    }

    fn hidden(&self, layer: usize) -> Result<Cow<'_, HiddenMatrix>, StoreError> {
        self.manifest.check_layer(layer)?;
        let (n, h) = (self.manifest.num_sentences(), self.manifest.hidden_size);
        let data = self.read_exact_file(&hidden_file(layer), n * h)?;
        Ok(Cow::Owned(HiddenMatrix::new(layer, n, h, data)?))
    }

    fn attention(&self, layer: usize) -> Result<Cow<'_, AttentionTensor>, StoreError> {
        self.manifest.check_layer(layer)?;
        let (n, a) = (self.manifest.num_sentences(), self.manifest.num_heads);
        if a == 0 {
            return Err(StoreError::Absent("attention summaries"));
        }
        let data = self.read_exact_file(&attention_file(layer), n * a * ATTENTION_SLOTS)?;
        Ok(Cow::Owned(AttentionTensor::new(layer, n, a, data)?))
    }

    fn norm(&self, layer: usize) -> Result<Cow<'_, NormStats>, StoreError> {
        self.manifest.check_layer(layer)?;
        let h = self.manifest.hidden_size;
        let rel = norm_file(layer);
        if !self.root.join(&rel).exists() {
            return Err(StoreError::Absent("normalization statistics"));
        }
        let data = self.read_exact_file(&rel, 2 * h)?;
        Ok(Cow::Owned(NormStats {
            layer,
            mean: data[..h].to_vec(),
            sd: data[h..].to_vec(),
        }))
    }
}

/// One problem found by [`validate_store`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    Manifest { message: String },
    MissingFile { file: String },
    LengthMismatch { file: String, expected: u64, actual: u64 },
    ChecksumMismatch { file: String, expected: u32, actual: u32 },
    SentenceOrderChecksum { expected: u32, actual: u32 },
    NonFinite { file: String, row: usize, col: usize, value: String },
    AttentionOutOfRange { file: String, row: usize, head: usize, slot: usize, value: f32 },
    NegativeSd { file: String, unit: usize, value: f32 },
    SentenceMismatch { message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks a store directory against its manifest and, optionally, the
/// stimulus records it was extracted from. Never fails: every problem is an
/// entry in the report.
pub fn validate_store(dir: &Path, stimuli: Option<&[SentenceRecord]>) -> ValidationReport {
    let mut issues = Vec::new();
    let manifest = match read_manifest(dir).and_then(|m| m.check().map(|_| m)) {
        Ok(m) => m,
        Err(e) => {
            issues.push(Issue::Manifest {
                message: e.to_string(),
            });
            return ValidationReport { issues };
        }
    };
    let n = manifest.num_sentences();
    let h = manifest.hidden_size;

    if let Some(expected) = manifest.sentence_order_crc32 {
        let actual = manifest.sentence_order_checksum();
        if actual != expected {
            issues.push(Issue::SentenceOrderChecksum { expected, actual });
        }
    }

    let mut check_file = |rel: String, row_width: usize, required: bool, kind: FileKind| {
        let path = dir.join(&rel);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(_) => {
                if required || manifest.checksums.contains_key(&rel) {
                    issues.push(Issue::MissingFile { file: rel });
                }
                return;
            }
        };
        let rows = if kind == FileKind::Norm { 2 } else { n };
        let expected = (rows * row_width * 4) as u64;
        if bytes.len() as u64 != expected {
            issues.push(Issue::LengthMismatch {
                file: rel.clone(),
                expected,
                actual: bytes.len() as u64,
            });
        }
        if let Some(&want) = manifest.checksums.get(&rel) {
            let got = crc32fast::hash(&bytes);
            if got != want {
                issues.push(Issue::ChecksumMismatch {
                    file: rel.clone(),
                    expected: want,
                    actual: got,
                });
            }
        }
        for (idx, v) in decode_f32(&bytes).into_iter().enumerate() {
            let (row, col) = (idx / row_width, idx % row_width);
            if !v.is_finite() {
                issues.push(Issue::NonFinite {
                    file: rel.clone(),
                    row,
                    col,
                    value: format!("{v}"),
                });
                continue;
            }
            match kind {
                FileKind::Attention => {
                    if !(-ATTENTION_TOLERANCE..=1.0 + ATTENTION_TOLERANCE).contains(&v) {
                        issues.push(Issue::AttentionOutOfRange {
                            file: rel.clone(),
                            row,
                            head: col / ATTENTION_SLOTS,
                            slot: col % ATTENTION_SLOTS,
                            value: v,
                        });
                    }
                }
                FileKind::Norm if row == 1 && v < 0.0 => {
                    issues.push(Issue::NegativeSd {
                        file: rel.clone(),
                        unit: col,
                        value: v,
                    });
                }
                _ => {}
            }
        }
    };

    let has_norm = dir.join(norm_file(1)).exists();
    for layer in 1..=manifest.num_layers {
        check_file(hidden_file(layer), h, true, FileKind::Hidden);
        if manifest.num_heads > 0 {
            check_file(
                attention_file(layer),
                manifest.num_heads * ATTENTION_SLOTS,
                false,
                FileKind::Attention,
            );
        }
        check_file(norm_file(layer), h, has_norm, FileKind::Norm);
    }

    if let Some(records) = stimuli {
        let stim_ids: Vec<&str> = records.iter().map(|r| r.sentence_id.as_str()).collect();
        let store_ids: Vec<&str> = manifest.sentences.iter().map(String::as_str).collect();
        if stim_ids != store_ids {
            let stim_set: std::collections::HashSet<&str> = stim_ids.iter().copied().collect();
            let store_set: std::collections::HashSet<&str> = store_ids.iter().copied().collect();
            let mut missing: Vec<&str> = stim_ids
                .iter()
                .copied()
                .filter(|s| !store_set.contains(s))
                .collect();
            let mut extra: Vec<&str> = store_ids
                .iter()
                .copied()
                .filter(|s| !stim_set.contains(s))
                .collect();
            missing.truncate(10);
            extra.truncate(10);
            let message = if missing.is_empty() && extra.is_empty() {
                "store rows are in a different order than the stimulus manifest".to_string()
            } else {
                format!("missing from store: {missing:?}; not in stimuli: {extra:?}")
            };
            issues.push(Issue::SentenceMismatch { message });
        }
    }
    ValidationReport { issues }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Hidden,
    Attention,
    Norm,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize, h: usize, layers: usize, heads: usize) -> ActivationStore {
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let manifest =
            ActivationManifest::new("test", layers, h, heads, heads > 0, Strategy::Cls, ids);
        let hidden = (1..=layers)
            .map(|l| {
                let data = (0..n * h).map(|i| (i as f32) * 0.5 + l as f32).collect();
                HiddenMatrix::new(l, n, h, data).unwrap()
            })
            .collect();
        let attention = (1..=layers)
            .filter(|_| heads > 0)
            .map(|l| {
                let data = (0..n * heads * ATTENTION_SLOTS)
                    .map(|i| (i % 7) as f32 / 7.0)
                    .collect();
                AttentionTensor::new(l, n, heads, data).unwrap()
            })
            .collect();
        let norm = (1..=layers).map(|l| NormStats::identity(l, h)).collect();
        ActivationStore::new(manifest, hidden, attention, norm).unwrap()
    }

    #[test]
    fn hidden_file_size() {
        let dir = tempfile::tempdir().unwrap();
        write_store(&tiny(2, 3, 1, 0), dir.path()).unwrap();
        assert_eq!(fs::metadata(dir.path().join("hidden/layer_1.bin")).unwrap().len(), 24);
        assert!(!dir.path().join("attention").exists());
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let store = tiny(4, 5, 2, 3);
        write_store(&store, dir.path()).unwrap();
        let back = read_store(dir.path()).unwrap().load().unwrap();
        assert_eq!(back.hidden, store.hidden);
        assert_eq!(back.attention, store.attention);
        assert_eq!(back.norm, store.norm);
        assert!(validate_store(dir.path(), None).is_valid());
    }

    #[test]
    fn row_offset_matches_sequential_read() {
        let dir = tempfile::tempdir().unwrap();
        let store = tiny(5, 4, 2, 0);
        write_store(&store, dir.path()).unwrap();
        let reader = read_store(dir.path()).unwrap();
        let full = reader.hidden(2).unwrap();
        for i in 0..5 {
            assert_eq!(reader.hidden_row(2, &format!("s{i}")).unwrap(), full.row(i));
        }
        assert!(matches!(
            reader.hidden_row(2, "nope"),
            Err(StoreError::UnknownSentence(_))
        ));
    }

    #[test]
    fn lazy_read_touches_one_file() {
        let dir = tempfile::tempdir().unwrap();
        write_store(&tiny(3, 2, 3, 0), dir.path()).unwrap();
        fs::remove_file(dir.path().join("hidden/layer_3.bin")).unwrap();
        let reader = read_store(dir.path()).unwrap();
        assert!(reader.hidden(1).is_ok());
        assert!(matches!(reader.hidden(3), Err(StoreError::MissingFile(_))));
    }

    #[test]
    fn version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_store(&tiny(1, 1, 1, 0), dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = fs::read_to_string(&path).unwrap().replace("\"1\"", "\"2\"");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            read_store(dir.path()),
            Err(StoreError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn attention_requires_bidirectional() {
        let mut m = ActivationManifest::new("gpt", 1, 2, 2, false, Strategy::FinalPunct, vec![]);
        assert!(m.check().is_err());
        m.bidirectional = true;
        assert!(m.check().is_ok());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let store = tiny(2, 3, 1, 0);
        let mut bad = store.clone();
        bad.hidden[0].cols = 4;
        assert!(matches!(write_store(&bad, Path::new("/nonexistent")), Err(StoreError::Shape(_))));
        assert!(HiddenMatrix::new(1, 2, 3, vec![0.0; 5]).is_err());
    }

    #[test]
    fn truncation_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_store(&tiny(2, 3, 1, 0), dir.path()).unwrap();
        let path = dir.path().join("hidden/layer_1.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        let report = validate_store(dir.path(), None);
        assert!(report.issues.contains(&Issue::LengthMismatch {
            file: "hidden/layer_1.bin".into(),
            expected: 24,
            actual: 20
        }));
    }

    #[test]
    fn nan_reported_with_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = tiny(2, 3, 1, 0);
        store.hidden[0].data[0] = f32::NAN;
        write_store(&store, dir.path()).unwrap();
        let report = validate_store(dir.path(), None);
        assert_eq!(
            report.issues,
            vec![Issue::NonFinite {
                file: "hidden/layer_1.bin".into(),
                row: 0,
                col: 0,
                value: "NaN".into()
            }]
        );
    }

    #[test]
    fn attention_tolerance_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = tiny(2, 3, 1, 2);
        store.attention[0].data[3] = 1.0 + 1e-9;
        store.attention[0].data[4] = 1.01;
        write_store(&store, dir.path()).unwrap();
        let report = validate_store(dir.path(), None);
        assert_eq!(report.issues.len(), 1);
        assert!(matches!(
            report.issues[0],
            Issue::AttentionOutOfRange { row: 0, head: 0, slot: 4, .. }
        ));
    }

    #[test]
    fn permuted_manifest_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_store(&tiny(3, 2, 1, 0), dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"s0\"", "\"tmp\"")
            .replace("\"s1\"", "\"s0\"")
            .replace("\"tmp\"", "\"s1\"");
        fs::write(&path, text).unwrap();
        let report = validate_store(dir.path(), None);
        assert!(matches!(report.issues[0], Issue::SentenceOrderChecksum { .. }));
    }

    #[test]
    fn bert_attention_file_size() {
        // 1200 sentences, 12 heads, 10 slots, 4 bytes
        assert_eq!(1200 * 12 * ATTENTION_SLOTS * 4, 576_000);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("final-punct".parse::<Strategy>().unwrap(), Strategy::FinalPunct);
        assert_eq!("MEAN_POOL".parse::<Strategy>().unwrap(), Strategy::MeanPool);
        assert!("first".parse::<Strategy>().is_err());
        for s in [Strategy::Cls, Strategy::FinalPunct, Strategy::MeanPool, Strategy::VerbToken] {
            assert_eq!(s.cli_name().parse::<Strategy>().unwrap(), s);
        }
    }
}
