//! Controlled stimulus generation.
//!
//! Experiment 1 sets contain a base active transitive sentence plus four
//! variants crossing meaning (same / swapped roles) with syntax (active /
//! passive). Experiment 2 sets instantiate twelve ditransitive structures,
//! each in two role versions, and are consumed as labelled sentence pairs.

mod builtin;
mod manifest;
mod templates;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{builtin_exp1_lexicon, builtin_exp2_lexicon};
pub use manifest::{
    load_exp1_lexicon, load_exp2_lexicon, load_stimuli, parse_stimuli, render_manifest,
    write_manifest,
};
pub use templates::{
    generate_exp1, generate_exp1_set, generate_exp2, generate_exp2_set, Exp1LexEntry, Exp2LexEntry,
};

/// Number of Experiment 2 structures.
pub const NUM_STRUCTURES: usize = 12;

#[derive(Debug, Error)]
pub enum StimError {
    #[error("invalid lexicon entry: field `{field}` {reason}")]
    InvalidLexicon { field: &'static str, reason: String },
    #[error("lexicon has {available} entries but {requested} sets were requested")]
    NotEnoughEntries { requested: usize, available: usize },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("set `{set_id}` is incomplete: missing structure {structure_id} version {version}")]
    IncompleteSet {
        set_id: String,
        structure_id: u8,
        version: RoleVersion,
    },
    #[error("set `{set_id}`: {reason}")]
    MalformedSet { set_id: String, reason: String },
    #[error("invalid sentence record `{sentence_id}`: {reason}")]
    InvalidRecord { sentence_id: String, reason: String },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "BASE")]
    Base,
    SsYs,
    SsYd,
    SdYs,
    SdYd,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Base,
        Condition::SsYs,
        Condition::SsYd,
        Condition::SdYs,
        Condition::SdYd,
    ];
    /// The four conditions compared against the base sentence.
    pub const VARIANTS: [Condition; 4] = [
        Condition::SsYs,
        Condition::SsYd,
        Condition::SdYs,
        Condition::SdYd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Base => "BASE",
            Condition::SsYs => "SsYs",
            Condition::SsYd => "SsYd",
            Condition::SdYs => "SdYs",
            Condition::SdYd => "SdYd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Thematic roles match the base sentence.
    pub fn same_semantics(self) -> bool {
        matches!(self, Condition::Base | Condition::SsYs | Condition::SsYd)
    }

    /// Syntax (voice) matches the base sentence.
    pub fn same_syntax(self) -> bool {
        matches!(self, Condition::Base | Condition::SsYs | Condition::SdYs)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoleVersion {
    V0,
    V1,
}

impl RoleVersion {
    pub const BOTH: [RoleVersion; 2] = [RoleVersion::V0, RoleVersion::V1];

    pub fn index(self) -> usize {
        match self {
            RoleVersion::V0 => 0,
            RoleVersion::V1 => 1,
        }
    }
}

impl fmt::Display for RoleVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoleVersion::V0 => "V0",
            RoleVersion::V1 => "V1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Voice {
    Active,
    Passive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Construction {
    /// Double object: "gave the woman the milk".
    #[serde(rename = "DO")]
    DoubleObject,
    /// Prepositional object: "gave the milk to the woman".
    #[serde(rename = "PO")]
    PrepositionalObject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Form {
    Simple,
    CleftSubj,
    CleftDo,
    CleftIo,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    structure_id: u8,
    voice: Voice,
    construction: Construction,
    form: Form,
}

/// One of the twelve Experiment 2 sentence structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStructure")]
pub struct StructureDescriptor {
    pub structure_id: u8,
    pub voice: Voice,
    pub construction: Construction,
    pub form: Form,
}

use Construction::{DoubleObject as Do, PrepositionalObject as Po};
use Form::{CleftDo, CleftIo, CleftSubj, Simple};
use Voice::{Active, Passive};

const fn sd(structure_id: u8, voice: Voice, construction: Construction, form: Form) -> StructureDescriptor {
    StructureDescriptor {
        structure_id,
        voice,
        construction,
        form,
    }
}

static STRUCTURES: [StructureDescriptor; NUM_STRUCTURES] = [
    sd(1, Active, Do, Simple),
    sd(2, Active, Do, CleftSubj),
    sd(3, Active, Do, CleftDo),
    sd(4, Active, Po, Simple),
    sd(5, Active, Po, CleftSubj),
    sd(6, Active, Po, CleftDo),
    sd(7, Active, Po, CleftIo),
    sd(8, Passive, Do, Simple),
    sd(9, Passive, Do, CleftIo),
    sd(10, Passive, Po, Simple),
    sd(11, Passive, Po, CleftDo),
    sd(12, Passive, Po, CleftIo),
];

impl StructureDescriptor {
    pub fn all() -> &'static [StructureDescriptor; NUM_STRUCTURES] {
        &STRUCTURES
    }

    pub fn from_id(structure_id: u8) -> Option<Self> {
        STRUCTURES.get(usize::from(structure_id).checked_sub(1)?).copied()
    }

    /// Looks up the structure id for a (voice, construction, form) combination.
    pub fn lookup(voice: Voice, construction: Construction, form: Form) -> Result<Self, StimError> {
        STRUCTURES
            .iter()
            .find(|s| s.voice == voice && s.construction == construction && s.form == form)
            .copied()
            .ok_or_else(|| {
                StimError::InvalidStructure(format!(
                    "{voice:?}/{construction:?}/{form:?} is not one of the twelve structures"
                ))
            })
    }

    pub fn is_cleft(&self) -> bool {
        self.form != Form::Simple
    }

    /// (passive, prepositional-object, cleft) feature triple.
    pub fn features(&self) -> [bool; 3] {
        [
            self.voice == Voice::Passive,
            self.construction == Construction::PrepositionalObject,
            self.is_cleft(),
        ]
    }

    pub fn label(&self) -> String {
        let voice = match self.voice {
            Active => "Active",
            Passive => "Passive",
        };
        let cons = match self.construction {
            Do => "DO",
            Po => "PO",
        };
        let form = match self.form {
            Simple => "SIMPLE",
            CleftSubj => "CLEFT_SUBJ",
            CleftDo => "CLEFT_DO",
            CleftIo => "CLEFT_IO",
        };
        format!("{voice}-{cons}-{form}")
    }
}

impl TryFrom<RawStructure> for StructureDescriptor {
    type Error = StimError;

    fn try_from(raw: RawStructure) -> Result<Self, Self::Error> {
        let found = Self::lookup(raw.voice, raw.construction, raw.form)?;
        if found.structure_id != raw.structure_id {
            return Err(StimError::InvalidStructure(format!(
                "structure_id {} does not match {} (id {})",
                raw.structure_id,
                found.label(),
                found.structure_id
            )));
        }
        Ok(found)
    }
}

/// Hamming distance over the (voice, construction, cleft) triple. Cleft focus
/// differences contribute nothing.
pub fn feature_distance(a: &StructureDescriptor, b: &StructureDescriptor) -> u8 {
    a.features()
        .iter()
        .zip(b.features().iter())
        .filter(|(x, y)| x != y)
        .count() as u8
}

/// Half-open character span, counted in Unicode scalar values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Extracts the spanned substring of `text`, if in bounds.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start > self.end {
            return None;
        }
        let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
        let start = indices.nth(self.start)?;
        let end = if self.end == self.start {
            start
        } else {
            indices.nth(self.end - self.start - 1)?
        };
        Some(&text[start..end])
    }
}

impl From<[usize; 2]> for Span {
    fn from(v: [usize; 2]) -> Self {
        Span::new(v[0], v[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordAnnotations {
    pub agent_span: Span,
    pub patient_span: Span,
    pub verb_span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theme_span: Option<Span>,
    pub final_punct_index: usize,
}

impl WordAnnotations {
    pub fn spans(&self) -> Vec<(&'static str, Span)> {
        let mut out = vec![
            ("agent", self.agent_span),
            ("patient", self.patient_span),
            ("verb", self.verb_span),
        ];
        if let Some(theme) = self.theme_span {
            out.push(("theme", theme));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceRecord {
    pub sentence_id: String,
    pub set_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureDescriptor>,
    pub role_version: RoleVersion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
    pub words: WordAnnotations,
}

impl SentenceRecord {
    /// Checks annotation bounds and shape. Called on every record loaded
    /// from a manifest.
    pub fn validate(&self) -> Result<(), StimError> {
        let bad = |reason: String| StimError::InvalidRecord {
            sentence_id: self.sentence_id.clone(),
            reason,
        };
        let chars: Vec<char> = self.text.chars().collect();
        if chars.last() != Some(&'.') {
            return Err(bad("text must end with '.'".into()));
        }
        if self.words.final_punct_index != chars.len() - 1 {
            return Err(bad(format!(
                "final_punct_index {} does not point at the terminal '.' (index {})",
                self.words.final_punct_index,
                chars.len() - 1
            )));
        }
        match (self.structure.is_some(), self.condition.is_some()) {
            (true, false) => {
                if self.words.theme_span.is_none() {
                    return Err(bad("structured sentence lacks a theme span".into()));
                }
            }
            (false, true) => {}
            _ => {
                return Err(bad(
                    "exactly one of `structure` or `condition` must be present".into(),
                ))
            }
        }
        let spans = self.words.spans();
        for (name, span) in &spans {
            if span.is_empty() || span.end > chars.len() {
                return Err(bad(format!(
                    "{name} span [{}, {}) is outside the text (length {})",
                    span.start,
                    span.end,
                    chars.len()
                )));
            }
            let word = &chars[span.start..span.end];
            if word.iter().any(|c| !c.is_alphanumeric() && *c != '-' && *c != '\'') {
                return Err(bad(format!("{name} span does not cover a single word")));
            }
            let before = span.start.checked_sub(1).map(|i| chars[i]);
            let after = chars.get(span.end).copied();
            if before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphanumeric) {
                return Err(bad(format!("{name} span cuts through a word")));
            }
        }
        for (i, (na, a)) in spans.iter().enumerate() {
            for (nb, b) in &spans[i + 1..] {
                if a.overlaps(b) {
                    return Err(bad(format!("{na} and {nb} spans overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn word(&self, span: Span) -> Option<&str> {
        span.slice(&self.text)
    }
}

/// An ordered pair of sentences from the same Experiment 2 set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairRecord {
    pub first: String,
    pub second: String,
    pub same_roles: bool,
    pub feature_distance: u8,
    pub set_id: String,
    pub first_structure: u8,
    pub second_structure: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    Exp1,
    Exp2,
}

/// All sentences sharing a `set_id`, in manifest order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StimulusSet {
    pub set_id: String,
    pub sentences: Vec<SentenceRecord>,
}

impl StimulusSet {
    pub fn experiment(&self) -> Option<Experiment> {
        let first = self.sentences.first()?;
        Some(if first.structure.is_some() {
            Experiment::Exp2
        } else {
            Experiment::Exp1
        })
    }

    pub fn by_condition(&self, condition: Condition) -> Option<&SentenceRecord> {
        self.sentences.iter().find(|s| s.condition == Some(condition))
    }

    pub fn by_structure(&self, structure_id: u8, version: RoleVersion) -> Option<&SentenceRecord> {
        self.sentences.iter().find(|s| {
            s.role_version == version && s.structure.map(|d| d.structure_id) == Some(structure_id)
        })
    }

    /// Verifies the set holds exactly the five Experiment 1 conditions.
    pub fn check_exp1(&self) -> Result<(), StimError> {
        for condition in Condition::ALL {
            let count = self
                .sentences
                .iter()
                .filter(|s| s.condition == Some(condition))
                .count();
            if count != 1 {
                return Err(StimError::MalformedSet {
                    set_id: self.set_id.clone(),
                    reason: format!("expected one {condition} sentence, found {count}"),
                });
            }
        }
        Ok(())
    }

    /// Verifies the set holds each (structure, version) exactly once.
    pub fn check_exp2(&self) -> Result<(), StimError> {
        let mut seen: BTreeMap<(u8, RoleVersion), usize> = BTreeMap::new();
        for s in &self.sentences {
            let Some(structure) = s.structure else {
                return Err(StimError::MalformedSet {
                    set_id: self.set_id.clone(),
                    reason: format!("sentence `{}` has no structure", s.sentence_id),
                });
            };
            *seen.entry((structure.structure_id, s.role_version)).or_default() += 1;
        }
        for structure in StructureDescriptor::all() {
            for version in RoleVersion::BOTH {
                match seen.get(&(structure.structure_id, version)) {
                    None => {
                        return Err(StimError::IncompleteSet {
                            set_id: self.set_id.clone(),
                            structure_id: structure.structure_id,
                            version,
                        })
                    }
                    Some(&n) if n > 1 => {
                        return Err(StimError::MalformedSet {
                            set_id: self.set_id.clone(),
                            reason: format!(
                                "structure {} version {version} appears {n} times",
                                structure.structure_id
                            ),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// All cross-structure pairs of a complete Experiment 2 set, in canonical
/// order: ascending (first structure, second structure), then V0 before V1.
pub fn enumerate_pairs(set: &StimulusSet) -> Result<Vec<PairRecord>, StimError> {
    set.check_exp2()?;
    let structures = StructureDescriptor::all();
    let mut out = Vec::with_capacity(264);
    for (i, a) in structures.iter().enumerate() {
        for b in &structures[i + 1..] {
            let distance = feature_distance(a, b);
            for va in RoleVersion::BOTH {
                for vb in RoleVersion::BOTH {
                    let first = set.by_structure(a.structure_id, va).expect("checked");
                    let second = set.by_structure(b.structure_id, vb).expect("checked");
                    out.push(PairRecord {
                        first: first.sentence_id.clone(),
                        second: second.sentence_id.clone(),
                        same_roles: va == vb,
                        feature_distance: distance,
                        set_id: set.set_id.clone(),
                        first_structure: a.structure_id,
                        second_structure: b.structure_id,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Groups records by `set_id`, preserving first-appearance order.
pub fn group_sets(records: Vec<SentenceRecord>) -> Vec<StimulusSet> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<SentenceRecord>> = BTreeMap::new();
    for r in records {
        if !groups.contains_key(&r.set_id) {
            order.push(r.set_id.clone());
        }
        groups.entry(r.set_id.clone()).or_default().push(r);
    }
    order
        .into_iter()
        .map(|set_id| {
            let sentences = groups.remove(&set_id).unwrap_or_default();
            StimulusSet { set_id, sentences }
        })
        .collect()
}
