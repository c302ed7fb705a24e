//! Sentence templates for both experiments.

use serde::{Deserialize, Serialize};

use super::{
    Condition, Form, RoleVersion, SentenceRecord, Span, StimError, StimulusSet, StructureDescriptor,
    Voice, WordAnnotations,
};
use super::Construction;

/// Lexical material for one Experiment 1 set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp1LexEntry {
    pub agent_noun: String,
    pub agent_synonym: String,
    pub patient_noun: String,
    pub patient_synonym: String,
    pub verb_past: String,
    pub verb_synonym_past: String,
    pub verb_participle: String,
    pub verb_synonym_participle: String,
}

/// Lexical material for one Experiment 2 set. "Patient" is the recipient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp2LexEntry {
    pub agent_noun: String,
    pub patient_noun: String,
    pub theme_noun: String,
    pub verb_past: String,
    pub verb_participle: String,
}

fn check_word(field: &'static str, word: &str) -> Result<(), StimError> {
    let reason = if word.is_empty() {
        Some("is empty")
    } else if word.chars().any(char::is_whitespace) {
        Some("must be a single word")
    } else if word.chars().any(char::is_uppercase) {
        Some("must be lowercase")
    } else if !word.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '\'') {
        Some("contains punctuation")
    } else {
        None
    };
    match reason {
        Some(r) => Err(StimError::InvalidLexicon {
            field,
            reason: format!("{r} ({word:?})"),
        }),
        None => Ok(()),
    }
}

fn check_distinct(field: &'static str, a: &str, b: &str, what: &str) -> Result<(), StimError> {
    if a == b {
        Err(StimError::InvalidLexicon {
            field,
            reason: format!("must differ from {what} ({a:?})"),
        })
    } else {
        Ok(())
    }
}

impl Exp1LexEntry {
    pub fn validate(&self) -> Result<(), StimError> {
        check_word("agent_noun", &self.agent_noun)?;
        check_word("agent_synonym", &self.agent_synonym)?;
        check_word("patient_noun", &self.patient_noun)?;
        check_word("patient_synonym", &self.patient_synonym)?;
        check_word("verb_past", &self.verb_past)?;
        check_word("verb_synonym_past", &self.verb_synonym_past)?;
        check_word("verb_participle", &self.verb_participle)?;
        check_word("verb_synonym_participle", &self.verb_synonym_participle)?;
        check_distinct("patient_noun", &self.patient_noun, &self.agent_noun, "agent_noun")?;
        check_distinct("agent_synonym", &self.agent_synonym, &self.agent_noun, "agent_noun")?;
        check_distinct(
            "patient_synonym",
            &self.patient_synonym,
            &self.patient_noun,
            "patient_noun",
        )?;
        check_distinct(
            "verb_synonym_past",
            &self.verb_synonym_past,
            &self.verb_past,
            "verb_past",
        )?;
        check_distinct(
            "verb_synonym_participle",
            &self.verb_synonym_participle,
            &self.verb_participle,
            "verb_participle",
        )?;
        Ok(())
    }
}

impl Exp2LexEntry {
    pub fn validate(&self) -> Result<(), StimError> {
        check_word("agent_noun", &self.agent_noun)?;
        check_word("patient_noun", &self.patient_noun)?;
        check_word("theme_noun", &self.theme_noun)?;
        check_word("verb_past", &self.verb_past)?;
        check_word("verb_participle", &self.verb_participle)?;
        check_distinct("patient_noun", &self.patient_noun, &self.agent_noun, "agent_noun")?;
        check_distinct("theme_noun", &self.theme_noun, &self.agent_noun, "agent_noun")?;
        check_distinct("theme_noun", &self.theme_noun, &self.patient_noun, "patient_noun")?;
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Agent,
    Patient,
    Verb,
    Theme,
}

/// Builds a sentence word by word while recording character spans.
struct SentenceBuilder {
    text: String,
    chars: usize,
    agent: Option<Span>,
    patient: Option<Span>,
    verb: Option<Span>,
    theme: Option<Span>,
}

impl SentenceBuilder {
    fn new() -> Self {
        Self {
            text: String::new(),
            chars: 0,
            agent: None,
            patient: None,
            verb: None,
            theme: None,
        }
    }

    fn lit(mut self, words: &str) -> Self {
        for w in words.split_whitespace() {
            self.push(w, None);
        }
        self
    }

    fn role(mut self, role: Role, word: &str) -> Self {
        self.push(word, Some(role));
        self
    }

    fn push(&mut self, word: &str, role: Option<Role>) {
        if !self.text.is_empty() {
            self.text.push(' ');
            self.chars += 1;
        }
        let start = self.chars;
        self.text.push_str(word);
        self.chars += word.chars().count();
        let span = Some(Span::new(start, self.chars));
        match role {
            Some(Role::Agent) => self.agent = span,
            Some(Role::Patient) => self.patient = span,
            Some(Role::Verb) => self.verb = span,
            Some(Role::Theme) => self.theme = span,
            None => {}
        }
    }

    fn finish(mut self) -> (String, WordAnnotations) {
        self.text.push('.');
        let words = WordAnnotations {
            agent_span: self.agent.expect("template places an agent"),
            patient_span: self.patient.expect("template places a patient"),
            verb_span: self.verb.expect("template places a verb"),
            theme_span: self.theme,
            final_punct_index: self.chars,
        };
        (self.text, words)
    }
}

/// Builds the five sentences of an Experiment 1 set.
pub fn generate_exp1_set(entry: &Exp1LexEntry, set_id: &str) -> Result<Vec<SentenceRecord>, StimError> {
    use Role::*;
    entry.validate()?;
    let e = entry;
    let active = |agent: &str, verb: &str, patient: &str| {
        SentenceBuilder::new()
            .lit("The")
            .role(Agent, agent)
            .role(Verb, verb)
            .lit("the")
            .role(Patient, patient)
            .finish()
    };
    let passive = |patient: &str, verb: &str, agent: &str| {
        SentenceBuilder::new()
            .lit("The")
            .role(Patient, patient)
            .lit("was")
            .role(Verb, verb)
            .lit("by the")
            .role(Agent, agent)
            .finish()
    };
    let built = [
        (Condition::Base, active(&e.agent_noun, &e.verb_past, &e.patient_noun)),
        (
            Condition::SsYs,
            active(&e.agent_synonym, &e.verb_synonym_past, &e.patient_synonym),
        ),
        (
            Condition::SsYd,
            passive(&e.patient_noun, &e.verb_participle, &e.agent_noun),
        ),
        (Condition::SdYs, active(&e.patient_noun, &e.verb_past, &e.agent_noun)),
        (
            Condition::SdYd,
            passive(&e.agent_synonym, &e.verb_synonym_participle, &e.patient_synonym),
        ),
    ];
    Ok(built
        .into_iter()
        .map(|(condition, (text, words))| SentenceRecord {
            sentence_id: format!("{set_id}.{condition}"),
            set_id: set_id.to_string(),
            text,
            structure: None,
            role_version: if condition.same_semantics() {
                RoleVersion::V0
            } else {
                RoleVersion::V1
            },
            condition: Some(condition),
            words,
        })
        .collect())
}

fn exp2_sentence(
    structure: &StructureDescriptor,
    agent: &str,
    patient: &str,
    theme: &str,
    past: &str,
    participle: &str,
) -> (String, WordAnnotations) {
    use Construction::*;
    use Form::*;
    use Role::{Agent as A, Patient as P, Theme as T, Verb as V};
    use Voice::*;
    let b = SentenceBuilder::new();
    let b = match (structure.voice, structure.construction, structure.form) {
        (Active, DoubleObject, Simple) => b
            .lit("The").role(A, agent).role(V, past).lit("the").role(P, patient).lit("the").role(T, theme),
        (Active, DoubleObject, CleftSubj) => b
            .lit("It was the").role(A, agent).lit("who").role(V, past).lit("the").role(P, patient)
            .lit("the").role(T, theme),
        (Active, DoubleObject, CleftDo) => b
            .lit("It was the").role(T, theme).lit("that the").role(A, agent).role(V, past)
            .lit("the").role(P, patient),
        (Active, PrepositionalObject, Simple) => b
            .lit("The").role(A, agent).role(V, past).lit("the").role(T, theme).lit("to the")
            .role(P, patient),
        (Active, PrepositionalObject, CleftSubj) => b
            .lit("It was the").role(A, agent).lit("who").role(V, past).lit("the").role(T, theme)
            .lit("to the").role(P, patient),
        (Active, PrepositionalObject, CleftDo) => b
            .lit("It was the").role(T, theme).lit("that the").role(A, agent).role(V, past)
            .lit("to the").role(P, patient),
        (Active, PrepositionalObject, CleftIo) => b
            .lit("It was the").role(P, patient).lit("who the").role(A, agent).role(V, past)
            .lit("the").role(T, theme).lit("to"),
        (Passive, DoubleObject, Simple) => b
            .lit("The").role(P, patient).lit("was").role(V, participle).lit("the").role(T, theme)
            .lit("by the").role(A, agent),
        (Passive, DoubleObject, CleftIo) => b
            .lit("It was the").role(P, patient).lit("who was").role(V, participle).lit("the")
            .role(T, theme).lit("by the").role(A, agent),
        (Passive, PrepositionalObject, Simple) => b
            .lit("The").role(T, theme).lit("was").role(V, participle).lit("to the")
            .role(P, patient).lit("by the").role(A, agent),
        (Passive, PrepositionalObject, CleftDo) => b
            .lit("It was the").role(T, theme).lit("that was").role(V, participle).lit("to the")
            .role(P, patient).lit("by the").role(A, agent),
        (Passive, PrepositionalObject, CleftIo) => b
            .lit("It was the").role(P, patient).lit("who the").role(T, theme).lit("was")
            .role(V, participle).lit("to by the").role(A, agent),
        _ => unreachable!("structure table only holds the twelve valid combinations"),
    };
    b.finish()
}

/// Builds the 24 sentences (12 structures x 2 role versions) of an
/// Experiment 2 set. Version V1 exchanges the agent and recipient nouns.
pub fn generate_exp2_set(entry: &Exp2LexEntry, set_id: &str) -> Result<Vec<SentenceRecord>, StimError> {
    entry.validate()?;
    let mut out = Vec::with_capacity(24);
    for structure in StructureDescriptor::all() {
        for version in RoleVersion::BOTH {
            let (agent, patient) = match version {
                RoleVersion::V0 => (&entry.agent_noun, &entry.patient_noun),
                RoleVersion::V1 => (&entry.patient_noun, &entry.agent_noun),
            };
            let (text, words) = exp2_sentence(
                structure,
                agent,
                patient,
                &entry.theme_noun,
                &entry.verb_past,
                &entry.verb_participle,
            );
            out.push(SentenceRecord {
                sentence_id: format!(
                    "{set_id}.s{:02}.{}",
                    structure.structure_id,
                    version.to_string().to_lowercase()
                ),
                set_id: set_id.to_string(),
                text,
                structure: Some(*structure),
                role_version: version,
                condition: None,
                words,
            });
        }
    }
    Ok(out)
}

fn take<T>(lexicon: &[T], n_sets: usize) -> Result<&[T], StimError> {
    lexicon.get(..n_sets).ok_or(StimError::NotEnoughEntries {
        requested: n_sets,
        available: lexicon.len(),
    })
}

/// Experiment 1 sets `e1-001`, `e1-002`, ... from the first `n_sets`
/// lexicon entries.
pub fn generate_exp1(lexicon: &[Exp1LexEntry], n_sets: usize) -> Result<Vec<StimulusSet>, StimError> {
    take(lexicon, n_sets)?
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let set_id = format!("e1-{:03}", i + 1);
            let sentences = generate_exp1_set(e, &set_id)?;
            Ok(StimulusSet { set_id, sentences })
        })
        .collect()
}

/// Experiment 2 sets `e2-001`, `e2-002`, ... from the first `n_sets`
/// lexicon entries.
pub fn generate_exp2(lexicon: &[Exp2LexEntry], n_sets: usize) -> Result<Vec<StimulusSet>, StimError> {
    take(lexicon, n_sets)?
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let set_id = format!("e2-{:03}", i + 1);
            let sentences = generate_exp2_set(e, &set_id)?;
            Ok(StimulusSet { set_id, sentences })
        })
        .collect()
}
