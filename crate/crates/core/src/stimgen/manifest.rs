//! Stimulus manifests (one JSON record per line) and lexicon files.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::templates::{Exp1LexEntry, Exp2LexEntry};
use super::{group_sets, SentenceRecord, StimError, StimulusSet};
use crate::io::atomic_write;

/// Serialises sets to the line-oriented manifest format. Output depends only
/// on the records and their order.
pub fn render_manifest(sets: &[StimulusSet]) -> String {
    let mut out = String::new();
    for set in sets {
        for record in &set.sentences {
            out.push_str(&serde_json::to_string(record).expect("records always serialise"));
            out.push('\n');
        }
    }
    out
}

pub fn write_manifest(sets: &[StimulusSet], path: &Path) -> Result<(), StimError> {
    for set in sets {
        for record in &set.sentences {
            record.validate()?;
        }
    }
    atomic_write(path, render_manifest(sets).as_bytes())?;
    Ok(())
}

pub fn load_stimuli(path: &Path) -> Result<Vec<StimulusSet>, StimError> {
    let text = fs::read_to_string(path)?;
    parse_stimuli(&text, &path.display().to_string())
}

/// Parses manifest text; `origin` labels error messages.
pub fn parse_stimuli(text: &str, origin: &str) -> Result<Vec<StimulusSet>, StimError> {
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| StimError::Parse {
            path: origin.to_string(),
            line: line_no,
            message,
        };
        let record: SentenceRecord =
            serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        record.validate().map_err(|e| parse_err(e.to_string()))?;
        if !ids.insert(record.sentence_id.clone()) {
            return Err(parse_err(format!(
                "duplicate sentence_id `{}`",
                record.sentence_id
            )));
        }
        records.push(record);
    }
    Ok(group_sets(records))
}

fn parse_lexicon<T: for<'de> Deserialize<'de>>(
    text: &str,
    origin: &str,
) -> Result<Vec<T>, StimError> {
    serde_json::from_str(text).map_err(|e| StimError::Parse {
        path: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn load_exp1_lexicon(path: &Path) -> Result<Vec<Exp1LexEntry>, StimError> {
    let text = fs::read_to_string(path)?;
    let entries: Vec<Exp1LexEntry> = parse_lexicon(&text, &path.display().to_string())?;
    for e in &entries {
        e.validate()?;
    }
    Ok(entries)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Exp2Row {
    Object(Exp2LexEntry),
    Tuple([String; 5]),
}

/// Experiment 2 lexicon rows may be objects or
/// `[agent, recipient, theme, verb_past, verb_participle]` arrays.
pub fn load_exp2_lexicon(path: &Path) -> Result<Vec<Exp2LexEntry>, StimError> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Exp2Row> = parse_lexicon(&text, &path.display().to_string())?;
    let entries: Vec<Exp2LexEntry> = rows
        .into_iter()
        .map(|row| match row {
            Exp2Row::Object(e) => e,
            Exp2Row::Tuple([a, p, t, v, n]) => Exp2LexEntry {
                agent_noun: a,
                patient_noun: p,
                theme_noun: t,
                verb_past: v,
                verb_participle: n,
            },
        })
        .collect();
    for e in &entries {
        e.validate()?;
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimgen::{builtin_exp2_lexicon, generate_exp2_set};

    fn one_set() -> Vec<StimulusSet> {
        let entry = &builtin_exp2_lexicon()[0];
        vec![StimulusSet {
            set_id: "e2-001".into(),
            sentences: generate_exp2_set(entry, "e2-001").unwrap(),
        }]
    }

    #[test]
    fn write_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stim.jsonl");
        let sets = one_set();
        write_manifest(&sets, &path).unwrap();
        let first = fs::read(&path).unwrap();
        assert_eq!(load_stimuli(&path).unwrap(), sets);
        write_manifest(&load_stimuli(&path).unwrap(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn span_past_end_rejected_with_line() {
        let sets = one_set();
        let text = render_manifest(&sets);
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut rec: SentenceRecord = serde_json::from_str(&lines[2]).unwrap();
        rec.words.agent_span.end = rec.text.chars().count() + 3;
        lines[2] = serde_json::to_string(&rec).unwrap();
        match parse_stimuli(&lines.join("\n"), "m.jsonl") {
            Err(StimError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("outside the text"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_rejected() {
        let err = parse_stimuli("{\"sentence_id\": 1}\n", "m").unwrap_err();
        assert!(matches!(err, StimError::Parse { line: 1, .. }));
        let err = parse_stimuli("\n\nnot json\n", "m").unwrap_err();
        assert!(matches!(err, StimError::Parse { line: 3, .. }));
    }

    #[test]
    fn exp2_lexicon_accepts_tuples_and_objects() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.json");
        fs::write(
            &path,
            r#"[["man","woman","milk","gave","given"],
               {"agent_noun":"boy","patient_noun":"girl","theme_noun":"ball","verb_past":"threw","verb_participle":"thrown"}]"#,
        )
        .unwrap();
        let lex = load_exp2_lexicon(&path).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex[0].theme_noun, "milk");
        assert_eq!(lex[1].verb_participle, "thrown");
        fs::write(&path, r#"[["man","man","milk","gave","given"]]"#).unwrap();
        assert!(load_exp2_lexicon(&path).is_err());
    }
}
