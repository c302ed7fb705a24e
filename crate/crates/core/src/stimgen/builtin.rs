//! Bundled example lexicons, used when no lexicon file is supplied.

use std::sync::OnceLock;

use super::templates::{Exp1LexEntry, Exp2LexEntry};

static EXP1_JSON: &str = include_str!("../../data/exp1_lexicon.json");
static EXP2_JSON: &str = include_str!("../../data/exp2_lexicon.json");

pub fn builtin_exp1_lexicon() -> &'static [Exp1LexEntry] {
    static LEX: OnceLock<Vec<Exp1LexEntry>> = OnceLock::new();
    LEX.get_or_init(|| serde_json::from_str(EXP1_JSON).expect("bundled exp1 lexicon parses"))
}

pub fn builtin_exp2_lexicon() -> &'static [Exp2LexEntry] {
    static LEX: OnceLock<Vec<Exp2LexEntry>> = OnceLock::new();
    LEX.get_or_init(|| {
        let rows: Vec<[String; 5]> =
            serde_json::from_str(EXP2_JSON).expect("bundled exp2 lexicon parses");
        rows.into_iter()
            .map(|[a, p, t, v, n]| Exp2LexEntry {
                agent_noun: a,
                patient_noun: p,
                theme_noun: t,
                verb_past: v,
                verb_participle: n,
            })
            .collect()
    })
}
