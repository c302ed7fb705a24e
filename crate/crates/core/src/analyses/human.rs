//! Human similarity ratings: CSV ingestion, within-participant z-scoring
//! and the two experiments' analyses.
//!
//! The `condition` column holds an Experiment 1 condition (`SsYs`, `SsYd`,
//! `SdYs`, `SdYd`) or an Experiment 2 label `same-<d>` / `opposite-<d>`
//! with feature distance d in 0..=3. Filler rows may hold anything there.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use super::{exp1::POSTHOC_CONTRASTS, fraction_positive, signed_rank_or_degenerate, AnalysisError, BootstrapSettings};
use crate::stats::{bootstrap_ci, mean, ols_fit_named, rank_sum, BootstrapCI, OlsFit, StatResult};
use crate::stimgen::Condition;

pub const RATINGS_HEADER: [&str; 7] = [
    "participant_id",
    "set_id",
    "condition",
    "first_id",
    "second_id",
    "rating",
    "filler",
];

pub const FILLER_LEVEL: &str = "FILLER";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanLabel {
    Condition(Condition),
    Roles { same_roles: bool, feature_distance: u8 },
    Filler,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HumanRating {
    pub participant_id: String,
    pub set_id: String,
    pub condition: String,
    pub first_id: String,
    pub second_id: String,
    pub rating: f64,
    pub filler: bool,
    pub label: HumanLabel,
}

fn parse_label(condition: &str, filler: bool) -> Option<HumanLabel> {
    if filler {
        return Some(HumanLabel::Filler);
    }
    if let Some(c) = Condition::parse(condition).filter(|&c| c != Condition::Base) {
        return Some(HumanLabel::Condition(c));
    }
    let (kind, distance) = condition.rsplit_once('-')?;
    let same_roles = match kind {
        "same" => true,
        "opposite" => false,
        _ => return None,
    };
    let feature_distance: u8 = distance.parse().ok().filter(|&d| d <= 3)?;
    Some(HumanLabel::Roles {
        same_roles,
        feature_distance,
    })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_ratings<R: Read>(input: R) -> Result<Vec<HumanRating>, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let err = |line: u64, message: String| AnalysisError::Ratings {
        line: line as usize,
        message,
    };
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().ne(RATINGS_HEADER) {
        return Err(err(1, format!("expected header `{}`", RATINGS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let rating: f64 = field(5)
            .parse()
            .map_err(|_| err(line, format!("rating `{}` is not a number", field(5))))?;
        if !(1.0..=100.0).contains(&rating) {
            return Err(err(line, format!("rating {rating} outside [1, 100]")));
        }
        let filler = parse_bool(&field(6)).ok_or_else(|| err(line, format!("filler `{}` is not a boolean", field(6))))?;
        let condition = field(2);
        let label = parse_label(&condition, filler).ok_or_else(|| err(line, format!("unknown condition `{condition}`")))?;
        if field(0).is_empty() {
            return Err(err(line, "empty participant_id".into()));
        }
        out.push(HumanRating {
            participant_id: field(0),
            set_id: field(1),
            condition,
            first_id: field(3),
            second_id: field(4),
            rating,
            filler,
            label,
        });
    }
    Ok(out)
}

pub fn read_ratings(path: &Path) -> Result<Vec<HumanRating>, AnalysisError> {
    let file =
        std::fs::File::open(path).map_err(|e| AnalysisError::Input(format!("cannot open {}: {e}", path.display())))?;
    parse_ratings(std::io::BufReader::new(file))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoredRating {
    pub rating: HumanRating,
    pub z_rating: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExcludedParticipant {
    pub participant_id: String,
    pub n_ratings: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZScored {
    /// Input order, excluded participants removed.
    pub ratings: Vec<ScoredRating>,
    pub excluded: Vec<ExcludedParticipant>,
}

/// z-scores each participant's ratings (fillers included) with the
/// population SD. Participants with one rating or no variance are dropped.
pub fn zscore_ratings(ratings: &[HumanRating]) -> ZScored {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in ratings {
        groups.entry(&r.participant_id).or_default().push(r.rating);
    }
    let mut params: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let mut excluded = Vec::new();
    for (id, values) in &groups {
        let m = mean(values);
        let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
        let reason = if values.len() < 2 {
            Some("single rating")
        } else if sd == 0.0 {
            Some("all ratings identical")
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(ExcludedParticipant {
                participant_id: id.to_string(),
                n_ratings: values.len(),
                reason: reason.into(),
            }),
            None => {
                params.insert(id, (m, sd));
            }
        }
    }
    let ratings = ratings
        .iter()
        .filter_map(|r| {
            params.get(r.participant_id.as_str()).map(|&(m, sd)| ScoredRating {
                rating: r.clone(),
                z_rating: (r.rating - m) / sd,
            })
        })
        .collect();
    ZScored { ratings, excluded }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: String,
    pub n: usize,
    pub mean_rating: f64,
    pub mean_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedContrast {
    pub first: Condition,
    pub second: Condition,
    pub mean_difference: f64,
    /// OLS coefficient contrast.
    pub wald: StatResult,
    /// Rank-sum on the two conditions' z ratings.
    pub rank_sum: StatResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct HumanExp1Report {
    pub n_ratings: usize,
    pub n_participants: usize,
    pub excluded: Vec<ExcludedParticipant>,
    pub include_filler: bool,
    pub levels: Vec<LevelSummary>,
    pub reference_level: String,
    pub ols: OlsFit,
    pub contrasts: Vec<PairedContrast>,
}

fn level_name(label: HumanLabel) -> Option<String> {
    match label {
        HumanLabel::Condition(c) => Some(c.as_str().to_string()),
        HumanLabel::Filler => Some(FILLER_LEVEL.to_string()),
        HumanLabel::Roles { .. } => None,
    }
}

fn participants(scored: &[ScoredRating]) -> usize {
    let mut ids: Vec<&str> = scored.iter().map(|s| s.rating.participant_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

/// `z ~ condition` by least squares with treatment coding (the first level
/// present is the reference), plus pairwise condition contrasts.
pub fn analyze_human_exp1(ratings: &[HumanRating], include_filler: bool) -> Result<HumanExp1Report, AnalysisError> {
    if ratings.iter().any(|r| matches!(r.label, HumanLabel::Roles { .. })) {
        return Err(AnalysisError::Input("Experiment 2 labels in Experiment 1 ratings".into()));
    }
    let z = zscore_ratings(ratings);
    let used: Vec<&ScoredRating> = z
        .ratings
        .iter()
        .filter(|s| include_filler || s.rating.label != HumanLabel::Filler)
        .collect();
    let mut level_labels: Vec<HumanLabel> = used.iter().map(|s| s.rating.label).collect();
    level_labels.sort();
    level_labels.dedup();
    let levels: Vec<LevelSummary> = level_labels
        .iter()
        .map(|&label| {
            let rows: Vec<&&ScoredRating> = used.iter().filter(|s| s.rating.label == label).collect();
            LevelSummary {
                level: level_name(label).expect("no role labels"),
                n: rows.len(),
                mean_rating: mean(&rows.iter().map(|s| s.rating.rating).collect::<Vec<_>>()),
                mean_z: mean(&rows.iter().map(|s| s.z_rating).collect::<Vec<_>>()),
            }
        })
        .collect();
    if levels.len() < 2 || levels.iter().any(|l| l.n < 2) {
        return Err(AnalysisError::Input(
            "need at least 2 conditions with at least 2 ratings each".into(),
        ));
    }
    let coef = |label: HumanLabel| level_labels.iter().position(|&l| l == label).filter(|&i| i > 0);
    let names: Vec<String> = std::iter::once("(intercept)".to_string())
        .chain(levels[1..].iter().map(|l| l.level.clone()))
        .collect();
    let x: Vec<Vec<f64>> = used
        .iter()
        .map(|s| {
            let mut row = vec![0.0; levels.len()];
            row[0] = 1.0;
            if let Some(i) = coef(s.rating.label) {
                row[i] = 1.0;
            }
            row
        })
        .collect();
    let y: Vec<f64> = used.iter().map(|s| s.z_rating).collect();
    let ols = ols_fit_named(&x, &y, &names)?;

    let present = |c: Condition| level_labels.contains(&HumanLabel::Condition(c));
    let family: Vec<(Condition, Condition)> = POSTHOC_CONTRASTS
        .iter()
        .copied()
        .filter(|&(a, b)| present(a) && present(b))
        .collect();
    let zs = |c: Condition| -> Vec<f64> {
        used.iter()
            .filter(|s| s.rating.label == HumanLabel::Condition(c))
            .map(|s| s.z_rating)
            .collect()
    };
    let contrasts = family
        .iter()
        .map(|&(first, second)| {
            let mut c = vec![0.0; levels.len()];
            if let Some(i) = coef(HumanLabel::Condition(first)) {
                c[i] += 1.0;
            }
            if let Some(i) = coef(HumanLabel::Condition(second)) {
                c[i] -= 1.0;
            }
            let (a, b) = (zs(first), zs(second));
            Ok(PairedContrast {
                first,
                second,
                mean_difference: mean(&a) - mean(&b),
                wald: ols.contrast(&c)?.adjusted(family.len()),
                rank_sum: rank_sum(&a, &b)?.adjusted(family.len()),
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(HumanExp1Report {
        n_ratings: used.len(),
        n_participants: participants(&z.ratings),
        excluded: z.excluded,
        include_filler,
        reference_level: levels[0].level.clone(),
        levels,
        ols,
        contrasts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceContrast {
    pub feature_distance: u8,
    /// Participants who rated both same- and opposite-role pairs.
    pub n_paired: usize,
    pub n_same_only: usize,
    pub n_opposite_only: usize,
    pub mean_same: Option<f64>,
    pub mean_opposite: Option<f64>,
    /// Whether `test` is the within-participant signed-rank test (true) or
    /// a between-participant rank-sum (false).
    pub paired: bool,
    pub test: StatResult,
    /// Paired participants whose same-role mean exceeds their
    /// opposite-role mean.
    pub implicit_successes: usize,
    pub notice: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HumanExp2Report {
    pub n_ratings: usize,
    pub n_participants: usize,
    pub excluded: Vec<ExcludedParticipant>,
    pub distances: Vec<DistanceContrast>,
    /// Participants with both kinds of pair, over all distances.
    pub accuracy_participants: usize,
    pub implicit_successes: usize,
    pub implicit_accuracy: BootstrapCI,
}

#[derive(Default)]
struct Cells {
    same: Vec<f64>,
    opposite: Vec<f64>,
}

impl Cells {
    fn means(&self) -> (Option<f64>, Option<f64>) {
        let m = |v: &Vec<f64>| (!v.is_empty()).then(|| mean(v));
        (m(&self.same), m(&self.opposite))
    }
}

/// Same- versus opposite-role ratings per feature distance, and the
/// fraction of participants who rate same-role pairs higher on average.
pub fn analyze_human_exp2(
    ratings: &[HumanRating],
    bootstrap: BootstrapSettings,
) -> Result<HumanExp2Report, AnalysisError> {
    if ratings.iter().any(|r| matches!(r.label, HumanLabel::Condition(_))) {
        return Err(AnalysisError::Input("Experiment 1 labels in Experiment 2 ratings".into()));
    }
    let z = zscore_ratings(ratings);
    let mut by_distance: BTreeMap<u8, BTreeMap<&str, Cells>> = BTreeMap::new();
    let mut overall: BTreeMap<&str, Cells> = BTreeMap::new();
    let mut n_ratings = 0;
    for s in &z.ratings {
        if let HumanLabel::Roles {
            same_roles,
            feature_distance,
        } = s.rating.label
        {
            n_ratings += 1;
            let id = s.rating.participant_id.as_str();
            for cells in [
                by_distance.entry(feature_distance).or_default().entry(id).or_default(),
                overall.entry(id).or_default(),
            ] {
                if same_roles {
                    cells.same.push(s.z_rating);
                } else {
                    cells.opposite.push(s.z_rating);
                }
            }
        }
    }
    if by_distance.is_empty() {
        return Err(AnalysisError::Input("no Experiment 2 ratings".into()));
    }
    let family = by_distance.len();
    let mut distances = Vec::new();
    for (&feature_distance, people) in &by_distance {
        let mut diffs = Vec::new();
        let (mut same_only, mut opposite_only) = (Vec::new(), Vec::new());
        for cells in people.values() {
            match cells.means() {
                (Some(s), Some(o)) => diffs.push(s - o),
                (Some(s), None) => same_only.push(s),
                (None, Some(o)) => opposite_only.push(o),
                (None, None) => {}
            }
        }
        let all_same: Vec<f64> = people.values().flat_map(|c| c.same.iter().copied()).collect();
        let all_opposite: Vec<f64> = people.values().flat_map(|c| c.opposite.iter().copied()).collect();
        let unpaired = same_only.len() + opposite_only.len();
        let (paired, test, notice) = if !diffs.is_empty() {
            let notice = (unpaired > 0).then(|| {
                format!("{unpaired} participants rated only one kind of pair and are left out of the paired test")
            });
            (true, signed_rank_or_degenerate(&diffs)?, notice)
        } else {
            // no participant saw both kinds: compare participant means
            // between groups
            let notice = Some("no participant rated both kinds of pair; between-participant rank-sum used".into());
            (false, rank_sum(&same_only, &opposite_only)?, notice)
        };
        distances.push(DistanceContrast {
            feature_distance,
            n_paired: diffs.len(),
            n_same_only: same_only.len(),
            n_opposite_only: opposite_only.len(),
            mean_same: (!all_same.is_empty()).then(|| mean(&all_same)),
            mean_opposite: (!all_opposite.is_empty()).then(|| mean(&all_opposite)),
            paired,
            test: test.adjusted(family),
            implicit_successes: diffs.iter().filter(|&&d| d > 0.0).count(),
            notice,
        });
    }
    let overall_diffs: Vec<f64> = overall
        .values()
        .filter_map(|c| match c.means() {
            (Some(s), Some(o)) => Some(s - o),
            _ => None,
        })
        .collect();
    if overall_diffs.is_empty() {
        return Err(AnalysisError::Input(
            "no participant rated both same- and opposite-role pairs".into(),
        ));
    }
    let implicit_accuracy = bootstrap_ci(
        &overall_diffs,
        fraction_positive,
        "implicit accuracy",
        bootstrap.b,
        bootstrap.seed,
        0.95,
    )?;
    Ok(HumanExp2Report {
        n_ratings,
        n_participants: participants(&z.ratings),
        excluded: z.excluded,
        distances,
        accuracy_participants: overall_diffs.len(),
        implicit_successes: overall_diffs.iter().filter(|&&d| d > 0.0).count(),
        implicit_accuracy,
    })
}
