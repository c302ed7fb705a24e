//! One function per subcommand. Each returns the paths it wrote.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use roleprobe_core::analyses::{
    analyze_human_exp1, analyze_human_exp2, characterize_head, compare_folds, read_ratings, run_exp1,
    run_exp2_similarity, FoldComparison, FoldFilter, HumanAccuracy,
};
use roleprobe_core::interchange::{read_store, validate_store, StoreReader, ValidationReport};
use roleprobe_core::probe::{
    probe_sweep, sweep_targets, FeatureMode, FoldOutcome, Orientation, ProbeConfig, ProbeResult, ProbeTarget,
};
use roleprobe_core::stimgen::{
    builtin_exp1_lexicon, builtin_exp2_lexicon, generate_exp1, generate_exp2, load_exp1_lexicon,
    load_exp2_lexicon, load_stimuli, render_manifest, Condition, StimulusSet,
};
use roleprobe_core::StoreAccess;
use serde::{Deserialize, Serialize};

use crate::config::{FileConfig, OrientationMode, RunConfig};
use crate::report::{Envelope, InputChecksum, Outputs, ARTIFACT, VERSION};
use crate::{CliError, Command};

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut run = Run::new(command.name(), cfg);
    match command {
        Command::GenStimuli {
            exp,
            sets,
            lexicon,
            out,
        } => gen_stimuli(&mut run, *exp, *sets, lexicon.as_deref(), out.as_deref())?,
        Command::ValidateStore => validate(&mut run)?,
        Command::RsaExp1 { layers } => rsa_exp1(&mut run, layers)?,
        Command::RsaExp2 { layers } => rsa_exp2(&mut run, layers)?,
        Command::ProbeHidden { layers } => probe_hidden(&mut run, layers)?,
        Command::ProbeAttention { layers, heads } => probe_attention(&mut run, layers, heads)?,
        Command::CharacterizeHead { layer, head } => characterize(&mut run, *layer, *head)?,
        Command::HumanExp1 { no_filler } => human_exp1(&mut run, !no_filler)?,
        Command::HumanExp2 => human_exp2(&mut run)?,
        Command::Compare {
            folds,
            target,
            human_accuracy,
            participants,
            distance,
            structures,
        } => {
            let filter = match (distance, structures.is_empty()) {
                (Some(d), _) => FoldFilter::Distance(*d),
                (None, false) => FoldFilter::Structures(structures.clone()),
                (None, true) => FoldFilter::All,
            };
            compare(&mut run, folds, target.as_deref(), *human_accuracy, *participants, filter)?
        }
        Command::Report => index(&mut run)?,
    }
    Ok(run.outputs.written)
}

struct Run<'a> {
    command: &'static str,
    cfg: &'a RunConfig,
    echo: FileConfig,
    inputs: Vec<InputChecksum>,
    outputs: Outputs,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, cfg: &'a RunConfig) -> Self {
        Self {
            command,
            cfg,
            echo: cfg.echo(),
            inputs: Vec::new(),
            outputs: Outputs::default(),
        }
    }

    fn stimuli(&mut self) -> Result<Vec<StimulusSet>, CliError> {
        let path = self.cfg.require_stimuli()?;
        self.inputs.push(InputChecksum::file("stimuli", path)?);
        Ok(load_stimuli(path)?)
    }

    fn store(&mut self) -> Result<StoreReader, CliError> {
        let dir = self.cfg.require_store()?;
        let store = read_store(dir)?;
        let found = store.manifest().representation_strategy;
        if let Some(expected) = self.cfg.strategy {
            if expected != found {
                return Err(CliError::StrategyMismatch {
                    store: found.cli_name().into(),
                    config: expected.cli_name().into(),
                });
            }
        }
        self.inputs.push(InputChecksum::store(dir)?);
        Ok(store)
    }

    fn out_path(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.cfg.require_out_dir()?.join(name))
    }

    /// Writes `<name>.json` with the report envelope.
    fn report<T: Serialize>(&mut self, name: &str, result: &T) -> Result<(), CliError> {
        let envelope = Envelope {
            artifact: ARTIFACT,
            version: VERSION,
            command: self.command,
            config: &self.echo,
            inputs: &self.inputs,
            result,
        };
        let path = self.out_path(&format!("{name}.json"))?;
        self.outputs.json(path, &envelope)
    }

    fn table<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<(), CliError> {
        let path = self.out_path(&format!("{name}.csv"))?;
        self.outputs.csv(path, rows)
    }
}

fn layers_or_all(store: &dyn StoreAccess, layers: &[usize]) -> Vec<usize> {
    if layers.is_empty() {
        (1..=store.manifest().num_layers).collect()
    } else {
        let set: BTreeSet<usize> = layers.iter().copied().collect();
        set.into_iter().collect()
    }
}

#[derive(Serialize)]
struct GenStimuliResult {
    experiment: u8,
    n_sets: usize,
    n_sentences: usize,
    manifest: PathBuf,
    manifest_sha256: String,
}

fn gen_stimuli(
    run: &mut Run<'_>,
    exp: u8,
    n_sets: usize,
    lexicon: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(path) = lexicon {
        run.inputs.push(InputChecksum::file("lexicon", path)?);
    }
    let sets = match (exp, lexicon) {
        (1, Some(p)) => generate_exp1(&load_exp1_lexicon(p)?, n_sets)?,
        (1, None) => generate_exp1(builtin_exp1_lexicon(), n_sets)?,
        (_, Some(p)) => generate_exp2(&load_exp2_lexicon(p)?, n_sets)?,
        (_, None) => generate_exp2(builtin_exp2_lexicon(), n_sets)?,
    };
    for s in sets.iter().flat_map(|s| &s.sentences) {
        s.validate()?;
    }
    let manifest = match out {
        Some(p) => std::path::absolute(p).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => run.out_path(&format!("stimuli-exp{exp}.jsonl"))?,
    };
    let text = render_manifest(&sets);
    run.outputs.bytes(manifest.clone(), text.as_bytes())?;
    if run.cfg.out_dir.is_some() {
        let result = GenStimuliResult {
            experiment: exp,
            n_sets: sets.len(),
            n_sentences: sets.iter().map(|s| s.sentences.len()).sum(),
            manifest,
            manifest_sha256: roleprobe_core::io::sha256_bytes(text.as_bytes()),
        };
        run.report(&format!("gen-stimuli-exp{exp}"), &result)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidationResult<'a> {
    valid: bool,
    #[serde(flatten)]
    report: &'a ValidationReport,
}

fn validate(run: &mut Run<'_>) -> Result<(), CliError> {
    let dir = run.cfg.require_store()?.to_path_buf();
    let records = match run.cfg.stimuli.is_some() {
        true => Some(run.stimuli()?.into_iter().flat_map(|s| s.sentences).collect::<Vec<_>>()),
        false => None,
    };
    let report = validate_store(&dir, records.as_deref());
    if let Ok(c) = InputChecksum::store(&dir) {
        run.inputs.push(c);
    }
    let result = ValidationResult {
        valid: report.is_valid(),
        report: &report,
    };
    if run.cfg.out_dir.is_some() {
        run.report("validate-store", &result)?;
    } else {
        println!("{}", serde_json::to_string_pretty(&result).map_err(|e| CliError::Output(e.to_string()))?);
    }
    match report.is_valid() {
        true => Ok(()),
        false => Err(CliError::InvalidStore(report.issues.len())),
    }
}

#[derive(Serialize)]
struct Exp1MeanRow {
    layer: usize,
    condition: Condition,
    mean_r: f64,
    mean_z: f64,
}

#[derive(Serialize)]
struct Exp1SetCsv<'a> {
    layer: usize,
    set_id: &'a str,
    #[serde(rename = "SsYs")]
    ss_ys: f64,
    #[serde(rename = "SsYd")]
    ss_yd: f64,
    #[serde(rename = "SdYs")]
    sd_ys: f64,
    #[serde(rename = "SdYd")]
    sd_yd: f64,
}

#[derive(Serialize)]
struct ContrastRow {
    layer: usize,
    first: Condition,
    second: Condition,
    mean_difference: f64,
    z: f64,
    p_raw: f64,
    p_adjusted: f64,
    proportion: f64,
    ci_lower: f64,
    ci_upper: f64,
}

fn rsa_exp1(run: &mut Run<'_>, layers: &[usize]) -> Result<(), CliError> {
    let sets = run.stimuli()?;
    let store = run.store()?;
    let mut reports = Vec::new();
    for layer in layers_or_all(&store, layers) {
        reports.push(run_exp1(&store, &sets, layer, run.cfg.bootstrap)?);
    }
    let mut means = Vec::new();
    let mut per_set = Vec::new();
    let mut contrasts = Vec::new();
    for r in &reports {
        for m in &r.means {
            means.push(Exp1MeanRow {
                layer: r.layer,
                condition: m.condition,
                mean_r: m.mean_r,
                mean_z: m.mean_z,
            });
        }
        for s in &r.per_set {
            per_set.push(Exp1SetCsv {
                layer: r.layer,
                set_id: &s.set_id,
                ss_ys: s.z[0],
                ss_yd: s.z[1],
                sd_ys: s.z[2],
                sd_yd: s.z[3],
            });
        }
        for c in &r.posthoc {
            contrasts.push(ContrastRow {
                layer: r.layer,
                first: c.first,
                second: c.second,
                mean_difference: c.mean_difference,
                z: c.test.statistic,
                p_raw: c.test.p_raw,
                p_adjusted: c.test.p_adjusted,
                proportion: c.directional.estimate,
                ci_lower: c.directional.lower,
                ci_upper: c.directional.upper,
            });
        }
    }
    run.report("rsa-exp1", &reports)?;
    run.table("rsa-exp1-means", &means)?;
    run.table("rsa-exp1-per-set", &per_set)?;
    run.table("rsa-exp1-posthoc", &contrasts)
}

#[derive(Serialize)]
struct BucketRow {
    layer: usize,
    feature_distance: u8,
    n_same: usize,
    n_opposite: usize,
    mean_same: f64,
    mean_opposite: f64,
    z: f64,
    p_raw: f64,
    p_adjusted: f64,
}

fn rsa_exp2(run: &mut Run<'_>, layers: &[usize]) -> Result<(), CliError> {
    let sets = run.stimuli()?;
    let store = run.store()?;
    let layers = layers_or_all(&store, layers);
    let report = run_exp2_similarity(&store, &sets, &layers)?;
    let rows: Vec<BucketRow> = report
        .layers
        .iter()
        .flat_map(|l| {
            l.buckets.iter().map(move |b| BucketRow {
                layer: l.layer,
                feature_distance: b.feature_distance,
                n_same: b.n_same,
                n_opposite: b.n_opposite,
                mean_same: b.mean_same,
                mean_opposite: b.mean_opposite,
                z: b.contrast.statistic,
                p_raw: b.contrast.p_raw,
                p_adjusted: b.contrast.p_adjusted,
            })
        })
        .collect();
    run.report("rsa-exp2", &report)?;
    run.table("rsa-exp2-buckets", &rows)
}

/// One fold of one probe run, as written to and read from CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub target: String,
    pub orientation: String,
    pub fold_id: usize,
    pub held_out_a: u8,
    pub held_out_b: u8,
    pub feature_distance: u8,
    pub n_train: usize,
    pub n_test: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    pub epochs: usize,
    pub converged: bool,
}

impl FoldRow {
    fn outcome(&self) -> FoldOutcome {
        FoldOutcome {
            fold_id: self.fold_id,
            held_out: (self.held_out_a, self.held_out_b),
            feature_distance: self.feature_distance,
            n_train: self.n_train,
            n_test: self.n_test,
            n_correct: self.n_correct,
            accuracy: self.accuracy,
            epochs: self.epochs,
            converged: self.converged,
        }
    }
}

#[derive(Serialize)]
struct SummaryRow {
    target: String,
    orientation: &'static str,
    mean_accuracy: f64,
    ci_lower: f64,
    ci_upper: f64,
    min_accuracy: f64,
    max_accuracy: f64,
    t: Option<f64>,
    p_raw: Option<f64>,
    p_adjusted: Option<f64>,
    unconverged_folds: usize,
}

#[derive(Serialize)]
struct OrientationGap {
    target: String,
    canonical: f64,
    randomized: f64,
    difference: f64,
}

#[derive(Serialize)]
struct ProbeReport {
    feature_mode: FeatureMode,
    family_size: usize,
    canonical: Vec<ProbeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    randomized: Option<Vec<ProbeResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation_gap: Option<Vec<OrientationGap>>,
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::Canonical => "canonical",
        Orientation::Randomized { .. } => "randomized",
    }
}

fn probe(run: &mut Run<'_>, name: &str, mode: FeatureMode, targets: Option<Vec<ProbeTarget>>) -> Result<(), CliError> {
    let sets = run.stimuli()?;
    let store = run.store()?;
    let targets = targets.unwrap_or_else(|| sweep_targets(&store, mode));
    let mut config = ProbeConfig {
        bootstrap_b: run.cfg.bootstrap.b,
        bootstrap_seed: run.cfg.bootstrap.seed,
        ..ProbeConfig::default()
    };
    config.svm.c = run.cfg.svm_c;
    config.svm.seed = run.cfg.bootstrap.seed;
    let canonical = probe_sweep(&store, &sets, &targets, mode, &config)?;
    let randomized = match run.cfg.orientation_mode {
        OrientationMode::Canonical => None,
        OrientationMode::RandomizedCheck => {
            config.orientation = Orientation::Randomized {
                seed: run.cfg.bootstrap.seed,
            };
            Some(probe_sweep(&store, &sets, &targets, mode, &config)?)
        }
    };
    let all = canonical.iter().chain(randomized.iter().flatten());
    let mut folds = Vec::new();
    let mut summary = Vec::new();
    for r in all {
        let target = r.target.to_string();
        let orientation = orientation_name(r.orientation);
        for f in &r.folds {
            folds.push(FoldRow {
                target: target.clone(),
                orientation: orientation.into(),
                fold_id: f.fold_id,
                held_out_a: f.held_out.0,
                held_out_b: f.held_out.1,
                feature_distance: f.feature_distance,
                n_train: f.n_train,
                n_test: f.n_test,
                n_correct: f.n_correct,
                accuracy: f.accuracy,
                epochs: f.epochs,
                converged: f.converged,
            });
        }
        let (lo, hi) = r.accuracy_range();
        summary.push(SummaryRow {
            target,
            orientation,
            mean_accuracy: r.mean_accuracy,
            ci_lower: r.ci95.lower,
            ci_upper: r.ci95.upper,
            min_accuracy: lo,
            max_accuracy: hi,
            t: r.t_vs_chance.as_ref().map(|t| t.statistic),
            p_raw: r.t_vs_chance.as_ref().map(|t| t.p_raw),
            p_adjusted: r.t_vs_chance.as_ref().map(|t| t.p_adjusted),
            unconverged_folds: r.folds.iter().filter(|f| !f.converged).count(),
        });
    }
    let orientation_gap = randomized.as_ref().map(|rs| {
        canonical
            .iter()
            .zip(rs)
            .map(|(c, r)| OrientationGap {
                target: c.target.to_string(),
                canonical: c.mean_accuracy,
                randomized: r.mean_accuracy,
                difference: r.mean_accuracy - c.mean_accuracy,
            })
            .collect()
    });
    let report = ProbeReport {
        feature_mode: mode,
        family_size: sweep_targets(&store, mode).len().max(canonical.len()),
        canonical,
        randomized,
        orientation_gap,
    };
    run.report(name, &report)?;
    run.table(&format!("{name}-folds"), &folds)?;
    run.table(&format!("{name}-summary"), &summary)
}

fn probe_hidden(run: &mut Run<'_>, layers: &[usize]) -> Result<(), CliError> {
    let mode = run.cfg.feature_mode;
    if mode == FeatureMode::AttentionConcat {
        return Err(CliError::Value {
            key: "feature_mode",
            message: "probe-hidden needs hidden-diff or hidden-concat".into(),
        });
    }
    let targets = (!layers.is_empty()).then(|| layers.iter().map(|&l| ProbeTarget::layer(l)).collect());
    probe(run, "probe-hidden", mode, targets)
}

fn probe_attention(run: &mut Run<'_>, layers: &[usize], heads: &[usize]) -> Result<(), CliError> {
    let targets = if layers.is_empty() && heads.is_empty() {
        None
    } else {
        let store = read_store(run.cfg.require_store()?)?;
        let m = store.manifest();
        let layers: Vec<usize> = match layers.is_empty() {
            true => (1..=m.num_layers).collect(),
            false => layers.to_vec(),
        };
        let heads: Vec<usize> = match heads.is_empty() {
            true => (1..=m.num_heads).collect(),
            false => heads.to_vec(),
        };
        Some(
            layers
                .iter()
                .flat_map(|&l| heads.iter().map(move |&h| ProbeTarget::head(l, h)))
                .collect(),
        )
    };
    probe(run, "probe-attention", FeatureMode::AttentionConcat, targets)
}

#[derive(Serialize)]
struct TypeRow<'a> {
    contrast: &'a str,
    structure_id: u8,
    role_version: String,
    higher: f64,
    lower: f64,
}

#[derive(Serialize)]
struct StructureRow<'a> {
    contrast: &'a str,
    structure_id: u8,
    label: &'a str,
    mean_difference: f64,
    agrees: bool,
}

fn characterize(run: &mut Run<'_>, layer: usize, head: usize) -> Result<(), CliError> {
    let sets = run.stimuli()?;
    let store = run.store()?;
    let report = characterize_head(&store, &sets, layer, head)?;
    let mut types = Vec::new();
    let mut structures = Vec::new();
    for c in &report.contrasts {
        for t in &c.per_type {
            types.push(TypeRow {
                contrast: &c.name,
                structure_id: t.structure_id,
                role_version: t.role_version.to_string(),
                higher: t.higher,
                lower: t.lower,
            });
        }
        for s in &c.per_structure {
            structures.push(StructureRow {
                contrast: &c.name,
                structure_id: s.structure_id,
                label: &s.label,
                mean_difference: s.mean_difference,
                agrees: s.agrees,
            });
        }
    }
    let name = format!("characterize-head-L{layer}H{head}");
    run.report(&name, &report)?;
    run.table(&format!("{name}-types"), &types)?;
    run.table(&format!("{name}-structures"), &structures)
}

fn ratings(run: &mut Run<'_>) -> Result<Vec<roleprobe_core::analyses::HumanRating>, CliError> {
    let path = run.cfg.require_human_csv()?.to_path_buf();
    run.inputs.push(InputChecksum::file("human_csv", &path)?);
    Ok(read_ratings(&path)?)
}

fn warn_excluded(excluded: &[roleprobe_core::analyses::ExcludedParticipant]) {
    for e in excluded {
        eprintln!("excluded participant {}: {}", e.participant_id, e.reason);
    }
}

#[derive(Serialize)]
struct HumanContrastRow {
    first: Condition,
    second: Condition,
    mean_difference: f64,
    wald_z: f64,
    wald_p_adjusted: f64,
    rank_sum_z: f64,
    rank_sum_p_adjusted: f64,
}

fn human_exp1(run: &mut Run<'_>, include_filler: bool) -> Result<(), CliError> {
    let ratings = ratings(run)?;
    let report = analyze_human_exp1(&ratings, include_filler)?;
    warn_excluded(&report.excluded);
    let contrasts: Vec<HumanContrastRow> = report
        .contrasts
        .iter()
        .map(|c| HumanContrastRow {
            first: c.first,
            second: c.second,
            mean_difference: c.mean_difference,
            wald_z: c.wald.statistic,
            wald_p_adjusted: c.wald.p_adjusted,
            rank_sum_z: c.rank_sum.statistic,
            rank_sum_p_adjusted: c.rank_sum.p_adjusted,
        })
        .collect();
    run.report("human-exp1", &report)?;
    run.table("human-exp1-levels", &report.levels)?;
    run.table("human-exp1-contrasts", &contrasts)
}

#[derive(Serialize)]
struct HumanDistanceRow {
    feature_distance: u8,
    paired: bool,
    n_paired: usize,
    n_same_only: usize,
    n_opposite_only: usize,
    mean_same: Option<f64>,
    mean_opposite: Option<f64>,
    z: f64,
    p_raw: f64,
    p_adjusted: f64,
}

fn human_exp2(run: &mut Run<'_>) -> Result<(), CliError> {
    let ratings = ratings(run)?;
    let report = analyze_human_exp2(&ratings, run.cfg.bootstrap)?;
    warn_excluded(&report.excluded);
    for d in &report.distances {
        if let Some(n) = &d.notice {
            eprintln!("distance {}: {n}", d.feature_distance);
        }
    }
    let rows: Vec<HumanDistanceRow> = report
        .distances
        .iter()
        .map(|d| HumanDistanceRow {
            feature_distance: d.feature_distance,
            paired: d.paired,
            n_paired: d.n_paired,
            n_same_only: d.n_same_only,
            n_opposite_only: d.n_opposite_only,
            mean_same: d.mean_same,
            mean_opposite: d.mean_opposite,
            z: d.test.statistic,
            p_raw: d.test.p_raw,
            p_adjusted: d.test.p_adjusted,
        })
        .collect();
    run.report("human-exp2", &report)?;
    run.table("human-exp2-distances", &rows)
}

pub fn read_fold_rows(path: &Path) -> Result<Vec<FoldRow>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<Result<Vec<FoldRow>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct CompareResult {
    target: String,
    #[serde(flatten)]
    comparison: FoldComparison,
}

#[derive(Serialize)]
struct CompareRow {
    fold_id: usize,
    held_out_a: u8,
    held_out_b: u8,
    feature_distance: u8,
    accuracy: f64,
    z: f64,
    p_raw: f64,
    p_adjusted: f64,
}

fn compare(
    run: &mut Run<'_>,
    folds_path: &Path,
    target: Option<&str>,
    human_accuracy: Option<f64>,
    participants: Option<u64>,
    filter: FoldFilter,
) -> Result<(), CliError> {
    let folds_path = std::path::absolute(folds_path).map_err(|source| CliError::Io {
        path: folds_path.to_path_buf(),
        source,
    })?;
    run.inputs.push(InputChecksum::file("folds", &folds_path)?);
    let rows: Vec<FoldRow> = read_fold_rows(&folds_path)?
        .into_iter()
        .filter(|r| r.orientation == "canonical")
        .collect();
    let targets: BTreeSet<&str> = rows.iter().map(|r| r.target.as_str()).collect();
    let target = match (target, targets.len()) {
        (Some(t), _) => t.to_string(),
        (None, 1) => targets.iter().next().expect("one target").to_string(),
        (None, n) => {
            return Err(CliError::Input(format!(
                "fold table has {n} targets; choose one with --target"
            )))
        }
    };
    let outcomes: Vec<FoldOutcome> = rows.iter().filter(|r| r.target == target).map(FoldRow::outcome).collect();
    if outcomes.is_empty() {
        return Err(CliError::Input(format!("no folds for target {target}")));
    }
    let human = match (human_accuracy, participants) {
        (Some(p), Some(n)) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Input(format!("human accuracy {p} outside [0, 1]")));
            }
            HumanAccuracy::from_proportion(p, n)
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::Input(
                "--human-accuracy and --participants go together".into(),
            ))
        }
        (None, None) => {
            let ratings = ratings(run)?;
            let report = analyze_human_exp2(&ratings, run.cfg.bootstrap)?;
            HumanAccuracy {
                successes: report.implicit_successes as u64,
                participants: report.accuracy_participants as u64,
            }
        }
    };
    let comparison = compare_folds(&outcomes, human, &filter, run.cfg.alpha)?;
    let table: Vec<CompareRow> = comparison
        .rows
        .iter()
        .map(|r| CompareRow {
            fold_id: r.fold_id,
            held_out_a: r.held_out.0,
            held_out_b: r.held_out.1,
            feature_distance: r.feature_distance,
            accuracy: r.accuracy,
            z: r.test.statistic,
            p_raw: r.test.p_raw,
            p_adjusted: r.test.p_adjusted,
        })
        .collect();
    run.report("compare", &CompareResult { target, comparison })?;
    run.table("compare-folds", &table)
}

#[derive(Serialize)]
struct IndexEntry {
    file: String,
    command: String,
    version: String,
    sha256: String,
}

#[derive(Deserialize)]
struct EnvelopeHead {
    artifact: String,
    command: String,
    version: String,
}

const INDEX_FILE: &str = "index.json";

fn index(run: &mut Run<'_>) -> Result<(), CliError> {
    let dir = run.cfg.require_out_dir()?.to_path_buf();
    let io = |source| CliError::Io {
        path: dir.clone(),
        source,
    };
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    names.retain(|n| n.ends_with(".json") && n != INDEX_FILE && !n.starts_with('.'));
    names.sort();
    let mut entries = Vec::new();
    for name in names {
        let path = dir.join(&name);
        let bytes = std::fs::read(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let Ok(head) = serde_json::from_slice::<EnvelopeHead>(&bytes) else {
            continue;
        };
        if head.artifact != ARTIFACT {
            continue;
        }
        println!("{name}: {}", head.command);
        entries.push(IndexEntry {
            file: name,
            command: head.command,
            version: head.version,
            sha256: roleprobe_core::io::sha256_bytes(&bytes),
        });
    }
    run.report("index", &entries)
}
