//! `roleprobe` command-line front end.
//!
//! Every analysis command writes a JSON report (config echo, input
//! checksums, result) plus CSV tables into `out_dir`. Outputs carry no
//! timestamps, so reruns with the same inputs are byte-identical.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use roleprobe_core::analyses::AnalysisError;
use roleprobe_core::interchange::StoreError;
use roleprobe_core::probe::ProbeError;
use roleprobe_core::repspace::RepError;
use roleprobe_core::stimgen::StimError;
use serde::Serialize;
use thiserror::Error;

use config::{FileBootstrap, FileConfig, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: &'static str, message: String },
    #[error("missing required path `{0}`")]
    MissingPath(&'static str),
    #[error("store strategy {store} does not match configured {config}")]
    StrategyMismatch { store: String, config: String },
    #[error("store failed validation with {0} issue(s)")]
    InvalidStore(usize),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Stim(#[from] StimError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Rep(#[from] RepError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Value { .. } => "config_value",
            CliError::MissingPath(_) => "missing_path",
            CliError::StrategyMismatch { .. } => "strategy_mismatch",
            CliError::InvalidStore(_) => "invalid_store",
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
            CliError::Output(_) => "output",
            CliError::Analysis(_) => "analysis",
            CliError::Store(_) => "store",
            CliError::Stim(_) => "stimuli",
            CliError::Probe(_) => "probe",
            CliError::Rep(_) => "representation",
        }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Value { .. } | CliError::MissingPath(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "roleprobe", version, about = "Thematic-role analyses over activation stores")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags override the config file.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub stimuli: Option<PathBuf>,
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[arg(long, global = true)]
    pub human_csv: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long = "svm-c", global = true, allow_negative_numbers = true)]
    pub svm_c: Option<f64>,
    #[arg(long, global = true)]
    pub bootstrap_b: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// cls | final-punct | mean-pool | verb-token
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// hidden-diff | hidden-concat
    #[arg(long, global = true)]
    pub feature_mode: Option<String>,
    /// canonical | randomized-check
    #[arg(long, global = true)]
    pub orientation_mode: Option<String>,
}

impl GlobalArgs {
    fn as_file_config(&self) -> FileConfig {
        let bootstrap = (self.bootstrap_b.is_some() || self.seed.is_some()).then_some(FileBootstrap {
            b: self.bootstrap_b,
            seed: self.seed,
        });
        FileConfig {
            stimuli: self.stimuli.clone(),
            store: self.store.clone(),
            human_csv: self.human_csv.clone(),
            out_dir: self.out_dir.clone(),
            svm_c: self.svm_c,
            strategy: self.strategy.clone(),
            alpha: self.alpha,
            feature_mode: self.feature_mode.clone(),
            orientation_mode: self.orientation_mode.clone(),
            bootstrap,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        RunConfig::resolve(file.overlay(self.as_file_config()))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a stimulus manifest from a lexicon.
    GenStimuli {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        exp: u8,
        #[arg(long)]
        sets: usize,
        /// Lexicon JSON; the built-in lexicon when omitted.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Manifest path; defaults to `<out_dir>/stimuli-exp<N>.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a store against its manifest and, if given, the stimuli.
    ValidateStore,
    /// Base-versus-variant similarity analysis.
    RsaExp1 {
        /// Comma-separated layers; all layers when omitted.
        #[arg(long, value_delimiter = ',')]
        layers: Vec<usize>,
    },
    /// Same- versus opposite-role similarity by feature distance.
    RsaExp2 {
        #[arg(long, value_delimiter = ',')]
        layers: Vec<usize>,
    },
    /// Cross-validated probe on hidden states.
    ProbeHidden {
        #[arg(long, value_delimiter = ',')]
        layers: Vec<usize>,
    },
    /// Cross-validated probe on attention summaries, one per head.
    ProbeAttention {
        #[arg(long, value_delimiter = ',')]
        layers: Vec<usize>,
        /// 1-based heads; all heads when omitted.
        #[arg(long, value_delimiter = ',')]
        heads: Vec<usize>,
    },
    /// Agent- versus patient-directed attention of one head.
    CharacterizeHead {
        #[arg(long)]
        layer: usize,
        /// 1-based.
        #[arg(long)]
        head: usize,
    },
    /// Regression of z-scored ratings on condition.
    HumanExp1 {
        /// Drop filler rows instead of fitting them as a level.
        #[arg(long)]
        no_filler: bool,
    },
    /// Same- versus opposite-role ratings and implicit accuracy.
    HumanExp2,
    /// Per-fold probe accuracy against human implicit accuracy.
    Compare {
        /// Fold table written by a probe command.
        #[arg(long)]
        folds: PathBuf,
        /// Probe target such as L7 or L11H5; required when the table has
        /// several.
        #[arg(long)]
        target: Option<String>,
        /// Human accuracy as a proportion; taken from `human_csv` when omitted.
        #[arg(long)]
        human_accuracy: Option<f64>,
        #[arg(long)]
        participants: Option<u64>,
        #[arg(long, conflicts_with = "structures")]
        distance: Option<u8>,
        #[arg(long, value_delimiter = ',')]
        structures: Vec<u8>,
    },
    /// Index the reports in `out_dir`.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenStimuli { .. } => "gen-stimuli",
            Command::ValidateStore => "validate-store",
            Command::RsaExp1 { .. } => "rsa-exp1",
            Command::RsaExp2 { .. } => "rsa-exp2",
            Command::ProbeHidden { .. } => "probe-hidden",
            Command::ProbeAttention { .. } => "probe-attention",
            Command::CharacterizeHead { .. } => "characterize-head",
            Command::HumanExp1 { .. } => "human-exp1",
            Command::HumanExp2 => "human-exp2",
            Command::Compare { .. } => "compare",
            Command::Report => "report",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

/// Parses arguments, runs one command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.global.resolve().and_then(|cfg| commands::dispatch(&cli.command, &cfg)) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            0
        }
        Err(e) => {
            let report = ErrorReport {
                error: ErrorBody {
                    kind: e.kind(),
                    message: e.to_string(),
                },
            };
            eprintln!("{}", serde_json::to_string(&report).expect("plain strings serialise"));
            e.exit_code()
        }
    }
}
