//! Run configuration: a TOML file, overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use roleprobe_core::analyses::BootstrapSettings;
use roleprobe_core::probe::FeatureMode;
use roleprobe_core::Strategy;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Keys accepted in a config file. Everything is optional; defaults are
/// applied by [`RunConfig::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stimuli: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(rename = "svm_C", alias = "svm_c", skip_serializing_if = "Option::is_none")]
    pub svm_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<FileBootstrap>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileBootstrap {
    #[serde(rename = "B", alias = "b", skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text, path)?;
        // relative paths in a file are relative to that file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.stimuli, &mut cfg.store, &mut cfg.human_csv, &mut cfg.out_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: FileConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(stimuli, store, human_csv, out_dir, svm_c, strategy, alpha, feature_mode, orientation_mode);
        if let Some(ob) = other.bootstrap {
            let b = self.bootstrap.get_or_insert_with(FileBootstrap::default);
            if ob.b.is_some() {
                b.b = ob.b;
            }
            if ob.seed.is_some() {
                b.seed = ob.seed;
            }
        }
        self
    }
}

/// How probe orientation is handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OrientationMode {
    #[default]
    Canonical,
    /// Canonical run plus a run with randomly swapped pair order.
    RandomizedCheck,
}

impl OrientationMode {
    pub fn cli_name(self) -> &'static str {
        match self {
            OrientationMode::Canonical => "canonical",
            OrientationMode::RandomizedCheck => "randomized-check",
        }
    }
}

impl fmt::Display for OrientationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for OrientationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "canonical" => Ok(OrientationMode::Canonical),
            "randomized-check" => Ok(OrientationMode::RandomizedCheck),
            other => Err(format!("unknown orientation mode `{other}`")),
        }
    }
}

/// Fully resolved configuration. Paths are absolute.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub stimuli: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub human_csv: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub svm_c: f64,
    pub bootstrap: BootstrapSettings,
    /// When set, stores must have been extracted with this strategy.
    pub strategy: Option<Strategy>,
    pub alpha: f64,
    pub feature_mode: FeatureMode,
    pub orientation_mode: OrientationMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stimuli: None,
            store: None,
            human_csv: None,
            out_dir: None,
            svm_c: 1.0,
            bootstrap: BootstrapSettings::default(),
            strategy: None,
            alpha: 0.05,
            feature_mode: FeatureMode::HiddenDiff,
            orientation_mode: OrientationMode::Canonical,
        }
    }
}

fn value_err(key: &'static str, message: impl Into<String>) -> CliError {
    CliError::Value {
        key,
        message: message.into(),
    }
}

fn absolute(p: PathBuf) -> Result<PathBuf, CliError> {
    std::path::absolute(&p).map_err(|source| CliError::Io { path: p, source })
}

impl RunConfig {
    pub fn resolve(file: FileConfig) -> Result<Self, CliError> {
        let d = RunConfig::default();
        let svm_c = file.svm_c.unwrap_or(d.svm_c);
        if !(svm_c.is_finite() && svm_c > 0.0) {
            return Err(value_err("svm_C", format!("must be a positive number, got {svm_c}")));
        }
        let alpha = file.alpha.unwrap_or(d.alpha);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(value_err("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        let fb = file.bootstrap.unwrap_or_default();
        let bootstrap = BootstrapSettings {
            b: fb.b.unwrap_or(d.bootstrap.b),
            seed: fb.seed.unwrap_or(d.bootstrap.seed),
        };
        if bootstrap.b == 0 {
            return Err(value_err("bootstrap.B", "must be positive"));
        }
        let strategy = file
            .strategy
            .as_deref()
            .map(Strategy::from_str)
            .transpose()
            .map_err(|e| value_err("strategy", e))?;
        let feature_mode = file
            .feature_mode
            .as_deref()
            .map(FeatureMode::from_str)
            .transpose()
            .map_err(|e| value_err("feature_mode", e))?
            .unwrap_or(d.feature_mode);
        let orientation_mode = file
            .orientation_mode
            .as_deref()
            .map(OrientationMode::from_str)
            .transpose()
            .map_err(|e| value_err("orientation_mode", e))?
            .unwrap_or(d.orientation_mode);
        Ok(Self {
            stimuli: file.stimuli.map(absolute).transpose()?,
            store: file.store.map(absolute).transpose()?,
            human_csv: file.human_csv.map(absolute).transpose()?,
            out_dir: file.out_dir.map(absolute).transpose()?,
            svm_c,
            bootstrap,
            strategy,
            alpha,
            feature_mode,
            orientation_mode,
        })
    }

    /// The resolved values in config-file form, every key present except
    /// unset paths and strategy.
    pub fn echo(&self) -> FileConfig {
        FileConfig {
            stimuli: self.stimuli.clone(),
            store: self.store.clone(),
            human_csv: self.human_csv.clone(),
            out_dir: self.out_dir.clone(),
            svm_c: Some(self.svm_c),
            strategy: self.strategy.map(|s| s.cli_name().to_string()),
            alpha: Some(self.alpha),
            feature_mode: Some(self.feature_mode.cli_name().to_string()),
            orientation_mode: Some(self.orientation_mode.cli_name().to_string()),
            bootstrap: Some(FileBootstrap {
                b: Some(self.bootstrap.b),
                seed: Some(self.bootstrap.seed),
            }),
        }
    }

    pub fn require_stimuli(&self) -> Result<&Path, CliError> {
        self.stimuli.as_deref().ok_or(CliError::MissingPath("stimuli"))
    }

    pub fn require_store(&self) -> Result<&Path, CliError> {
        self.store.as_deref().ok_or(CliError::MissingPath("store"))
    }

    pub fn require_human_csv(&self) -> Result<&Path, CliError> {
        self.human_csv.as_deref().ok_or(CliError::MissingPath("human_csv"))
    }

    pub fn require_out_dir(&self) -> Result<&Path, CliError> {
        self.out_dir.as_deref().ok_or(CliError::MissingPath("out_dir"))
    }
}
