//! Report envelopes and atomic JSON/CSV emission.

use std::path::{Path, PathBuf};

use roleprobe_core::io::{atomic_write, sha256_file};
use roleprobe_core::interchange::MANIFEST_FILE;
use serde::Serialize;

use crate::config::FileConfig;
use crate::CliError;

pub const ARTIFACT: &str = "roleprobe";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputChecksum {
    pub role: &'static str,
    pub path: PathBuf,
    pub sha256: String,
}

impl InputChecksum {
    pub fn file(role: &'static str, path: &Path) -> Result<Self, CliError> {
        Ok(Self {
            role,
            path: path.to_path_buf(),
            sha256: sha256_file(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?,
        })
    }

    /// A store is identified by its manifest, which carries a CRC-32 of
    /// every data file.
    pub fn store(dir: &Path) -> Result<Self, CliError> {
        Self::file("store_manifest", &dir.join(MANIFEST_FILE))
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a FileConfig,
    pub inputs: &'a [InputChecksum],
    pub result: &'a T,
}

/// Collects the files a command writes, in order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub written: Vec<PathBuf>,
}

impl Outputs {
    pub fn bytes(&mut self, path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
        atomic_write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        bytes.push(b'\n');
        self.bytes(path, &bytes)
    }

    pub fn csv<S: Serialize>(&mut self, path: PathBuf, rows: &[S]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        self.bytes(path, &bytes)
    }
}
