//! Engine for testing whether transformer language models encode thematic
//! roles ("who did what to whom").
//!
//! The crate is organised around the analysis pipeline:
//!
//! - [`stimgen`] builds the controlled minimal-pair stimulus sets and the
//!   labelled sentence pairs derived from them.
//! - [`interchange`] reads, writes and validates the on-disk activation store
//!   produced by the extraction sidecar.
//! - [`repspace`] normalises hidden units and computes Fisher-transformed
//!   cosine similarities.
//! - [`stats`] is a self-contained statistical kernel (rank tests, t/F/normal
//!   machinery, bootstrap, OLS).
//! - [`probe`] trains linear max-margin probes under structure-held-out
//!   cross-validation.
//! - [`analyses`] orchestrates the experiment-level analyses and the human
//!   judgment comparisons.
//! - [`synthetic`] builds stores with known structure for dry runs and tests.

pub mod analyses;
pub mod interchange;
pub mod io;
pub mod probe;
pub mod repspace;
pub mod stats;
pub mod stimgen;
pub mod synthetic;

pub use interchange::{ActivationManifest, ActivationStore, StoreAccess, StoreReader, Strategy};
pub use stimgen::{
    Condition, PairRecord, RoleVersion, SentenceRecord, StimulusSet, StructureDescriptor,
};
