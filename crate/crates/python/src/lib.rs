//! Python bindings. Structured results are returned as JSON strings in the
//! same shape the CLI writes under `result`.

use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use roleprobe_core::analyses::{run_exp1, run_exp2_similarity, BootstrapSettings};
use roleprobe_core::interchange::{read_store, write_store};
use roleprobe_core::probe::{run_probe, FeatureMode, ProbeConfig, ProbeTarget};
use roleprobe_core::repspace;
use roleprobe_core::stats;
use roleprobe_core::stimgen::{
    builtin_exp1_lexicon, builtin_exp2_lexicon, generate_exp1, generate_exp2, load_stimuli, render_manifest,
    StimulusSet,
};
use roleprobe_core::synthetic::{
    random_store, role_encoding_store, structure_onehot_store, syntax_onehot_store, StoreShape,
};
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(err)
}

fn stimuli(path: &str) -> PyResult<Vec<StimulusSet>> {
    load_stimuli(Path::new(path)).map_err(err)
}

/// Manifest text (one JSON record per line) from the built-in lexicon.
#[pyfunction]
fn generate_stimuli(experiment: u8, n_sets: usize) -> PyResult<String> {
    let sets = match experiment {
        1 => generate_exp1(builtin_exp1_lexicon(), n_sets),
        2 => generate_exp2(builtin_exp2_lexicon(), n_sets),
        other => return Err(err(format!("experiment must be 1 or 2, got {other}"))),
    }
    .map_err(err)?;
    Ok(render_manifest(&sets))
}

/// Writes a synthetic store for the sentences of a manifest.
///
/// `kind` is one of `role-encoding` (signal in unit 0 of the last layer),
/// `syntax-onehot`, `structure-onehot` or `random`.
#[pyfunction]
#[pyo3(signature = (stimuli_path, out_dir, kind, num_layers, hidden_size, num_heads = 0, seed = 0))]
fn write_synthetic_store(
    stimuli_path: &str,
    out_dir: &str,
    kind: &str,
    num_layers: usize,
    hidden_size: usize,
    num_heads: usize,
    seed: u64,
) -> PyResult<()> {
    let sets = stimuli(stimuli_path)?;
    let shape = StoreShape {
        num_layers,
        hidden_size,
        num_heads,
    };
    let store = match kind {
        "role-encoding" => role_encoding_store(&sets, shape, num_layers, 0, 0.5, seed),
        "syntax-onehot" => syntax_onehot_store(&sets, shape, 0.3, seed),
        "structure-onehot" => structure_onehot_store(&sets, num_layers),
        "random" => random_store(&sets, shape, seed),
        other => return Err(err(format!("unknown store kind `{other}`"))),
    }
    .map_err(err)?;
    write_store(&store, Path::new(out_dir)).map_err(err)?;
    Ok(())
}

/// Validation report as JSON; never raises for store problems.
#[pyfunction]
#[pyo3(signature = (store, stimuli_path = None))]
fn validate_store(store: &str, stimuli_path: Option<&str>) -> PyResult<String> {
    let records = stimuli_path
        .map(|p| stimuli(p).map(|sets| sets.into_iter().flat_map(|s| s.sentences).collect::<Vec<_>>()))
        .transpose()?;
    let report = roleprobe_core::interchange::validate_store(Path::new(store), records.as_deref());
    to_json(&report)
}

#[pyfunction]
#[pyo3(signature = (stimuli_path, store, layer, bootstrap_b = 5000, seed = 0))]
fn rsa_exp1(stimuli_path: &str, store: &str, layer: usize, bootstrap_b: usize, seed: u64) -> PyResult<String> {
    let sets = stimuli(stimuli_path)?;
    let reader = read_store(Path::new(store)).map_err(err)?;
    let report = run_exp1(&reader, &sets, layer, BootstrapSettings { b: bootstrap_b, seed }).map_err(err)?;
    to_json(&report)
}

#[pyfunction]
fn rsa_exp2(stimuli_path: &str, store: &str, layers: Vec<usize>) -> PyResult<String> {
    let sets = stimuli(stimuli_path)?;
    let reader = read_store(Path::new(store)).map_err(err)?;
    to_json(&run_exp2_similarity(&reader, &sets, &layers).map_err(err)?)
}

/// Cross-validated probe at one layer, or one head when `head` is given.
#[pyfunction]
#[pyo3(signature = (stimuli_path, store, layer, head = None, feature_mode = "hidden-diff", c = 1.0, bootstrap_b = 5000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn probe(
    stimuli_path: &str,
    store: &str,
    layer: usize,
    head: Option<usize>,
    feature_mode: &str,
    c: f64,
    bootstrap_b: usize,
    seed: u64,
) -> PyResult<String> {
    let sets = stimuli(stimuli_path)?;
    let reader = read_store(Path::new(store)).map_err(err)?;
    let mode: FeatureMode = feature_mode.parse().map_err(err)?;
    let target = match head {
        Some(h) => ProbeTarget::head(layer, h),
        None => ProbeTarget::layer(layer),
    };
    let mut config = ProbeConfig {
        bootstrap_b,
        bootstrap_seed: seed,
        ..Default::default()
    };
    config.svm.c = c;
    config.svm.seed = seed;
    to_json(&run_probe(&reader, &sets, target, mode, &config).map_err(err)?)
}

/// (z, p) of the signed-rank test.
#[pyfunction]
fn wilcoxon_signed_rank(diffs: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = stats::wilcoxon_signed_rank(&diffs).map_err(err)?;
    Ok((r.statistic, r.p_raw))
}

/// (z, p) of the rank-sum test; z > 0 when `a` tends to be larger.
#[pyfunction]
fn rank_sum(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = stats::rank_sum(&a, &b).map_err(err)?;
    Ok((r.statistic, r.p_raw))
}

#[pyfunction]
fn fisher_z(r: f64) -> PyResult<f64> {
    repspace::fisher_z(r).map_err(err)
}

#[pymodule]
fn roleprobe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(generate_stimuli, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_store, m)?)?;
    m.add_function(wrap_pyfunction!(validate_store, m)?)?;
    m.add_function(wrap_pyfunction!(rsa_exp1, m)?)?;
    m.add_function(wrap_pyfunction!(rsa_exp2, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_signed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sum, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_z, m)?)?;
    Ok(())
}
