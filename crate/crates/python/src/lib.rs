//! Python bindings. Games, configs and reports cross the boundary as JSON
//! text, in the same format the CLI reads.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pmids::classifier::classify;
use pmids::harness::{self, ExperimentConfig};
use pmids::{build_game, PresetSpec};

/// `(t, action, inst_regret, cum_regret, info_gain, ratio)`.
pub type Row = (usize, usize, f64, f64, f64, f64);

fn to_py(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Regime report of a preset game, as JSON.
pub fn classify_json(preset: &str) -> Result<String, String> {
    let spec: PresetSpec = serde_json::from_str(preset).map_err(|e| e.to_string())?;
    let game = build_game(&spec).map_err(|e| e.to_string())?;
    let report = classify(&game).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Runs an experiment config and returns its summary as JSON.
pub fn run_json(config: &str) -> Result<String, String> {
    let cfg = ExperimentConfig::from_json(config).map_err(|e| e.to_string())?;
    let result = harness::run_experiment(&cfg).map_err(|e| e.to_string())?;
    serde_json::to_string(&result.summary).map_err(|e| e.to_string())
}

/// Per-round rows of one episode.
pub fn episode_rows(config: &str, rep: usize) -> Result<Vec<Row>, String> {
    let cfg = ExperimentConfig::from_json(config).map_err(|e| e.to_string())?;
    let traj = harness::run_episode(&cfg, rep).map_err(|e| e.to_string())?;
    Ok(traj
        .rounds
        .iter()
        .map(|r| {
            (
                r.t,
                r.action,
                r.inst_regret,
                r.cum_regret,
                r.info_gain,
                r.ratio,
            )
        })
        .collect())
}

#[pyfunction(name = "classify")]
fn py_classify(preset: &str) -> PyResult<String> {
    classify_json(preset).map_err(to_py)
}

#[pyfunction(name = "run")]
fn py_run(py: Python<'_>, config: &str) -> PyResult<String> {
    py.detach(|| run_json(config)).map_err(to_py)
}

#[pyfunction(name = "run_episode")]
#[pyo3(signature = (config, rep = 0))]
fn py_run_episode(py: Python<'_>, config: &str, rep: usize) -> PyResult<Vec<Row>> {
    py.detach(|| episode_rows(config, rep)).map_err(to_py)
}

#[pymodule]
fn pmids_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(py_classify, m)?)?;
    m.add_function(wrap_pyfunction!(py_run, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_episode, m)?)?;
    m.add("CSV_HEADER", harness::CSV_HEADER)?;
    Ok(())
}
