//! Python bindings: CLI entry point, presets, pointwise model queries,
//! the design check and the space-mean detection probability.

use bohm_ergo::cli::{config, ScenarioConfig, PRESETS};
use bohm_ergo::design::feasibility_check;
use bohm_ergo::detection::arrival_joint_prob;
use bohm_ergo::dynamics::velocity as guidance_velocity;
use bohm_ergo::wavefunction::{Configuration, TwoParticleWaveFunction};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Scenario from a JSON string, a preset name, or the natural preset.
fn scenario(config_json: Option<&str>, preset: Option<&str>) -> PyResult<ScenarioConfig> {
    let cfg = match (config_json, preset) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("pass either config_json or preset, not both")),
        (Some(text), None) => ScenarioConfig::from_json(text, "config_json").map_err(value_error)?,
        (None, Some(name)) => config::preset(name).map_err(value_error)?,
        (None, None) => ScenarioConfig::natural(),
    };
    cfg.validate().map_err(value_error)?;
    Ok(cfg)
}

fn build_model(cfg: &ScenarioConfig, model: Option<&str>) -> PyResult<TwoParticleWaveFunction> {
    let mut params = cfg.model.clone();
    if let Some(name) = model {
        params.model_kind = config::parse_model(name).map_err(value_error)?;
    }
    TwoParticleWaveFunction::build(params).map_err(value_error)
}

/// Runs the command-line tool with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    bohm_ergo::cli::run(std::iter::once("bohm-ergo".to_string()).chain(args))
}

/// Names of the built-in scenario presets.
#[pyfunction]
fn presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Pretty JSON of a built-in preset.
#[pyfunction]
fn preset_json(name: &str) -> PyResult<String> {
    Ok(config::preset(name).map_err(value_error)?.to_json())
}

/// `|Psi|^2` at a configuration.
#[pyfunction]
#[pyo3(signature = (x1, y1, x2, y2, t, model=None, config_json=None, preset=None))]
#[allow(clippy::too_many_arguments)]
fn density(
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    t: f64,
    model: Option<&str>,
    config_json: Option<&str>,
    preset: Option<&str>,
) -> PyResult<f64> {
    let m = build_model(&scenario(config_json, preset)?, model)?;
    Ok(m.density(&Configuration::new(x1, y1, x2, y2, t)))
}

/// Guidance velocity `(vx1, vy1, vx2, vy2)`; raises `ArithmeticError` at a node.
#[pyfunction]
#[pyo3(signature = (x1, y1, x2, y2, t, model=None, config_json=None, preset=None))]
#[allow(clippy::too_many_arguments)]
fn velocity(
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    t: f64,
    model: Option<&str>,
    config_json: Option<&str>,
    preset: Option<&str>,
) -> PyResult<(f64, f64, f64, f64)> {
    let m = build_model(&scenario(config_json, preset)?, model)?;
    let v = guidance_velocity(&m, &Configuration::new(x1, y1, x2, y2, t))
        .map_err(|e| PyArithmeticError::new_err(e.to_string()))?;
    Ok((v[0], v[1], v[2], v[3]))
}

/// Feasibility report as a JSON string.
#[pyfunction]
#[pyo3(signature = (config_json=None, preset=None))]
fn design(config_json: Option<&str>, preset: Option<&str>) -> PyResult<String> {
    let cfg = scenario(config_json, preset)?;
    serde_json::to_string(&feasibility_check(&cfg.design_inputs())).map_err(value_error)
}

/// Space-mean joint detection probability `(p, error)` at arrival for the
/// scenario's detectors.
#[pyfunction]
#[pyo3(signature = (config_json=None, preset=None))]
fn space_mean_probability(config_json: Option<&str>, preset: Option<&str>) -> PyResult<(f64, f64)> {
    let cfg = scenario(config_json, preset)?;
    let geom = cfg.detectors.ok_or_else(|| PyValueError::new_err("scenario has no detectors"))?;
    let m = build_model(&cfg, None)?;
    let p = arrival_joint_prob(&m, &geom).map_err(|e| PyArithmeticError::new_err(e.to_string()))?;
    Ok((p.p, p.error))
}

#[pymodule]
fn bohm_ergo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_json, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(velocity, m)?)?;
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add_function(wrap_pyfunction!(space_mean_probability, m)?)?;
    Ok(())
}
