use nalgebra::Matrix4;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twinosc::bath::{coeffs_markovian, coeffs_nonmarkovian, BathParams, CoeffSet};
use twinosc::measures;
use twinosc::model::{self, normal_modes, CovarianceMatrix, SystemParams};
use twinosc::scan::{self, output::outcome, ExperimentConfig, PointStatus, ScanError, SingleRun};

create_exception!(twinosc, ConfigError, PyValueError, "Invalid configuration or parameters.");
create_exception!(twinosc, NumericalError, PyRuntimeError, "The numerics failed to converge.");

fn scan_err(e: ScanError) -> PyErr {
    match e {
        ScanError::Numerical(m) => NumericalError::new_err(m),
        other => ConfigError::new_err(other.to_string()),
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> PyErr {
    ConfigError::new_err(e.to_string())
}

fn to_rows(s: &CovarianceMatrix) -> Vec<Vec<f64>> {
    (0..4).map(|i| (0..4).map(|j| s.entry(i, j)).collect()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<CovarianceMatrix> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(ConfigError::new_err("sigma must be a 4x4 nested list"));
    }
    CovarianceMatrix::new(Matrix4::from_fn(|i, j| rows[i][j])).map_err(config_err)
}

fn parse(config_toml: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_toml_str(config_toml).map_err(scan_err)
}

fn run_dict<'py>(py: Python<'py>, run: &SingleRun) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", &run.label)?;
    d.set_item("t", run.records.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("E_N", run.records.iter().map(|r| r.log_negativity).collect::<Vec<_>>())?;
    d.set_item("d", run.records.iter().map(|r| r.twin_correlation).collect::<Vec<_>>())?;
    d.set_item("nu_minus", run.records.iter().map(|r| r.nu_minus).collect::<Vec<_>>())?;
    d.set_item("purity", run.records.iter().map(|r| r.purity).collect::<Vec<_>>())?;
    d.set_item("sigma", run.records.iter().map(|r| r.sigma.to_vec()).collect::<Vec<_>>())?;
    d.set_item("t_F", run.death_time.value())?;
    d.set_item("censored", run.death_time.is_censored())?;
    d.set_item("outcome", outcome(&run.death_time))?;
    d.set_item("peak_E_N", run.peak_log_negativity)?;
    Ok(d)
}

fn coeff_dict<'py>(py: Python<'py>, c: &CoeffSet) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let rows = |m: &nalgebra::Matrix2<f64>| vec![vec![m[(0, 0)], m[(0, 1)]], vec![m[(1, 0)], m[(1, 1)]]];
    d.set_item("eps2", rows(&c.eps2))?;
    d.set_item("diffusion", rows(&c.diffusion))?;
    d.set_item("anomalous", rows(&c.anomalous))?;
    d.set_item("damping", rows(&c.damping))?;
    Ok(d)
}

/// Covariance matrix of the two-mode squeezed vacuum, as a 4x4 nested list
/// in the order (x1, p1, x2, p2).
#[pyfunction]
#[pyo3(signature = (r, omega_ref = 1.0))]
fn tms_covariance(r: f64, omega_ref: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&model::tms_covariance(r, omega_ref).map_err(config_err)?))
}

#[pyfunction]
#[pyo3(signature = (sigma, partial_transpose = false))]
fn symplectic_eigenvalues(sigma: Vec<Vec<f64>>, partial_transpose: bool) -> PyResult<(f64, f64)> {
    measures::symplectic_eigenvalues(&from_rows(sigma)?, partial_transpose).map_err(config_err)
}

#[pyfunction]
fn log_negativity(sigma: Vec<Vec<f64>>) -> PyResult<f64> {
    measures::log_negativity(&from_rows(sigma)?).map_err(config_err)
}

#[pyfunction]
fn purity(sigma: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(from_rows(sigma)?.purity())
}

#[pyfunction]
#[pyo3(signature = (sigma, omega_a = 1.0, omega_b = 1.0))]
fn twin_correlation(sigma: Vec<Vec<f64>>, omega_a: f64, omega_b: f64) -> PyResult<f64> {
    Ok(measures::twin_correlation(&from_rows(sigma)?, omega_a, omega_b))
}

/// Bath coefficients at time `t`, or their Markovian limit when `t` is None.
#[pyfunction]
#[pyo3(signature = (omega2, coupling, gamma, cutoff, kT, t = None, omega1 = 1.0))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn coefficients<'py>(
    py: Python<'py>,
    omega2: f64,
    coupling: f64,
    gamma: f64,
    cutoff: f64,
    kT: f64,
    t: Option<f64>,
    omega1: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = SystemParams {
        omega1,
        omega2,
        lambda: coupling,
    }
    .validate()
    .map_err(config_err)?;
    let b = BathParams::new(gamma, cutoff, kT).map_err(config_err)?;
    let m = normal_modes(&p);
    let c = match t {
        Some(t) => coeffs_nonmarkovian(t, &m, &b),
        None => coeffs_markovian(&m, &b),
    }
    .map_err(|e| scan_err(e.into()))?;
    coeff_dict(py, &c)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    scan::presets::names()
}

/// TOML text of a checked-in preset.
#[pyfunction]
fn preset_toml(name: &str) -> PyResult<String> {
    Ok(ExperimentConfig::preset(name).map_err(scan_err)?.to_toml())
}

/// Time series for a point configuration, or one per entry of `points`.
#[pyfunction]
fn run<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = parse(config_toml)?;
    let runs = py.detach(|| scan::run_curves(&cfg)).map_err(scan_err)?;
    runs.iter().map(|r| run_dict(py, r)).collect()
}

/// Death-time scan over the configured grid.
#[pyfunction]
fn scan_grid<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse(config_toml)?;
    let out = py.detach(|| scan::run_scan(&cfg)).map_err(scan_err)?;
    let d = PyDict::new(py);
    d.set_item("axes", out.axes.iter().map(|a| a.column()).collect::<Vec<_>>())?;
    d.set_item("shape", out.shape.clone())?;
    d.set_item("coords", out.records.iter().map(|r| r.coords.clone()).collect::<Vec<_>>())?;
    d.set_item(
        "status",
        out.records
            .iter()
            .map(|r| match r.status {
                PointStatus::Ok => "ok",
                PointStatus::Skipped => "skipped",
                PointStatus::Failed => "failed",
            })
            .collect::<Vec<_>>(),
    )?;
    d.set_item(
        "t_F",
        out.records
            .iter()
            .map(|r| r.death_time.map(|x| x.value()).unwrap_or(f64::NAN))
            .collect::<Vec<_>>(),
    )?;
    d.set_item(
        "censored",
        out.records
            .iter()
            .map(|r| r.death_time.is_some_and(|x| x.is_censored()))
            .collect::<Vec<_>>(),
    )?;
    d.set_item(
        "peak_E_N",
        out.records
            .iter()
            .map(|r| r.peak_log_negativity.unwrap_or(f64::NAN))
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Markovian against non-Markovian evolution of one point.
#[pyfunction]
fn compare<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse(config_toml)?;
    let c = py.detach(|| scan::run_compare(&cfg)).map_err(scan_err)?;
    let d = PyDict::new(py);
    d.set_item("markovian", run_dict(py, &c.markovian)?)?;
    d.set_item("non_markovian", run_dict(py, &c.non_markovian)?)?;
    d.set_item("delta_t_F", c.delta_death_time())?;
    d.set_item("relative_delta_t_F", c.relative_delta_death_time())?;
    d.set_item("peak_ratio", c.peak_ratio())?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "twinosc")]
pub fn twinosc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", scan::TOOL_VERSION)?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(tms_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(log_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(twin_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_toml, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(scan_grid, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
