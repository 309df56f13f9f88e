//! Python bindings for `msindex`: scenario runs returning the JSON report,
//! both routes to the ω-spectral index, the FEM Morse index, the Poincaré
//! map and splitting numbers of explicit matrices.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use msindex::error::Error;
use msindex::fem::omega_morse_index;
use msindex::index::{theorem_a_check, IndexConfig, IndexContext};
use msindex::linalg::CMatrix;
use msindex::model::{scenario, MorseSturmSystem, CATALOG};
use msindex::runner::{parse_analyses, parse_omegas, run, RunConfig, ScenarioSource};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::UnknownScenario(_) | Error::Domain(_) | Error::InvalidSystem(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn load(name: &str) -> PyResult<MorseSturmSystem> {
    scenario(name).map_err(to_py)
}

fn unit_omega(omega: Complex64) -> PyResult<Complex64> {
    if (omega.norm() - 1.0).abs() > 1e-9 {
        return Err(PyValueError::new_err(format!("omega {omega} is not on the unit circle")));
    }
    Ok(omega / omega.norm())
}

/// Names of the built-in scenarios.
#[pyfunction]
fn scenario_names() -> Vec<String> {
    CATALOG.iter().map(|s| s.to_string()).collect()
}

/// Runs the analyses on a built-in scenario and returns
/// `(report_json, violations)`.
#[pyfunction]
#[pyo3(signature = (scenario, analyses = "indices,stability", omegas = "1", max_m = 4, seed = 0))]
fn analyze(scenario: &str, analyses: &str, omegas: &str, max_m: usize, seed: u64) -> PyResult<(String, Vec<String>)> {
    let mut cfg = RunConfig::new(ScenarioSource::Builtin(scenario.to_string()), parse_analyses(analyses).map_err(to_py)?);
    cfg.omegas = parse_omegas(omegas).map_err(to_py)?;
    cfg.max_m = max_m;
    cfg.seed = seed;
    let out = run(&cfg).map_err(to_py)?;
    Ok((out.json(), out.violations))
}

/// `(i_geo, nullity, i_spec)` at `omega`, raising if the two routes disagree.
#[pyfunction]
fn spectral_index(scenario: &str, omega: Complex64) -> PyResult<(i64, usize, i64)> {
    let sys = load(scenario)?;
    let ctx = IndexContext::new(&sys, IndexConfig::default()).map_err(to_py)?;
    let r = theorem_a_check(&ctx, unit_omega(omega)?).map_err(to_py)?;
    match r.i_spec_spath {
        Some(v) if r.routes_agree => Ok((r.i_geo, r.nullity, v)),
        other => Err(PyRuntimeError::new_err(format!(
            "index routes disagree: spectral flow {other:?}, i_geo - nullity = {}",
            r.i_spec_thm_a
        ))),
    }
}

/// FEM ω-Morse index of a Riemannian scenario.
#[pyfunction]
fn morse_index(scenario: &str, omega: Complex64) -> PyResult<usize> {
    let sys = load(scenario)?;
    Ok(omega_morse_index(&sys, unit_omega(omega)?).map_err(to_py)?.index)
}

/// Linearized Poincaré map `A_d Ψ(T)` as a list of rows.
#[pyfunction]
fn poincare_map(scenario: &str) -> PyResult<Vec<Vec<f64>>> {
    let p = msindex::stability::poincare_map(&load(scenario)?).map_err(to_py)?;
    Ok((0..p.nrows()).map(|i| p.row(i).iter().cloned().collect()).collect())
}

/// `(S⁺, S⁻)` of a symplectic matrix given as rows at `omega`.
#[pyfunction]
fn splitting_numbers(rows: Vec<Vec<Complex64>>, omega: Complex64) -> PyResult<(i64, i64)> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    let m = CMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let s = msindex::stability::splitting_numbers(&m, unit_omega(omega)?).map_err(to_py)?;
    Ok((s.plus, s.minus))
}

#[pymodule]
fn msindex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_index, m)?)?;
    m.add_function(wrap_pyfunction!(morse_index, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_map, m)?)?;
    m.add_function(wrap_pyfunction!(splitting_numbers, m)?)?;
    Ok(())
}
