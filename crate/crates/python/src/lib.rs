//! Python bindings. Structured results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use oscbc::boundary_map::{self, golden_angles, uniform_angles};
use oscbc::cell::{default_translates, estimate_mu, CellConfig, CellSetup};
use oscbc::discrepancy::{self, Direction, UnitSequence};
use oscbc::expr::Expr;
use oscbc::lattice::{self, Hyperplane};
use oscbc::singular::{compute_singular, Extremal};
use oscbc::{spec, verify};

fn to_py(e: oscbc::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Converts any serializable value through JSON into Python objects.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn direction(nu: Vec<f64>) -> PyResult<Direction> {
    Direction::new(&nu).map_err(to_py)
}

fn expr(s: &str) -> PyResult<Expr> {
    s.parse::<Expr>().map_err(to_py)
}

fn cell_config(depth: f64, h: f64, translates: usize, richardson: bool) -> CellConfig {
    CellConfig {
        depth,
        h,
        translates,
        richardson,
        ..CellConfig::default()
    }
}

/// Star discrepancy of points in [0, 1).
#[pyfunction]
fn discrepancy_star(points: Vec<f64>) -> PyResult<f64> {
    Ok(discrepancy::discrepancy_star(
        &UnitSequence::new(points).map_err(to_py)?,
    ))
}

/// Extreme discrepancy of points in [0, 1).
#[pyfunction]
fn discrepancy_extreme(points: Vec<f64>) -> PyResult<f64> {
    Ok(discrepancy::discrepancy(
        &UnitSequence::new(points).map_err(to_py)?,
    ))
}

/// Discrepancy of frac(j x) for j = 1..n.
#[pyfunction]
fn rotation_discrepancy(x: f64, n: usize) -> f64 {
    discrepancy::rotation_discrepancy(x, n)
}

/// Equidistribution modulus of a direction at scale n.
#[pyfunction]
fn omega(nu: Vec<f64>, n: f64) -> PyResult<f64> {
    discrepancy::omega(&direction(nu)?, n).map_err(to_py)
}

/// Rational or irrational classification with denominators up to q_max.
#[pyfunction]
#[pyo3(signature = (nu, q_max = 50))]
fn classify<'py>(py: Python<'py>, nu: Vec<f64>, q_max: u64) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &discrepancy::classify_rationality(&nu, q_max))
}

/// Lattice point within distance n of x near the hyperplane through x0 orthogonal to nu.
#[pyfunction]
fn approach_point<'py>(
    py: Python<'py>,
    nu: Vec<f64>,
    x0: Vec<f64>,
    x: Vec<f64>,
    n: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let h = Hyperplane::new(direction(nu)?, x0).map_err(to_py)?;
    to_object(py, &lattice::approach_point(&h, &x, n).map_err(to_py)?)
}

/// Homogeneity exponent and profile of the singular solution in a cone.
#[pyfunction]
#[pyo3(signature = (lambda_ = 1.0, big_lambda = 2.0, gamma = 1.0, tol = 1e-8, extremal = "maximal"))]
fn compute_beta0<'py>(
    py: Python<'py>,
    lambda_: f64,
    big_lambda: f64,
    gamma: f64,
    tol: f64,
    extremal: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let which = match extremal {
        "maximal" => Extremal::Maximal,
        "minimal" => Extremal::Minimal,
        other => {
            return Err(PyValueError::new_err(format!(
                "extremal must be maximal or minimal, got {other:?}"
            )))
        }
    };
    to_object(
        py,
        &compute_singular(lambda_, big_lambda, gamma, tol, which).map_err(to_py)?,
    )
}

/// Homogenized boundary value of psi in direction nu.
#[pyfunction]
#[pyo3(signature = (psi, nu, operator = "laplacian", depth = 8.0, h = 1.0 / 64.0, translates = 8, richardson = true))]
#[allow(clippy::too_many_arguments)]
fn cell_average<'py>(
    py: Python<'py>,
    psi: &str,
    nu: Vec<f64>,
    operator: &str,
    depth: f64,
    h: f64,
    translates: usize,
    richardson: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let nu = direction(nu)?;
    let op = spec::operator(operator, Some(nu.as_2d())).map_err(to_py)?;
    let psi = expr(psi)?;
    let cfg = cell_config(depth, h, translates, richardson);
    let avg = py
        .detach(|| {
            let setup = CellSetup::new(psi, op, nu.clone(), &cfg)?;
            estimate_mu(&setup, &default_translates(&nu, cfg.translates), &cfg)
        })
        .map_err(to_py)?;
    to_object(py, &avg)
}

/// Boundary table over uniform and golden-ratio angles.
#[pyfunction]
#[pyo3(signature = (psi, operator = "laplacian", uniform = 16, offset = 0.05, golden = 0, center = 0.0, spread = 0.02, depth = 8.0, h = 1.0 / 64.0, translates = 8, richardson = true))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    psi: &str,
    operator: &str,
    uniform: usize,
    offset: f64,
    golden: usize,
    center: f64,
    spread: f64,
    depth: f64,
    h: f64,
    translates: usize,
    richardson: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let psi = expr(psi)?;
    let op = spec::operator(operator, None).map_err(to_py)?;
    let mut angles = uniform_angles(uniform, offset);
    angles.extend(golden_angles(center, spread, golden));
    let cfg = cell_config(depth, h, translates, richardson);
    let table = py
        .detach(|| boundary_map::sweep(&psi, &op, &angles, &cfg))
        .map_err(to_py)?;
    to_object(py, &table)
}

/// Fast invariant suite.
#[pyfunction]
#[pyo3(signature = (seed = 7))]
fn run_verify<'py>(py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| verify::run_suite(seed));
    to_object(py, &report)
}

/// Parses boundary data and returns its canonical text.
#[pyfunction]
fn parse_expr(s: &str) -> PyResult<String> {
    Ok(expr(s)?.to_string())
}

/// Evaluates boundary data at slow variable x and fast variable y.
#[pyfunction]
fn eval_expr(s: &str, x: [f64; 2], y: [f64; 2]) -> PyResult<f64> {
    Ok(expr(s)?.eval(x, y))
}

#[pymodule]
fn pyoscbc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(discrepancy_star, m)?)?;
    m.add_function(wrap_pyfunction!(discrepancy_extreme, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(approach_point, m)?)?;
    m.add_function(wrap_pyfunction!(compute_beta0, m)?)?;
    m.add_function(wrap_pyfunction!(cell_average, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add_function(wrap_pyfunction!(parse_expr, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    Ok(())
}
