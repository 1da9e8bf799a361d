//! Python bindings: model builders, diagonalization, correlator series, scans and fits.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use otoc_core::analysis::{self, CouplingGrid, OrderState, PowerLawFit};
use otoc_core::correlators::{self, CorrelatorKind, TimeGrid};
use otoc_core::dynamics::ground_state;
use otoc_core::{prepare_frame, Complex64, ComplexMatrix, HermitianOperator, ModelKind, ModelSpec};

fn err(e: otoc_core::Error) -> PyErr {
    match e.root() {
        otoc_core::Error::Parameter(_) | otoc_core::Error::Shape(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn spec(model: &str, eta: f64, n: usize, atoms: usize) -> PyResult<ModelSpec> {
    let kind: ModelKind = model.parse().map_err(err)?;
    match kind {
        ModelKind::Rabi if atoms != 1 => Err(PyValueError::new_err("the Rabi model has a single atom")),
        ModelKind::Rabi => ModelSpec::rabi(eta, n).map_err(err),
        ModelKind::Dicke => ModelSpec::dicke(eta, n, atoms).map_err(err),
    }
}

fn kind(name: &str, beta: f64) -> PyResult<CorrelatorKind> {
    match name {
        "otoc-inf" => Ok(CorrelatorKind::OtocInfTemp),
        "otoc-thermal" => Ok(CorrelatorKind::OtocThermal { beta }),
        "otoc-eq" => Ok(CorrelatorKind::OtocEquilibrium),
        "tpc" => Ok(CorrelatorKind::TpcInfTemp),
        _ => Err(PyValueError::new_err(format!("unknown kind '{name}'"))),
    }
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.entries().chunks(m.cols()).map(|r| r.to_vec()).collect()
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    ComplexMatrix::new(n, cols, rows.into_iter().flatten().collect()).map_err(err)
}

#[pyfunction]
fn critical_coupling(omega0: f64, omega: f64) -> f64 {
    otoc_core::models::critical_coupling(omega0, omega)
}

/// Hamiltonian at `g = ratio · g_c` as nested rows of complex numbers.
#[pyfunction]
#[pyo3(signature = (model, eta, n, ratio, atoms = 1))]
fn hamiltonian(model: &str, eta: f64, n: usize, ratio: f64, atoms: usize) -> PyResult<Vec<Vec<Complex64>>> {
    let h = spec(model, eta, n, atoms)?.hamiltonian_at_ratio(ratio).map_err(err)?;
    Ok(rows(h.matrix()))
}

/// Eigenvalues ascending and eigenvectors as columns.
#[pyfunction]
fn eigh(matrix_rows: Vec<Vec<Complex64>>) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let h = HermitianOperator::new(matrix(matrix_rows)?).map_err(err)?;
    let s = h.eigh().map_err(err)?;
    Ok((s.eigenvalues().to_vec(), rows(s.eigenvectors())))
}

/// Correlator samples `(times, values)` at one coupling ratio.
#[pyfunction]
#[pyo3(signature = (model, eta, n, ratio, kind_name = "otoc-inf", atoms = 1, beta = 0.0, t_end = 500.0, dt = 0.1, normalize = true))]
#[allow(clippy::too_many_arguments)]
fn otoc_series(
    model: &str,
    eta: f64,
    n: usize,
    ratio: f64,
    kind_name: &str,
    atoms: usize,
    beta: f64,
    t_end: f64,
    dt: f64,
    normalize: bool,
) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
    let s = spec(model, eta, n, atoms)?;
    let time = TimeGrid::new(0.0, t_end, dt).map_err(err)?;
    let w = s.number_operator();
    let frame = prepare_frame(&s.hamiltonian_at_ratio(ratio).map_err(err)?, &w, &w).map_err(err)?;
    let series = match kind(kind_name, beta)? {
        CorrelatorKind::OtocInfTemp => correlators::otoc_infinite_temperature(&frame, &time, normalize),
        CorrelatorKind::OtocThermal { beta } => frame
            .thermal_weights(beta)
            .and_then(|w| correlators::otoc_thermal(&frame, &w, &time, normalize)),
        CorrelatorKind::OtocEquilibrium => {
            correlators::otoc_equilibrium(&frame, &ground_state(frame.spectral()), &time, normalize)
        }
        CorrelatorKind::TpcInfTemp => correlators::tpc_infinite_temperature(&frame, &time, normalize),
    }
    .map_err(err)?;
    Ok((time.times(), series.values))
}

/// Time-averaged correlator over a list of coupling ratios.
#[pyfunction]
#[pyo3(signature = (model, eta, n, ratios, kind_name = "otoc-inf", atoms = 1, beta = 0.0, t_end = 500.0, dt = 0.1))]
#[allow(clippy::too_many_arguments)]
fn scan(
    py: Python<'_>,
    model: &str,
    eta: f64,
    n: usize,
    ratios: Vec<f64>,
    kind_name: &str,
    atoms: usize,
    beta: f64,
    t_end: f64,
    dt: f64,
) -> PyResult<Vec<f64>> {
    let s = spec(model, eta, n, atoms)?;
    let grid = CouplingGrid::new(ratios).map_err(err)?;
    let time = TimeGrid::new(0.0, t_end, dt).map_err(err)?;
    let k = kind(kind_name, beta)?;
    let result = py
        .allow_threads(|| analysis::scan_otoc(&s, &grid, k, &time))
        .map_err(err)?;
    Ok(result.values)
}

/// `⟨a†a⟩` over a list of ratios; `beta = None` means the ground state.
#[pyfunction]
#[pyo3(signature = (model, eta, n, ratios, atoms = 1, beta = None, rescale = false))]
#[allow(clippy::too_many_arguments)]
fn order_parameter_scan(
    py: Python<'_>,
    model: &str,
    eta: f64,
    n: usize,
    ratios: Vec<f64>,
    atoms: usize,
    beta: Option<f64>,
    rescale: bool,
) -> PyResult<Vec<f64>> {
    let s = spec(model, eta, n, atoms)?;
    let grid = CouplingGrid::new(ratios).map_err(err)?;
    let state = beta.map_or(OrderState::Ground, |beta| OrderState::Thermal { beta });
    let result = py
        .allow_threads(|| analysis::scan_order_parameter(&s, &grid, state, rescale))
        .map_err(err)?;
    Ok(result.values)
}

fn power_law<'py>(py: Python<'py>, f: PowerLawFit) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("slope", f.slope)?;
    d.set_item("intercept", f.intercept)?;
    d.set_item("r_squared", f.r_squared)?;
    d.set_item("exponent", f.exponent())?;
    d.set_item("points", f.points)?;
    Ok(d)
}

/// Fits `log2(r - 1)` against `log2(eta)` from `(eta, r)` pairs.
#[pyfunction]
fn fit_scaling_eta(py: Python<'_>, points: Vec<(f64, f64)>) -> PyResult<Bound<'_, PyDict>> {
    power_law(py, analysis::fit_scaling_eta(&points).map_err(err)?)
}

#[pyfunction]
fn fit_scaling_gamma(py: Python<'_>, points: Vec<(f64, f64)>) -> PyResult<Bound<'_, PyDict>> {
    power_law(py, analysis::fit_scaling_gamma(&points).map_err(err)?)
}

/// `y = a N^-b + c` from `(N, y)` pairs; returns `(a, b, c, residual)`.
#[pyfunction]
fn fit_size_law(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64, f64)> {
    let f = analysis::fit_size_law(&points).map_err(err)?;
    Ok((f.a, f.b, f.c, f.residual))
}

#[pymodule]
fn otoc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(critical_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(eigh, m)?)?;
    m.add_function(wrap_pyfunction!(otoc_series, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(order_parameter_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling_eta, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(fit_size_law, m)?)?;
    Ok(())
}
