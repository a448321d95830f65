//! Python bindings. Images cross the boundary as nested lists of floats,
//! row-major, so the module has no numpy dependency.

use std::path::PathBuf;

use holoml::detector::{self, BeamstopMask};
use holoml::experiment::SolverKind;
use holoml::solvers::InitMode;
use holoml::{baselines, experiment, metrics, references, solvers};
use holoml::{HoloError, ImageGrid, Layout, Measurement, Phantom, Problem, ReferenceKind, SolverConfig};
use ndarray::Array2;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: HoloError) -> PyErr {
    match e {
        HoloError::Numeric(_) | HoloError::MetricUndefined(_) => PyArithmeticError::new_err(e.to_string()),
        HoloError::Io(_) | HoloError::Image(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_array(rows: Vec<Vec<f64>>) -> Result<Array2<f64>, HoloError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(HoloError::Parameter("rows have different lengths".into()));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((r, c), flat).map_err(|e| HoloError::Parameter(e.to_string()))
}

fn to_lists(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|row| row.to_vec()).collect()
}

fn parse<T: std::str::FromStr<Err = HoloError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

#[pyclass(name = "Measurement", module = "pyholoml", frozen)]
struct PyMeasurement {
    inner: Measurement,
}

#[pymethods]
impl PyMeasurement {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyMeasurement { inner: Measurement::load(path).map_err(py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    /// Detector shape `(m1, m2)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.noisy_intensity().dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.geometry().n
    }

    #[getter]
    fn gap(&self) -> usize {
        self.inner.geometry().gap
    }

    #[getter]
    fn oversampling(&self) -> (f64, f64) {
        let g = self.inner.geometry();
        (g.oversampling_x, g.oversampling_y)
    }

    /// `None` for noiseless data.
    #[getter]
    fn photon_flux(&self) -> Option<f64> {
        self.inner.photon_flux()
    }

    #[getter]
    fn mean_intensity(&self) -> f64 {
        self.inner.mean_intensity()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn reference(&self) -> String {
        self.inner.reference().to_string()
    }

    #[getter]
    fn occluded(&self) -> usize {
        self.inner.mask().occluded_count()
    }

    fn intensity(&self) -> Vec<Vec<f64>> {
        to_lists(self.inner.noisy_intensity())
    }

    fn __repr__(&self) -> String {
        let (m1, m2) = self.shape();
        format!(
            "Measurement(n={}, detector={m1}x{m2}, reference={}, photon_flux={:?})",
            self.n(),
            self.reference(),
            self.photon_flux()
        )
    }
}

#[pyclass(name = "Reconstruction", module = "pyholoml", frozen, get_all)]
struct PyReconstruction {
    image: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
    reason: String,
    objective: Vec<f64>,
    residual: Vec<f64>,
}

#[pymethods]
impl PyReconstruction {
    fn __repr__(&self) -> String {
        format!(
            "Reconstruction(iterations={}, converged={}, reason={})",
            self.iterations, self.converged, self.reason
        )
    }
}

fn layout(
    specimen: Vec<Vec<f64>>,
    reference: &str,
    gap: Option<usize>,
    oversampling: f64,
    oversampling_y: Option<f64>,
) -> PyResult<(Layout, ReferenceKind)> {
    let x = ImageGrid::new(to_array(specimen).map_err(py_err)?).map_err(py_err)?;
    let kind: ReferenceKind = parse(reference)?;
    let n = x.rows();
    let r = references::generate(kind, n).map_err(py_err)?;
    let lay = Layout::new(x, r, gap.unwrap_or(n), oversampling, oversampling_y.unwrap_or(oversampling))
        .map_err(py_err)?;
    Ok((lay, kind))
}

fn problem(m: &PyMeasurement) -> PyResult<Problem> {
    Problem::from_measurement(m.inner.clone()).map_err(py_err)
}

/// Binary `n x n` reference: none, block, ura, pinhole or pinhole:<radius>.
#[pyfunction]
fn reference(kind: &str, n: usize) -> PyResult<Vec<Vec<f64>>> {
    let kind: ReferenceKind = parse(kind)?;
    Ok(to_lists(references::generate(kind, n).map_err(py_err)?.values()))
}

/// Built-in phantom (disc, shepp-logan, cameraman) with values in [0, 1].
#[pyfunction]
fn phantom(name: &str, n: usize) -> PyResult<Vec<Vec<f64>>> {
    let p: Phantom = parse(name)?;
    Ok(to_lists(p.render(n).values()))
}

/// Field `F(X) + B` as `(real, imag)` nested lists.
#[pyfunction]
#[pyo3(signature = (specimen, reference = "ura", gap = None, oversampling = 2.0, oversampling_y = None))]
fn forward(
    specimen: Vec<Vec<f64>>,
    reference: &str,
    gap: Option<usize>,
    oversampling: f64,
    oversampling_y: Option<f64>,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (lay, _) = layout(specimen, reference, gap, oversampling, oversampling_y)?;
    let op = holoml::HoloOperator::from_layout(&lay).map_err(py_err)?;
    let u = op.field(lay.specimen().values()).map_err(py_err)?;
    Ok((to_lists(&u.values().mapv(|z| z.re)), to_lists(&u.values().mapv(|z| z.im))))
}

/// Simulated detector data; `photon_flux=None` gives noiseless intensities.
#[pyfunction]
#[pyo3(signature = (specimen, reference = "ura", gap = None, oversampling = 2.0, oversampling_y = None, beamstop = 0, photon_flux = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    specimen: Vec<Vec<f64>>,
    reference: &str,
    gap: Option<usize>,
    oversampling: f64,
    oversampling_y: Option<f64>,
    beamstop: usize,
    photon_flux: Option<f64>,
    seed: u64,
) -> PyResult<PyMeasurement> {
    let (lay, kind) = layout(specimen, reference, gap, oversampling, oversampling_y)?;
    let g = lay.geometry();
    let mask = BeamstopMask::from_block(beamstop, g.m1, g.m2).map_err(py_err)?;
    let inner = match photon_flux {
        Some(np) => detector::simulate(&lay, kind, mask, np, seed),
        None => detector::noiseless(&lay, kind, mask),
    }
    .map_err(py_err)?;
    Ok(PyMeasurement { inner })
}

/// Poisson negative log-likelihood of `image` under `measurement`.
#[pyfunction]
fn nll(measurement: &PyMeasurement, image: Vec<Vec<f64>>) -> PyResult<f64> {
    let x = to_array(image).map_err(py_err)?;
    problem(measurement)?.nll(&x).map_err(py_err)
}

#[pyfunction]
fn grad(measurement: &PyMeasurement, image: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let x = to_array(image).map_err(py_err)?;
    Ok(to_lists(&problem(measurement)?.grad(&x).map_err(py_err)?))
}

/// Runs `cg`, `admm`, `inverse` or `wiener` on a measurement.
#[pyfunction]
#[pyo3(signature = (measurement, solver = "cg", max_iters = 2000, grad_tol = 1e-7, rho = None, primal_tol = 1e-6, init = "zeros"))]
fn reconstruct(
    py: Python<'_>,
    measurement: &PyMeasurement,
    solver: &str,
    max_iters: usize,
    grad_tol: f64,
    rho: Option<f64>,
    primal_tol: f64,
    init: &str,
) -> PyResult<PyReconstruction> {
    let kind: SolverKind = parse(solver)?;
    let init_mode = match init {
        "zeros" => InitMode::Zeros,
        "wiener" => InitMode::WienerWarmStart,
        other => return Err(PyValueError::new_err(format!("unknown init mode {other:?}"))),
    };
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        max_iters,
        grad_tol,
        admm_rho: rho.unwrap_or(defaults.admm_rho),
        admm_primal_tol: primal_tol,
        init_mode,
        ..defaults
    };
    let p = problem(measurement)?;
    let r = py
        .detach(|| experiment::run_solver(kind, &p, &cfg, &baselines::FilterConfig::default()))
        .map_err(py_err)?;
    Ok(PyReconstruction {
        image: to_lists(&r.image),
        iterations: r.iterations(),
        converged: r.converged,
        reason: format!("{:?}", r.reason),
        objective: r.trace.iter().map(|t| t.objective).collect(),
        residual: r.trace.iter().map(|t| t.residual).collect(),
    })
}

/// `||mask (.) |F(X) + B|^2 - Y||_F / ||Y||_F`.
#[pyfunction]
fn data_error(image: Vec<Vec<f64>>, measurement: &PyMeasurement) -> PyResult<f64> {
    let x = to_array(image).map_err(py_err)?;
    metrics::data_relative_error(&x, &problem(measurement)?).map_err(py_err)
}

/// `||X - X_true||_F / ||X_true||_F`.
#[pyfunction]
fn truth_error(image: Vec<Vec<f64>>, truth: Vec<Vec<f64>>) -> PyResult<f64> {
    let x = to_array(image).map_err(py_err)?;
    let t = to_array(truth).map_err(py_err)?;
    metrics::truth_relative_error(&x, &t).map_err(py_err)
}

/// Closed-form ADMM magnitude update.
#[pyfunction]
fn prox_magnitude(c_abs: f64, y: f64, rho: f64) -> f64 {
    solvers::prox_magnitude(c_abs, y, rho)
}

#[pymodule]
fn pyholoml(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasurement>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_function(wrap_pyfunction!(reference, m)?)?;
    m.add_function(wrap_pyfunction!(phantom, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(nll, m)?)?;
    m.add_function(wrap_pyfunction!(grad, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(data_error, m)?)?;
    m.add_function(wrap_pyfunction!(truth_error, m)?)?;
    m.add_function(wrap_pyfunction!(prox_magnitude, m)?)?;
    Ok(())
}
