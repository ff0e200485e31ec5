//! Python bindings: `import hinfsyn`.

use hinfsyn_core::analysis::{self, DEFAULT_NORM_TOL};
use hinfsyn_core::synthesis::Status;
use hinfsyn_core::{
    bench, io, lft_closed_loop, pack, plant_subsystem, synthesize as core_synthesize, unpack, Channel, Controller,
    ControllerDims, Error, Plant, StateSpace, SynthesisOptions, SynthesisResult,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::DimensionMismatch { .. }
        | Error::NonFinite(_)
        | Error::LengthMismatch { .. }
        | Error::InvalidOption(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::UnstableSystem(_)
        | Error::IllPosed(_)
        | Error::NotStabilizing(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Plant", module = "hinfsyn", frozen)]
pub struct PyPlant {
    inner: Plant,
}

#[pymethods]
impl PyPlant {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_plant(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        io::plant_from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> String {
        io::plant_to_json(&self.inner)
    }

    /// `(n, m1, m2, p1, p2)`
    #[getter]
    fn dims(&self) -> (usize, usize, usize, usize, usize) {
        let d = self.inner.dims();
        (d.n, d.m1, d.m2, d.p1, d.p2)
    }

    fn __repr__(&self) -> String {
        let (n, m1, m2, p1, p2) = self.dims();
        format!("Plant(n={n}, m1={m1}, m2={m2}, p1={p1}, p2={p2})")
    }
}

#[pyclass(name = "Controller", module = "hinfsyn", frozen)]
pub struct PyController {
    inner: Controller,
}

#[pymethods]
impl PyController {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_controller(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        io::controller_from_json(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Builds a controller from its parameter vector (column-major AK, BK,
    /// CK, DK).
    #[staticmethod]
    fn from_params(params: Vec<f64>, order: usize, inputs: usize, outputs: usize) -> PyResult<Self> {
        unpack(&params, ControllerDims { order, inputs, outputs })
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> String {
        io::controller_to_json(&self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_controller(path, &self.inner).map_err(to_py)
    }

    fn params(&self) -> Vec<f64> {
        pack(&self.inner).0
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    /// `(order, inputs, outputs)`
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        let d = self.inner.dims();
        (d.order, d.inputs, d.outputs)
    }

    fn __repr__(&self) -> String {
        let (o, i, u) = self.dims();
        format!("Controller(order={o}, inputs={i}, outputs={u})")
    }
}

#[pyclass(name = "SynthesisResult", module = "hinfsyn", frozen)]
pub struct PySynthesisResult {
    inner: SynthesisResult,
}

#[pymethods]
impl PySynthesisResult {
    #[getter]
    fn best(&self) -> PyController {
        PyController {
            inner: self.inner.best.clone(),
        }
    }

    #[getter]
    fn best_norm(&self) -> f64 {
        self.inner.best_norm
    }

    #[getter]
    fn best_abscissa(&self) -> f64 {
        self.inner.best_abscissa
    }

    #[getter]
    fn omega_peak(&self) -> f64 {
        self.inner.omega_peak
    }

    #[getter]
    fn success(&self) -> bool {
        self.inner.status == Status::Success
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.per_run.iter().map(|r| r.seed).collect()
    }

    /// Final norm of each run, `inf` where stabilization failed.
    #[getter]
    fn run_norms(&self) -> Vec<f64> {
        self.inner.per_run.iter().map(|r| r.stage2_norm).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SynthesisResult(best_norm={:e}, success={})",
            self.inner.best_norm,
            self.success()
        )
    }
}

fn closed_or_open(plant: &Plant, controller: Option<&PyController>) -> PyResult<StateSpace> {
    match controller {
        Some(k) => lft_closed_loop(plant, &k.inner).map_err(to_py),
        None => Ok(plant_subsystem(plant, Channel::Exogenous, Channel::Exogenous)),
    }
}

/// H-infinity norm and peak frequency of the closed loop, or of the
/// performance channel when no controller is given. The frequency is `inf`
/// when the supremum is reached at infinity.
#[pyfunction]
#[pyo3(signature = (plant, controller=None, tol=DEFAULT_NORM_TOL))]
fn hinf_norm(plant: &PyPlant, controller: Option<PyRef<'_, PyController>>, tol: f64) -> PyResult<(f64, f64)> {
    let sys = closed_or_open(&plant.inner, controller.as_deref())?;
    let r = analysis::hinf_norm(&sys, tol).map_err(to_py)?;
    Ok((
        r.gamma,
        if r.attained_at_infinity {
            f64::INFINITY
        } else {
            r.omega_peak
        },
    ))
}

/// Spectral abscissa of the closed loop, or of the plant's A.
#[pyfunction]
#[pyo3(signature = (plant, controller=None))]
fn abscissa(plant: &PyPlant, controller: Option<PyRef<'_, PyController>>) -> PyResult<f64> {
    let a = match controller.as_deref() {
        Some(_) => closed_or_open(&plant.inner, controller.as_deref())?.a().to_owned(),
        None => plant.inner.a().to_owned(),
    };
    analysis::spectral_abscissa(a.as_ref()).map(|r| r.alpha).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (plant, order, runs=10, cpumax=300.0, seed=0, warm_start=None, max_iters=1000, parallel=true))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    py: Python<'_>,
    plant: &PyPlant,
    order: usize,
    runs: usize,
    cpumax: f64,
    seed: u64,
    warm_start: Option<PyRef<'_, PyController>>,
    max_iters: usize,
    parallel: bool,
) -> PyResult<PySynthesisResult> {
    let opts = SynthesisOptions {
        order,
        runs,
        cpumax_seconds: cpumax,
        rng_seed: seed,
        warm_start: warm_start.map(|k| k.inner.clone()),
        max_iters,
        parallel,
        ..Default::default()
    };
    let p = &plant.inner;
    let inner = py.detach(|| core_synthesize(p, &opts)).map_err(to_py)?;
    Ok(PySynthesisResult { inner })
}

/// Independent re-check: `(stable, abscissa, norm, agrees)`.
#[pyfunction]
fn recheck(plant: &PyPlant, controller: &PyController, reported_norm: f64) -> PyResult<(bool, f64, f64, bool)> {
    let r = bench::recheck(&plant.inner, &controller.inner, reported_norm).map_err(to_py)?;
    Ok((r.stable, r.abscissa, r.norm, r.agrees))
}

#[pymodule]
pub mod hinfsyn {
    #[pymodule_export]
    use super::{abscissa, hinf_norm, recheck, synthesize, PyController, PyPlant, PySynthesisResult};
}
