//! Python module `qds`: models, resolvent diagnostics and certificates.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use qds_core::bounds::{lemma41_constants, lemma41_exponent, verify_relative_bound};
use qds_core::criteria::{check_assumption_c, check_cf, check_phi_domination, default_eps_grid, default_p_candidates, fit_constants};
use qds_core::models::{damped_oscillator, heavy_ion, quadratic_pump, HeavyIonParams, ModelSpec};
use qds_core::semigroup::{evolve_heisenberg, leakage_curve, resolvent_series, ResolventEngine};
use qds_core::{CMat, GridBasis, LindbladModel, Mode, StateSelector, C64};
use serde::Serialize;

fn err(e: qds_core::Error) -> PyErr {
    match e {
        qds_core::Error::Numeric(_) | qds_core::Error::Conditioning(_) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Serialize through JSON so reports arrive as plain dicts.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn mode(name: &str) -> PyResult<Mode> {
    match name {
        "absorbing" => Ok(Mode::Absorbing),
        "exact" => Ok(Mode::Exact),
        other => Err(PyValueError::new_err(format!("mode must be 'absorbing' or 'exact', got {other:?}"))),
    }
}

fn rows(a: &CMat) -> Vec<Vec<C64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// A basis index or a list of real amplitudes.
#[derive(FromPyObject)]
enum State {
    Index(usize),
    Amplitudes(Vec<f64>),
}

impl State {
    fn selector(self) -> StateSelector {
        match self {
            State::Index(i) => StateSelector::Index(i),
            State::Amplitudes(re) => StateSelector::Vector { re, im: None },
        }
    }
}

#[pyclass(name = "Model", module = "qds", frozen)]
pub struct PyModel {
    spec: Option<ModelSpec>,
    model: LindbladModel,
    c: Option<CMat>,
}

impl PyModel {
    fn from_spec(spec: ModelSpec) -> PyResult<Self> {
        let built = spec.build().map_err(err)?;
        Ok(Self {
            spec: Some(spec),
            model: built.model,
            c: built.c,
        })
    }

    fn c_op(&self) -> PyResult<&CMat> {
        self.c
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("this model has no certificate operator C"))
    }

    fn buffer(&self) -> usize {
        self.model.basis().buffer()
    }
}

#[pymethods]
impl PyModel {
    /// Build from the JSON model description used by the command line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::from_spec(spec)
    }

    #[staticmethod]
    #[pyo3(signature = (w, alpha, nu, n, b1 = 1.0, buffer = None, mode = "absorbing"))]
    fn heavy_ion(w: f64, alpha: f64, nu: f64, n: usize, b1: f64, buffer: Option<usize>, mode: &str) -> PyResult<Self> {
        let m = self::mode(mode)?;
        let hi = heavy_ion(HeavyIonParams { w, alpha, nu, b1 }, n, buffer, m).map_err(err)?;
        Ok(Self {
            spec: Some(ModelSpec::HeavyIon { w, alpha, nu, b1, n, buffer, mode: m }),
            model: hi.model,
            c: Some(hi.c),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma, n, omega = 0.0, buffer = None, mode = "absorbing"))]
    fn damped_oscillator(gamma: f64, n: usize, omega: f64, buffer: Option<usize>, mode: &str) -> PyResult<Self> {
        let m = self::mode(mode)?;
        let (model, c) = damped_oscillator(gamma, omega, n, buffer, m).map_err(err)?;
        Ok(Self {
            spec: Some(ModelSpec::DampedOscillator { gamma, omega, n, buffer, mode: m }),
            model,
            c: Some(c),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, buffer = None, mode = "absorbing"))]
    fn quadratic_pump(n: usize, buffer: Option<usize>, mode: &str) -> PyResult<Self> {
        let m = self::mode(mode)?;
        Ok(Self {
            spec: Some(ModelSpec::QuadraticPump { n, buffer, mode: m }),
            model: quadratic_pump(n, buffer, m).map_err(err)?,
            c: None,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        let spec = self.spec.as_ref().ok_or_else(|| PyValueError::new_err("model has no description"))?;
        serde_json::to_string(spec).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.model.dim()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.model.mode() {
            Mode::Absorbing => "absorbing",
            Mode::Exact => "exact",
        }
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.model.fingerprint()
    }

    fn hamiltonian(&self) -> Vec<Vec<C64>> {
        rows(self.model.h())
    }

    fn g(&self) -> Vec<Vec<C64>> {
        rows(self.model.g())
    }

    fn loss(&self) -> Vec<Vec<C64>> {
        rows(self.model.m())
    }

    fn certificate_operator(&self) -> PyResult<Vec<Vec<C64>>> {
        Ok(rows(self.c_op()?))
    }

    /// `T_t(I)` in the Heisenberg picture.
    fn evolve_identity(&self, t: f64) -> PyResult<Vec<Vec<C64>>> {
        let id = CMat::identity(self.model.dim(), self.model.dim());
        Ok(rows(&evolve_heisenberg(&self.model, &id, t).map_err(err)?))
    }

    #[pyo3(signature = (times, u = State::Index(0)))]
    fn leakage(&self, times: Vec<f64>, u: State) -> PyResult<Vec<f64>> {
        let state = u.selector().resolve(self.model.dim()).map_err(err)?;
        leakage_curve(&self.model, &state, &times).map_err(err)
    }

    /// `1 − λ⟨u, R_λ(I) u⟩`.
    #[pyo3(signature = (lam, u = State::Index(0)))]
    fn deficiency(&self, lam: f64, u: State) -> PyResult<f64> {
        let state = u.selector().resolve(self.model.dim()).map_err(err)?;
        let id = CMat::identity(self.model.dim(), self.model.dim());
        let series = resolvent_series(&self.model, &id, lam, 1.0, &state).map_err(err)?;
        Ok(1.0 - lam * series.value)
    }

    /// `k ↦ ⟨u, Q_λᵏ(I) u⟩` together with the weighted partial sums.
    #[pyo3(signature = (lam, u = State::Index(0), x = 1.0, k_max = 200))]
    fn q_power_trace<'py>(&self, py: Python<'py>, lam: f64, u: State, x: f64, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
        let sel = u.selector();
        let state = sel.resolve(self.model.dim()).map_err(err)?;
        let engine = ResolventEngine::new(&self.model).map_err(err)?;
        let trace = engine.q_power_trace(lam, &state, x, k_max, &sel.label()).map_err(err)?;
        to_py(py, &trace)
    }

    fn check_cf<'py>(&self, py: Python<'py>, b: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_cf(&self.model, self.c_op()?, b, self.buffer(), None).map_err(err)?)
    }

    #[pyo3(signature = (a, b, p, eps_grid = None))]
    fn check_assumption_c<'py>(&self, py: Python<'py>, a: f64, b: f64, p: f64, eps_grid: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        let eps = eps_grid.unwrap_or_else(default_eps_grid);
        let cert = check_assumption_c(&self.model, self.c_op()?, a, b, p, &eps, self.buffer(), None).map_err(err)?;
        to_py(py, &cert)
    }

    #[pyo3(signature = (delta = 1.0))]
    fn check_phi_domination<'py>(&self, py: Python<'py>, delta: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_phi_domination(&self.model, self.c_op()?, delta, None).map_err(err)?)
    }

    #[pyo3(signature = (eps_grid = None, p_candidates = None))]
    fn fit_constants<'py>(&self, py: Python<'py>, eps_grid: Option<Vec<f64>>, p_candidates: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        let eps = eps_grid.unwrap_or_else(default_eps_grid);
        let ps = p_candidates.unwrap_or_else(default_p_candidates);
        to_py(py, &fit_constants(&self.model, self.c_op()?, &eps, &ps, self.buffer(), None).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        match &self.spec {
            Some(spec) => format!("Model({})", serde_json::to_string(spec).unwrap_or_default()),
            None => format!("Model(dim={})", self.model.dim()),
        }
    }
}

/// Ladder verdict over models of ascending size.
#[pyfunction]
#[pyo3(signature = (models, lam, u = State::Index(0), theta = 1e-3))]
fn verdict<'py>(py: Python<'py>, models: Vec<PyRef<'py, PyModel>>, lam: f64, u: State, theta: f64) -> PyResult<Bound<'py, PyAny>> {
    let ladder: Vec<LindbladModel> = models.iter().map(|m| m.model.clone()).collect();
    let report = qds_core::criteria::verdict(&ladder, lam, &u.selector(), theta).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn relative_bound_exponent(n: usize, alpha: f64) -> PyResult<f64> {
    lemma41_exponent(n, alpha).map_err(err)
}

/// Relative-bound certificate for samples `w` on a periodic grid. Without
/// `a` and `p` the constants come from the Fourier chain.
#[pyfunction]
#[pyo3(signature = (w, points, half_length, eps_grid, n = 1, alpha = 0.0, a = None, p = None))]
#[allow(clippy::too_many_arguments)]
fn relative_bound<'py>(
    py: Python<'py>,
    w: Vec<f64>,
    points: usize,
    half_length: f64,
    eps_grid: Vec<f64>,
    n: usize,
    alpha: f64,
    a: Option<f64>,
    p: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = GridBasis::new(points, half_length, n).map_err(err)?;
    let cert = match (a, p) {
        (Some(a), Some(p)) => verify_relative_bound(&w, &grid, &eps_grid, a, p, None).map_err(err)?,
        (None, None) => {
            let k = lemma41_constants(&w, n, alpha, &grid).map_err(err)?;
            verify_relative_bound(&w, &grid, &eps_grid, k.a, k.p, None)
                .map_err(err)?
                .with_constants(&k)
        }
        _ => return Err(PyValueError::new_err("give both a and p, or neither")),
    };
    to_py(py, &cert)
}

#[pymodule]
fn qds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    m.add_function(wrap_pyfunction!(relative_bound, m)?)?;
    m.add_function(wrap_pyfunction!(relative_bound_exponent, m)?)?;
    Ok(())
}
