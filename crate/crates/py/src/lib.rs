//! Python bindings: model parameters, the four solvers, closed forms and the
//! configuration-driven runner.

use dynamo_core::analytic::{self, KondoParams};
use dynamo_core::energetics::{efficiencies, ledger_from_ed, ledger_from_traj, EnergyLedger, LEDGER_COLUMNS};
use dynamo_core::harness::compare::{compare as compare_series, Metric};
use dynamo_core::harness::config::ExperimentConfig;
use dynamo_core::harness::{run, Job, RunOptions};
use dynamo_core::model::{discretize_bath, Discretization};
use dynamo_core::{ed, gkls, niba, sse, Cutoff, DynamoError, ModeSet, Preparation, SpinTrajectory, TimeGrid};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

fn err(e: DynamoError) -> PyErr {
    match e {
        DynamoError::Integration(_) | DynamoError::Io(_) | DynamoError::Construction(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ModelParams", from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: dynamo_core::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (h=1.0, v=0.04, m=0.0, alpha=0.0, omega_c=100.0, cutoff="exponential", preparation="p1"))]
    fn new(h: f64, v: f64, m: f64, alpha: f64, omega_c: f64, cutoff: &str, preparation: &str) -> PyResult<Self> {
        let cutoff = match cutoff {
            "exponential" => Cutoff::Exponential,
            "hard" => Cutoff::Hard,
            _ => return Err(PyValueError::new_err(format!("unknown cutoff {cutoff:?}"))),
        };
        let preparation = match preparation {
            "p1" => Preparation::P1,
            "p2" => Preparation::P2,
            _ => return Err(PyValueError::new_err(format!("unknown preparation {preparation:?}"))),
        };
        let inner = dynamo_core::ModelParams { h, v, m, alpha, omega_c, cutoff, preparation };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }
    #[getter]
    fn v(&self) -> f64 {
        self.inner.v
    }
    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn omega_c(&self) -> f64 {
        self.inner.omega_c
    }

    fn omega_rabi(&self) -> f64 {
        self.inner.omega_rabi()
    }

    fn spectral_density(&self, omega: f64) -> PyResult<f64> {
        dynamo_core::model::spectral_density(omega, &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(h={}, v={}, m={}, alpha={}, omega_c={}, cutoff={:?}, preparation={:?})",
            p.h, p.v, p.m, p.alpha, p.omega_c, p.cutoff, p.preparation
        )
    }
}

fn grid(t_final: f64, n_steps: usize) -> PyResult<TimeGrid> {
    TimeGrid::new(0.0, t_final, n_steps).map_err(err)
}

fn put_traj<'py>(d: &Bound<'py, PyDict>, traj: &SpinTrajectory) -> PyResult<()> {
    d.set_item("t", traj.grid.times())?;
    d.set_item("sx", traj.sx.clone())?;
    d.set_item("sy", traj.sy.clone())?;
    d.set_item("sz", traj.sz.clone())?;
    d.set_item("sz_dot", traj.sz_dot.clone())?;
    Ok(())
}

fn put_ledger<'py>(d: &Bound<'py, PyDict>, ledger: &EnergyLedger) -> PyResult<()> {
    let ledger_dict = PyDict::new(d.py());
    for (name, col) in LEDGER_COLUMNS[1..].iter().zip(ledger.columns()) {
        ledger_dict.set_item(*name, col.to_vec())?;
    }
    d.set_item("ledger", ledger_dict)
}

/// Exact propagation with explicit modes given as (ω, g) pairs, or a
/// discretized Ohmic bath when `n_modes` is set. `max_total` caps the total
/// excitation number instead of the per-mode cutoff.
#[pyfunction]
#[pyo3(signature = (params, t_final, n_steps, modes=None, n_modes=None, omega_max=None, discretization="linear", n_max=None, max_total=None, tol=1e-9))]
#[allow(clippy::too_many_arguments)]
fn run_ed<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    t_final: f64,
    n_steps: usize,
    modes: Option<Vec<(f64, f64)>>,
    n_modes: Option<usize>,
    omega_max: Option<f64>,
    discretization: &str,
    n_max: Option<usize>,
    max_total: Option<usize>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let scheme = Discretization::parse(discretization)
        .ok_or_else(|| PyValueError::new_err(format!("unknown discretization {discretization:?}")))?;
    let ms = match (modes, n_modes) {
        (Some(list), None) => ModeSet::new(
            list.into_iter().map(|(omega, g)| dynamo_core::Mode { omega, g, delta_omega: 0.0 }).collect(),
        ),
        (None, Some(n)) => discretize_bath(&p, n, omega_max.unwrap_or(p.omega_c), scheme),
        _ => return Err(PyValueError::new_err("give exactly one of modes or n_modes")),
    }
    .map_err(err)?;
    let tr = match (max_total, n_max) {
        (Some(t), _) => ed::FockTruncation::total(ms.len(), t),
        (None, Some(n)) => ed::FockTruncation::uniform(ms.len(), n),
        (None, None) => ed::FockTruncation::admissible(&ms),
    };
    let g = grid(t_final, n_steps)?;
    let run = py.detach(|| ed::run(&p, &ms, &tr, &g, tol)).map_err(err)?;
    let d = PyDict::new(py);
    put_traj(&d, &run.traj)?;
    d.set_item("h", ed::measure_field(&run.record, &ms).h_total)?;
    d.set_item("n", run.record.n.clone())?;
    d.set_item("truncation_valid", run.audit.valid)?;
    d.set_item("norm_drift", run.norm_drift)?;
    put_ledger(&d, &ledger_from_ed(&run, &p, &ms))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, t_final, n_steps, n_traj=10_000, seed=0, fourier_modes=None))]
fn run_sse<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    t_final: f64,
    n_steps: usize,
    n_traj: usize,
    seed: u64,
    fourier_modes: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let g = grid(t_final, n_steps)?;
    let opts = sse::SseOptions { n_traj, seed, fourier_modes, use_q1_plateau: true };
    let res = py.detach(|| sse::average(&p, &g, &opts)).map_err(err)?;
    let d = PyDict::new(py);
    put_traj(&d, &res.traj)?;
    d.set_item("se_sz", res.se_sz.clone())?;
    d.set_item("n_flagged", res.n_flagged)?;
    d.set_item("fourier_modes", res.fourier_modes)?;
    put_ledger(&d, &ledger_from_traj(&res.traj, &p))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, t_final, n_steps, near_window=30.0))]
fn run_niba<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    t_final: f64,
    n_steps: usize,
    near_window: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid(t_final, n_steps)?;
    let opts = niba::NibaOptions { near_window, window_end: None };
    let r = py.detach(|| niba::solve_niba(&params.inner, &g, &opts)).map_err(err)?;
    let d = PyDict::new(py);
    put_traj(&d, &r.traj)?;
    d.set_item("in_window", r.in_window)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (params, t_final, n_steps, initial=(0.0, 0.0, 1.0), tol=1e-10))]
fn run_gkls<'py>(
    py: Python<'py>,
    params: &PyModelParams,
    t_final: f64,
    n_steps: usize,
    initial: (f64, f64, f64),
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let g = grid(t_final, n_steps)?;
    let rho = gkls::DensityMatrix2::from_bloch(initial.0, initial.1, initial.2).map_err(err)?;
    let r = gkls::propagate_gkls(&rho, &p, &g, tol).map_err(err)?;
    let d = PyDict::new(py);
    put_traj(&d, &r.traj)?;
    d.set_item("gamma_relax", r.rates.gamma_relax)?;
    d.set_item("gamma_deph", r.rates.gamma_deph)?;
    d.set_item("weak_coupling", r.rates.weak_coupling)?;
    let ledger = ledger_from_traj(&r.traj, &p);
    let last = ledger.grid.n_steps;
    let eff = efficiencies(&ledger, &p, last);
    d.set_item("eta", eff.eta)?;
    put_ledger(&d, &ledger)?;
    Ok(d)
}

/// Free-spin Bloch vector (sx, sy, sz) at time t.
#[pyfunction]
fn free_spin(t: f64, h: f64, v: f64) -> (f64, f64, f64) {
    analytic::free_spin(t, h, v)
}

/// Ground-state ⟨σx⟩ at tunneling element `delta` from the Kondo mapping.
#[pyfunction]
fn bethe_sx(delta: f64, alpha: f64, omega_c: f64) -> PyResult<f64> {
    analytic::bethe_sx(&KondoParams { delta, alpha, omega_c }).map_err(err)
}

/// (Ẇ∞, ΔE_dyn over a half period, η) of the stationary orbit.
#[pyfunction]
fn stationary_energetics(params: &PyModelParams) -> PyResult<(f64, f64, f64)> {
    let s = gkls::stationary_energetics(&params.inner).map_err(err)?;
    Ok((s.w_flow, s.de_dyn_half, s.eta_longtime))
}

/// metric: "max_abs", "rms" or "rel_at_marks" (with `marks`).
#[pyfunction]
#[pyo3(signature = (a, b, metric="max_abs", marks=None))]
fn compare(a: Vec<f64>, b: Vec<f64>, metric: &str, marks: Option<Vec<usize>>) -> PyResult<f64> {
    let m = match metric {
        "max_abs" => Metric::MaxAbs,
        "rms" => Metric::Rms,
        "rel_at_marks" => Metric::RelAtMarks(marks.unwrap_or_default()),
        _ => return Err(PyValueError::new_err(format!("unknown metric {metric:?}"))),
    };
    Ok(compare_series(&a, &b, &m).map_err(err)?.value)
}

/// Run a TOML configuration into `out`; returns the number of failed points.
#[pyfunction]
#[pyo3(signature = (config_text, out, workers=None))]
fn run_config(py: Python<'_>, config_text: &str, out: PathBuf, workers: Option<usize>) -> PyResult<usize> {
    let config = ExperimentConfig::from_toml(config_text).map_err(err)?;
    let name = config.label.clone().unwrap_or_else(|| config.solver.name().to_string());
    let opts = RunOptions { out: Some(out), workers, seed: None };
    let manifest = py.detach(|| run(&[Job { name, config }], &opts)).map_err(err)?;
    Ok(manifest.n_failed())
}

#[pymodule]
fn dynamo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_function(wrap_pyfunction!(run_ed, m)?)?;
    m.add_function(wrap_pyfunction!(run_sse, m)?)?;
    m.add_function(wrap_pyfunction!(run_niba, m)?)?;
    m.add_function(wrap_pyfunction!(run_gkls, m)?)?;
    m.add_function(wrap_pyfunction!(free_spin, m)?)?;
    m.add_function(wrap_pyfunction!(bethe_sx, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_energetics, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
