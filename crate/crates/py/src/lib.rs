//! Python bindings for the oscillator toolkit: the linear and pendulum
//! models, exact/LL/EM path simulation and the trajectory statistics.

use ndarray::{Array1, Array2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stochosc::analysis;
use stochosc::integrators;
use stochosc::linalg::SymMatrix;
use stochosc::models;
use stochosc::rng::PathStream;
use stochosc::sampler;
use stochosc::trajectory::{Provenance, SchemeLabel, TrajectoryGrid};

fn err(e: stochosc::CoreError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_array2(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Array2<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err(format!(
            "{what} must be a nonempty rectangular list of rows"
        )));
    }
    Array2::from_shape_vec((r, c), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn grid_to_py(traj: &TrajectoryGrid) -> (Vec<f64>, Vec<Vec<f64>>) {
    let states = traj
        .states()
        .rows()
        .into_iter()
        .map(|row| row.to_vec())
        .collect();
    (traj.times().to_vec(), states)
}

fn grid_from_py(times: Vec<f64>, states: Vec<Vec<f64>>) -> PyResult<TrajectoryGrid> {
    let matrix = to_array2(states, "states")?;
    TrajectoryGrid::new(
        times,
        matrix,
        Provenance {
            root_seed: 0,
            stream_id: 0,
            scheme: SchemeLabel::Exact,
        },
    )
    .map_err(err)
}

/// Linear coupled oscillator dx = y dt, dy = -Lambda^2 x dt + Pi dw.
#[pyclass]
struct LinearOscillator {
    spec: models::CoupledOscillatorSpec,
}

#[pymethods]
impl LinearOscillator {
    #[new]
    #[pyo3(signature = (lambda_matrix, pi, x0, y0, t0 = 0.0))]
    fn new(
        lambda_matrix: Vec<Vec<f64>>,
        pi: Vec<Vec<f64>>,
        x0: Vec<f64>,
        y0: Vec<f64>,
        t0: f64,
    ) -> PyResult<Self> {
        let lambda = SymMatrix::new(to_array2(lambda_matrix, "lambda_matrix")?).map_err(err)?;
        let spec = models::CoupledOscillatorSpec::new(
            lambda,
            to_array2(pi, "pi")?,
            Array1::from(x0),
            Array1::from(y0),
            t0,
        )
        .map_err(err)?;
        Ok(Self { spec })
    }

    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn noise_dim(&self) -> usize {
        self.spec.noise_dim()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.spec.decomposition().eigenvalues().to_vec()
    }

    /// Stepsize threshold pi / |lambda|_max below which every component of
    /// the LL iterate keeps switching signs.
    fn stepsize_threshold(&self) -> f64 {
        integrators::stepsize_threshold(&self.spec)
    }

    /// One-step exact transition law: (mean_map, covariance), both 2d x 2d.
    fn transition_kernel(&self, delta: f64) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let kernel = sampler::transition_kernel(&self.spec, delta).map_err(err)?;
        let dump = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        Ok((dump(&kernel.mean_map), dump(&kernel.covariance)))
    }

    /// Exact path on the uniform grid; returns (times, states).
    #[pyo3(signature = (delta, steps, seed, stream = 0))]
    fn sample_exact(
        &self,
        delta: f64,
        steps: usize,
        seed: u64,
        stream: u64,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut rng = PathStream::new(seed, stream);
        let traj = sampler::sample_exact_path(&self.spec, delta, steps, &mut rng).map_err(err)?;
        Ok(grid_to_py(&traj))
    }

    /// Locally linearized path; returns (times, states, threshold_ok).
    #[pyo3(signature = (h, steps, seed, stream = 0))]
    fn ll_integrate(
        &self,
        h: f64,
        steps: usize,
        seed: u64,
        stream: u64,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, bool)> {
        let mut rng = PathStream::new(seed, stream);
        let traj = integrators::ll_integrate(&self.spec, h, steps, &mut rng, None).map_err(err)?;
        let ok = matches!(
            traj.provenance().scheme,
            SchemeLabel::LocallyLinearized { threshold_ok: true }
        );
        let (times, states) = grid_to_py(&traj);
        Ok((times, states, ok))
    }

    /// Euler-Maruyama baseline on the same model.
    #[pyo3(signature = (h, steps, seed, stream = 0))]
    fn em_integrate(
        &self,
        h: f64,
        steps: usize,
        seed: u64,
        stream: u64,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut rng = PathStream::new(seed, stream);
        let traj =
            integrators::em_integrate(&self.spec.to_drift_spec(), h, steps, &mut rng).map_err(err)?;
        Ok(grid_to_py(&traj))
    }

    /// Deterministic part D_i(t) of position component i (0-based).
    fn deterministic_part(&self, component: usize, t: f64) -> f64 {
        sampler::deterministic_part(&self.spec, component, t)
    }

    /// Limit of s_n^2 / n for the exact sampler at step delta.
    fn noise_variance_slope(&self, component: usize, delta: f64) -> f64 {
        let coeffs = sampler::component_coefficients(&self.spec, component);
        sampler::s_n_slope(&coeffs, delta)
    }

    /// Limit of s_n^2 / n for the LL iterate at stepsize h.
    fn ll_noise_variance_slope(&self, component: usize, h: f64) -> PyResult<f64> {
        let coeffs = integrators::ll_coefficients(&self.spec, None, component).map_err(err)?;
        Ok(integrators::ll_slope(&coeffs, h))
    }
}

/// Spring-coupled pendulum pair with independent velocity noises.
#[pyclass]
struct PendulumPair {
    spec: models::PendulumPairSpec,
}

#[pymethods]
impl PendulumPair {
    #[new]
    #[pyo3(signature = (alpha, beta, sigma1, sigma2, x0, y0, t0 = 0.0))]
    fn new(
        alpha: f64,
        beta: f64,
        sigma1: f64,
        sigma2: f64,
        x0: Vec<f64>,
        y0: Vec<f64>,
        t0: f64,
    ) -> PyResult<Self> {
        if x0.len() != 2 || y0.len() != 2 {
            return Err(PyValueError::new_err("x0 and y0 must each have 2 entries"));
        }
        let spec = models::PendulumPairSpec::new(
            alpha,
            beta,
            sigma1,
            sigma2,
            [x0[0], x0[1]],
            [y0[0], y0[1]],
            t0,
        )
        .map_err(err)?;
        Ok(Self { spec })
    }

    /// Restoring force f(x, y); dy = -f dt + noise.
    fn drift(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != 2 || y.len() != 2 {
            return Err(PyValueError::new_err("x and y must each have 2 entries"));
        }
        let f = models::pendulum_drift(&self.spec, [x[0], x[1]], [y[0], y[1]]);
        Ok(vec![f[0], f[1]])
    }

    /// Sampled linear-growth check; returns (pass, worst_ratio).
    fn growth_check(&self) -> (bool, f64) {
        let check = models::growth_bound_check(&self.spec.to_drift_spec());
        (check.pass, check.worst_ratio)
    }

    #[pyo3(signature = (h, steps, seed, stream = 0))]
    fn em_integrate(
        &self,
        h: f64,
        steps: usize,
        seed: u64,
        stream: u64,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut rng = PathStream::new(seed, stream);
        let traj =
            integrators::em_integrate(&self.spec.to_drift_spec(), h, steps, &mut rng).map_err(err)?;
        Ok(grid_to_py(&traj))
    }
}

/// Sign changes of one state column; returns a dict with count, crossing
/// indices/times and the interpolated |partner| values.
#[pyfunction]
fn count_sign_changes(
    py: Python<'_>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    component: usize,
) -> PyResult<Py<PyDict>> {
    let traj = grid_from_py(times, states)?;
    if component >= traj.state_dim() {
        return Err(PyValueError::new_err("component out of range"));
    }
    let report = analysis::count_sign_changes(&traj, component);
    let dict = PyDict::new(py);
    dict.set_item("count", report.count)?;
    dict.set_item("crossing_indices", report.crossing_indices)?;
    dict.set_item("crossing_times", report.crossing_times)?;
    dict.set_item("partner_abs", report.partner_abs_at_crossing)?;
    Ok(dict.into())
}

/// Normalized iterated-logarithm envelope statistic over aligned series.
#[pyfunction]
fn lil_envelope(
    py: Python<'_>,
    checkpoints: Vec<usize>,
    s_values: Vec<f64>,
    s_sq: Vec<f64>,
    epsilon: f64,
) -> PyResult<Py<PyDict>> {
    let report = analysis::lil_envelope(&checkpoints, &s_values, &s_sq, epsilon).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("z", report.z.clone())?;
    dict.set_item("max_z", report.max_z)?;
    dict.set_item("min_z", report.min_z)?;
    dict.set_item("first_up", report.first_up)?;
    dict.set_item("first_down", report.first_down)?;
    dict.set_item("two_sided", report.two_sided_passage())?;
    Ok(dict.into())
}

/// Closed-form d=1 transition density p(t, x, y) started at the origin.
#[pyfunction]
fn density_simple_oscillator(alpha: f64, rho: f64, t: f64, x: f64, y: f64) -> PyResult<f64> {
    sampler::density_simple_oscillator(alpha, rho, t, x, y).map_err(err)
}

/// Truncated Lyapunov integral of the d=1 density.
#[pyfunction]
fn lyapunov_v(alpha: f64, rho: f64, x: f64, y: f64, t_cut: f64) -> PyResult<f64> {
    sampler::lyapunov_v(alpha, rho, x, y, t_cut).map_err(err)
}

#[pymodule]
fn stochosc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<LinearOscillator>()?;
    m.add_class::<PendulumPair>()?;
    m.add_function(wrap_pyfunction!(count_sign_changes, m)?)?;
    m.add_function(wrap_pyfunction!(lil_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(density_simple_oscillator, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_v, m)?)?;
    Ok(())
}
