//! Model specifications: the linear coupled oscillator, the generic nonlinear
//! oscillator with a linear-growth drift, and the concrete spring-coupled
//! pendulum pair.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{CoreError, Result};
use crate::linalg::{eigh_symmetric, SpectralDecomposition, SymMatrix};

/// The linear coupled oscillator
///
/// dx = y dt,  dy = -Lambda^2 x dt + Pi dw,
///
/// written as the 2d-dimensional system d(x,y) = A (x,y) dt + B dw with
/// A = [0 I; -Lambda^2 0] and B = [0; Pi]. Lambda must be symmetric and pass
/// the nonsingularity gate; its spectral decomposition is computed once at
/// construction and reused by every closed form downstream.
#[derive(Debug, Clone)]
pub struct CoupledOscillatorSpec {
    lambda: SymMatrix,
    pi: Array2<f64>,
    x0: Array1<f64>,
    y0: Array1<f64>,
    t0: f64,
    dec: SpectralDecomposition,
}

impl CoupledOscillatorSpec {
    pub fn new(
        lambda: SymMatrix,
        pi: Array2<f64>,
        x0: Array1<f64>,
        y0: Array1<f64>,
        t0: f64,
    ) -> Result<Self> {
        let d = lambda.dim();
        if pi.nrows() != d {
            return Err(CoreError::InvalidDimension(format!(
                "Pi has {} rows, expected d = {}",
                pi.nrows(),
                d
            )));
        }
        if pi.ncols() == 0 {
            return Err(CoreError::InvalidDimension("noise dimension m must be >= 1".into()));
        }
        if x0.len() != d || y0.len() != d {
            return Err(CoreError::InvalidDimension(format!(
                "initial state must have d = {} entries per block, got {} and {}",
                d,
                x0.len(),
                y0.len()
            )));
        }
        if !(t0 >= 0.0) {
            return Err(CoreError::InvalidParameter("t0 must be >= 0".into()));
        }
        let dec = eigh_symmetric(&lambda)?;
        dec.require_nonsingular()?;
        Ok(Self {
            lambda,
            pi,
            x0,
            y0,
            t0,
            dec,
        })
    }

    /// Scalar oscillator d=1 with frequency `alpha` and noise row `sigmas` (1 x m).
    pub fn scalar(alpha: f64, sigmas: &[f64], x0: f64, y0: f64, t0: f64) -> Result<Self> {
        let lambda = SymMatrix::from_rows(&[vec![alpha]])?;
        let pi = Array2::from_shape_vec((1, sigmas.len()), sigmas.to_vec())
            .map_err(|e| CoreError::InvalidDimension(e.to_string()))?;
        Self::new(lambda, pi, Array1::from(vec![x0]), Array1::from(vec![y0]), t0)
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.pi.ncols()
    }

    pub fn lambda(&self) -> &SymMatrix {
        &self.lambda
    }

    pub fn pi(&self) -> &Array2<f64> {
        &self.pi
    }

    pub fn x0(&self) -> &Array1<f64> {
        &self.x0
    }

    pub fn y0(&self) -> &Array1<f64> {
        &self.y0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.dec
    }

    /// Initial condition as one 2d vector (x0; y0).
    pub fn initial_state(&self) -> Array1<f64> {
        let d = self.dim();
        let mut s = Array1::zeros(2 * d);
        for i in 0..d {
            s[i] = self.x0[i];
            s[d + i] = self.y0[i];
        }
        s
    }

    /// Assembles the block drift and diffusion matrices
    /// A = [0 I; -Lambda^2 0] (2d x 2d) and B = [0; Pi] (2d x m).
    pub fn as_linear_system(&self) -> (Array2<f64>, Array2<f64>) {
        let d = self.dim();
        let m = self.noise_dim();
        let lambda_sq = self.lambda.as_array().dot(self.lambda.as_array());
        let mut a = Array2::zeros((2 * d, 2 * d));
        for i in 0..d {
            a[[i, d + i]] = 1.0;
            for j in 0..d {
                a[[d + i, j]] = -lambda_sq[[i, j]];
            }
        }
        let mut b = Array2::zeros((2 * d, m));
        for i in 0..d {
            for l in 0..m {
                b[[d + i, l]] = self.pi[[i, l]];
            }
        }
        (a, b)
    }

    /// Linear drift as a nonlinear-spec view: f(x, y) = Lambda^2 x, so that
    /// dy = -f dt + Pi dw reproduces this oscillator. Useful for running the
    /// Euler-Maruyama baseline on linear models.
    pub fn to_drift_spec(&self) -> NonlinearDriftSpec {
        let lambda_sq = self.lambda.as_array().dot(self.lambda.as_array());
        let k1 = crate::linalg::frobenius(&lambda_sq).max(1.0);
        let d = self.dim();
        NonlinearDriftSpec {
            d,
            m: self.noise_dim(),
            drift: Arc::new(move |x: &[f64], _y: &[f64]| {
                (0..d)
                    .map(|i| (0..d).map(|j| lambda_sq[[i, j]] * x[j]).sum())
                    .collect()
            }),
            pi: self.pi.clone(),
            k1,
            x0: self.x0.clone(),
            y0: self.y0.clone(),
            t0: self.t0,
            label: "linear".into(),
        }
    }
}

/// A pair of identical pendulums connected by a weak spring, driven by
/// independent noises on the velocity equations:
///
/// dx_i = y_i dt,
/// dy_1 = -[alpha sin x_1 + beta (sin x_1 - sin x_2) cos x_1] dt + sigma_1 dw^1,
/// dy_2 = -[alpha sin x_2 - beta (sin x_1 - sin x_2) cos x_2] dt + sigma_2 dw^2.
///
/// All four parameters must be strictly positive.
#[derive(Debug, Clone)]
pub struct PendulumPairSpec {
    pub alpha: f64,
    pub beta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub x0: [f64; 2],
    pub y0: [f64; 2],
    pub t0: f64,
}

impl PendulumPairSpec {
    pub fn new(
        alpha: f64,
        beta: f64,
        sigma1: f64,
        sigma2: f64,
        x0: [f64; 2],
        y0: [f64; 2],
        t0: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("alpha", alpha),
            ("beta", beta),
            ("sigma1", sigma1),
            ("sigma2", sigma2),
        ] {
            if !(v > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(t0 >= 0.0) {
            return Err(CoreError::InvalidParameter("t0 must be >= 0".into()));
        }
        Ok(Self {
            alpha,
            beta,
            sigma1,
            sigma2,
            x0,
            y0,
            t0,
        })
    }

    /// Canonical nonlinear view with Pi = diag(sigma_1, sigma_2) and the
    /// per-component growth constant alpha + 2 beta.
    pub fn to_drift_spec(&self) -> NonlinearDriftSpec {
        let s = self.clone();
        let mut pi = Array2::zeros((2, 2));
        pi[[0, 0]] = self.sigma1;
        pi[[1, 1]] = self.sigma2;
        NonlinearDriftSpec {
            d: 2,
            m: 2,
            drift: Arc::new(move |x: &[f64], y: &[f64]| {
                let f = pendulum_drift(&s, [x[0], x[1]], [y[0], y[1]]);
                vec![f[0], f[1]]
            }),
            pi,
            k1: self.alpha + 2.0 * self.beta,
            x0: Array1::from(self.x0.to_vec()),
            y0: Array1::from(self.y0.to_vec()),
            t0: self.t0,
            label: "pendulum-pair".into(),
        }
    }
}

/// Restoring force of the pendulum pair. The value returned here is f(x, y);
/// the minus sign of the velocity equation dy = -f dt + ... is applied by the
/// integrator, not here.
pub fn pendulum_drift(s: &PendulumPairSpec, x: [f64; 2], _y: [f64; 2]) -> [f64; 2] {
    let gap = x[0].sin() - x[1].sin();
    [
        s.alpha * x[0].sin() + s.beta * gap * x[0].cos(),
        s.alpha * x[1].sin() - s.beta * gap * x[1].cos(),
    ]
}

/// Drift evaluator f(x, y) -> d-vector. Must be pure (no hidden state) so
/// paths can be simulated concurrently.
pub type DriftFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Generic nonlinear oscillator dx = y dt, dy = -f(x, y) dt + Pi dw with a
/// caller-supplied drift evaluator.
#[derive(Clone)]
pub struct NonlinearDriftSpec {
    pub d: usize,
    pub m: usize,
    pub drift: DriftFn,
    pub pi: Array2<f64>,
    /// Claimed growth constant: |f(x,y)| <= k1 (1 + |x| + |y|).
    pub k1: f64,
    pub x0: Array1<f64>,
    pub y0: Array1<f64>,
    pub t0: f64,
    pub label: String,
}

impl fmt::Debug for NonlinearDriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearDriftSpec")
            .field("d", &self.d)
            .field("m", &self.m)
            .field("k1", &self.k1)
            .field("t0", &self.t0)
            .field("label", &self.label)
            .finish()
    }
}

/// Outcome of the sampled linear-growth check.
#[derive(Debug, Clone, Copy)]
pub struct GrowthCheck {
    pub pass: bool,
    /// max over sample points of |f(x,y)| / (1 + |x| + |y|).
    pub worst_ratio: f64,
}

const GROWTH_SAMPLES: usize = 10_000;
const GROWTH_BOX_RADIUS: f64 = 1e3;

/// Sampled falsification test of |f(x,y)| <= K1 (1 + |x| + |y|) over 10^4
/// quasi-random points in the box of radius 10^3. Norms are Euclidean. This
/// can refute the growth condition but never proves it.
pub fn growth_bound_check(spec: &NonlinearDriftSpec) -> GrowthCheck {
    let dim = 2 * spec.d;
    // Kronecker (additive-recurrence) low-discrepancy sequence.
    let phi = generalized_golden_ratio(dim);
    let mut alphas = Vec::with_capacity(dim);
    let mut p = 1.0;
    for _ in 0..dim {
        p /= phi;
        alphas.push(p);
    }
    let mut worst_ratio = 0.0f64;
    let mut point = vec![0.5f64; dim];
    for _ in 0..GROWTH_SAMPLES {
        for (c, a) in point.iter_mut().zip(&alphas) {
            *c += a;
            if *c >= 1.0 {
                *c -= 1.0;
            }
        }
        let coords: Vec<f64> = point
            .iter()
            .map(|u| (2.0 * u - 1.0) * GROWTH_BOX_RADIUS)
            .collect();
        let (x, y) = coords.split_at(spec.d);
        let f = (spec.drift)(x, y);
        let f_norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ratio = f_norm / (1.0 + x_norm + y_norm);
        worst_ratio = worst_ratio.max(ratio);
    }
    GrowthCheck {
        pass: worst_ratio <= spec.k1,
        worst_ratio,
    }
}

/// Root of x^{d+1} = x + 1, the base of the d-dimensional Kronecker sequence.
fn generalized_golden_ratio(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}
