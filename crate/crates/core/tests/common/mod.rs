//! Shared test oracles: quadrature, matrix-exponential-based integrands and
//! seeded spec generators. Everything here is independent of the closed-form
//! code paths it is used to check.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use stochosc::linalg::{augmented_exp, frobenius, SymMatrix};
use stochosc::models::CoupledOscillatorSpec;

/// Composite Simpson rule for matrix-valued integrands.
pub fn simpson_matrix(
    f: &dyn Fn(f64) -> Array2<f64>,
    a: f64,
    b: f64,
    panels: usize,
) -> Array2<f64> {
    assert!(panels % 2 == 0, "composite Simpson needs an even panel count");
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc + f(a + k as f64 * h).mapv(|v| v * w);
    }
    acc.mapv(|v| v * h / 3.0)
}

/// Simpson with Richardson refinement: doubles the panel count until the
/// estimated error drops below `tol` (Frobenius norm), then extrapolates.
pub fn simpson_richardson_matrix(
    f: &dyn Fn(f64) -> Array2<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Array2<f64> {
    let mut panels = 16;
    let mut coarse = simpson_matrix(f, a, b, panels);
    loop {
        panels *= 2;
        let fine = simpson_matrix(f, a, b, panels);
        let err = frobenius(&(&fine - &coarse));
        if err <= 15.0 * tol || panels >= 1 << 14 {
            // Richardson: S + (S_fine - S_coarse) / 15 for Simpson's order 4.
            return &fine + &(&fine - &coarse).mapv(|v| v / 15.0);
        }
        coarse = fine;
    }
}

/// Scalar adaptive helper reusing the matrix machinery.
pub fn simpson_scalar(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let wrapped = |u: f64| Array2::from_elem((1, 1), f(u));
    simpson_richardson_matrix(&wrapped, a, b, tol)[[0, 0]]
}

/// The variation-of-constants integrand Phi(u) B B^T Phi(u)^T with
/// Phi(u) = e^{A u} built by the Pade matrix exponential, bypassing the
/// spectral closed forms entirely.
pub fn covariance_integrand(spec: &CoupledOscillatorSpec) -> impl Fn(f64) -> Array2<f64> + '_ {
    let (a, b) = spec.as_linear_system();
    move |u: f64| {
        let phi = augmented_exp(&a, u).expect("expm");
        let phib = phi.dot(&b);
        phib.dot(&phib.t())
    }
}

/// Quadrature oracle for the one-step covariance C(delta).
pub fn covariance_by_quadrature(spec: &CoupledOscillatorSpec, delta: f64, tol: f64) -> Array2<f64> {
    let integrand = covariance_integrand(spec);
    simpson_richardson_matrix(&integrand, 0.0, delta, tol)
}

/// Eigenvalue pattern classes for generated specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumClass {
    /// Distinct, well-separated |lambda|.
    Generic,
    /// At least one repeated eigenvalue.
    Degenerate,
    /// Contains a lambda, -lambda pair.
    SignFlipped,
}

/// Random orthogonal matrix: eigenvector basis of a random symmetric matrix.
pub fn random_orthogonal(d: usize, rng: &mut ChaCha12Rng) -> Array2<f64> {
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let v: f64 = rng.random_range(-1.0..1.0);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    let dec = stochosc::linalg::eigh_symmetric(&SymMatrix::new(m).unwrap()).unwrap();
    dec.p().clone()
}

/// Builds Lambda = P diag(lambda) P^T with a controlled spectrum, plus a
/// random noise matrix Pi with at least one nonzero entry.
pub fn random_spec(
    d: usize,
    m: usize,
    class: SpectrumClass,
    rng: &mut ChaCha12Rng,
) -> CoupledOscillatorSpec {
    let eigenvalues: Vec<f64> = match class {
        SpectrumClass::Generic => {
            // Separated magnitudes, random signs.
            let mut vals = Vec::with_capacity(d);
            for k in 0..d {
                let magnitude = 0.5 + 0.7 * k as f64 + rng.random_range(0.0..0.3);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                vals.push(sign * magnitude);
            }
            vals
        }
        SpectrumClass::Degenerate => {
            let base = rng.random_range(0.8..2.0);
            let mut vals = vec![base; 2.min(d)];
            for k in 2..d {
                vals.push(base + 1.0 + 0.8 * (k as f64 - 2.0));
            }
            vals
        }
        SpectrumClass::SignFlipped => {
            let base = rng.random_range(0.8..2.0);
            let mut vals = vec![base, -base];
            vals.truncate(d);
            for k in 2..d {
                vals.push(base + 1.2 + 0.8 * (k as f64 - 2.0));
            }
            vals
        }
    };
    let p = random_orthogonal(d, rng);
    let mut diag = Array2::zeros((d, d));
    for (k, &l) in eigenvalues.iter().enumerate() {
        diag[[k, k]] = l;
    }
    let lambda_raw = p.dot(&diag).dot(&p.t());
    // Symmetrize exactly against rounding.
    let lambda_sym = (&lambda_raw + &lambda_raw.t()).mapv(|v| 0.5 * v);
    let lambda = SymMatrix::new(lambda_sym).unwrap();

    let mut pi = Array2::zeros((d, m));
    loop {
        for v in pi.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        if pi.iter().any(|v: &f64| v.abs() > 0.1) {
            break;
        }
    }
    let x0 = Array1::from((0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
    let y0 = Array1::from((0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
    CoupledOscillatorSpec::new(lambda, pi, x0, y0, 0.0).unwrap()
}

/// Sample mean and variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of a sample variance of a Gaussian: var * sqrt(2 / (n - 1)).
pub fn variance_se(variance: f64, n: usize) -> f64 {
    variance * (2.0 / (n as f64 - 1.0)).sqrt()
}
