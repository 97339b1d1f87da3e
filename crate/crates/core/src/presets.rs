//! Reference model instances used by the experiment configs and the
//! verification suite.

use ndarray::{Array1, Array2};

use crate::linalg::SymMatrix;
use crate::models::{CoupledOscillatorSpec, PendulumPairSpec};

/// d=2 coupled reference oscillator: Lambda = [2 0.5; 0.5 1], Pi = I,
/// x0 = (1, 0), y0 = 0. Eigenvalues (3 +- sqrt(2)) / 2, well separated and
/// nonresonant.
pub fn reference_coupled() -> CoupledOscillatorSpec {
    let lambda = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
    CoupledOscillatorSpec::new(
        lambda,
        Array2::eye(2),
        Array1::from(vec![1.0, 0.0]),
        Array1::from(vec![0.0, 0.0]),
        0.0,
    )
    .unwrap()
}

/// d=1 reference oscillator: alpha = 1, sigma = 1, x0 = 1, y0 = 0.
pub fn reference_scalar() -> CoupledOscillatorSpec {
    CoupledOscillatorSpec::scalar(1.0, &[1.0], 1.0, 0.0, 0.0).unwrap()
}

/// Reference pendulum pair: alpha = 1, beta = 0.1, sigma_1 = sigma_2 = 0.5,
/// starting from a small asymmetric displacement at rest.
pub fn reference_pendulum() -> PendulumPairSpec {
    PendulumPairSpec::new(1.0, 0.1, 0.5, 0.5, [0.2, -0.1], [0.0, 0.0], 0.0).unwrap()
}
