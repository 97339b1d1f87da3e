//! Oracle-backed checks of the exact transition law: quadrature for the
//! covariance closed forms and Monte Carlo for the sampled path law.

mod common;

use common::{
    covariance_by_quadrature, mean_var, random_spec, simpson_scalar, variance_se, SpectrumClass,
};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

use stochosc::analysis::noise_part;
use stochosc::linalg::SymMatrix;
use stochosc::models::CoupledOscillatorSpec;
use stochosc::rng::PathStream;
use stochosc::sampler::{
    component_coefficients, density_simple_oscillator, s_n_sq, sample_exact_path,
    sample_with_kernel, sigma_nr_sq, transition_kernel,
};

#[test]
fn covariance_matches_quadrature_d2() {
    // Fixed coupled spec, the module-level example of the oracle check.
    let lambda = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let spec = CoupledOscillatorSpec::new(
        lambda,
        Array2::eye(2),
        Array1::zeros(2),
        Array1::zeros(2),
        0.0,
    )
    .unwrap();
    let delta = 0.7;
    let kernel = transition_kernel(&spec, delta).unwrap();
    let oracle = covariance_by_quadrature(&spec, delta, 1e-13);
    let diff = &kernel.covariance - &oracle;
    let max = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max <= 1e-9, "max deviation {max:e}");
}

#[test]
fn covariance_matches_quadrature_across_spectrum_classes() {
    let mut rng = ChaCha12Rng::seed_from_u64(oracle_seed(1));
    for class in [
        SpectrumClass::Generic,
        SpectrumClass::Degenerate,
        SpectrumClass::SignFlipped,
    ] {
        for d in [2usize, 3] {
            let spec = random_spec(d, 2, class, &mut rng);
            let delta = 0.9;
            let kernel = transition_kernel(&spec, delta).unwrap();
            let oracle = covariance_by_quadrature(&spec, delta, 1e-13);
            let trace: f64 = (0..2 * d).map(|i| kernel.covariance[[i, i]]).sum();
            let diff = &kernel.covariance - &oracle;
            let max = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(
                max <= 1e-9 * trace.max(1.0),
                "{class:?} d={d}: deviation {max:e} vs trace {trace:e}"
            );
        }
    }
}

fn oracle_seed(k: u64) -> u64 {
    0x5eed_0000 + k
}

#[test]
fn empirical_covariance_matches_closed_form_d1() {
    // 10^4 paths, alpha = 1, rho = 1, T = pi, zero init:
    // covariance within 3 standard errors of diag(pi/2, pi/2).
    let spec = CoupledOscillatorSpec::scalar(1.0, &[1.0], 0.0, 0.0, 0.0).unwrap();
    let paths = 10_000;
    let kernel = transition_kernel(&spec, PI).unwrap();
    let mut xs = Vec::with_capacity(paths);
    let mut ys = Vec::with_capacity(paths);
    for i in 0..paths {
        let mut stream = PathStream::new(101, i as u64);
        let traj = sample_with_kernel(&spec, &kernel, 1, &mut stream).unwrap();
        xs.push(traj.states()[[1, 0]]);
        ys.push(traj.states()[[1, 1]]);
    }
    let (mx, vx) = mean_var(&xs);
    let (my, vy) = mean_var(&ys);
    assert!(mx.abs() <= 3.0 * (vx / paths as f64).sqrt());
    assert!(my.abs() <= 3.0 * (vy / paths as f64).sqrt());
    assert!((vx - PI / 2.0).abs() <= 3.0 * variance_se(PI / 2.0, paths));
    assert!((vy - PI / 2.0).abs() <= 3.0 * variance_se(PI / 2.0, paths));
}

#[test]
fn empirical_moments_match_kernel_composition_d2() {
    // Mean matches D(t) (the rotated initial state) and variance matches the
    // composed kernel covariance at T = N delta.
    let mut rng = ChaCha12Rng::seed_from_u64(oracle_seed(2));
    let spec = random_spec(2, 2, SpectrumClass::Generic, &mut rng);
    let delta = 0.4;
    let steps = 5;
    let paths = 10_000;

    // Compose the one-step kernel to horizon T.
    let kernel = transition_kernel(&spec, delta).unwrap();
    let mut mean = spec.initial_state();
    let mut cov = Array2::<f64>::zeros((4, 4));
    for _ in 0..steps {
        mean = kernel.mean_map.dot(&mean);
        cov = kernel.mean_map.dot(&cov).dot(&kernel.mean_map.t()) + &kernel.covariance;
    }

    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(paths); 4];
    for i in 0..paths {
        let mut stream = PathStream::new(555, i as u64);
        let traj = sample_with_kernel(&spec, &kernel, steps, &mut stream).unwrap();
        for c in 0..4 {
            samples[c].push(traj.states()[[steps, c]]);
        }
    }
    for c in 0..4 {
        let (m, v) = mean_var(&samples[c]);
        let se_mean = (cov[[c, c]] / paths as f64).sqrt();
        assert!(
            (m - mean[c]).abs() <= 3.0 * se_mean,
            "mean of component {c}: {m} vs {}",
            mean[c]
        );
        assert!(
            (v - cov[[c, c]]).abs() <= 3.0 * variance_se(cov[[c, c]], paths),
            "variance of component {c}: {v} vs {}",
            cov[[c, c]]
        );
    }
}

#[test]
fn sigma_nr_matches_quadrature() {
    let mut rng = ChaCha12Rng::seed_from_u64(oracle_seed(3));
    let spec = random_spec(2, 2, SpectrumClass::Generic, &mut rng);
    let coeffs = component_coefficients(&spec, 0);
    let eig = spec.decomposition().eigenvalues().to_vec();
    let delta = 0.8;
    let (n, r) = (7usize, 3usize);
    let closed = sigma_nr_sq(&coeffs, delta, n, r);

    // Quadrature of the defining integrand from the raw coefficient table.
    let q = (n - r) as f64;
    let oracle = simpson_scalar(
        &|u: f64| {
            let mut total = 0.0;
            for l in 0..2 {
                let inner: f64 = (0..2).map(|k| coeffs.c[[k, l]] * (eig[k] * u).sin()).sum();
                total += inner * inner;
            }
            total
        },
        q * delta,
        (q + 1.0) * delta,
        1e-13,
    );
    assert!((closed - oracle).abs() <= 1e-9, "{closed} vs {oracle}");
}

#[test]
fn merged_coefficients_reproduce_raw_variance_under_degeneracy() {
    // For repeated and sign-flipped spectra the merged-table variance must
    // equal quadrature over the raw table.
    let mut rng = ChaCha12Rng::seed_from_u64(oracle_seed(4));
    for class in [SpectrumClass::Degenerate, SpectrumClass::SignFlipped] {
        let spec = random_spec(3, 2, class, &mut rng);
        let coeffs = component_coefficients(&spec, 0);
        assert!(coeffs.distinct_count() < 3, "{class:?} should merge");
        let eig = spec.decomposition().eigenvalues().to_vec();
        let delta = 0.75;
        for n in [1usize, 4] {
            let closed = s_n_sq(&coeffs, delta, n);
            let oracle = simpson_scalar(
                &|u: f64| {
                    let mut total = 0.0;
                    for l in 0..2 {
                        let inner: f64 =
                            (0..3).map(|k| coeffs.c[[k, l]] * (eig[k] * u).sin()).sum();
                        total += inner * inner;
                    }
                    total
                },
                0.0,
                n as f64 * delta,
                1e-13,
            );
            assert!(
                (closed - oracle).abs() <= 1e-9 * oracle.max(1.0),
                "{class:?} n={n}: {closed} vs {oracle}"
            );
        }
    }
}

#[test]
fn noise_part_variance_matches_closed_form() {
    // The module's central cross-check: empirical Var(S_n) over exact paths
    // against the closed-form s_n^2 at n in {10, 100, 1000}.
    let mut rng = ChaCha12Rng::seed_from_u64(oracle_seed(5));
    let spec = random_spec(2, 2, SpectrumClass::Generic, &mut rng);
    let delta = 0.5;
    let paths = 10_000;
    let coeffs = component_coefficients(&spec, 0);
    let kernel = transition_kernel(&spec, delta).unwrap();
    let checkpoints = [10usize, 100, 1000];
    let mut collected: Vec<Vec<f64>> = vec![Vec::with_capacity(paths); checkpoints.len()];
    for i in 0..paths {
        let mut stream = PathStream::new(777, i as u64);
        let traj = sample_with_kernel(&spec, &kernel, 1000, &mut stream).unwrap();
        let s = noise_part(&traj, &spec, 0).unwrap();
        for (slot, &n) in checkpoints.iter().enumerate() {
            collected[slot].push(s[n]);
        }
    }
    for (slot, &n) in checkpoints.iter().enumerate() {
        let (_, v) = mean_var(&collected[slot]);
        let expected = s_n_sq(&coeffs, delta, n);
        assert!(
            (v - expected).abs() <= 3.0 * variance_se(expected, paths),
            "n = {n}: empirical {v} vs closed form {expected}"
        );
    }
}

#[test]
fn density_matches_monte_carlo_histogram() {
    // d=1, zero init, t=1: the closed-form density carries the auxiliary
    // system's sign convention, which is the oscillator's law reflected in y.
    // Histogram (x, -y) and compare cell masses.
    let spec = CoupledOscillatorSpec::scalar(1.0, &[1.0], 0.0, 0.0, 0.0).unwrap();
    let t = 1.0;
    let paths = 40_000;
    let kernel = transition_kernel(&spec, t).unwrap();
    let sx = kernel.covariance[[0, 0]].sqrt();
    let sy = kernel.covariance[[1, 1]].sqrt();
    let bins = 6usize;
    let (x_lo, x_hi) = (-2.5 * sx, 2.5 * sx);
    let (y_lo, y_hi) = (-2.5 * sy, 2.5 * sy);
    let bw_x = (x_hi - x_lo) / bins as f64;
    let bw_y = (y_hi - y_lo) / bins as f64;
    let mut counts = vec![vec![0usize; bins]; bins];
    for i in 0..paths {
        let mut stream = PathStream::new(2024, i as u64);
        let traj = sample_with_kernel(&spec, &kernel, 1, &mut stream).unwrap();
        let x = traj.states()[[1, 0]];
        let y = -traj.states()[[1, 1]];
        if x >= x_lo && x < x_hi && y >= y_lo && y < y_hi {
            let bx = ((x - x_lo) / bw_x) as usize;
            let by = ((y - y_lo) / bw_y) as usize;
            counts[bx][by] += 1;
        }
    }
    for bx in 0..bins {
        for by in 0..bins {
            let x0 = x_lo + bx as f64 * bw_x;
            let y0 = y_lo + by as f64 * bw_y;
            let mass = stochosc::quad::adaptive_simpson(
                |x| {
                    stochosc::quad::adaptive_simpson(
                        |y| density_simple_oscillator(1.0, 1.0, t, x, y).unwrap(),
                        y0,
                        y0 + bw_y,
                        1e-10,
                    )
                },
                x0,
                x0 + bw_x,
                1e-10,
            );
            let expected = mass * paths as f64;
            let se = (paths as f64 * mass * (1.0 - mass)).sqrt();
            assert!(
                (counts[bx][by] as f64 - expected).abs() <= 4.0 * se + 3.0,
                "bin ({bx},{by}): count {} vs expected {expected:.1} (se {se:.1})",
                counts[bx][by]
            );
        }
    }
}

#[test]
fn exact_sampler_marginal_variance_at_horizon() {
    // Per-component variance at t_N within 3 standard errors of the
    // C-composed analytic variance.
    let mut rng = ChaCha12Rng::seed_from_u64(oracle_seed(6));
    let spec = random_spec(3, 2, SpectrumClass::Generic, &mut rng);
    let delta = 0.3;
    let steps = 12;
    let paths = 10_000;
    let kernel = transition_kernel(&spec, delta).unwrap();
    let mut cov = Array2::<f64>::zeros((6, 6));
    for _ in 0..steps {
        cov = kernel.mean_map.dot(&cov).dot(&kernel.mean_map.t()) + &kernel.covariance;
    }
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(paths); 6];
    for i in 0..paths {
        let mut stream = PathStream::new(31337, i as u64);
        let traj = sample_with_kernel(&spec, &kernel, steps, &mut stream).unwrap();
        for c in 0..6 {
            samples[c].push(traj.states()[[steps, c]]);
        }
    }
    for c in 0..6 {
        let (_, v) = mean_var(&samples[c]);
        assert!(
            (v - cov[[c, c]]).abs() <= 3.0 * variance_se(cov[[c, c]], paths),
            "component {c}: {v} vs {}",
            cov[[c, c]]
        );
    }
}

#[test]
fn deterministic_rotation_only_when_noiseless() {
    let spec = CoupledOscillatorSpec::scalar(1.0, &[0.0], 1.0, 0.0, 0.0).unwrap();
    let traj = sample_exact_path(&spec, 0.05, 400, &mut PathStream::new(1, 1)).unwrap();
    for (n, &t) in traj.times().iter().enumerate() {
        assert!((traj.states()[[n, 0]] - t.cos()).abs() <= 1e-12);
        assert!((traj.states()[[n, 1]] + t.sin()).abs() <= 1e-12);
    }
}
