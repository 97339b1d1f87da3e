//! Property tests for the structural invariants: orthogonality, rotation
//! group laws, kernel composition and statistic scale consistency.

mod common;

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use stochosc::linalg::{
    augmented_exp, eigh_symmetric, frobenius, identity, matrix_trig, rotation_matrix, SymMatrix,
};
use stochosc::models::CoupledOscillatorSpec;
use stochosc::sampler::transition_kernel;
use stochosc::trajectory::TrajectoryGrid;

fn symmetric_matrix(d: usize) -> impl Strategy<Value = SymMatrix> {
    proptest::collection::vec(-5.0f64..5.0, d * (d + 1) / 2).prop_map(move |upper| {
        let mut m = Array2::zeros((d, d));
        let mut it = upper.into_iter();
        for i in 0..d {
            for j in i..d {
                let v = it.next().unwrap();
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        SymMatrix::new(m).unwrap()
    })
}

fn nonsingular_spec(d: usize, m: usize) -> impl Strategy<Value = CoupledOscillatorSpec> {
    (
        symmetric_matrix(d),
        proptest::collection::vec(-1.5f64..1.5, d * m),
    )
        .prop_filter_map("needs a nonsingular Lambda", move |(lambda, pi)| {
            let pi = Array2::from_shape_vec((d, m), pi).unwrap();
            CoupledOscillatorSpec::new(lambda, pi, Array1::zeros(d), Array1::zeros(d), 0.0).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs_and_is_orthogonal(m in (1usize..=6).prop_flat_map(symmetric_matrix)) {
        let d = m.dim();
        let dec = eigh_symmetric(&m).unwrap();
        let ortho = frobenius(&(dec.p().t().dot(dec.p()) - identity(d)));
        prop_assert!(ortho <= 1e-12 * (d as f64).sqrt());
        let recon = frobenius(&(dec.reconstruct() - m.as_array()));
        prop_assert!(recon <= 1e-10 * frobenius(m.as_array()).max(1e-6));
        // Eigenvalues sorted descending.
        prop_assert!(dec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pythagorean_identity_holds(spec in nonsingular_spec(3, 1), t in -4.0f64..4.0) {
        let dec = spec.decomposition();
        let trig = matrix_trig(dec, t).unwrap();
        // sin(Lambda t) recovered as Lambda * (Lambda^{-1} sin(Lambda t)).
        let sin = spec.lambda().as_array().dot(&trig.inv_lambda_sin);
        let sum = trig.cos.dot(&trig.cos) + sin.dot(&sin);
        prop_assert!(frobenius(&(sum - identity(3))) <= 1e-10);
    }

    #[test]
    fn rotation_group_property(spec in nonsingular_spec(2, 1), t in -3.0f64..3.0, s in -3.0f64..3.0) {
        let dec = spec.decomposition();
        let r_t = rotation_matrix(dec, t).unwrap();
        let r_s = rotation_matrix(dec, s).unwrap();
        let r_ts = rotation_matrix(dec, t + s).unwrap();
        prop_assert!(frobenius(&(r_t.dot(&r_s) - r_ts)) <= 1e-10);
    }

    #[test]
    fn expm_matches_taylor_on_small_matrices(entries in proptest::collection::vec(-0.3f64..0.3, 9)) {
        let c = Array2::from_shape_vec((3, 3), entries).unwrap();
        let e = augmented_exp(&c, 1.0).unwrap();
        let mut taylor = identity(3);
        let mut term = identity(3);
        for k in 1..=50 {
            term = term.dot(&c).mapv(|v| v / k as f64);
            taylor = taylor + &term;
        }
        prop_assert!(frobenius(&(e - taylor)) <= 1e-11);
    }

    #[test]
    fn kernel_chapman_kolmogorov(spec in nonsingular_spec(2, 2), delta in 0.05f64..1.5) {
        let k1 = transition_kernel(&spec, delta).unwrap();
        let k2 = transition_kernel(&spec, 2.0 * delta).unwrap();
        let m_sq = k1.mean_map.dot(&k1.mean_map);
        prop_assert!(frobenius(&(&m_sq - &k2.mean_map)) <= 1e-9);
        let composed = k1.mean_map.dot(&k1.covariance).dot(&k1.mean_map.t()) + &k1.covariance;
        prop_assert!(frobenius(&(&composed - &k2.covariance)) <= 1e-9);
    }

    #[test]
    fn slope_strictly_positive_when_noise_present(spec in nonsingular_spec(3, 2), delta in 0.1f64..2.0) {
        let coeffs = stochosc::sampler::component_coefficients(&spec, 0);
        let has_noise = coeffs.c.iter().any(|&v| v != 0.0);
        if has_noise {
            // Generic random spectra have distinct |lambda|, so no merge
            // cancellation can occur.
            prop_assert!(stochosc::sampler::s_n_slope(&coeffs, delta) > 0.0);
        }
    }

    #[test]
    fn sign_change_count_scale_invariant(scale in 0.01f64..100.0, seed in 0u64..500) {
        let spec = stochosc::presets::reference_scalar();
        let mut stream = stochosc::rng::PathStream::new(seed, 0);
        let traj = stochosc::sampler::sample_exact_path(&spec, 0.3, 200, &mut stream).unwrap();
        let base = stochosc::analysis::count_sign_changes(&traj, 0);
        let scaled = TrajectoryGrid::new(
            traj.times().to_vec(),
            traj.states().mapv(|v| scale * v),
            *traj.provenance(),
        ).unwrap();
        let rescaled = stochosc::analysis::count_sign_changes(&scaled, 0);
        prop_assert_eq!(base.count, rescaled.count);
        prop_assert_eq!(base.crossing_indices, rescaled.crossing_indices);
    }

    #[test]
    fn envelope_statistic_scale_consistency(c in 0.1f64..10.0) {
        // Scaling S by c and s^2 by c^2 changes Z only through the slowly
        // varying log log factor: Z' sqrt(log log c^2 s^2) = Z sqrt(log log s^2).
        let checkpoints: Vec<usize> = (1..=40).collect();
        let s: Vec<f64> = checkpoints.iter().map(|&n| (n as f64 * 0.7).sin() * n as f64).collect();
        let s_sq: Vec<f64> = checkpoints.iter().map(|&n| 4.0 * n as f64).collect();
        let base = stochosc::analysis::lil_envelope(&checkpoints, &s, &s_sq, 0.2).unwrap();
        let s_scaled: Vec<f64> = s.iter().map(|v| c * v).collect();
        let s_sq_scaled: Vec<f64> = s_sq.iter().map(|v| c * c * v).collect();
        let scaled = stochosc::analysis::lil_envelope(&checkpoints, &s_scaled, &s_sq_scaled, 0.2).unwrap();
        for (k, (za, zb)) in base.z.iter().zip(&scaled.z).enumerate() {
            if let (Some(za), Some(zb)) = (za, zb) {
                let va = s_sq[k];
                let vb = s_sq_scaled[k];
                if vb > std::f64::consts::E {
                    let lhs = za * va.ln().ln().sqrt();
                    let rhs = zb * vb.ln().ln().sqrt();
                    prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
                }
            }
        }
    }
}
