// Seed-sensitivity probe for the LIL two-sided passage rate (not part of the suite).
use rayon::prelude::*;
use stochosc::analysis::{checkpoint_schedule, lil_envelope, noise_part};
use stochosc::presets::reference_coupled;
use stochosc::rng::PathStream;
use stochosc::sampler::{component_coefficients, s_n_sq, sample_with_kernel, transition_kernel};

fn main() {
    let spec = reference_coupled();
    let delta = 1.0;
    let steps = 100_000;
    let checkpoints = checkpoint_schedule(steps, 1.2);
    let coeffs = component_coefficients(&spec, 0);
    let s_sq: Vec<f64> = checkpoints.iter().map(|&n| s_n_sq(&coeffs, delta, n)).collect();
    let kernel = transition_kernel(&spec, delta).unwrap();
    for root in [0xACC4u64, 1, 2, 3, 12345] {
        let hits: usize = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let mut stream = PathStream::new(root, seed);
                let traj = sample_with_kernel(&spec, &kernel, steps, &mut stream).unwrap();
                let s = noise_part(&traj, &spec, 0).unwrap();
                let s_at: Vec<f64> = checkpoints.iter().map(|&n| s[n]).collect();
                let report = lil_envelope(&checkpoints, &s_at, &s_sq, 0.2).unwrap();
                usize::from(report.two_sided_passage())
            })
            .sum();
        println!("root seed {root:#x}: {hits}/100 two-sided");
    }
}
