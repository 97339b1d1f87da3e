//! Statistical machinery that turns trajectories into oscillation evidence:
//! sign-change counting, the law-of-the-iterated-logarithm envelope
//! statistic, and the simple-zero diagnostic.

use crate::error::{CoreError, Result};
use crate::models::CoupledOscillatorSpec;
use crate::sampler::deterministic_part;
use crate::trajectory::{SchemeLabel, TrajectoryGrid};

/// Sign changes of one state component along a sampled path.
#[derive(Debug, Clone)]
pub struct SignChangeReport {
    pub component: usize,
    /// Number of adjacent sample pairs with a strict sign change.
    pub count: usize,
    /// Left index n of each crossing pair (n, n+1).
    pub crossing_indices: Vec<usize>,
    /// Linearly interpolated crossing times.
    pub crossing_times: Vec<f64>,
    /// |partner component| interpolated at each crossing time: for a position
    /// component x_i the partner is the velocity y_i, and vice versa.
    pub partner_abs_at_crossing: Vec<f64>,
}

/// Counts strict sign changes x(t_n) x(t_{n+1}) < 0 of one state column.
///
/// A sample that is exactly zero (a measure-zero event for the continuous
/// path) takes the sign of the next nonzero sample, so it neither hides nor
/// doubles a crossing. Crossing times come from linear interpolation between
/// the bracketing samples.
pub fn count_sign_changes(traj: &TrajectoryGrid, component: usize) -> SignChangeReport {
    let n = traj.len();
    let dim = traj.state_dim();
    assert!(component < dim, "component out of range");
    let d = dim / 2;
    let partner = if component < d {
        component + d
    } else {
        component - d
    };

    let values = traj.component(component);
    let partner_values = traj.component(partner);
    let times = traj.times();

    // Effective signs: zeros borrow the next nonzero sign (or the previous
    // one at the trailing edge).
    let mut signs = vec![0i8; n];
    let mut next_sign = 0i8;
    for k in (0..n).rev() {
        if values[k] > 0.0 {
            next_sign = 1;
        } else if values[k] < 0.0 {
            next_sign = -1;
        }
        signs[k] = next_sign;
    }
    let mut prev_sign = 0i8;
    for k in 0..n {
        if signs[k] == 0 {
            signs[k] = prev_sign;
        } else {
            prev_sign = signs[k];
        }
    }

    let mut crossing_indices = Vec::new();
    let mut crossing_times = Vec::new();
    let mut partner_abs = Vec::new();
    for k in 0..n.saturating_sub(1) {
        if signs[k] != 0 && signs[k + 1] != 0 && signs[k] != signs[k + 1] {
            let (a, b) = (values[k], values[k + 1]);
            // With an exact zero at either end the crossing sits on the node.
            let frac = if a == b { 0.0 } else { a / (a - b) };
            let t = times[k] + frac * (times[k + 1] - times[k]);
            let y = partner_values[k] + frac * (partner_values[k + 1] - partner_values[k]);
            crossing_indices.push(k);
            crossing_times.push(t);
            partner_abs.push(y.abs());
        }
    }

    SignChangeReport {
        component,
        count: crossing_indices.len(),
        crossing_indices,
        crossing_times,
        partner_abs_at_crossing: partner_abs,
    }
}

/// Noise part S_n = x_i(t_n) - D_i(t_n) of position component `i`. Only
/// defined for trajectories whose deterministic part is the exact rotation,
/// i.e. exact and locally linearized paths.
pub fn noise_part(
    traj: &TrajectoryGrid,
    spec: &CoupledOscillatorSpec,
    component: usize,
) -> Result<Vec<f64>> {
    match traj.provenance().scheme {
        SchemeLabel::Exact | SchemeLabel::LocallyLinearized { .. } => {}
        other => {
            return Err(CoreError::UnknownScheme {
                scheme: other.name().into(),
            })
        }
    }
    let values = traj.component(component);
    Ok(traj
        .times()
        .iter()
        .zip(values)
        .map(|(&t, x)| x - deterministic_part(spec, component, t))
        .collect())
}

/// Envelope statistic of one checkpointed noise series.
#[derive(Debug, Clone)]
pub struct LILReport {
    pub epsilon: f64,
    /// Sample indices of the checkpoints.
    pub checkpoints: Vec<usize>,
    pub s_values: Vec<f64>,
    pub s_sq: Vec<f64>,
    /// Z_n = S_n / sqrt(2 s_n^2 log log s_n^2); None where s_n^2 <= e, where
    /// the envelope is undefined (flagged, never dropped).
    pub z: Vec<Option<f64>>,
    pub max_z: Option<f64>,
    pub min_z: Option<f64>,
    /// First checkpoint index (into `checkpoints`) with Z > 1 - epsilon.
    pub first_up: Option<usize>,
    /// First checkpoint index with Z < -(1 - epsilon).
    pub first_down: Option<usize>,
}

impl LILReport {
    /// Two-sided passage: did Z exceed 1 - epsilon and drop below
    /// -(1 - epsilon) somewhere on the horizon?
    pub fn two_sided_passage(&self) -> bool {
        self.first_up.is_some() && self.first_down.is_some()
    }
}

/// Evaluates the normalized envelope statistic on aligned series of noise
/// values and their closed-form variances at the given sample indices.
pub fn lil_envelope(
    checkpoints: &[usize],
    s_values: &[f64],
    s_sq: &[f64],
    epsilon: f64,
) -> Result<LILReport> {
    if checkpoints.len() != s_values.len() || checkpoints.len() != s_sq.len() {
        return Err(CoreError::InvalidDimension(
            "checkpoint, S and s^2 series must be aligned".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::InvalidParameter(
            "epsilon must lie in (0, 1)".into(),
        ));
    }
    let mut z = Vec::with_capacity(checkpoints.len());
    let mut max_z: Option<f64> = None;
    let mut min_z: Option<f64> = None;
    let mut first_up = None;
    let mut first_down = None;
    for (idx, (&s, &v)) in s_values.iter().zip(s_sq).enumerate() {
        if v > std::f64::consts::E {
            let denom = (2.0 * v * v.ln().ln()).sqrt();
            let zv = s / denom;
            max_z = Some(max_z.map_or(zv, |m: f64| m.max(zv)));
            min_z = Some(min_z.map_or(zv, |m: f64| m.min(zv)));
            if first_up.is_none() && zv > 1.0 - epsilon {
                first_up = Some(idx);
            }
            if first_down.is_none() && zv < -(1.0 - epsilon) {
                first_down = Some(idx);
            }
            z.push(Some(zv));
        } else {
            z.push(None);
        }
    }
    Ok(LILReport {
        epsilon,
        checkpoints: checkpoints.to_vec(),
        s_values: s_values.to_vec(),
        s_sq: s_sq.to_vec(),
        z,
        max_z,
        min_z,
        first_up,
        first_down,
    })
}

/// Geometric checkpoint schedule ceil(ratio^k), deduplicated and clipped to
/// [1, n_max]. The default ratio is 1.2.
pub fn checkpoint_schedule(n_max: usize, ratio: f64) -> Vec<usize> {
    assert!(ratio > 1.0, "ratio must exceed 1");
    let mut out = Vec::new();
    let mut value = 1.0f64;
    loop {
        let n = value.ceil() as usize;
        if n > n_max {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        value *= ratio;
    }
    out
}

/// Fraction of crossings whose interpolated |partner| falls below each delta.
#[derive(Debug, Clone)]
pub struct SimpleZeroRow {
    pub delta: f64,
    pub fraction: f64,
    pub hits: usize,
}

/// For each delta in the grid, the fraction of the component's sign changes
/// with interpolated |y_i| < delta. A path whose zeros are simple sends the
/// fraction to zero as delta shrinks; a manufactured double zero keeps it
/// bounded away from zero.
pub fn simple_zero_diagnostic(
    traj: &TrajectoryGrid,
    component: usize,
    delta_grid: &[f64],
) -> Vec<SimpleZeroRow> {
    let report = count_sign_changes(traj, component);
    simple_zero_fractions(&report.partner_abs_at_crossing, delta_grid)
}

/// Pooled variant over precollected |y| values at crossings.
pub fn simple_zero_fractions(partner_abs: &[f64], delta_grid: &[f64]) -> Vec<SimpleZeroRow> {
    let total = partner_abs.len();
    delta_grid
        .iter()
        .map(|&delta| {
            let hits = partner_abs.iter().filter(|&&v| v < delta).count();
            SimpleZeroRow {
                delta,
                fraction: if total == 0 {
                    0.0
                } else {
                    hits as f64 / total as f64
                },
                hits,
            }
        })
        .collect()
}
