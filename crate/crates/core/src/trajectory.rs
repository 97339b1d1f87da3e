//! Simulated paths on a uniform time grid, with the provenance needed to
//! reproduce them bit-for-bit.

use ndarray::Array2;

use crate::error::{CoreError, Result};

/// Which one-step scheme produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeLabel {
    Exact,
    /// Locally linearized; records whether the stepsize satisfied
    /// h < pi / |lambda|_max.
    LocallyLinearized { threshold_ok: bool },
    EulerMaruyama,
}

impl SchemeLabel {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeLabel::Exact => "exact",
            SchemeLabel::LocallyLinearized { .. } => "ll",
            SchemeLabel::EulerMaruyama => "em",
        }
    }
}

/// Identifies the stream that produced a path.
#[derive(Debug, Clone, Copy)]
pub struct Provenance {
    pub root_seed: u64,
    pub stream_id: u64,
    pub scheme: SchemeLabel,
}

/// States on the uniform grid t_n = t0 + n * step, one row per instant,
/// 2d columns (x block then y block). Row 0 is the initial condition.
#[derive(Debug, Clone)]
pub struct TrajectoryGrid {
    times: Vec<f64>,
    states: Array2<f64>,
    provenance: Provenance,
}

impl TrajectoryGrid {
    pub fn new(times: Vec<f64>, states: Array2<f64>, provenance: Provenance) -> Result<Self> {
        if times.len() != states.nrows() || times.is_empty() {
            return Err(CoreError::InvalidDimension(format!(
                "{} time points vs {} state rows",
                times.len(),
                states.nrows()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidParameter(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of state columns (2d).
    pub fn state_dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &Array2<f64> {
        &self.states
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// One state component over time.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.column(index).to_vec()
    }
}
