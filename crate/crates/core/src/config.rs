//! Experiment configuration: a single JSON document with matrices as
//! row-major nested arrays. Unknown keys are rejected; every run is fully
//! determined by (config, seed root).

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::linalg::SymMatrix;
use crate::models::{CoupledOscillatorSpec, NonlinearDriftSpec, PendulumPairSpec};

/// Which one-step scheme an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Exact,
    Ll,
    Em,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Exact => "exact",
            Scheme::Ll => "ll",
            Scheme::Em => "em",
        }
    }
}

/// Named drift for `custom-drift` models. Arbitrary code cannot come from a
/// JSON file, so the config surface offers a small registry; richer drifts
/// go through the library API.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftConfig {
    /// f(x, y) = 0.
    Zero,
    /// f(x, y) = K x for a d x d matrix K.
    Linear { matrix: Vec<Vec<f64>> },
}

/// Model section of the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Linear {
        lambda: Vec<Vec<f64>>,
        pi: Vec<Vec<f64>>,
        x0: Vec<f64>,
        y0: Vec<f64>,
        #[serde(default)]
        t0: f64,
    },
    PendulumPair {
        alpha: f64,
        beta: f64,
        sigma1: f64,
        sigma2: f64,
        x0: Vec<f64>,
        y0: Vec<f64>,
        #[serde(default)]
        t0: f64,
    },
    CustomDrift {
        d: usize,
        pi: Vec<Vec<f64>>,
        k1: f64,
        x0: Vec<f64>,
        y0: Vec<f64>,
        #[serde(default)]
        t0: f64,
        drift: DriftConfig,
    },
}

fn default_component() -> usize {
    1
}
fn default_epsilon() -> f64 {
    0.2
}
fn default_checkpoint_ratio() -> f64 {
    1.2
}
fn default_pass_rate() -> f64 {
    0.9
}
fn default_delta_grid() -> Vec<f64> {
    vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5]
}
fn default_h_values() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

/// One experiment, fully determining its outputs together with the seed root.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub scheme: Scheme,
    /// Grid step (delta for the exact sampler, h for LL/EM).
    pub step: f64,
    /// Number of steps; exactly one of `steps` / `t_end` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Time horizon; converted to steps = ceil(t_end / step).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub seed: u64,
    pub paths: usize,
    /// 1-based position component used by LIL / noise-part reports.
    #[serde(default = "default_component")]
    pub component: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_checkpoint_ratio")]
    pub checkpoint_ratio: f64,
    #[serde(default = "default_pass_rate")]
    pub pass_rate: f64,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    /// Stepsizes for compare-integrators.
    #[serde(default = "default_h_values")]
    pub h_values: Vec<f64>,
    /// Optional LL noise-injection override Q (2d x m, row-major).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ll_q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn to_array2(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CoreError::Config(format!(
            "{what} must be a nonempty rectangular matrix"
        )));
    }
    Array2::from_shape_vec((r, c), rows.iter().flatten().copied().collect())
        .map_err(|e| CoreError::Config(format!("{what}: {e}")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Canonical serialized form (field order fixed by the struct).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(CoreError::Config("step must be positive".into()));
        }
        if self.paths == 0 {
            return Err(CoreError::Config("paths must be >= 1".into()));
        }
        match (self.steps, self.t_end) {
            (Some(n), None) if n >= 1 => {}
            (None, Some(t)) if t > 0.0 => {}
            _ => {
                return Err(CoreError::Config(
                    "exactly one of steps (>= 1) or t_end (> 0) must be given".into(),
                ))
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CoreError::Config("epsilon must lie in (0, 1)".into()));
        }
        if !(self.checkpoint_ratio > 1.0) {
            return Err(CoreError::Config("checkpoint_ratio must exceed 1".into()));
        }
        if !(self.pass_rate > 0.0 && self.pass_rate <= 1.0) {
            return Err(CoreError::Config("pass_rate must lie in (0, 1]".into()));
        }
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|&d| !(d > 0.0)) {
            return Err(CoreError::Config("delta_grid entries must be positive".into()));
        }
        if self.h_values.is_empty() || self.h_values.iter().any(|&h| !(h > 0.0)) {
            return Err(CoreError::Config("h_values entries must be positive".into()));
        }
        if self.scheme == Scheme::Exact && !matches!(self.model, ModelConfig::Linear { .. }) {
            return Err(CoreError::Config(
                "scheme \"exact\" requires a linear model (the exact transition law \
                 exists only there); use \"em\" for nonlinear models"
                    .into(),
            ));
        }
        if self.component == 0 || self.component > self.model_dim() {
            return Err(CoreError::Config(format!(
                "component must lie in 1..={}",
                self.model_dim()
            )));
        }
        // Construct the model once so structural errors surface as config errors.
        match &self.model {
            ModelConfig::Linear { .. } => {
                self.build_linear()?;
            }
            ModelConfig::PendulumPair { .. } | ModelConfig::CustomDrift { .. } => {
                self.build_drift()?;
            }
        }
        Ok(())
    }

    /// Position-block dimension d of the configured model.
    pub fn model_dim(&self) -> usize {
        match &self.model {
            ModelConfig::Linear { lambda, .. } => lambda.len(),
            ModelConfig::PendulumPair { .. } => 2,
            ModelConfig::CustomDrift { d, .. } => *d,
        }
    }

    /// Number of steps, derived from t_end when necessary.
    pub fn num_steps(&self) -> usize {
        match (self.steps, self.t_end) {
            (Some(n), _) => n,
            (None, Some(t)) => (t / self.step).ceil() as usize,
            _ => unreachable!("validated"),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.model, ModelConfig::Linear { .. })
    }

    pub fn build_linear(&self) -> Result<CoupledOscillatorSpec> {
        match &self.model {
            ModelConfig::Linear {
                lambda,
                pi,
                x0,
                y0,
                t0,
            } => {
                let lambda = SymMatrix::new(to_array2(lambda, "lambda")?)
                    .map_err(|e| CoreError::Config(e.to_string()))?;
                let pi = to_array2(pi, "pi")?;
                CoupledOscillatorSpec::new(
                    lambda,
                    pi,
                    Array1::from(x0.clone()),
                    Array1::from(y0.clone()),
                    *t0,
                )
                .map_err(|e| CoreError::Config(e.to_string()))
            }
            _ => Err(CoreError::Config(
                "this command requires a linear model".into(),
            )),
        }
    }

    /// Builds the nonlinear-drift view of the model (any kind).
    pub fn build_drift(&self) -> Result<NonlinearDriftSpec> {
        match &self.model {
            ModelConfig::Linear { .. } => Ok(self.build_linear()?.to_drift_spec()),
            ModelConfig::PendulumPair {
                alpha,
                beta,
                sigma1,
                sigma2,
                x0,
                y0,
                t0,
            } => {
                if x0.len() != 2 || y0.len() != 2 {
                    return Err(CoreError::Config(
                        "pendulum-pair initial state must have 2 + 2 entries".into(),
                    ));
                }
                let spec = PendulumPairSpec::new(
                    *alpha,
                    *beta,
                    *sigma1,
                    *sigma2,
                    [x0[0], x0[1]],
                    [y0[0], y0[1]],
                    *t0,
                )
                .map_err(|e| CoreError::Config(e.to_string()))?;
                Ok(spec.to_drift_spec())
            }
            ModelConfig::CustomDrift {
                d,
                pi,
                k1,
                x0,
                y0,
                t0,
                drift,
            } => {
                let d = *d;
                if d == 0 || x0.len() != d || y0.len() != d {
                    return Err(CoreError::Config(
                        "custom-drift d and initial state sizes must agree".into(),
                    ));
                }
                let pi = to_array2(pi, "pi")?;
                if pi.nrows() != d {
                    return Err(CoreError::Config("pi must have d rows".into()));
                }
                if !(*k1 > 0.0) {
                    return Err(CoreError::Config("k1 must be positive".into()));
                }
                let evaluator: crate::models::DriftFn = match drift {
                    DriftConfig::Zero => Arc::new(move |_x: &[f64], _y: &[f64]| vec![0.0; d]),
                    DriftConfig::Linear { matrix } => {
                        let k = to_array2(matrix, "drift.matrix")?;
                        if k.nrows() != d || k.ncols() != d {
                            return Err(CoreError::Config("drift.matrix must be d x d".into()));
                        }
                        Arc::new(move |x: &[f64], _y: &[f64]| {
                            (0..d)
                                .map(|i| (0..d).map(|j| k[[i, j]] * x[j]).sum())
                                .collect()
                        })
                    }
                };
                Ok(NonlinearDriftSpec {
                    d,
                    m: pi.ncols(),
                    drift: evaluator,
                    pi,
                    k1: *k1,
                    x0: Array1::from(x0.clone()),
                    y0: Array1::from(y0.clone()),
                    t0: *t0,
                    label: "custom-drift".into(),
                })
            }
        }
    }

    /// Optional LL noise override as a matrix.
    pub fn ll_q_matrix(&self) -> Result<Option<Array2<f64>>> {
        match &self.ll_q {
            None => Ok(None),
            Some(rows) => Ok(Some(to_array2(rows, "ll_q")?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_linear() -> String {
        r#"{
            "model": {"kind": "linear", "lambda": [[1.0]], "pi": [[1.0]],
                      "x0": [1.0], "y0": [0.0]},
            "scheme": "exact",
            "step": 0.5,
            "steps": 10,
            "seed": 7,
            "paths": 1
        }"#
        .to_string()
    }

    #[test]
    fn parses_minimal_config() {
        let config = ExperimentConfig::from_json(&minimal_linear()).unwrap();
        assert_eq!(config.num_steps(), 10);
        assert_eq!(config.component, 1);
        assert_eq!(config.epsilon, 0.2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = minimal_linear().replace("\"paths\": 1", "\"paths\": 1, \"typo\": 3");
        assert!(matches!(
            ExperimentConfig::from_json(&text),
            Err(CoreError::Config(_))
        ));
    }

    #[test]
    fn exact_scheme_requires_linear_model() {
        let text = r#"{
            "model": {"kind": "pendulum-pair", "alpha": 1.0, "beta": 0.1,
                      "sigma1": 0.5, "sigma2": 0.5, "x0": [0.0, 0.0], "y0": [0.0, 0.0]},
            "scheme": "exact",
            "step": 0.001,
            "t_end": 1.0,
            "seed": 1,
            "paths": 1
        }"#;
        let err = ExperimentConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("requires a linear model"));
    }

    #[test]
    fn t_end_converts_to_steps() {
        let text = minimal_linear().replace("\"steps\": 10", "\"t_end\": 2.1");
        let config = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(config.num_steps(), 5);
    }

    #[test]
    fn both_horizons_rejected() {
        let text = minimal_linear().replace("\"steps\": 10", "\"steps\": 10, \"t_end\": 1.0");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let config = ExperimentConfig::from_json(&minimal_linear()).unwrap();
        let once = config.canonical_json();
        let reparsed = ExperimentConfig::from_json(&once).unwrap();
        assert_eq!(once, reparsed.canonical_json());
        assert_eq!(config.hash(), reparsed.hash());
    }

    #[test]
    fn custom_drift_registry() {
        let text = r#"{
            "model": {"kind": "custom-drift", "d": 1, "pi": [[1.0]], "k1": 2.0,
                      "x0": [0.0], "y0": [0.0],
                      "drift": {"name": "linear", "matrix": [[2.0]]}},
            "scheme": "em",
            "step": 0.01,
            "steps": 5,
            "seed": 1,
            "paths": 1
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        let drift = config.build_drift().unwrap();
        assert_eq!((drift.drift)(&[3.0], &[0.0]), vec![6.0]);
    }

    #[test]
    fn nonsymmetric_lambda_is_config_error() {
        let text = minimal_linear().replace("[[1.0]]", "[[1.0, 2.0], [0.0, 1.0]]");
        // x0/y0 sizes no longer match either, but the symmetry failure comes first.
        assert!(ExperimentConfig::from_json(&text).is_err());
    }
}
