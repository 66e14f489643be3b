//! Two-slice temporal Bayesian networks: learning the prior and transition
//! networks, unrolling them over `T` slices and answering posterior queries
//! exactly by variable elimination.

mod inference;
mod model;
mod unroll;

pub use inference::{posterior, posterior_by_index, Evidence, Posterior};
pub use model::{learn_2tbn, prev_name, LearnConfig, TwoSliceBn, DEFAULT_T_SLICES};
pub use unroll::{unroll, UnrolledNetwork};

use crate::bn::BnError;
use crate::direction::Direction;
use crate::ingest::DirectionMatrix;

#[derive(Debug, thiserror::Error)]
pub enum DbnError {
    #[error("need at least {needed} training rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("window has {got} rows, model expects {expected}")]
    WindowLengthMismatch { expected: usize, got: usize },
    #[error("evidence has zero probability under the model")]
    ZeroProbabilityEvidence,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("evidence is set on the query node `{0}`")]
    EvidenceOnQuery(String),
    #[error("conflicting evidence for `{0}`")]
    ConflictingEvidence(String),
    #[error("slice {slice} is outside 0..{t_slices}")]
    SliceOutOfRange { slice: usize, t_slices: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Bn(#[from] BnError),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Outcome of one next-day prediction.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Prediction {
    pub direction: Direction,
    /// Posterior probability of `direction`.
    pub probability: f64,
    /// Set when the posterior was exactly 50/50 and `Up` was chosen by rule.
    pub tie: bool,
}

/// A model unrolled once and reused for every window.
#[derive(Clone, Debug)]
pub struct Predictor {
    model: TwoSliceBn,
    network: UnrolledNetwork,
    target: usize,
}

impl Predictor {
    pub fn new(model: TwoSliceBn) -> Result<Self, DbnError> {
        let network = unroll(&model, model.t_slices)?;
        let target = model
            .variable_names
            .iter()
            .position(|v| *v == model.target)
            .ok_or_else(|| DbnError::UnknownVariable(model.target.clone()))?;
        Ok(Self {
            model,
            network,
            target,
        })
    }

    pub fn model(&self) -> &TwoSliceBn {
        &self.model
    }

    pub fn network(&self) -> &UnrolledNetwork {
        &self.network
    }

    /// Predicts the target at the last row of `window` from every other
    /// observation in the window. Rows are in the model's variable order.
    pub fn predict(&self, window: &[Vec<Direction>]) -> Result<Prediction, DbnError> {
        let t = self.network.t_slices;
        if window.len() != t {
            return Err(DbnError::WindowLengthMismatch {
                expected: t,
                got: window.len(),
            });
        }
        let n = self.model.variable_names.len();
        let mut evidence = Vec::with_capacity(n * t);
        for (slice, row) in window.iter().enumerate() {
            if row.len() != n {
                return Err(DbnError::InvalidModel(format!(
                    "window row has {} states for {n} variables",
                    row.len()
                )));
            }
            for (var, &state) in row.iter().enumerate() {
                if slice + 1 == t && var == self.target {
                    continue;
                }
                evidence.push((self.network.node(slice, var), state));
            }
        }
        let query = self.network.node(t - 1, self.target);
        let post = posterior_by_index(&self.network, &evidence, query)?;
        Ok(post.prediction())
    }
}

/// One-shot convenience over [`Predictor`] for a window drawn from a
/// [`DirectionMatrix`] whose variables include the model's.
pub fn predict_direction(model: &TwoSliceBn, matrix: &DirectionMatrix, start: usize) -> Result<Prediction, DbnError> {
    let t = model.t_slices;
    if start + t > matrix.len() {
        return Err(DbnError::WindowLengthMismatch {
            expected: t,
            got: matrix.len().saturating_sub(start),
        });
    }
    let projected = matrix
        .select(&model.variable_names)
        .map_err(|e| DbnError::UnknownVariable(e.to_string()))?;
    let window: Vec<Vec<Direction>> = projected.rows()[start..start + t].to_vec();
    Predictor::new(model.clone())?.predict(&window)
}
