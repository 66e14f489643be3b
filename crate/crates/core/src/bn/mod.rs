//! Static discrete Bayesian networks over binary (Down/Up) variables:
//! DAG bookkeeping, Laplace-smoothed CPTs, decomposable BIC scoring and
//! greedy hill-climbing structure search.

mod cpt;
mod dag;
mod network;
mod samples;
mod score;
mod search;

pub use cpt::{config_index, fit_cpts, Cpt};
pub use dag::Dag;
pub use network::{joint_probability, ModelDocument, ScoredNetwork};
pub use samples::Samples;
pub use score::{bic_score, family_bic};
pub use search::{hill_climb, EdgeConstraints, SearchConfig};

#[derive(Debug, thiserror::Error)]
pub enum BnError {
    #[error("variable `{0}` is not present in the data")]
    VariableMissing(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("edge {from} -> {to} would create a cycle")]
    Cycle { from: String, to: String },
    #[error("self loop on `{0}`")]
    SelfLoop(String),
    #[error("assignment covers {got} of {expected} nodes")]
    IncompleteAssignment { expected: usize, got: usize },
    #[error("smoothing pseudo-count must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}
