use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DbnError;
use crate::bn::{hill_climb, EdgeConstraints, ModelDocument, Samples, ScoredNetwork, SearchConfig};
use crate::ingest::{DirectionMatrix, TARGET_COLUMN};

pub const DEFAULT_T_SLICES: usize = 5;

/// Name of a variable's previous-slice copy inside the transition network.
pub fn prev_name(variable: &str) -> String {
    format!("{variable}@prev")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub search: SearchConfig,
    pub t_slices: usize,
    pub feature_group: u8,
    /// Absolute floor on training rows.
    pub min_rows: usize,
    /// Additional floor of this many rows per variable.
    pub rows_per_variable: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            t_slices: DEFAULT_T_SLICES,
            feature_group: 1,
            min_rows: 50,
            rows_per_variable: 10,
        }
    }
}

/// The pair (prior network, transition network).
///
/// The transition network's nodes are the previous-slice copies (see
/// [`prev_name`]) followed by the current-slice variables. Previous copies
/// have no parents; a current variable may have current-slice parents and
/// its own previous copy, nothing else.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSliceBn {
    pub prior: ScoredNetwork,
    pub transition: ScoredNetwork,
    pub variable_names: Vec<String>,
    pub target: String,
    pub feature_group: u8,
    pub t_slices: usize,
}

#[derive(Serialize, Deserialize)]
struct TwoSliceDocument {
    prior: ModelDocument,
    transition: ModelDocument,
    variable_names: Vec<String>,
    feature_group: u8,
    #[serde(rename = "T")]
    t_slices: usize,
    #[serde(default = "default_target")]
    target: String,
}

fn default_target() -> String {
    TARGET_COLUMN.to_string()
}

impl TwoSliceBn {
    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    /// Checks the structural rules of a 2TBN.
    pub fn validate(&self) -> Result<(), DbnError> {
        let n = self.n_vars();
        let bad = |msg: String| Err(DbnError::InvalidModel(msg));
        if self.t_slices == 0 {
            return bad("T must be at least 1".into());
        }
        if !self.variable_names.contains(&self.target) {
            return Err(DbnError::UnknownVariable(self.target.clone()));
        }
        if self.prior.dag.nodes() != self.variable_names.as_slice() {
            return bad("prior nodes differ from variable names".into());
        }
        let expected: Vec<String> = self
            .variable_names
            .iter()
            .map(|v| prev_name(v))
            .chain(self.variable_names.iter().cloned())
            .collect();
        if self.transition.dag.nodes() != expected.as_slice() {
            return bad("transition nodes must be previous copies followed by current variables".into());
        }
        for v in 0..n {
            if !self.transition.dag.parents(v).is_empty() {
                return bad(format!("previous-slice node `{}` has parents", expected[v]));
            }
            for &p in self.transition.dag.parents(n + v) {
                if p < n && p != v {
                    return bad(format!(
                        "inter-slice arc {} -> {} does not join corresponding nodes",
                        expected[p],
                        expected[n + v]
                    ));
                }
            }
        }
        Ok(())
    }

    /// Previous-slice parent of each variable that has a persistence arc.
    pub fn inter_slice_arcs(&self) -> Vec<(String, String)> {
        let n = self.n_vars();
        (0..n)
            .filter(|&v| self.transition.dag.has_edge(v, n + v))
            .map(|v| (prev_name(&self.variable_names[v]), self.variable_names[v].clone()))
            .collect()
    }

    /// Intra-slice arcs of the transition network, by variable name.
    pub fn transition_intra_arcs(&self) -> Vec<(String, String)> {
        let n = self.n_vars();
        self.transition
            .dag
            .edges()
            .into_iter()
            .filter(|&(p, _)| p >= n)
            .map(|(p, c)| (self.variable_names[p - n].clone(), self.variable_names[c - n].clone()))
            .collect()
    }

    pub fn prior_arcs(&self) -> Vec<(String, String)> {
        self.prior
            .dag
            .edges()
            .into_iter()
            .map(|(p, c)| (self.variable_names[p].clone(), self.variable_names[c].clone()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String, DbnError> {
        let doc = TwoSliceDocument {
            prior: self.prior.to_document(),
            transition: self.transition.to_document(),
            variable_names: self.variable_names.clone(),
            feature_group: self.feature_group,
            t_slices: self.t_slices,
            target: self.target.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DbnError> {
        let doc: TwoSliceDocument = serde_json::from_str(text)?;
        let model = Self {
            prior: ScoredNetwork::from_document(&doc.prior)?,
            transition: ScoredNetwork::from_document(&doc.transition)?,
            variable_names: doc.variable_names,
            target: doc.target,
            feature_group: doc.feature_group,
            t_slices: doc.t_slices,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Edges the transition search may add: each variable's persistence arc and
/// any arc between two distinct current-slice variables.
fn transition_constraints(n: usize) -> EdgeConstraints {
    let mut whitelist = BTreeSet::new();
    for i in 0..n {
        whitelist.insert((i, n + i));
        for j in 0..n {
            if i != j {
                whitelist.insert((n + i, n + j));
            }
        }
    }
    EdgeConstraints {
        whitelist: Some(whitelist),
        ..Default::default()
    }
}

/// Learns the prior network on single rows and the transition network on
/// consecutive row pairs of `train`.
pub fn learn_2tbn(train: &DirectionMatrix, config: &LearnConfig) -> Result<TwoSliceBn, DbnError> {
    let n = train.variables().len();
    let needed = config.min_rows.max(config.rows_per_variable * n);
    if train.len() < needed {
        return Err(DbnError::TooFewRows {
            rows: train.len(),
            needed,
        });
    }
    let prior = hill_climb(&Samples::from_matrix(train), &EdgeConstraints::default(), &config.search)?;
    let transition_search = SearchConfig {
        seed: config.search.seed.wrapping_add(1),
        ..config.search
    };
    let transition = hill_climb(
        &Samples::lagged(train, prev_name),
        &transition_constraints(n),
        &transition_search,
    )?;
    let model = TwoSliceBn {
        prior,
        transition,
        variable_names: train.variables().to_vec(),
        target: train.target_name().to_string(),
        feature_group: config.feature_group,
        t_slices: config.t_slices,
    };
    debug_assert!(model.validate().is_ok());
    Ok(model)
}
