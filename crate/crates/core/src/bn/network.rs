use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{BnError, Cpt, Dag};
use crate::direction::Direction;

/// A learned structure with its fitted CPTs and BIC score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredNetwork {
    pub dag: Dag,
    /// One CPT per node, in node order.
    pub cpts: Vec<Cpt>,
    pub score: f64,
    pub sample_count: usize,
    pub seed: u64,
}

/// On-disk form of a [`ScoredNetwork`]; parents and CPT rows are keyed by
/// node name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub nodes: Vec<String>,
    pub parents: IndexMap<String, Vec<String>>,
    pub cpts: IndexMap<String, Vec<[f64; 2]>>,
    pub score: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl ScoredNetwork {
    pub fn node_count(&self) -> usize {
        self.dag.len()
    }

    pub fn to_document(&self) -> ModelDocument {
        let name = |i: usize| self.dag.name(i).to_string();
        ModelDocument {
            nodes: self.dag.nodes().to_vec(),
            parents: (0..self.dag.len())
                .map(|v| (name(v), self.dag.parents(v).iter().map(|&p| name(p)).collect()))
                .collect(),
            cpts: self
                .cpts
                .iter()
                .map(|c| (name(c.node), c.rows.clone()))
                .collect(),
            score: self.score,
            sample_count: self.sample_count,
            seed: self.seed,
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self, BnError> {
        let index = |name: &str| {
            doc.nodes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| BnError::UnknownNode(name.to_string()))
        };
        let mut parent_sets = vec![Vec::new(); doc.nodes.len()];
        for (child, parents) in &doc.parents {
            parent_sets[index(child)?] = parents.iter().map(|p| index(p)).collect::<Result<_, _>>()?;
        }
        let dag = Dag::from_parents(doc.nodes.clone(), parent_sets)?;
        let cpts = (0..dag.len())
            .map(|v| {
                let rows = doc
                    .cpts
                    .get(dag.name(v))
                    .ok_or_else(|| BnError::InvalidModel(format!("no CPT for `{}`", dag.name(v))))?;
                let parents = dag.parents(v).to_vec();
                if rows.len() != 1 << parents.len() {
                    return Err(BnError::InvalidModel(format!(
                        "CPT for `{}` has {} rows, expected {}",
                        dag.name(v),
                        rows.len(),
                        1 << parents.len()
                    )));
                }
                if let Some(row) = rows.iter().find(|r| {
                    r.iter().any(|p| !(0.0..=1.0).contains(p)) || (r[0] + r[1] - 1.0).abs() > 1e-9
                }) {
                    return Err(BnError::InvalidModel(format!(
                        "CPT row {row:?} for `{}` is not a distribution",
                        dag.name(v)
                    )));
                }
                Ok(Cpt {
                    node: v,
                    parents,
                    rows: rows.clone(),
                })
            })
            .collect::<Result<_, BnError>>()?;
        Ok(Self {
            dag,
            cpts,
            score: doc.score,
            sample_count: doc.sample_count,
            seed: doc.seed,
        })
    }

    pub fn to_json(&self) -> Result<String, BnError> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self, BnError> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// Product over nodes of `P(x_i | pa_i)`; `assignment` is indexed by node.
pub fn joint_probability(network: &ScoredNetwork, assignment: &[Direction]) -> Result<f64, BnError> {
    if assignment.len() != network.node_count() {
        return Err(BnError::IncompleteAssignment {
            expected: network.node_count(),
            got: assignment.len(),
        });
    }
    Ok(network
        .cpts
        .iter()
        .map(|cpt| cpt.prob(assignment[cpt.node], cpt.parents.iter().map(|&p| assignment[p])))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Direction::*;

    fn single(p_up: f64) -> ScoredNetwork {
        ScoredNetwork {
            dag: Dag::empty(vec!["a".into()]),
            cpts: vec![Cpt {
                node: 0,
                parents: vec![],
                rows: vec![[1.0 - p_up, p_up]],
            }],
            score: 0.0,
            sample_count: 0,
            seed: 0,
        }
    }

    #[test]
    fn one_factor() {
        let net = single(0.7);
        assert!((joint_probability(&net, &[Up]).unwrap() - 0.7).abs() < 1e-15);
        assert!(matches!(
            joint_probability(&net, &[]),
            Err(BnError::IncompleteAssignment { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn uniform_product() {
        let k = 4;
        let names: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
        let dag = Dag::from_parents(names, vec![vec![], vec![0], vec![0, 1], vec![2]]).unwrap();
        let cpts = (0..k).map(|v| Cpt::uniform(v, dag.parents(v).to_vec())).collect();
        let net = ScoredNetwork { dag, cpts, score: 0.0, sample_count: 0, seed: 0 };
        let p = joint_probability(&net, &[Up, Down, Up, Up]).unwrap();
        assert!((p - 0.5f64.powi(k as i32)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut net = single(0.1 + 0.2);
        net.score = -123.456_789_012_345_67;
        let back = ScoredNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_bad_documents() {
        let mut doc = single(0.5).to_document();
        doc.cpts.insert("a".into(), vec![[0.2, 0.2]]);
        assert!(ScoredNetwork::from_document(&doc).is_err());
        let mut doc = single(0.5).to_document();
        doc.parents.insert("a".into(), vec!["ghost".into()]);
        assert!(matches!(ScoredNetwork::from_document(&doc), Err(BnError::UnknownNode(_))));
    }
}
