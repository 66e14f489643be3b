//! Exact posterior queries by sum-product variable elimination.
//!
//! Factors range over binary variables; bit `j` of a table index is the
//! state of the factor's `j`-th variable. Evidence is substituted while the
//! CPT factors are built, non-ancestors of the query and evidence are
//! dropped (they sum to one), and the remaining hidden variables are
//! eliminated in greedy min-fill order, ties broken by node name.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DbnError, Prediction, UnrolledNetwork};
use crate::direction::Direction;

#[derive(Clone, Debug, PartialEq)]
struct Factor {
    vars: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn scalar(value: f64) -> Self {
        Self {
            vars: Vec::new(),
            values: vec![value],
        }
    }

    /// Bit mask into `self` for each variable of `scope` (0 if absent).
    fn strides_in(&self, scope: &[usize]) -> Vec<usize> {
        scope
            .iter()
            .map(|v| self.vars.iter().position(|x| x == v).map_or(0, |p| 1 << p))
            .collect()
    }
}

fn index_in(strides: &[usize], assignment: usize) -> usize {
    strides
        .iter()
        .enumerate()
        .filter(|(j, _)| assignment >> j & 1 == 1)
        .map(|(_, s)| s)
        .sum()
}

/// Multiplies `factors` and sums out `var` (if given) in one pass.
fn multiply_and_sum_out(factors: &[Factor], var: Option<usize>) -> Factor {
    let mut scope: BTreeSet<usize> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect();
    if let Some(v) = var {
        scope.remove(&v);
    }
    let scope: Vec<usize> = scope.into_iter().collect();
    let strides: Vec<Vec<usize>> = factors.iter().map(|f| f.strides_in(&scope)).collect();
    let summed: Vec<usize> = match var {
        Some(v) => factors
            .iter()
            .map(|f| f.vars.iter().position(|x| *x == v).map_or(0, |p| 1 << p))
            .collect(),
        None => vec![0; factors.len()],
    };
    let states: &[usize] = if var.is_some() { &[0, 1] } else { &[0] };

    let values = (0..1usize << scope.len())
        .map(|a| {
            let base: Vec<usize> = strides.iter().map(|s| index_in(s, a)).collect();
            states
                .iter()
                .map(|&x| {
                    factors
                        .iter()
                        .zip(&base)
                        .zip(&summed)
                        .map(|((f, &b), &s)| f.values[b + x * s])
                        .product::<f64>()
                })
                .sum()
        })
        .collect();
    Factor { vars: scope, values }
}

/// The CPT of `node` as a factor with observed variables substituted.
fn cpt_factor(network: &UnrolledNetwork, node: usize, observed: &[Option<Direction>]) -> Factor {
    let cpt = &network.cpts[node];
    let family: Vec<usize> = std::iter::once(node).chain(cpt.parents.iter().copied()).collect();
    let mut vars: Vec<usize> = family.iter().copied().filter(|v| observed[*v].is_none()).collect();
    vars.sort_unstable();
    vars.dedup();
    let values = (0..1usize << vars.len())
        .map(|a| {
            let state = |v: usize| {
                observed[v].unwrap_or_else(|| {
                    let pos = vars.binary_search(&v).expect("free variable");
                    Direction::from_index(a >> pos & 1)
                })
            };
            cpt.prob(state(node), cpt.parents.iter().map(|&p| state(p)))
        })
        .collect();
    Factor { vars, values }
}

fn ancestors_of(network: &UnrolledNetwork, roots: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut keep = vec![false; network.dag.len()];
    let mut stack: Vec<usize> = roots.into_iter().collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut keep[v], true) {
            continue;
        }
        stack.extend(network.dag.parents(v).iter().copied().filter(|p| !keep[*p]));
    }
    keep
}

/// Greedy min-fill pick among `hidden`; ties go to the smaller node name.
fn pick_min_fill(hidden: &BTreeSet<usize>, factors: &[Factor], network: &UnrolledNetwork) -> usize {
    let mut best: Option<(usize, &str, usize)> = None;
    for &v in hidden {
        let neighbours: BTreeSet<usize> = factors
            .iter()
            .filter(|f| f.vars.contains(&v))
            .flat_map(|f| f.vars.iter().copied())
            .filter(|&u| u != v)
            .collect();
        let nb: Vec<usize> = neighbours.into_iter().collect();
        let mut fill = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !factors.iter().any(|f| f.vars.contains(&a) && f.vars.contains(&b)) {
                    fill += 1;
                }
            }
        }
        let name = network.dag.name(v);
        let better = match best {
            None => true,
            Some((bf, bn, _)) => fill < bf || (fill == bf && name < bn),
        };
        if better {
            best = Some((fill, name, v));
        }
    }
    best.expect("hidden set is non-empty").2
}

/// Exact `P(query | evidence)` on an unrolled network, by node index.
pub fn posterior_by_index(
    network: &UnrolledNetwork,
    evidence: &[(usize, Direction)],
    query: usize,
) -> Result<Posterior, DbnError> {
    let n_nodes = network.dag.len();
    let mut observed = vec![None; n_nodes];
    for &(node, state) in evidence {
        if node >= n_nodes {
            return Err(DbnError::InvalidModel(format!("evidence node {node} out of range")));
        }
        if node == query {
            return Err(DbnError::EvidenceOnQuery(network.dag.name(query).to_string()));
        }
        observed[node] = Some(state);
    }

    let relevant = ancestors_of(network, evidence.iter().map(|e| e.0).chain([query]));
    let mut factors: Vec<Factor> = (0..n_nodes)
        .filter(|&v| relevant[v])
        .map(|v| cpt_factor(network, v, &observed))
        .collect();
    let mut hidden: BTreeSet<usize> = (0..n_nodes)
        .filter(|&v| relevant[v] && observed[v].is_none() && v != query)
        .collect();

    while !hidden.is_empty() {
        let v = pick_min_fill(&hidden, &factors, network);
        hidden.remove(&v);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        factors.push(multiply_and_sum_out(&touching, Some(v)));
    }

    let joint = if factors.is_empty() {
        Factor::scalar(1.0)
    } else {
        multiply_and_sum_out(&factors, None)
    };
    debug_assert!(joint.vars.iter().all(|&v| v == query));
    let (down, up) = match joint.vars.as_slice() {
        [] => (0.5 * joint.values[0], 0.5 * joint.values[0]),
        _ => (joint.values[0], joint.values[1]),
    };
    let z = down + up;
    if !(z > 0.0) || !z.is_finite() {
        return Err(DbnError::ZeroProbabilityEvidence);
    }
    Ok(Posterior {
        down: down / z,
        up: up / z,
    })
}

/// Named evidence plus a named query, both addressed by `(slice, variable)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evidence {
    pub observed: BTreeMap<(usize, String), Direction>,
    pub query: (usize, String),
}

impl Evidence {
    pub fn for_query(slice: usize, variable: impl Into<String>) -> Self {
        Self {
            observed: BTreeMap::new(),
            query: (slice, variable.into()),
        }
    }

    pub fn with(mut self, slice: usize, variable: impl Into<String>, state: Direction) -> Self {
        self.observed.insert((slice, variable.into()), state);
        self
    }

    fn resolve_one(network: &UnrolledNetwork, slice: usize, variable: &str) -> Result<usize, DbnError> {
        if slice >= network.t_slices {
            return Err(DbnError::SliceOutOfRange {
                slice,
                t_slices: network.t_slices,
            });
        }
        let var = network
            .variables
            .iter()
            .position(|v| v == variable)
            .ok_or_else(|| DbnError::UnknownVariable(variable.to_string()))?;
        Ok(network.node(slice, var))
    }
}

/// Exact posterior of the query in `evidence`.
pub fn posterior(network: &UnrolledNetwork, evidence: &Evidence) -> Result<Posterior, DbnError> {
    let query = Evidence::resolve_one(network, evidence.query.0, &evidence.query.1)?;
    if evidence.observed.contains_key(&evidence.query) {
        return Err(DbnError::EvidenceOnQuery(evidence.query.1.clone()));
    }
    let observed = evidence
        .observed
        .iter()
        .map(|((slice, var), state)| Ok((Evidence::resolve_one(network, *slice, var)?, *state)))
        .collect::<Result<Vec<_>, DbnError>>()?;
    posterior_by_index(network, &observed, query)
}

/// Normalized distribution over `{Down, Up}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub down: f64,
    pub up: f64,
}

impl Posterior {
    pub fn prob(&self, state: Direction) -> f64 {
        match state {
            Direction::Down => self.down,
            Direction::Up => self.up,
        }
    }

    /// Most likely state; an exact 50/50 split resolves to `Up`.
    pub fn argmax(&self) -> Direction {
        if self.down > self.up {
            Direction::Down
        } else {
            Direction::Up
        }
    }

    pub fn prediction(&self) -> Prediction {
        let direction = self.argmax();
        Prediction {
            direction,
            probability: self.prob(direction),
            tie: self.down == self.up,
        }
    }
}
