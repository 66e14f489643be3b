//! Scenario queries against a fixed model: fix some states, read the
//! posterior of the target at the last slice.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dbn::{posterior, unroll, DbnError, Evidence, Posterior, TwoSliceBn, UnrolledNetwork};
use crate::direction::Direction;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: String,
    pub to: String,
}

impl From<(String, String)> for Arc {
    fn from((from, to): (String, String)) -> Self {
        Self { from, to }
    }
}

/// What a client needs to render an evidence grid and a structure summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSchema {
    pub model_id: String,
    pub variables: Vec<String>,
    pub target: String,
    #[serde(rename = "T")]
    pub t_slices: usize,
    pub feature_group: u8,
    pub prior_arcs: Vec<Arc>,
    pub intra_slice_arcs: Vec<Arc>,
    pub inter_slice_arcs: Vec<Arc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceItem {
    pub slice: usize,
    pub variable: String,
    pub state: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryNode {
    pub slice: usize,
    pub variable: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub evidence: Vec<EvidenceItem>,
    /// Defaults to the target at the last slice.
    #[serde(default)]
    pub query: Option<QueryNode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub down: f64,
    pub up: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub probabilities: Probabilities,
    pub argmax: Direction,
    pub tie: bool,
    pub query: QueryNode,
    pub model_id: String,
    pub evidence_echo: Vec<EvidenceItem>,
}

/// Hex SHA-256 prefix of the model's canonical JSON.
pub fn model_id(model: &TwoSliceBn) -> Result<String, DbnError> {
    let digest = Sha256::digest(model.to_json()?.as_bytes());
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// A model unrolled once, answering any number of stateless queries.
#[derive(Clone, Debug)]
pub struct WhatIfEngine {
    model: TwoSliceBn,
    network: UnrolledNetwork,
    schema: ModelSchema,
}

impl WhatIfEngine {
    pub fn new(model: TwoSliceBn) -> Result<Self, DbnError> {
        let network = unroll(&model, model.t_slices)?;
        let schema = ModelSchema {
            model_id: model_id(&model)?,
            variables: model.variable_names.clone(),
            target: model.target.clone(),
            t_slices: model.t_slices,
            feature_group: model.feature_group,
            prior_arcs: model.prior_arcs().into_iter().map(Arc::from).collect(),
            intra_slice_arcs: model.transition_intra_arcs().into_iter().map(Arc::from).collect(),
            inter_slice_arcs: model.inter_slice_arcs().into_iter().map(Arc::from).collect(),
        };
        Ok(Self { model, network, schema })
    }

    pub fn schema(&self) -> &ModelSchema {
        &self.schema
    }

    pub fn model(&self) -> &TwoSliceBn {
        &self.model
    }

    /// Resolves a variable by full name, or by the part after the source
    /// prefix (`open` for `price.open`) when that is unambiguous.
    pub fn resolve_variable(&self, name: &str) -> Result<String, DbnError> {
        let vars = &self.model.variable_names;
        if vars.iter().any(|v| v == name) {
            return Ok(name.to_string());
        }
        let lower = name.to_ascii_lowercase();
        let matches: Vec<&String> = vars
            .iter()
            .filter(|v| v.rsplit_once('.').is_some_and(|(_, short)| short == lower))
            .collect();
        match matches.as_slice() {
            [one] => Ok((*one).clone()),
            _ => Err(DbnError::UnknownVariable(name.to_string())),
        }
    }

    pub fn query(&self, request: &WhatIfRequest) -> Result<WhatIfResponse, DbnError> {
        let t = self.model.t_slices;
        let query = match &request.query {
            Some(q) => QueryNode {
                slice: q.slice,
                variable: self.resolve_variable(&q.variable)?,
            },
            None => QueryNode {
                slice: t - 1,
                variable: self.model.target.clone(),
            },
        };
        let mut evidence = Evidence::for_query(query.slice, query.variable.clone());
        let mut echo = Vec::with_capacity(request.evidence.len());
        for item in &request.evidence {
            let variable = self.resolve_variable(&item.variable)?;
            if item.slice >= t {
                return Err(DbnError::SliceOutOfRange { slice: item.slice, t_slices: t });
            }
            if let Some(prev) = evidence.observed.get(&(item.slice, variable.clone())) {
                if *prev != item.state {
                    return Err(DbnError::ConflictingEvidence(format!("{variable}[{}]", item.slice)));
                }
            }
            evidence = evidence.with(item.slice, variable.clone(), item.state);
            echo.push(EvidenceItem {
                slice: item.slice,
                variable,
                state: item.state,
            });
        }
        let post: Posterior = posterior(&self.network, &evidence)?;
        let prediction = post.prediction();
        Ok(WhatIfResponse {
            probabilities: Probabilities {
                down: post.down,
                up: post.up,
            },
            argmax: prediction.direction,
            tie: prediction.tie,
            query,
            model_id: self.schema.model_id.clone(),
            evidence_echo: echo,
        })
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("bad evidence `{item}`: expected slice:variable=Up|Down")]
pub struct EvidenceSpecError {
    pub item: String,
}

/// Parses `0:open=Up,4:volume=Down`.
pub fn parse_evidence_spec(spec: &str) -> Result<Vec<EvidenceItem>, EvidenceSpecError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let err = || EvidenceSpecError { item: item.to_string() };
            let (slice, rest) = item.split_once(':').ok_or_else(err)?;
            let (variable, state) = rest.split_once('=').ok_or_else(err)?;
            let variable = variable.trim();
            if variable.is_empty() {
                return Err(err());
            }
            Ok(EvidenceItem {
                slice: slice.trim().parse().map_err(|_| err())?,
                variable: variable.to_string(),
                state: state.trim().parse().map_err(|_| err())?,
            })
        })
        .collect()
}

/// Five-day open/high/low/volume movement scenarios with the close left
/// unobserved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Ethereum,
    Tether,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ethereum" | "eth" => Ok(Preset::Ethereum),
            "tether" | "usdt" => Ok(Preset::Tether),
            other => Err(format!("unknown preset `{other}` (expected ethereum or tether)")),
        }
    }
}

impl Preset {
    /// Rows are open, high, low, volume; columns are days 1-5.
    fn table(self) -> [[Direction; 5]; 4] {
        use Direction::{Down as D, Up as U};
        match self {
            Preset::Ethereum => [
                [U, U, D, D, D],
                [D, U, D, D, D],
                [U, D, D, D, D],
                [D, U, D, U, U],
            ],
            Preset::Tether => [
                [U, U, U, D, D],
                [D, U, U, D, U],
                [U, D, U, D, D],
                [U, U, D, D, U],
            ],
        }
    }

    pub fn evidence(self) -> Vec<EvidenceItem> {
        let vars = ["price.open", "price.high", "price.low", "price.volume"];
        let table = self.table();
        (0..5)
            .flat_map(|day| {
                vars.iter().zip(&table).map(move |(v, row)| EvidenceItem {
                    slice: day,
                    variable: v.to_string(),
                    state: row[day],
                })
            })
            .collect()
    }
}
