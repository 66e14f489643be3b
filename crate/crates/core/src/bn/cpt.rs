use serde::{Deserialize, Serialize};

use super::{BnError, Dag, Samples};
use crate::direction::Direction;

/// Conditional probability table of one binary node.
///
/// Row `r` holds `[P(Down | pa), P(Up | pa)]` for the parent configuration
/// whose binary encoding is `r`, with the first parent as the most
/// significant bit (see [`config_index`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub node: usize,
    pub parents: Vec<usize>,
    pub rows: Vec<[f64; 2]>,
}

impl Cpt {
    pub fn parent_config_count(&self) -> usize {
        1 << self.parents.len()
    }

    pub fn uniform(node: usize, parents: Vec<usize>) -> Self {
        let rows = vec![[0.5, 0.5]; 1 << parents.len()];
        Self {
            node,
            parents,
            rows,
        }
    }

    /// `P(state | parent states)`, parent states given in `self.parents` order.
    pub fn prob(&self, state: Direction, parent_states: impl IntoIterator<Item = Direction>) -> f64 {
        self.rows[config_index(parent_states)][state.index()]
    }
}

/// Encodes parent states as a row index, first parent most significant.
pub fn config_index(parent_states: impl IntoIterator<Item = Direction>) -> usize {
    parent_states
        .into_iter()
        .fold(0, |acc, s| (acc << 1) | s.index())
}

/// Per-configuration `[count(Down), count(Up)]` for `child` given `parents`,
/// all as sample column indices.
pub(crate) fn family_counts(samples: &Samples, child: usize, parents: &[usize]) -> Vec<[u32; 2]> {
    let mut counts = vec![[0u32; 2]; 1 << parents.len()];
    let child_col = samples.column(child);
    let parent_cols: Vec<&[u8]> = parents.iter().map(|&p| samples.column(p)).collect();
    for (row, &state) in child_col.iter().enumerate() {
        let cfg = parent_cols
            .iter()
            .fold(0usize, |acc, col| (acc << 1) | col[row] as usize);
        counts[cfg][state as usize] += 1;
    }
    counts
}

/// Maps each DAG node to its sample column by name.
pub(crate) fn column_map(dag: &Dag, samples: &Samples) -> Result<Vec<usize>, BnError> {
    dag.nodes()
        .iter()
        .map(|n| {
            samples
                .index_of(n)
                .ok_or_else(|| BnError::VariableMissing(n.clone()))
        })
        .collect()
}

/// Laplace-smoothed CPTs: `(count(x, pa) + alpha) / (count(pa) + 2 alpha)`.
/// Unseen parent configurations come out uniform.
pub fn fit_cpts(dag: &Dag, samples: &Samples, alpha: f64) -> Result<Vec<Cpt>, BnError> {
    if !(alpha > 0.0) {
        return Err(BnError::InvalidAlpha(alpha));
    }
    let cols = column_map(dag, samples)?;
    Ok((0..dag.len())
        .map(|node| {
            let parents = dag.parents(node).to_vec();
            let parent_cols: Vec<usize> = parents.iter().map(|&p| cols[p]).collect();
            let rows = family_counts(samples, cols[node], &parent_cols)
                .into_iter()
                .map(|[down, up]| {
                    let total = (down + up) as f64 + 2.0 * alpha;
                    let p_down = (down as f64 + alpha) / total;
                    [p_down, 1.0 - p_down]
                })
                .collect();
            Cpt {
                node,
                parents,
                rows,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_index_is_big_endian() {
        use Direction::*;
        assert_eq!(config_index([]), 0);
        assert_eq!(config_index([Up, Down]), 2);
        assert_eq!(config_index([Down, Up]), 1);
        assert_eq!(config_index([Up, Up, Up]), 7);
    }

    #[test]
    fn laplace_single_node() {
        let col = [vec![1u8; 6], vec![0u8; 4]].concat();
        let samples = Samples::new(vec!["a".into()], vec![col]);
        let dag = Dag::empty(vec!["a".into()]);
        let cpts = fit_cpts(&dag, &samples, 1.0).unwrap();
        assert!((cpts[0].rows[0][1] - 7.0 / 12.0).abs() < 1e-15);
        assert!((cpts[0].rows[0][0] - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_configuration_is_uniform() {
        // b is always Down, so configurations with b = Up never occur.
        let samples = Samples::new(
            vec!["a".into(), "b".into()],
            vec![vec![0, 1, 1, 0], vec![0, 0, 0, 0]],
        );
        let dag = Dag::from_parents(samples.names().to_vec(), vec![vec![1], vec![]]).unwrap();
        let cpts = fit_cpts(&dag, &samples, 1.0).unwrap();
        assert_eq!(cpts[0].rows[1], [0.5, 0.5]);
        assert_eq!(cpts[0].rows[0], [0.5, 0.5]);
    }

    #[test]
    fn missing_variable_and_bad_alpha() {
        let samples = Samples::new(vec!["a".into()], vec![vec![0, 1]]);
        let dag = Dag::empty(vec!["a".into(), "z".into()]);
        assert!(matches!(fit_cpts(&dag, &samples, 1.0), Err(BnError::VariableMissing(v)) if v == "z"));
        let dag = Dag::empty(vec!["a".into()]);
        assert!(matches!(fit_cpts(&dag, &samples, 0.0), Err(BnError::InvalidAlpha(_))));
    }
}
