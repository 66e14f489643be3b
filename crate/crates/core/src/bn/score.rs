use super::cpt::{column_map, family_counts};
use super::{BnError, Dag, Samples};

/// BIC contribution of one family (natural log): maximum-likelihood
/// log-likelihood minus `ln(N)/2` per free parameter.
///
/// `child` and `parents` are sample column indices.
pub fn family_bic(samples: &Samples, child: usize, parents: &[usize]) -> f64 {
    let n = samples.rows();
    let ll: f64 = family_counts(samples, child, parents)
        .iter()
        .map(|&[down, up]| {
            let total = (down + up) as f64;
            [down, up]
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| c as f64 * (c as f64 / total).ln())
                .sum::<f64>()
        })
        .sum();
    let free_params = (1usize << parents.len()) as f64;
    ll - 0.5 * (n.max(1) as f64).ln() * free_params
}

/// Total BIC of `dag` on `samples`; the sum of per-family scores.
pub fn bic_score(dag: &Dag, samples: &Samples) -> Result<f64, BnError> {
    let cols = column_map(dag, samples)?;
    Ok((0..dag.len())
        .map(|node| {
            let parents: Vec<usize> = dag.parents(node).iter().map(|&p| cols[p]).collect();
            family_bic(samples, cols[node], &parents)
        })
        .sum())
}
