use super::{DbnError, TwoSliceBn};
use crate::bn::{Cpt, Dag};

/// A `T`-slice expansion of a [`TwoSliceBn`]. Node `t * N + i` is variable
/// `i` at slice `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnrolledNetwork {
    pub t_slices: usize,
    pub variables: Vec<String>,
    pub dag: Dag,
    pub cpts: Vec<Cpt>,
}

impl UnrolledNetwork {
    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    #[inline]
    pub fn node(&self, slice: usize, variable: usize) -> usize {
        slice * self.variables.len() + variable
    }

    pub fn node_name(slice: usize, variable: &str) -> String {
        format!("{variable}[{slice}]")
    }
}

/// Slice 0 copies the prior network; every later slice is stamped from the
/// transition network, re-targeted to slices `(t - 1, t)`.
pub fn unroll(model: &TwoSliceBn, t_slices: usize) -> Result<UnrolledNetwork, DbnError> {
    if t_slices == 0 {
        return Err(DbnError::InvalidModel("cannot unroll to zero slices".into()));
    }
    model.validate()?;
    let n = model.n_vars();
    let names: Vec<String> = (0..t_slices)
        .flat_map(|t| {
            model
                .variable_names
                .iter()
                .map(move |v| UnrolledNetwork::node_name(t, v))
        })
        .collect();

    let mut parents = Vec::with_capacity(n * t_slices);
    let mut cpts = Vec::with_capacity(n * t_slices);
    for cpt in &model.prior.cpts {
        parents.push(cpt.parents.clone());
        cpts.push(cpt.clone());
    }
    for t in 1..t_slices {
        for v in 0..n {
            let stamp = &model.transition.cpts[n + v];
            // Previous copies (index < n) map to slice t - 1, current
            // variables to slice t; the relative order is unchanged, so the
            // CPT rows carry over verbatim.
            let mapped: Vec<usize> = stamp
                .parents
                .iter()
                .map(|&p| if p < n { (t - 1) * n + p } else { t * n + (p - n) })
                .collect();
            parents.push(mapped.clone());
            cpts.push(Cpt {
                node: t * n + v,
                parents: mapped,
                rows: stamp.rows.clone(),
            });
        }
    }
    let dag = Dag::from_parents(names, parents)?;
    Ok(UnrolledNetwork {
        t_slices,
        variables: model.variable_names.clone(),
        dag,
        cpts,
    })
}
