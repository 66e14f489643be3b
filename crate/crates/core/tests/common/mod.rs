#![allow(dead_code)]

pub mod indicators;

use cryptodbn::dbn::TwoSliceBn;
use cryptodbn::Direction;

/// Joint probability of a full `T x N` assignment, multiplied out directly
/// from the prior and transition tables.
pub fn joint(model: &TwoSliceBn, states: &[Vec<Direction>]) -> f64 {
    let n = model.n_vars();
    let mut p = 1.0;
    for (i, cpt) in model.prior.cpts.iter().enumerate() {
        p *= cpt.prob(states[0][i], cpt.parents.iter().map(|&q| states[0][q]));
    }
    for t in 1..states.len() {
        for i in 0..n {
            let cpt = &model.transition.cpts[n + i];
            let parents = cpt
                .parents
                .iter()
                .map(|&q| if q < n { states[t - 1][q] } else { states[t][q - n] });
            p *= cpt.prob(states[t][i], parents);
        }
    }
    p
}

/// `(P(Down), P(Up))` of `query` by summing the joint over every hidden
/// assignment. Nodes are `(slice, variable)` pairs.
pub fn brute_posterior(
    model: &TwoSliceBn,
    t_slices: usize,
    evidence: &[((usize, usize), Direction)],
    query: (usize, usize),
) -> (f64, f64) {
    let n = model.n_vars();
    let mut fixed: Vec<Vec<Option<Direction>>> = vec![vec![None; n]; t_slices];
    for &((t, i), d) in evidence {
        fixed[t][i] = Some(d);
    }
    let hidden: Vec<(usize, usize)> = (0..t_slices)
        .flat_map(|t| (0..n).map(move |i| (t, i)))
        .filter(|&(t, i)| fixed[t][i].is_none() && (t, i) != query)
        .collect();
    let mut mass = [0.0f64; 2];
    for q in Direction::ALL {
        let mut states: Vec<Vec<Direction>> = fixed
            .iter()
            .map(|row| row.iter().map(|s| s.unwrap_or(Direction::Down)).collect())
            .collect();
        states[query.0][query.1] = q;
        for mask in 0u64..(1u64 << hidden.len()) {
            for (b, &(t, i)) in hidden.iter().enumerate() {
                states[t][i] = Direction::from_index((mask >> b & 1) as usize);
            }
            mass[q.index()] += joint(model, &states);
        }
    }
    let z = mass[0] + mass[1];
    (mass[0] / z, mass[1] / z)
}
