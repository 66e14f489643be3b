use std::collections::BTreeSet;

use cryptodbn::bn::{bic_score, fit_cpts, hill_climb, Dag, EdgeConstraints, Samples, SearchConfig};
use cryptodbn::dbn::{learn_2tbn, prev_name, LearnConfig};
use cryptodbn::synthetic::{build_2tbn, reference_2tbn, sample_2tbn};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn random_samples(n_vars: usize, rows: usize, seed: u64) -> Samples {
    // x1 is a noisy copy of x0, the rest are independent coins.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(rows); n_vars];
    for _ in 0..rows {
        let a: u8 = rng.gen_range(0..2);
        for (v, col) in cols.iter_mut().enumerate() {
            col.push(match v {
                0 => a,
                1 if rng.gen_bool(0.85) => a,
                _ => rng.gen_range(0..2),
            });
        }
    }
    Samples::new(names(n_vars), cols)
}

#[test]
fn chain_cpts_match_direct_tally() {
    let samples = random_samples(3, 50, 8);
    let dag = Dag::from_parents(names(3), vec![vec![], vec![0], vec![1]]).unwrap();
    let cpts = fit_cpts(&dag, &samples, 1.0).unwrap();
    let col = |v: usize| samples.column(v);
    for child in 0..3 {
        let parents = dag.parents(child);
        for config in 0..1usize << parents.len() {
            let matches = |r: usize| {
                parents
                    .iter()
                    .enumerate()
                    .all(|(k, &p)| col(p)[r] as usize == (config >> (parents.len() - 1 - k)) & 1)
            };
            let n_cfg = (0..50).filter(|&r| matches(r)).count() as f64;
            let n_up = (0..50).filter(|&r| matches(r) && col(child)[r] == 1).count() as f64;
            let want_up = (n_up + 1.0) / (n_cfg + 2.0);
            let got = cpts[child].rows[config];
            assert!((got[1] - want_up).abs() < 1e-15 && (got[0] - (1.0 - want_up)).abs() < 1e-15);
        }
    }
}

#[test]
fn bic_matches_full_joint_likelihood() {
    let samples = random_samples(4, 200, 3);
    let dag = Dag::from_parents(names(4), vec![vec![], vec![0], vec![0, 1], vec![2]]).unwrap();
    // Maximum-likelihood CPTs by tally, then the log-likelihood row by row.
    let mut ll = 0.0;
    for r in 0..200 {
        for child in 0..4 {
            let pa = dag.parents(child);
            let same_cfg = |s: usize| pa.iter().all(|&p| samples.column(p)[s] == samples.column(p)[r]);
            let n_cfg = (0..200).filter(|&s| same_cfg(s)).count() as f64;
            let n_state = (0..200)
                .filter(|&s| same_cfg(s) && samples.column(child)[s] == samples.column(child)[r])
                .count() as f64;
            ll += (n_state / n_cfg).ln();
        }
    }
    let params: usize = (0..4).map(|v| 1usize << dag.parents(v).len()).sum();
    let want = ll - (200f64).ln() / 2.0 * params as f64;
    assert!((bic_score(&dag, &samples).unwrap() - want).abs() < 1e-9);
}

/// Every single add, delete or reverse move that keeps the graph legal
/// fails to raise the score.
fn assert_local_optimum(dag: &Dag, samples: &Samples, max_parents: usize, allows: impl Fn(usize, usize) -> bool) {
    let base = bic_score(dag, samples).unwrap();
    let n = dag.len();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut g = dag.clone();
            let legal = if dag.has_edge(a, b) {
                g.remove_edge(a, b);
                true
            } else if allows(a, b) && dag.parents(b).len() < max_parents {
                g.add_edge(a, b).is_ok()
            } else {
                false
            };
            if legal {
                assert!(bic_score(&g, samples).unwrap() <= base + 1e-9, "move {a}->{b} improves");
            }
            if dag.has_edge(a, b) && allows(b, a) && dag.parents(a).len() < max_parents {
                let mut g = dag.clone();
                g.remove_edge(a, b);
                if g.add_edge(b, a).is_ok() {
                    assert!(bic_score(&g, samples).unwrap() <= base + 1e-9, "reverse {a}->{b} improves");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hill_climb_returns_consistent_local_optimum(seed in 0u64..1000, n in 2usize..=5, max_parents in 1usize..=3) {
        let samples = random_samples(n, 300, seed);
        let config = SearchConfig { max_parents, restarts: 3, seed, alpha: 1.0 };
        let net = hill_climb(&samples, &EdgeConstraints::default(), &config).unwrap();
        prop_assert!(net.dag.is_acyclic());
        prop_assert!((0..n).all(|v| net.dag.parents(v).len() <= max_parents));
        prop_assert!((net.score - bic_score(&net.dag, &samples).unwrap()).abs() < 1e-9);
        for cpt in &net.cpts {
            for row in &cpt.rows {
                prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            }
        }
        assert_local_optimum(&net.dag, &samples, max_parents, |_, _| true);
        let again = hill_climb(&samples, &EdgeConstraints::default(), &config).unwrap();
        prop_assert_eq!(again, net);
    }
}

#[test]
fn strong_persistence_is_recovered() {
    // Every variable copies its previous value with probability 0.95.
    let keep = vec![[0.95, 0.05], [0.05, 0.95]];
    let model = build_2tbn(
        &["a", "b", "c", "d"],
        "a",
        vec![(vec![], vec![[0.5, 0.5]]); 4],
        (0..4).map(|v| (vec![v], keep.clone())).collect(),
        5,
    )
    .unwrap();
    let data = sample_2tbn(&model, 3000, 17);
    let learned = learn_2tbn(&data, &LearnConfig::default()).unwrap();
    assert_eq!(learned.inter_slice_arcs().len(), 4);
    assert!(learned.transition_intra_arcs().is_empty());
}

#[test]
fn surviving_arcs_are_not_removable() {
    let model = reference_2tbn(0.9);
    let data = sample_2tbn(&model, 3000, 2);
    let learned = learn_2tbn(&data, &LearnConfig::default()).unwrap();
    let samples = Samples::lagged(&data, prev_name);
    let n = model.n_vars();
    let allowed: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|i| {
            std::iter::once((i, n + i)).chain((0..n).filter(move |&j| j != i).map(move |j| (n + i, n + j)))
        })
        .collect();
    assert_local_optimum(&learned.transition.dag, &samples, 3, |a, b| allowed.contains(&(a, b)));
}
