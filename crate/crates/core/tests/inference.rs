mod common;

use common::brute_posterior;
use cryptodbn::dbn::{posterior, posterior_by_index, unroll, DbnError, Evidence, Predictor};
use cryptodbn::synthetic::{build_2tbn, random_2tbn, reference_2tbn};
use cryptodbn::Direction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_evidence(rng: &mut ChaCha8Rng, n: usize, t: usize, query: (usize, usize)) -> Vec<((usize, usize), Direction)> {
    let density: f64 = rng.gen_range(0.0..1.0);
    let mut ev = Vec::new();
    for s in 0..t {
        for i in 0..n {
            if (s, i) != query && rng.gen_bool(density) {
                ev.push(((s, i), Direction::from_index(rng.gen_range(0..2))));
            }
        }
    }
    ev
}

#[test]
fn variable_elimination_matches_enumeration() {
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.gen_range(1..=4);
        let t = 5;
        let model = random_2tbn(n, t, seed);
        let net = unroll(&model, t).unwrap();
        let query = (rng.gen_range(0..t), rng.gen_range(0..n));
        let ev = random_evidence(&mut rng, n, t, query);
        let by_index: Vec<(usize, Direction)> = ev.iter().map(|&((s, i), d)| (net.node(s, i), d)).collect();
        let got = posterior_by_index(&net, &by_index, net.node(query.0, query.1)).unwrap();
        let (down, up) = brute_posterior(&model, t, &ev, query);
        assert!((got.down - down).abs() < 1e-9 && (got.up - up).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn named_evidence_resolves_like_indices() {
    let model = random_2tbn(3, 5, 4);
    let net = unroll(&model, 5).unwrap();
    let ev = Evidence::for_query(4, "v0").with(0, "v1", Direction::Up).with(3, "v2", Direction::Down);
    let named = posterior(&net, &ev).unwrap();
    let indexed = posterior_by_index(
        &net,
        &[(net.node(0, 1), Direction::Up), (net.node(3, 2), Direction::Down)],
        net.node(4, 0),
    )
    .unwrap();
    assert_eq!(named, indexed);

    assert!(matches!(posterior(&net, &Evidence::for_query(4, "nope")), Err(DbnError::UnknownVariable(_))));
    assert!(matches!(
        posterior(&net, &Evidence::for_query(9, "v0")),
        Err(DbnError::SliceOutOfRange { slice: 9, t_slices: 5 })
    ));
    let on_query = Evidence::for_query(4, "v0").with(4, "v0", Direction::Up);
    assert!(matches!(posterior(&net, &on_query), Err(DbnError::EvidenceOnQuery(_))));
}

#[test]
fn markov_property_given_full_previous_slice() {
    // With slice t-1 fully observed, older slices carry no extra information.
    let model = random_2tbn(3, 5, 21);
    let net = unroll(&model, 5).unwrap();
    let full_prev: Vec<(usize, Direction)> = (0..3).map(|i| (net.node(2, i), Direction::from_index(i % 2))).collect();
    let base = posterior_by_index(&net, &full_prev, net.node(3, 0)).unwrap();
    for older in [Direction::Up, Direction::Down] {
        let mut ev = full_prev.clone();
        ev.push((net.node(0, 1), older));
        ev.push((net.node(1, 2), older));
        let p = posterior_by_index(&net, &ev, net.node(3, 0)).unwrap();
        assert!((p.up - base.up).abs() < 1e-12);
    }
}

#[test]
fn transition_is_time_homogeneous() {
    let model = random_2tbn(3, 5, 33);
    let net = unroll(&model, 5).unwrap();
    let states = [Direction::Up, Direction::Down, Direction::Up];
    let at = |t: usize| {
        let ev: Vec<(usize, Direction)> = (0..3).map(|i| (net.node(t - 1, i), states[i])).collect();
        posterior_by_index(&net, &ev, net.node(t, 1)).unwrap().up
    };
    for t in 2..5 {
        assert!((at(t) - at(1)).abs() < 1e-12);
    }
}

#[test]
fn impossible_evidence_is_reported() {
    // x copies its previous value deterministically.
    let model = build_2tbn(
        &["x"],
        "x",
        vec![(vec![], vec![[0.5, 0.5]])],
        vec![(vec![0], vec![[1.0, 0.0], [0.0, 1.0]])],
        3,
    )
    .unwrap();
    let net = unroll(&model, 3).unwrap();
    let ev = [(net.node(0, 0), Direction::Up), (net.node(1, 0), Direction::Down)];
    assert!(matches!(
        posterior_by_index(&net, &ev, net.node(2, 0)),
        Err(DbnError::ZeroProbabilityEvidence)
    ));
}

#[test]
fn predictor_uses_window_evidence() {
    let model = reference_2tbn(0.9);
    let predictor = Predictor::new(model.clone()).unwrap();
    let window = vec![vec![Direction::Up; 4]; 5];
    let p = predictor.predict(&window).unwrap();
    assert_eq!(p.direction, Direction::Up);
    assert!(p.probability > 0.9);
    assert!(matches!(
        predictor.predict(&window[..4]),
        Err(DbnError::WindowLengthMismatch { expected: 5, got: 4 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn posterior_is_a_distribution_and_exact(seed in 0u64..10_000, n in 1usize..=3, t in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_2tbn(n, t, seed);
        let net = unroll(&model, t).unwrap();
        let query = (rng.gen_range(0..t), rng.gen_range(0..n));
        let ev = random_evidence(&mut rng, n, t, query);
        let by_index: Vec<(usize, Direction)> = ev.iter().map(|&((s, i), d)| (net.node(s, i), d)).collect();
        let got = posterior_by_index(&net, &by_index, net.node(query.0, query.1)).unwrap();
        prop_assert!((got.down + got.up - 1.0).abs() < 1e-12);
        prop_assert!(got.down >= 0.0 && got.up >= 0.0);
        let (down, _) = brute_posterior(&model, t, &ev, query);
        prop_assert!((got.down - down).abs() < 1e-9);
    }
}
