use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fit_cpts, family_bic, BnError, Dag, Samples, ScoredNetwork};

/// Smallest BIC gain that counts as an improvement.
const MIN_IMPROVEMENT: f64 = 1e-9;
/// Deltas closer than this are ties and fall back to move order.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchConfig {
    pub max_parents: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Laplace pseudo-count for the final CPT fit.
    pub alpha: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_parents: 3,
            restarts: 8,
            seed: 0,
            alpha: 1.0,
        }
    }
}

/// Edge restrictions by node index. `whitelist`, when set, is the complete
/// set of edges the search may add; `required` edges are present from the
/// start and never removed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeConstraints {
    pub whitelist: Option<BTreeSet<(usize, usize)>>,
    pub blacklist: BTreeSet<(usize, usize)>,
    pub required: BTreeSet<(usize, usize)>,
}

impl EdgeConstraints {
    pub fn allows(&self, from: usize, to: usize) -> bool {
        from != to
            && !self.blacklist.contains(&(from, to))
            && self
                .whitelist
                .as_ref()
                .map_or(true, |w| w.contains(&(from, to)))
    }

    fn candidate_edges(&self, n: usize) -> Vec<(usize, usize)> {
        match &self.whitelist {
            Some(w) => w
                .iter()
                .copied()
                .filter(|&(a, b)| a < n && b < n && self.allows(a, b))
                .collect(),
            None => (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .filter(|&(a, b)| self.allows(a, b))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum MoveKind {
    Add,
    Delete,
    Reverse,
}

#[derive(Clone, Copy, Debug)]
struct Move {
    kind: MoveKind,
    from: usize,
    to: usize,
    delta: f64,
}

impl Move {
    fn key(&self) -> (MoveKind, usize, usize) {
        (self.kind, self.from, self.to)
    }

    /// Larger delta wins; near-equal deltas go to the smaller key.
    fn beats(&self, other: &Move) -> bool {
        if (self.delta - other.delta).abs() <= TIE_TOLERANCE {
            self.key() < other.key()
        } else {
            self.delta > other.delta
        }
    }
}

struct FamilyCache<'a> {
    samples: &'a Samples,
    scores: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> FamilyCache<'a> {
    fn new(samples: &'a Samples) -> Self {
        Self {
            samples,
            scores: HashMap::new(),
        }
    }

    fn score(&mut self, child: usize, parents: &[usize]) -> f64 {
        let samples = self.samples;
        *self
            .scores
            .entry((child, parents.to_vec()))
            .or_insert_with(|| family_bic(samples, child, parents))
    }
}

fn with(parents: &[usize], extra: usize) -> Vec<usize> {
    let mut v = parents.to_vec();
    let pos = v.binary_search(&extra).unwrap_err();
    v.insert(pos, extra);
    v
}

fn without(parents: &[usize], gone: usize) -> Vec<usize> {
    parents.iter().copied().filter(|&p| p != gone).collect()
}

fn best_move(
    dag: &Dag,
    cache: &mut FamilyCache<'_>,
    constraints: &EdgeConstraints,
    candidates: &[(usize, usize)],
    max_parents: usize,
) -> Option<Move> {
    let n = dag.len();
    let current: Vec<f64> = (0..n).map(|v| cache.score(v, dag.parents(v))).collect();
    let mut best: Option<Move> = None;
    let mut consider = |m: Move| {
        if best.map_or(true, |b| m.beats(&b)) {
            best = Some(m);
        }
    };

    for &(from, to) in candidates {
        if dag.has_edge(from, to) || dag.parents(to).len() >= max_parents {
            continue;
        }
        if dag.reaches(to, from, None) {
            continue;
        }
        let delta = cache.score(to, &with(dag.parents(to), from)) - current[to];
        consider(Move {
            kind: MoveKind::Add,
            from,
            to,
            delta,
        });
    }

    for (from, to) in dag.edges() {
        if constraints.required.contains(&(from, to)) {
            continue;
        }
        let removed = cache.score(to, &without(dag.parents(to), from)) - current[to];
        consider(Move {
            kind: MoveKind::Delete,
            from,
            to,
            delta: removed,
        });

        if constraints.allows(to, from)
            && dag.parents(from).len() < max_parents
            && !dag.reaches(from, to, Some((from, to)))
        {
            let added = cache.score(from, &with(dag.parents(from), to)) - current[from];
            consider(Move {
                kind: MoveKind::Reverse,
                from,
                to,
                delta: removed + added,
            });
        }
    }
    best
}

fn apply(dag: &mut Dag, m: Move) {
    match m.kind {
        MoveKind::Add => dag.add_edge(m.from, m.to).expect("move was checked acyclic"),
        MoveKind::Delete => {
            dag.remove_edge(m.from, m.to);
        }
        MoveKind::Reverse => {
            dag.remove_edge(m.from, m.to);
            dag.add_edge(m.to, m.from).expect("move was checked acyclic");
        }
    }
    debug_assert!(dag.is_acyclic());
}

fn total_score(dag: &Dag, cache: &mut FamilyCache<'_>) -> f64 {
    (0..dag.len()).map(|v| cache.score(v, dag.parents(v))).sum()
}

/// Random starting structure for restart `restart` (restart 0 starts empty).
fn initial_dag(
    names: &[String],
    constraints: &EdgeConstraints,
    candidates: &[(usize, usize)],
    config: &SearchConfig,
    restart: usize,
) -> Dag {
    let mut dag = Dag::empty(names.to_vec());
    for &(a, b) in &constraints.required {
        dag.add_edge(a, b).expect("required edges must be acyclic");
    }
    if restart == 0 {
        return dag;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(restart as u64));
    let mut order = candidates.to_vec();
    order.shuffle(&mut rng);
    let target = names.len().min(order.len());
    let mut added = 0;
    for (a, b) in order {
        if added == target {
            break;
        }
        if !dag.has_edge(a, b) && dag.parents(b).len() < config.max_parents && dag.add_edge(a, b).is_ok() {
            added += 1;
        }
    }
    dag
}

fn climb(mut dag: Dag, samples: &Samples, constraints: &EdgeConstraints, candidates: &[(usize, usize)], max_parents: usize) -> (Dag, f64) {
    let mut cache = FamilyCache::new(samples);
    let mut score = total_score(&dag, &mut cache);
    while let Some(m) = best_move(&dag, &mut cache, constraints, candidates, max_parents) {
        if m.delta <= MIN_IMPROVEMENT {
            break;
        }
        apply(&mut dag, m);
        let next = total_score(&dag, &mut cache);
        debug_assert!(next >= score - 1e-9, "BIC decreased: {score} -> {next}");
        score = next;
    }
    (dag, score)
}

/// Greedy add/delete/reverse search maximizing BIC over all sample columns.
///
/// Each restart climbs until no move improves the score by more than
/// `1e-9`; the best restart wins, with ties going to the lexicographically
/// smallest parent-set list. Deterministic for a fixed seed.
pub fn hill_climb(
    samples: &Samples,
    constraints: &EdgeConstraints,
    config: &SearchConfig,
) -> Result<ScoredNetwork, BnError> {
    let names = samples.names().to_vec();
    for &(a, b) in &constraints.required {
        if a >= names.len() || b >= names.len() {
            return Err(BnError::InvalidModel(format!("required edge ({a}, {b}) out of range")));
        }
    }
    let candidates = constraints.candidate_edges(names.len());
    let restarts = config.restarts.max(1);

    let runs: Vec<(Dag, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = initial_dag(&names, constraints, &candidates, config, r);
            climb(start, samples, constraints, &candidates, config.max_parents)
        })
        .collect();

    let (dag, score) = runs
        .into_iter()
        .min_by(|(da, sa), (db, sb)| {
            sb.partial_cmp(sa)
                .unwrap_or(Ordering::Equal)
                .then_with(|| da.parent_sets().cmp(db.parent_sets()))
        })
        .expect("at least one restart");

    let cpts = fit_cpts(&dag, samples, config.alpha)?;
    Ok(ScoredNetwork {
        dag,
        cpts,
        score,
        sample_count: samples.rows(),
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::bic_score;
    use rand::Rng;

    fn independent(n: usize, seed: u64) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        let b = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        Samples::new(vec!["a".into(), "b".into()], vec![a, b])
    }

    fn dependent(n: usize, seed: u64) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        let b = a
            .iter()
            .map(|&x| if rng.gen_bool(0.9) { x } else { 1 - x })
            .collect();
        Samples::new(vec!["a".into(), "b".into()], vec![a, b])
    }

    #[test]
    fn independent_variables_learn_empty_graph() {
        let samples = independent(1000, 7);
        let empty = Dag::empty(samples.names().to_vec());
        let mut edge = empty.clone();
        edge.add_edge(0, 1).unwrap();
        // The oracle: the penalty outweighs the likelihood gain of the edge.
        assert!(bic_score(&empty, &samples).unwrap() > bic_score(&edge, &samples).unwrap());
        let net = hill_climb(&samples, &EdgeConstraints::default(), &SearchConfig::default()).unwrap();
        assert_eq!(net.dag.edge_count(), 0);
    }

    #[test]
    fn dependent_variables_learn_the_edge() {
        let samples = dependent(1000, 11);
        let empty = Dag::empty(samples.names().to_vec());
        let mut edge = empty.clone();
        edge.add_edge(0, 1).unwrap();
        assert!(bic_score(&edge, &samples).unwrap() > bic_score(&empty, &samples).unwrap());
        let net = hill_climb(&samples, &EdgeConstraints::default(), &SearchConfig::default()).unwrap();
        assert!(net.dag.has_edge(0, 1) || net.dag.has_edge(1, 0));
        assert!((net.score - bic_score(&net.dag, &samples).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn blacklisting_everything_yields_empty_dag() {
        let samples = dependent(500, 3);
        let constraints = EdgeConstraints {
            blacklist: [(0, 1), (1, 0)].into_iter().collect(),
            ..Default::default()
        };
        let net = hill_climb(&samples, &constraints, &SearchConfig::default()).unwrap();
        assert_eq!(net.dag.edge_count(), 0);
    }

    #[test]
    fn required_edges_survive() {
        let samples = independent(500, 5);
        let constraints = EdgeConstraints {
            required: [(1, 0)].into_iter().collect(),
            ..Default::default()
        };
        let net = hill_climb(&samples, &constraints, &SearchConfig::default()).unwrap();
        assert!(net.dag.has_edge(1, 0));
    }

    #[test]
    fn tie_break_prefers_smaller_move_key() {
        let a = Move { kind: MoveKind::Add, from: 0, to: 2, delta: 1.0 };
        let b = Move { kind: MoveKind::Add, from: 1, to: 0, delta: 1.0 + 1e-14 };
        assert!(a.beats(&b));
        let c = Move { kind: MoveKind::Delete, from: 0, to: 1, delta: 2.0 };
        assert!(c.beats(&a));
    }
}
