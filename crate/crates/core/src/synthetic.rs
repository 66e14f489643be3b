//! Seeded generators for test fixtures, benchmarks and demos.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bn::{Cpt, Dag, ScoredNetwork};
use crate::dbn::{prev_name, DbnError, TwoSliceBn};
use crate::direction::Direction;
use crate::ingest::{DirectionMatrix, SourceKind, TimeSeriesTable};

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date")
}

pub fn daily_dates(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    (0..n).map(|i| start + Duration::days(i as i64)).collect()
}

pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn ohlcv_table(dates: Vec<NaiveDate>, cols: [Vec<f64>; 5]) -> TimeSeriesTable {
    let columns: IndexMap<String, Vec<f64>> = ["open", "high", "low", "close", "volume"]
        .iter()
        .map(|s| s.to_string())
        .zip(cols)
        .collect();
    TimeSeriesTable::new(dates, columns, SourceKind::Ohlcv).expect("generated table is valid")
}

/// OHLCV bars whose close direction repeats the previous day's direction
/// with probability `persistence` (0.5 gives i.i.d. fair coin flips).
///
/// Only the close carries signal. Open equals the previous close, while
/// high, low and volume follow independent walks placed far outside the
/// close's range, so their same-day directions say nothing about the close.
pub fn signal_coin(rows: usize, persistence: f64, seed: u64) -> TimeSeriesTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut close = Vec::with_capacity(rows);
    let mut level: f64 = 100.0;
    let mut dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let (mut hi, mut lo, mut vol): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut high, mut low, mut volume) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..rows {
        if t > 0 {
            if !rng.gen_bool(persistence) {
                dir = -dir;
            }
            level *= 1.0 + 0.01 * dir;
        }
        close.push(level);
        hi += 0.01 * standard_normal(&mut rng);
        lo += 0.01 * standard_normal(&mut rng);
        vol += 0.1 * standard_normal(&mut rng);
        high.push(1e5 * hi.exp());
        low.push(1e-3 * lo.exp());
        volume.push(1e6 * vol.exp());
    }
    let mut open = Vec::with_capacity(rows);
    open.push(close[0]);
    open.extend_from_slice(&close[..rows.saturating_sub(1)]);
    ohlcv_table(daily_dates(start_date(), rows), [open, high, low, close, volume])
}

/// Realistic-looking geometric random-walk bars.
pub fn random_walk_ohlcv(rows: usize, seed: u64) -> TimeSeriesTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: [Vec<f64>; 5] = Default::default();
    let mut prev_close: f64 = 100.0;
    for _ in 0..rows {
        let open = prev_close * (1.0 + 0.005 * standard_normal(&mut rng));
        let close = open * (1.0 + 0.03 * standard_normal(&mut rng));
        let high = open.max(close) * (1.0 + 0.01 * standard_normal(&mut rng).abs());
        let low = open.min(close) * (1.0 - 0.01 * standard_normal(&mut rng).abs());
        let volume = 1e6 * (0.5 * standard_normal(&mut rng)).exp();
        for (c, v) in cols.iter_mut().zip([open, high, low, close, volume]) {
            c.push(v);
        }
        prev_close = close;
    }
    ohlcv_table(daily_dates(start_date(), rows), cols)
}

/// A weekday-only random walk for one macro asset over `dates`.
pub fn macro_table(asset: &str, dates: &[NaiveDate], seed: u64) -> TimeSeriesTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept: Vec<NaiveDate> = dates
        .iter()
        .copied()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect();
    let mut level: f64 = 1000.0;
    let values = kept
        .iter()
        .map(|_| {
            level *= 1.0 + 0.01 * standard_normal(&mut rng);
            level
        })
        .collect();
    TimeSeriesTable::new(kept, IndexMap::from([(asset.to_string(), values)]), SourceKind::Macro)
        .expect("generated table is valid")
}

/// Daily tweet counts over `dates`.
pub fn tweet_table(dates: &[NaiveDate], seed: u64) -> TimeSeriesTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = dates
        .iter()
        .map(|_| (5000.0 * (0.3 * standard_normal(&mut rng)).exp()).round())
        .collect();
    TimeSeriesTable::new(
        dates.to_vec(),
        IndexMap::from([("tweet_count".to_string(), values)]),
        SourceKind::Tweets,
    )
    .expect("generated table is valid")
}

/// Renders a table in the CSV layout accepted by the loader.
pub fn to_csv(table: &TimeSeriesTable) -> String {
    let mut out = String::from("date");
    for name in table.columns.keys() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, date) in table.dates.iter().enumerate() {
        out.push_str(&date.format("%Y-%m-%d").to_string());
        for values in table.columns.values() {
            out.push(',');
            out.push_str(&values[t].to_string());
        }
        out.push('\n');
    }
    out
}

/// One node family: parent indices and `[P(Down), P(Up)]` rows.
pub type Family = (Vec<usize>, Vec<[f64; 2]>);

fn network(names: Vec<String>, families: Vec<Family>) -> Result<ScoredNetwork, DbnError> {
    let dag = Dag::from_parents(names, families.iter().map(|f| f.0.clone()).collect())?;
    let cpts = families
        .into_iter()
        .enumerate()
        .map(|(node, (parents, rows))| {
            let mut parents_sorted = parents.clone();
            parents_sorted.sort_unstable();
            if parents_sorted != parents || rows.len() != 1 << parents.len() {
                return Err(DbnError::InvalidModel(format!("bad family for node {node}")));
            }
            Ok(Cpt { node, parents, rows })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoredNetwork {
        dag,
        cpts,
        score: 0.0,
        sample_count: 0,
        seed: 0,
    })
}

/// Assembles a [`TwoSliceBn`] from explicit families. Transition families
/// index the previous copies as `0..N` and the current variables as
/// `N..2N`; only the `N` current families are given.
pub fn build_2tbn(
    names: &[&str],
    target: &str,
    prior: Vec<Family>,
    transition: Vec<Family>,
    t_slices: usize,
) -> Result<TwoSliceBn, DbnError> {
    let variable_names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let prior = network(variable_names.clone(), prior)?;
    let transition_names = variable_names
        .iter()
        .map(|v| prev_name(v))
        .chain(variable_names.iter().cloned())
        .collect();
    let families = (0..names.len())
        .map(|_| (Vec::new(), vec![[0.5, 0.5]]))
        .chain(transition)
        .collect();
    let transition = network(transition_names, families)?;
    let model = TwoSliceBn {
        prior,
        transition,
        variable_names,
        target: target.to_string(),
        feature_group: 1,
        t_slices,
    };
    model.validate()?;
    Ok(model)
}

fn random_rows(rng: &mut ChaCha8Rng, parents: usize) -> Vec<[f64; 2]> {
    (0..1 << parents)
        .map(|_| {
            let up = rng.gen_range(0.02..0.98);
            [1.0 - up, up]
        })
        .collect()
}

/// Random DAG families over `n` nodes following a random order.
fn random_families(rng: &mut ChaCha8Rng, n: usize, offset: usize, max_parents: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![Vec::new(); n];
    for (pos, &child) in order.iter().enumerate() {
        for &cand in &order[..pos] {
            if parents[child].len() < max_parents && rng.gen_bool(0.4) {
                parents[child].push(cand + offset);
            }
        }
        parents[child].sort_unstable();
    }
    parents
}

/// A random 2TBN over `n_vars` variables with random CPTs.
pub fn random_2tbn(n_vars: usize, t_slices: usize, seed: u64) -> TwoSliceBn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n_vars).map(|i| format!("v{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let prior = random_families(&mut rng, n_vars, 0, 3)
        .into_iter()
        .map(|p| {
            let rows = random_rows(&mut rng, p.len());
            (p, rows)
        })
        .collect();
    let transition = random_families(&mut rng, n_vars, n_vars, 2)
        .into_iter()
        .enumerate()
        .map(|(v, mut p)| {
            if rng.gen_bool(0.7) {
                p.insert(0, v);
            }
            let rows = random_rows(&mut rng, p.len());
            (p, rows)
        })
        .collect();
    build_2tbn(&refs, refs[0], prior, transition, t_slices).expect("random 2TBN is valid")
}

fn draw(rng: &mut ChaCha8Rng, cpt: &Cpt, parent_states: impl IntoIterator<Item = Direction>) -> Direction {
    let p_up = cpt.prob(Direction::Up, parent_states);
    if rng.gen::<f64>() < p_up {
        Direction::Up
    } else {
        Direction::Down
    }
}

/// Ancestral sample of `rows` consecutive slices: the first row from the
/// prior network, every later row from the transition network.
pub fn sample_2tbn(model: &TwoSliceBn, rows: usize, seed: u64) -> DirectionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n_vars();
    let prior_order = model.prior.dag.topological_order().expect("acyclic prior");
    let trans_order: Vec<usize> = model
        .transition
        .dag
        .topological_order()
        .expect("acyclic transition")
        .into_iter()
        .filter(|&v| v >= n)
        .collect();
    let mut out: Vec<Vec<Direction>> = Vec::with_capacity(rows);
    for t in 0..rows {
        let mut row = vec![Direction::Up; n];
        if t == 0 {
            for &v in &prior_order {
                let cpt = &model.prior.cpts[v];
                let states: Vec<Direction> = cpt.parents.iter().map(|&p| row[p]).collect();
                row[v] = draw(&mut rng, cpt, states);
            }
        } else {
            let prev = &out[t - 1];
            for &v in &trans_order {
                let cpt = &model.transition.cpts[v];
                let states: Vec<Direction> = cpt
                    .parents
                    .iter()
                    .map(|&p| if p < n { prev[p] } else { row[p - n] })
                    .collect();
                row[v - n] = draw(&mut rng, cpt, states);
            }
        }
        out.push(row);
    }
    let dates = daily_dates(start_date(), rows);
    DirectionMatrix::new(dates, model.variable_names.clone(), out, &model.target).expect("consistent sample")
}

/// Four variables, each copying its previous state with probability
/// `persistence`, plus one strong intra-slice arc `v0 -> v1`.
pub fn reference_2tbn(persistence: f64) -> TwoSliceBn {
    let keep = |p: f64| vec![[p, 1.0 - p], [1.0 - p, p]];
    let prior = vec![
        (vec![], vec![[0.5, 0.5]]),
        (vec![0], vec![[0.9, 0.1], [0.1, 0.9]]),
        (vec![], vec![[0.5, 0.5]]),
        (vec![], vec![[0.5, 0.5]]),
    ];
    // v1 depends on its own past (prev index 1) and on v0 now (index 4).
    let strong = vec![[0.97, 0.03], [0.6, 0.4], [0.4, 0.6], [0.03, 0.97]];
    let transition = vec![
        (vec![0], keep(persistence)),
        (vec![1, 4], strong),
        (vec![2], keep(persistence)),
        (vec![3], keep(persistence)),
    ];
    build_2tbn(&["v0", "v1", "v2", "v3"], "v0", prior, transition, 5).expect("reference 2TBN is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{read_csv, SourceKind};

    #[test]
    fn signal_coin_bars_are_valid_and_round_trip() {
        let table = signal_coin(200, 0.8, 3);
        let loaded = read_csv(to_csv(&table).as_bytes(), "coin", SourceKind::Ohlcv).unwrap();
        assert!(loaded.diagnostics.is_empty(), "{:?}", loaded.diagnostics);
        assert_eq!(loaded.table.len(), 200);
        let close = table.column("close").unwrap();
        let flips = close
            .windows(3)
            .filter(|w| (w[1] > w[0]) != (w[2] > w[1]))
            .count();
        assert!((20..60).contains(&flips), "flips {flips}");
    }

    #[test]
    fn random_walk_bars_are_valid() {
        let table = random_walk_ohlcv(120, 1);
        let loaded = read_csv(to_csv(&table).as_bytes(), "rw", SourceKind::Ohlcv).unwrap();
        assert!(loaded.diagnostics.is_empty());
    }

    #[test]
    fn macro_skips_weekends() {
        let dates = daily_dates(start_date(), 14);
        assert_eq!(macro_table("gold", &dates, 1).len(), 10);
    }

    #[test]
    fn sampled_persistence_matches_model() {
        let model = reference_2tbn(0.9);
        let m = sample_2tbn(&model, 4000, 5);
        let same = m.rows().windows(2).filter(|w| w[0][2] == w[1][2]).count();
        let rate = same as f64 / 3999.0;
        assert!((rate - 0.9).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn random_models_validate() {
        for seed in 0..20 {
            let m = random_2tbn(1 + (seed as usize % 4), 5, seed);
            assert!(m.validate().is_ok());
        }
    }
}
