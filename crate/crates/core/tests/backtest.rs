use cryptodbn::backtest::*;
use cryptodbn::synthetic::{daily_dates, macro_table, signal_coin, start_date, tweet_table};

fn coin(name: &str, table: cryptodbn::TimeSeriesTable) -> CoinData {
    CoinData { name: name.into(), ohlcv: table, macros: vec![], tweets: None }
}

fn group1(baselines: bool) -> BacktestConfig {
    BacktestConfig {
        groups: vec![FeatureGroup::new(1).unwrap()],
        run_baselines: baselines,
        ..Default::default()
    }
}

#[test]
fn protocol_counts_on_1206_rows() {
    let out = run_backtest(&coin("proto", signal_coin(1207, 0.7, 4)), &group1(false)).unwrap();
    let r = &out.report;
    assert_eq!((r.rows, r.train_rows, r.test_rows), (1206, 808, 398));
    let g = &r.groups[0];
    assert_eq!(g.windows, 394);
    assert_eq!(g.counts.total(), 394);
}

#[test]
fn persistent_coin_beats_threshold() {
    let out = run_backtest(&coin("persist", signal_coin(1500, 0.8, 1)), &group1(true)).unwrap();
    let g = &out.report.groups[0];
    println!("{}", render_text(&out.report));
    assert!(g.precision.unwrap() >= 65.0);
}

#[test]
fn coin_flip_is_near_half() {
    // A signal-free model predicts one class throughout, so single runs
    // often have no Up predictions; pool the Up predictions of several seeds.
    let (mut tp, mut fp) = (0, 0);
    for seed in 0..4 {
        let out = run_backtest(&coin("flip", signal_coin(1500, 0.5, seed)), &group1(false)).unwrap();
        let g = &out.report.groups[0];
        assert!(g.windows >= 300);
        if let Some(p) = g.precision {
            assert!((45.0..=55.0).contains(&p), "seed {seed}: precision {p}");
        }
        tp += g.counts.tp;
        fp += g.counts.fp;
    }
    let pooled = precision(&ConfusionCounts { tp, fp, tn: 0, fn_: 0 }).unwrap();
    assert!((45.0..=55.0).contains(&pooled), "pooled {pooled}");
}

#[test]
fn all_groups_share_test_days_and_exclude_missing_tweets() {
    let ohlcv = signal_coin(700, 0.7, 9);
    let dates = daily_dates(start_date(), 700);
    let macros = ["gold", "oil", "sp500", "usd_index", "vix"]
        .iter()
        .enumerate()
        .map(|(i, a)| macro_table(a, &dates, 100 + i as u64))
        .collect();
    let data = CoinData { name: "tether".into(), ohlcv, macros, tweets: None };
    let cfg = BacktestConfig { run_baselines: false, ..Default::default() };
    let out = run_backtest(&data, &cfg).unwrap();
    let feats: Vec<usize> = out.report.groups.iter().map(|g| g.features).collect();
    assert_eq!(feats, vec![5, 10, 16, 21]);
    assert!(out.report.notes.iter().any(|n| n.contains("tweet")));
    let w: Vec<usize> = out.report.groups.iter().map(|g| g.windows).collect();
    assert!(w.iter().all(|&x| x == w[0]));

    let with_tweets = CoinData { tweets: Some(tweet_table(&dates, 5)), ..data };
    let out = run_backtest(&with_tweets, &cfg).unwrap();
    let feats: Vec<usize> = out.report.groups.iter().map(|g| g.features).collect();
    assert_eq!(feats, vec![5, 11, 16, 22]);
}
