use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cryptodbn::baselines::{fit_arima, fit_svr_params, ArimaGrid, KernelKind, SvrParams};
use cryptodbn::bn::{hill_climb, EdgeConstraints, Samples, SearchConfig};
use cryptodbn::dbn::{posterior_by_index, unroll};
use cryptodbn::synthetic::random_2tbn;
use cryptodbn_bench::{ar1_series, half_evidence, sampled_matrix};
use std::hint::black_box;

fn inference(c: &mut Criterion) {
    let mut group = c.benchmark_group("posterior");
    for n_vars in [5, 11, 23] {
        let model = random_2tbn(n_vars, 5, 3);
        let network = unroll(&model, 5).unwrap();
        let evidence: Vec<_> = half_evidence(n_vars, 5, 0)
            .into_iter()
            .map(|(s, v, d)| (network.node(s, v), d))
            .collect();
        let query = network.node(4, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n_vars), &n_vars, |b, _| {
            b.iter(|| posterior_by_index(black_box(&network), black_box(&evidence), query).unwrap())
        });
    }
    group.finish();
}

fn structure_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("hill_climb");
    group.sample_size(10);
    for n_vars in [5, 11] {
        let samples = Samples::from_matrix(&sampled_matrix(n_vars, 800, 5));
        let config = SearchConfig { restarts: 4, ..SearchConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(n_vars), &n_vars, |b, _| {
            b.iter(|| hill_climb(black_box(&samples), &EdgeConstraints::default(), &config).unwrap())
        });
    }
    group.finish();
}

fn baselines(c: &mut Criterion) {
    let mut group = c.benchmark_group("baselines");
    group.sample_size(10);
    let series = ar1_series(800, 0.6);
    group.bench_function("arima_default_grid_800", |b| {
        b.iter(|| fit_arima(black_box(&series), &ArimaGrid::default()).unwrap())
    });
    let x: Vec<Vec<f64>> = series.windows(5).take(400).map(|w| w.to_vec()).collect();
    let y: Vec<f64> = series[5..405].to_vec();
    let params = SvrParams { kernel: KernelKind::Rbf, c: 10.0, epsilon: 0.01, gamma: 0.1 };
    group.bench_function("svr_rbf_400", |b| b.iter(|| fit_svr_params(black_box(&x), &y, params).unwrap()));
    group.finish();
}

criterion_group!(benches, inference, structure_search, baselines);
criterion_main!(benches);
