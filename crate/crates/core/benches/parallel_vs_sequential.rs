use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use moead_ps::engine::{run, AlgorithmConfig};
use moead_ps::metrics::hypervolume_monte_carlo;
use moead_ps::par;
use moead_ps::problems::{problem_from_key, DEFAULT_DIMENSION};

fn batch(c: &mut Criterion) {
    let problem = problem_from_key("uf1", DEFAULT_DIMENSION).unwrap();
    let mut config = AlgorithmConfig::new(100, 10, 2);
    config.budget = 5_000;
    let seeds: Vec<u64> = (0..8).collect();
    let one = |&seed: &u64| run(&config, &problem, seed).unwrap().final_evals();

    let mut group = c.benchmark_group("run_batch");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("parallel", par::is_parallel()), |b| b.iter(|| par::map(&seeds, one)));
    group.bench_function("sequential", |b| b.iter(|| par::map_sequential(&seeds, one)));
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let points: Vec<Vec<f64>> = (0..50)
        .map(|i| {
            let t = f64::from(i) / 49.0 * std::f64::consts::FRAC_PI_2;
            vec![t.cos(), t.sin(), 0.5]
        })
        .collect();
    let mut group = c.benchmark_group("hv_monte_carlo");
    group.sample_size(10);
    group.bench_function("1e6_samples", |b| b.iter(|| hypervolume_monte_carlo(&points, &[1.1; 3], 1_000_000, 3)));
    group.finish();
}

criterion_group!(benches, batch, monte_carlo);
criterion_main!(benches);
