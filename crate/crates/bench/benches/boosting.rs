use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tweedie_boost::boost::{fit, leaf_eta};
use tweedie_boost::interpret::partial_dependence;
use tweedie_boost::simgen::{gen_model2, gen_rfg};
use tweedie_boost::tree::fit_tree;
use tweedie_boost::tweedie::{portfolio_log_likelihood, tweedie_log_density};
use tweedie_boost::{BoostConfig, GridSpec, RfgSpec, TweedieParams, WeightedObservation};

fn density(c: &mut Criterion) {
    let p = TweedieParams::new(1.5, 2.0, 1.7).unwrap();
    c.bench_function("log density, 100 points", |b| {
        b.iter(|| (1..=100).map(|k| tweedie_log_density(black_box(0.1 * k as f64), &p)).sum::<f64>())
    });
    let (_, sim) = gen_rfg(2000, &RfgSpec::default()).unwrap();
    c.bench_function("portfolio log likelihood, n = 2000", |b| {
        b.iter(|| portfolio_log_likelihood(sim.data.y(), sim.data.w(), &sim.true_f, black_box(1.0), 1.5))
    });
}

fn learners(c: &mut Criterion) {
    let sim = gen_model2(2000, 0).unwrap();
    let targets: Vec<f64> = sim.data.y().iter().map(|y| y - 1.0).collect();
    c.bench_function("tree growth, 5 leaves, n = 2000", |b| {
        b.iter(|| fit_tree(&sim.data, black_box(&targets), 5, 10).unwrap())
    });
    let members: Vec<WeightedObservation> = sim
        .data
        .y()
        .iter()
        .zip(&sim.true_f)
        .take(200)
        .map(|(&y, &f)| WeightedObservation { y, w: 1.0, f })
        .collect();
    c.bench_function("leaf update, 200 members", |b| b.iter(|| leaf_eta(black_box(&members), 1.5).unwrap()));
}

fn ensemble(c: &mut Criterion) {
    let sim = gen_model2(1000, 0).unwrap();
    let cfg = BoostConfig {
        n_trees: 200,
        ..BoostConfig::default()
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("fit, 200 trees, n = 1000", |b| b.iter(|| fit(black_box(&sim.data), &cfg).unwrap()));
    let model = fit(&sim.data, &cfg).unwrap();
    group.bench_function("predict, n = 1000", |b| b.iter(|| model.predict(black_box(&sim.data)).unwrap()));
    let grid = GridSpec {
        points: 50,
        lower_quantile: 0.01,
        upper_quantile: 0.99,
    };
    group.bench_function("two-way partial dependence, 50 x 50", |b| {
        b.iter(|| partial_dependence(&model, &sim.data, &["x1", "x2"], black_box(&grid)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, density, learners, ensemble);
criterion_main!(benches);
