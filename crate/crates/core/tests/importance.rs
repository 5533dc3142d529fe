//! Shadow-feature importance on data where the response depends on x1 only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweedie_boost::interpret::adjusted_importance;
use tweedie_boost::simgen::gen_model1;
use tweedie_boost::{Baseline, BoostConfig, Column, Dataset, FeatureMeta, ImportanceReport};

const SEEDS: u64 = 20;
const N: usize = 500;

/// Model 1 data plus three uniform noise features x2..x4.
fn noisy_model1(seed: u64) -> Dataset {
    let sim = gen_model1(N, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let extra = (2..=4)
        .map(|j| {
            let col = (0..N).map(|_| rng.random::<f64>()).collect();
            (FeatureMeta::numeric(format!("x{j}")), Column::Numeric(col))
        })
        .collect();
    sim.data.with_extra_features(extra).unwrap()
}

fn run(baseline: Baseline) -> Vec<ImportanceReport> {
    (0..SEEDS)
        .map(|seed| {
            let cfg = BoostConfig { n_trees: 700, n_leaves: 2, shrinkage: 0.005, seed, ..BoostConfig::default() };
            adjusted_importance(&noisy_model1(seed), &cfg, 10, seed, baseline).unwrap()
        })
        .collect()
}

#[test]
fn noise_stays_below_shadow_baseline_and_signal_is_flagged() {
    let reports = run(Baseline::Quantile(1.0));
    let mut below = 0;
    for r in &reports {
        let aug = r.augmented.as_ref().unwrap();
        let base = r.baseline.as_ref().unwrap();
        assert!(base.iter().all(|b| b.is_finite() && *b >= 0.0));
        below += (1..4).filter(|&j| aug[j] <= base[j]).count();
        assert!(r.important.as_ref().unwrap()[0], "x1 not flagged: {r:?}");
        assert!(r.raw.iter().all(|v| *v >= 0.0));
    }
    let total = 3 * SEEDS as usize;
    assert!(below * 5 >= total * 4, "noise at or below baseline in {below}/{total}");
}
