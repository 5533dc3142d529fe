use tweedie_boost::boost::{cv_tune, fit};
use tweedie_boost::interpret::adjusted_importance;
use tweedie_boost::profile::estimate_rho_phi;
use tweedie_boost::simgen::{gen_model2, gen_rfg};
use tweedie_boost::{Baseline, BoostConfig, BoostedModel, ProfileConfig, RfgSpec, Tuning};

fn config() -> BoostConfig {
    BoostConfig {
        n_trees: 150,
        n_leaves: 4,
        shrinkage: 0.05,
        seed: 7,
        ..BoostConfig::default()
    }
}

#[test]
fn fits_are_bit_identical_across_runs() {
    let sim = gen_model2(600, 3).unwrap();
    let a = fit(&sim.data, &config()).unwrap();
    let b = fit(&sim.data, &config()).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let pa = a.predict(&sim.data).unwrap();
    let pb = b.predict(&sim.data).unwrap();
    assert!(pa.iter().zip(&pb).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn saved_models_predict_bit_exactly() {
    let spec = RfgSpec { p: 5, n_terms: 6, seed: 2, ..RfgSpec::default() };
    let (func, train) = gen_rfg(800, &spec).unwrap();
    let test = func.sample_seeded(300, spec.phi, spec.rho, 9).unwrap();
    let mut model = fit(&train.data, &config()).unwrap();
    model.set_phi(1.25);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = BoostedModel::load(&path).unwrap();
    assert_eq!(loaded, model);
    let before = model.predict(&test.data).unwrap();
    let after = loaded.predict(&test.data).unwrap();
    assert!(before.iter().zip(&after).all(|(x, y)| x.to_bits() == y.to_bits()));
    // A second save reproduces the document byte for byte.
    let again = dir.path().join("again.json");
    loaded.save(&again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn cross_validation_and_profile_are_deterministic() {
    let sim = gen_model2(400, 5).unwrap();
    let cfg = BoostConfig { n_trees: 60, ..config() };
    assert_eq!(cv_tune(&sim.data, &cfg, &[2, 3]).unwrap(), cv_tune(&sim.data, &cfg, &[2, 3]).unwrap());
    let pc = ProfileConfig {
        boost: cfg,
        grid_points: 4,
        tuning: Tuning::Fixed { n_trees: 40, n_leaves: 3 },
        ..ProfileConfig::default()
    };
    let (ra, ma) = estimate_rho_phi(&sim.data, &pc).unwrap();
    let (rb, mb) = estimate_rho_phi(&sim.data, &pc).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(ma, mb);
}

#[test]
fn adjusted_importance_is_deterministic() {
    let sim = gen_model2(300, 8).unwrap();
    let cfg = BoostConfig { n_trees: 30, ..config() };
    let a = adjusted_importance(&sim.data, &cfg, 3, 4, Baseline::Mean).unwrap();
    let b = adjusted_importance(&sim.data, &cfg, 3, 4, Baseline::Mean).unwrap();
    assert_eq!(a, b);
}
