//! Gradient tree boosting under the Tweedie loss.
//!
//! Starting from the log of the weighted mean response, every stage fits a
//! least-squares tree to the negative gradient of the loss, replaces each
//! leaf's mean by the exact per-region minimiser of the loss, and adds the
//! shrunken leaf values to the log-mean predictor `F`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schema};
use crate::error::{Error, Result};
use crate::tree::{RegressionTree, TreeGrower};
use crate::tweedie::{self, check_rho, WeightedObservation};

/// Leaf updates are clamped to `[-ETA_CLAMP, ETA_CLAMP]`; an all-zero leaf
/// would otherwise move to `-inf`.
pub const ETA_CLAMP: f64 = 19.0;

pub const MODEL_FORMAT: &str = "tweedie-boost-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Number of boosting stages `M` (the upper limit when cross-validating).
    pub n_trees: usize,
    /// Terminal nodes per tree `L`.
    pub n_leaves: usize,
    /// Shrinkage `nu` in `(0, 1]`.
    pub shrinkage: f64,
    /// Minimum observations per leaf.
    pub min_node: usize,
    /// Tweedie index in `(1, 2)`.
    pub rho: f64,
    /// Cross-validation folds `K`.
    pub folds: usize,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_trees: 1000,
            n_leaves: 4,
            shrinkage: 0.005,
            min_node: 10,
            rho: 1.5,
            folds: 5,
            seed: 0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_leaves < 2 {
            return Err(Error::param(format!("n_leaves must be >= 2, got {}", self.n_leaves)));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::param(format!("shrinkage must lie in (0, 1], got {}", self.shrinkage)));
        }
        if self.min_node < 1 {
            return Err(Error::param("min_node must be >= 1"));
        }
        check_rho(self.rho)
    }
}

/// A fitted ensemble. Leaf values already include the shrinkage factor, so
/// `F(x) = f0 + sum_m tree_m(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    format: String,
    version: u32,
    schema: Schema,
    f0: f64,
    rho: f64,
    phi: Option<f64>,
    shrinkage: f64,
    n_leaves: usize,
    min_node: usize,
    seed: u64,
    /// Training loss after each stage; entry 0 is the intercept-only loss.
    loss_trace: Vec<f64>,
    trees: Vec<RegressionTree>,
}

impl BoostedModel {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phi(&self) -> Option<f64> {
        self.phi
    }

    pub fn set_phi(&mut self, phi: f64) {
        self.phi = Some(phi);
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn min_node(&self) -> usize {
        self.min_node
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    /// The configuration this model was trained with.
    pub fn config(&self) -> BoostConfig {
        BoostConfig {
            n_trees: self.trees.len(),
            n_leaves: self.n_leaves,
            shrinkage: self.shrinkage,
            min_node: self.min_node,
            rho: self.rho,
            seed: self.seed,
            ..BoostConfig::default()
        }
    }

    /// Keeps only the first `m` trees.
    pub fn truncate(&mut self, m: usize) {
        self.trees.truncate(m);
        self.loss_trace.truncate(m + 1);
    }

    /// `F(x)` for a row in split-rule encoding.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.schema.len()
            )));
        }
        Ok(self.predict_row_unchecked(row))
    }

    #[inline]
    pub(crate) fn predict_row_unchecked(&self, row: &[f64]) -> f64 {
        let mut f = self.f0;
        for tree in &self.trees {
            f += tree.predict_row(row);
        }
        f
    }

    /// `F(x_i)` for every row of `data`, whose schema must equal the model's.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_schema(data.schema())?;
        let mut row = Vec::with_capacity(data.n_features());
        Ok((0..data.n_rows())
            .map(|i| {
                data.fill_row(i, &mut row);
                self.predict_row_unchecked(&row)
            })
            .collect())
    }

    /// Predicted mean `mu = exp(F)`.
    pub fn predict_mu(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self.predict(data)?.into_iter().map(f64::exp).collect())
    }

    pub(crate) fn check_schema(&self, schema: &Schema) -> Result<()> {
        if *schema != self.schema {
            return Err(Error::SchemaMismatch(
                "data schema differs from the model schema (align the data first)".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: BoostedModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::data(format!("unknown model format '{}'", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::data(format!("unsupported model version {}", self.version)));
        }
        check_rho(self.rho)?;
        if !self.f0.is_finite() {
            return Err(Error::data("model intercept is not finite"));
        }
        for (m, tree) in self.trees.iter().enumerate() {
            if tree.n_features() != self.schema.len() {
                return Err(Error::data(format!("tree {m} expects {} features", tree.n_features())));
            }
            tree.validate()?;
        }
        Ok(())
    }
}

/// `log(sum w y / sum w)`, the loss minimiser without covariates.
pub fn init_intercept(y: &[f64], w: &[f64]) -> Result<f64> {
    let num: f64 = y.iter().zip(w).map(|(y, w)| y * w).sum();
    let den: f64 = w.iter().sum();
    if !(num > 0.0) {
        return Err(Error::Unfittable("all responses are zero; the log-mean intercept is -inf".into()));
    }
    Ok((num / den).ln())
}

/// Exact minimiser over `eta` of `sum_i loss(y_i, F_i + eta)` for one
/// region, clamped to `[-ETA_CLAMP, ETA_CLAMP]`.
pub fn leaf_eta(members: &[WeightedObservation], rho: f64) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::param("leaf has no members"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for o in members {
        if o.y > 0.0 {
            num += o.w * o.y * ((1.0 - rho) * o.f).exp();
        }
        den += o.w * ((2.0 - rho) * o.f).exp();
    }
    Ok(clamped_log_ratio(num, den))
}

#[inline]
fn clamped_log_ratio(num: f64, den: f64) -> f64 {
    if !(num > 0.0) {
        return -ETA_CLAMP;
    }
    let eta = (num / den).ln();
    if eta.is_nan() {
        0.0
    } else {
        eta.clamp(-ETA_CLAMP, ETA_CLAMP)
    }
}

/// Stagewise state over one training set.
struct Booster<'a> {
    data: &'a Dataset,
    grower: Option<TreeGrower<'a>>,
    cfg: BoostConfig,
    f: Vec<f64>,
    /// `exp((1 - rho) F)` and `exp((2 - rho) F)` at the current `F`.
    head: Vec<f64>,
    tail: Vec<f64>,
    grad: Vec<f64>,
    f0: f64,
}

impl<'a> Booster<'a> {
    fn new(data: &'a Dataset, cfg: &BoostConfig) -> Result<Self> {
        cfg.validate()?;
        let f0 = init_intercept(data.y(), data.w())?;
        let grower = if cfg.n_trees > 0 {
            Some(TreeGrower::new(data, cfg.n_leaves, cfg.min_node)?)
        } else {
            None
        };
        let n = data.n_rows();
        let mut booster = Self {
            data,
            grower,
            cfg: cfg.clone(),
            f: vec![f0; n],
            head: vec![0.0; n],
            tail: vec![0.0; n],
            grad: vec![0.0; n],
            f0,
        };
        booster.refresh();
        Ok(booster)
    }

    fn refresh(&mut self) {
        let rho = self.cfg.rho;
        for i in 0..self.f.len() {
            self.head[i] = ((1.0 - rho) * self.f[i]).exp();
            self.tail[i] = ((2.0 - rho) * self.f[i]).exp();
        }
    }

    /// Same arithmetic as [`tweedie::loss`], on the cached exponentials.
    fn loss(&self) -> f64 {
        let rho = self.cfg.rho;
        let (y, w) = (self.data.y(), self.data.w());
        (0..self.f.len())
            .map(|i| {
                let tail = self.tail[i] / (2.0 - rho);
                if y[i] > 0.0 {
                    w[i] * (-y[i] * self.head[i] / (1.0 - rho) + tail)
                } else {
                    w[i] * tail
                }
            })
            .sum()
    }

    /// One boosting stage; returns the tree with shrunken leaf values.
    fn step(&mut self) -> Result<RegressionTree> {
        let (y, w) = (self.data.y(), self.data.w());
        for i in 0..self.f.len() {
            self.grad[i] = if y[i] > 0.0 {
                w[i] * (y[i] * self.head[i] - self.tail[i])
            } else {
                -w[i] * self.tail[i]
            };
        }
        let grower = self.grower.as_ref().expect("grower exists when stages are requested");
        let grown = grower.grow(&self.grad)?;
        let n_leaves = grown.tree.n_leaves();
        let mut num = vec![0.0; n_leaves];
        let mut den = vec![0.0; n_leaves];
        for (i, &leaf) in grown.leaf_of_row.iter().enumerate() {
            if y[i] > 0.0 {
                num[leaf] += w[i] * y[i] * self.head[i];
            }
            den[leaf] += w[i] * self.tail[i];
        }
        let delta: Vec<f64> = num
            .iter()
            .zip(&den)
            .map(|(&n, &d)| self.cfg.shrinkage * clamped_log_ratio(n, d))
            .collect();
        for (i, &leaf) in grown.leaf_of_row.iter().enumerate() {
            self.f[i] += delta[leaf];
        }
        self.refresh();
        let mut tree = grown.tree;
        tree.map_leaves(|leaf, _| delta[leaf]);
        Ok(tree)
    }
}

/// Runs `cfg.n_trees` boosting stages on `data`.
pub fn fit(data: &Dataset, cfg: &BoostConfig) -> Result<BoostedModel> {
    let mut booster = Booster::new(data, cfg)?;
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut loss_trace = Vec::with_capacity(cfg.n_trees + 1);
    loss_trace.push(booster.loss());
    for _ in 0..cfg.n_trees {
        trees.push(booster.step()?);
        loss_trace.push(booster.loss());
    }
    Ok(BoostedModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        schema: data.schema().clone(),
        f0: booster.f0,
        rho: cfg.rho,
        phi: None,
        shrinkage: cfg.shrinkage,
        n_leaves: cfg.n_leaves,
        min_node: cfg.min_node,
        seed: cfg.seed,
        loss_trace,
        trees,
    })
}

/// Fold index of each row: a seeded shuffle dealt round-robin into `k` folds.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

/// Cross-validated loss surface over stages and tree sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Candidate tree sizes, ascending.
    pub leaves: Vec<usize>,
    /// `loss[l][m]` is `CV(m, leaves[l])` for `m = 0..=M_max`.
    pub loss: Vec<Vec<f64>>,
    /// Stage count minimising the CV loss for each tree size.
    pub best_trees: Vec<usize>,
    pub best_leaves: usize,
    /// `best_trees` entry for `best_leaves`.
    pub best_n_trees: usize,
    pub folds: Vec<usize>,
}

impl CvResult {
    pub fn min_loss(&self, l_index: usize) -> f64 {
        self.loss[l_index][self.best_trees[l_index]]
    }
}

/// K-fold cross-validation of `(M, L)` for `M <= cfg.n_trees` and `L` in
/// `leaves`. Ties go to fewer trees, then fewer leaves.
pub fn cv_tune(data: &Dataset, cfg: &BoostConfig, leaves: &[usize]) -> Result<CvResult> {
    let n = data.n_rows();
    let k = cfg.folds;
    if k < 2 {
        return Err(Error::param(format!("need at least 2 folds, got {k}")));
    }
    if n < 2 * k {
        return Err(Error::param(format!("{n} rows are too few for {k} folds")));
    }
    let mut leaves: Vec<usize> = leaves.to_vec();
    leaves.sort_unstable();
    leaves.dedup();
    if leaves.is_empty() {
        return Err(Error::param("no candidate tree sizes"));
    }
    for &l in &leaves {
        BoostConfig { n_leaves: l, ..cfg.clone() }.validate()?;
    }

    let folds = fold_assignment(n, k, cfg.seed);
    let m_max = cfg.n_trees;
    let mut loss = vec![vec![0.0; m_max + 1]; leaves.len()];
    for fold in 0..k {
        let train_rows: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let valid_rows: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
        let train = data.subset(&train_rows);
        let valid = data.subset(&valid_rows);
        let rows: Vec<Vec<f64>> = (0..valid.n_rows()).map(|i| valid.row(i)).collect();
        for (li, &l) in leaves.iter().enumerate() {
            let fold_cfg = BoostConfig { n_leaves: l, ..cfg.clone() };
            let mut booster = Booster::new(&train, &fold_cfg).map_err(|e| match e {
                Error::Unfittable(msg) => Error::Unfittable(format!("fold {fold}: {msg}")),
                other => other,
            })?;
            let mut f = vec![booster.f0; valid.n_rows()];
            let fold_loss = |f: &[f64]| -> f64 {
                (0..f.len())
                    .map(|i| tweedie::loss(valid.y()[i], valid.w()[i], f[i], cfg.rho))
                    .sum()
            };
            loss[li][0] += fold_loss(&f);
            for m in 1..=m_max {
                let tree = booster.step()?;
                for (fi, row) in f.iter_mut().zip(&rows) {
                    *fi += tree.predict_row(row);
                }
                loss[li][m] += fold_loss(&f);
            }
        }
    }
    for curve in &mut loss {
        for v in curve.iter_mut() {
            *v /= n as f64;
        }
    }
    let best_trees: Vec<usize> = loss.iter().map(|curve| argmin_first(curve)).collect();
    let mins: Vec<f64> = loss.iter().zip(&best_trees).map(|(c, &m)| c[m]).collect();
    let best_l = argmin_first(&mins);
    Ok(CvResult {
        best_leaves: leaves[best_l],
        best_n_trees: best_trees[best_l],
        leaves,
        loss,
        best_trees,
        folds,
    })
}

fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> Dataset {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| if v > 0.5 { 2.0 + (i % 3) as f64 } else { 0.5 * (i % 2) as f64 })
            .collect();
        Dataset::from_numeric(&["x"], vec![x], y, None).unwrap()
    }

    #[test]
    fn intercept_examples() {
        assert!((init_intercept(&[1.0, 3.0], &[1.0, 1.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((init_intercept(&[2.0, 2.0], &[0.3, 0.3]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(init_intercept(&[0.0, 4.0], &[3.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(init_intercept(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::Unfittable(_))));
    }

    #[test]
    fn leaf_eta_examples() {
        let obs = |y, w, f| WeightedObservation::new(y, w, f).unwrap();
        let eta = leaf_eta(&[obs(0.0, 1.0, 0.0), obs(4.0, 1.0, 0.0)], 1.5).unwrap();
        assert!((eta - 2f64.ln()).abs() < 1e-15);
        assert_eq!(leaf_eta(&[obs(1.0, 1.0, 0.0)], 1.5).unwrap(), 0.0);
        assert_eq!(leaf_eta(&[obs(0.0, 1.0, 0.3), obs(0.0, 2.0, -1.0)], 1.5).unwrap(), -ETA_CLAMP);
        assert!(leaf_eta(&[], 1.5).is_err());
    }

    #[test]
    fn zero_trees_predict_intercept() {
        let d = step_data();
        let model = fit(&d, &BoostConfig { n_trees: 0, ..Default::default() }).unwrap();
        let f = model.predict(&d).unwrap();
        assert!(f.iter().all(|&v| v == model.f0()));
        assert_eq!(model.loss_trace().len(), 1);
    }

    #[test]
    fn single_tree_full_step_matches_hand_assembly() {
        let d = step_data();
        let cfg = BoostConfig {
            n_trees: 1,
            n_leaves: 2,
            shrinkage: 1.0,
            min_node: 5,
            ..Default::default()
        };
        let model = fit(&d, &cfg).unwrap();
        let tree = &model.trees()[0];
        let f0 = model.f0();
        // Recompute each region's eta from its members.
        let mut members = vec![Vec::new(); 2];
        for i in 0..d.n_rows() {
            let leaf = tree.route(&d.row(i)).unwrap();
            members[leaf].push(WeightedObservation::new(d.y()[i], 1.0, f0).unwrap());
        }
        let etas: Vec<f64> = members.iter().map(|m| leaf_eta(m, 1.5).unwrap()).collect();
        let pred = model.predict(&d).unwrap();
        for i in 0..d.n_rows() {
            let leaf = tree.route(&d.row(i)).unwrap();
            assert_eq!(pred[i], f0 + etas[leaf]);
        }
    }

    #[test]
    fn isolating_every_point_fits_positive_responses() {
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y = vec![1.0, 3.0, 0.5, 2.0, 7.0, 0.25, 4.0, 1.5];
        let d = Dataset::from_numeric(&["x"], vec![x], y.clone(), None).unwrap();
        let cfg = BoostConfig {
            n_trees: 1,
            n_leaves: 8,
            shrinkage: 1.0,
            min_node: 1,
            ..Default::default()
        };
        let f = fit(&d, &cfg).unwrap().predict(&d).unwrap();
        for (fi, yi) in f.iter().zip(&y) {
            assert!((fi.exp() - yi).abs() < 1e-12 * yi);
        }
    }

    #[test]
    fn loss_trace_decreases() {
        let d = step_data();
        for nu in [0.005, 0.1, 1.0] {
            let cfg = BoostConfig {
                n_trees: 50,
                n_leaves: 3,
                shrinkage: nu,
                min_node: 3,
                ..Default::default()
            };
            let trace = fit(&d, &cfg).unwrap().loss_trace().to_vec();
            assert!(trace[1] < trace[0]);
            for pair in trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs());
            }
        }
    }

    #[test]
    fn folds_depend_only_on_n_k_seed() {
        let a = fold_assignment(23, 5, 9);
        assert_eq!(a, fold_assignment(23, 5, 9));
        assert_ne!(a, fold_assignment(23, 5, 10));
        let mut sizes = [0; 5];
        for f in &a {
            sizes[*f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 4 || s == 5));
    }

    #[test]
    fn cv_intercept_column_is_shared() {
        let d = step_data();
        let cfg = BoostConfig {
            n_trees: 20,
            min_node: 2,
            shrinkage: 0.1,
            ..Default::default()
        };
        let cv = cv_tune(&d, &cfg, &[4, 2, 3]).unwrap();
        assert_eq!(cv.leaves, vec![2, 3, 4]);
        assert_eq!(cv.loss[0][0], cv.loss[1][0]);
        assert_eq!(cv.loss[0][0], cv.loss[2][0]);
        assert!(cv.best_n_trees > 0);
    }

    #[test]
    fn cv_rejects_bad_fold_counts() {
        let d = step_data();
        assert!(cv_tune(&d, &BoostConfig { folds: 1, ..Default::default() }, &[2]).is_err());
        assert!(cv_tune(&d, &BoostConfig { folds: 21, ..Default::default() }, &[2]).is_err());
    }

    #[test]
    fn cv_reports_all_zero_training_fold() {
        // one positive response: the fold holding it leaves an all-zero training set only
        // when K = n, so use leave-one-out on a tiny set
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let mut y = vec![0.0; 6];
        y[2] = 1.0;
        let d = Dataset::from_numeric(&["x"], vec![x], y, None).unwrap();
        let cfg = BoostConfig { n_trees: 0, folds: 3, ..Default::default() };
        // with 3 folds of 2 rows, the training part of the fold holding row 2 is all zero
        match cv_tune(&d, &cfg, &[2]) {
            Err(Error::Unfittable(msg)) => assert!(msg.starts_with("fold ")),
            other => panic!("expected per-fold unfittable error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_with_categorical_splits() {
        use crate::data::{Column, FeatureMeta, Schema};
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / 10.0).collect();
        let zone: Vec<u32> = (0..n).map(|i| (i % 3) as u32).collect();
        let y: Vec<f64> = (0..n).map(|i| if i % 3 == 1 { 4.0 } else { (i % 2) as f64 }).collect();
        let schema = Schema::new(vec![
            FeatureMeta::numeric("x"),
            FeatureMeta::categorical("zone", vec!["a".into(), "b".into(), "c".into()]),
        ]);
        let d = Dataset::new(schema, vec![Column::Numeric(x), Column::Categorical(zone)], y, vec![1.0; n]).unwrap();
        let cfg = BoostConfig { n_trees: 5, n_leaves: 3, shrinkage: 0.5, min_node: 5, ..Default::default() };
        let mut model = fit(&d, &cfg).unwrap();
        model.set_phi(0.75);
        let uses_levels = model
            .trees()
            .iter()
            .flat_map(|t| t.splits())
            .any(|(r, _)| matches!(r.kind, crate::tree::SplitKind::Levels { .. }));
        assert!(uses_levels);
        let back = BoostedModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.predict(&d).unwrap(), model.predict(&d).unwrap());
    }
}
