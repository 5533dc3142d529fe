//! Variable importance and partial dependence for fitted models.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::{fit, BoostConfig, BoostedModel};
use crate::data::{Column, Dataset, FeatureKind, FeatureMeta};
use crate::error::{Error, Result};
use crate::tree::{Node, RegressionTree};

/// How shadow importances are reduced to one baseline per feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "q", rename_all = "snake_case")]
pub enum Baseline {
    Mean,
    /// Empirical quantile (linear interpolation) over the repetitions.
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub features: Vec<String>,
    /// Mean over trees of the summed split gains on each feature.
    pub raw: Vec<f64>,
    /// Importance of each original feature inside the shadow-augmented
    /// fits, averaged over repetitions. Present for adjusted reports.
    pub augmented: Option<Vec<f64>>,
    /// Shadow-feature baseline, present for adjusted reports.
    pub baseline: Option<Vec<f64>>,
    /// `augmented > baseline`, present for adjusted reports.
    pub important: Option<Vec<bool>>,
    /// Shadow importances per repetition, `shadow[b][j]`.
    pub shadow: Vec<Vec<f64>>,
}

fn gains_by_feature(trees: &[RegressionTree], p: usize) -> Vec<f64> {
    let mut vi = vec![0.0; p];
    for tree in trees {
        for (rule, gain) in tree.splits() {
            vi[rule.feature] += gain;
        }
    }
    if !trees.is_empty() {
        let m = trees.len() as f64;
        vi.iter_mut().for_each(|v| *v /= m);
    }
    vi
}

/// Raw importance `(1/M) sum_m sum_{splits on j} gain` of every feature.
pub fn variable_importance(model: &BoostedModel) -> ImportanceReport {
    let schema = model.schema();
    ImportanceReport {
        features: schema.features.iter().map(|f| f.name.clone()).collect(),
        raw: gains_by_feature(model.trees(), schema.len()),
        augmented: None,
        baseline: None,
        important: None,
        shadow: Vec::new(),
    }
}

pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Importance compared against permuted shadow copies.
///
/// Each repetition appends one shadow per feature, holding that feature's
/// values under a fresh random row permutation, and refits with `cfg`.
/// The shadows' importances across repetitions give the baseline. A feature
/// is flagged when its own importance in the same augmented fits, averaged
/// over repetitions, exceeds the baseline: feature and shadow then compete
/// for the same splits, which a comparison with the unaugmented fit would
/// not ensure.
pub fn adjusted_importance(
    data: &Dataset,
    cfg: &BoostConfig,
    repetitions: usize,
    seed: u64,
    baseline: Baseline,
) -> Result<ImportanceReport> {
    if repetitions == 0 {
        return Err(Error::param("importance needs at least one repetition"));
    }
    if let Baseline::Quantile(q) = baseline {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::param(format!("baseline quantile must lie in [0, 1], got {q}")));
        }
    }
    let mut report = variable_importance(&fit(data, cfg)?);
    let p = data.n_features();
    let n = data.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut augmented_vi = vec![0.0; p];

    for _ in 0..repetitions {
        let mut extra = Vec::with_capacity(p);
        for (j, meta) in data.schema().features.iter().enumerate() {
            perm.shuffle(&mut rng);
            let shadow = FeatureMeta {
                name: format!("shadow:{}", meta.name),
                kind: meta.kind.clone(),
            };
            extra.push((shadow, data.column(j).select(&perm)));
        }
        let augmented = data.with_extra_features(extra)?;
        let vi = gains_by_feature(fit(&augmented, cfg)?.trees(), 2 * p);
        augmented_vi.iter_mut().zip(&vi[..p]).for_each(|(a, v)| *a += v);
        report.shadow.push(vi[p..].to_vec());
    }
    augmented_vi.iter_mut().for_each(|a| *a /= repetitions as f64);

    let base: Vec<f64> = (0..p)
        .map(|j| {
            let mut vals: Vec<f64> = report.shadow.iter().map(|s| s[j]).collect();
            match baseline {
                Baseline::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                Baseline::Quantile(q) => {
                    vals.sort_by(f64::total_cmp);
                    quantile(&vals, q)
                }
            }
        })
        .collect();
    report.important = Some(augmented_vi.iter().zip(&base).map(|(r, b)| r > b).collect());
    report.augmented = Some(augmented_vi);
    report.baseline = Some(base);
    Ok(report)
}

/// Grid settings for partial dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per numeric feature.
    pub points: usize,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 100,
            lower_quantile: 0.01,
            upper_quantile: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDependenceGrid {
    pub features: Vec<String>,
    /// Grid values per feature; categorical axes hold level codes.
    pub axes: Vec<Vec<f64>>,
    /// Level labels for categorical axes.
    pub levels: Vec<Option<Vec<String>>>,
    /// Averaged `F` at each point of the product grid, last axis fastest.
    pub values: Vec<f64>,
}

impl PartialDependenceGrid {
    /// Grid coordinates of entry `k` of `values`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut idx = k;
        let mut out = vec![0.0; self.axes.len()];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            out[a] = axis[idx % axis.len()];
            idx /= axis.len();
        }
        out
    }

    /// Printable coordinate: the level label on categorical axes.
    pub fn label(&self, axis: usize, value: f64) -> String {
        match &self.levels[axis] {
            Some(levels) => levels[value as usize].clone(),
            None => value.to_string(),
        }
    }
}

fn grid_axis(data: &Dataset, j: usize, spec: &GridSpec) -> Vec<f64> {
    match (&data.schema().features[j].kind, data.column(j)) {
        (FeatureKind::Categorical { levels }, _) => (0..levels.len()).map(|c| c as f64).collect(),
        (_, Column::Numeric(v)) => {
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = quantile(&sorted, spec.lower_quantile);
            let hi = quantile(&sorted, spec.upper_quantile);
            if spec.points == 1 || lo == hi {
                return vec![lo];
            }
            let step = (hi - lo) / (spec.points - 1) as f64;
            let mut axis: Vec<f64> = (0..spec.points).map(|k| lo + step * k as f64).collect();
            *axis.last_mut().expect("non-empty") = hi;
            axis
        }
        (_, Column::Categorical(_)) => unreachable!("numeric meta with categorical column"),
    }
}

/// Per tree, the number of rows compatible with each leaf's conditions on
/// features outside the subset. Indexed by node.
fn leaf_weights(tree: &RegressionTree, data: &Dataset, in_subset: &[bool]) -> Vec<f64> {
    let nodes = tree.nodes();
    let mut weight = vec![0.0; nodes.len()];
    let mut stack = Vec::new();
    for i in 0..data.n_rows() {
        stack.push(0usize);
        while let Some(k) = stack.pop() {
            match &nodes[k] {
                Node::Leaf { .. } => weight[k] += 1.0,
                Node::Split { rule, left, right, .. } => {
                    if in_subset[rule.feature] {
                        stack.push(*left);
                        stack.push(*right);
                    } else if rule.goes_left(data.value(i, rule.feature)) {
                        stack.push(*left);
                    } else {
                        stack.push(*right);
                    }
                }
            }
        }
    }
    weight
}

/// Partial dependence of `F` on one or two features, averaged over the rows
/// of `data`.
///
/// Each tree is evaluated exactly by weighting its leaves with the share of
/// rows whose other-feature conditions reach them, so the cost does not
/// grow with the product of grid size and row count.
pub fn partial_dependence(
    model: &BoostedModel,
    data: &Dataset,
    features: &[&str],
    spec: &GridSpec,
) -> Result<PartialDependenceGrid> {
    if features.is_empty() || features.len() > 2 {
        return Err(Error::param(format!(
            "partial dependence takes 1 or 2 features, got {}",
            features.len()
        )));
    }
    if spec.points == 0 || !(0.0..=1.0).contains(&spec.lower_quantile) || !(spec.lower_quantile..=1.0).contains(&spec.upper_quantile) {
        return Err(Error::param("invalid partial dependence grid"));
    }
    if data.schema() != model.schema() {
        return Err(Error::SchemaMismatch("data schema differs from the model's".into()));
    }
    let schema = data.schema();
    let mut idx = Vec::with_capacity(features.len());
    for name in features {
        let j = schema
            .index_of(name)
            .ok_or_else(|| Error::param(format!("unknown feature {name:?}")))?;
        if idx.contains(&j) {
            return Err(Error::param(format!("feature {name:?} given twice")));
        }
        idx.push(j);
    }
    let mut in_subset = vec![false; schema.len()];
    idx.iter().for_each(|&j| in_subset[j] = true);

    let axes: Vec<Vec<f64>> = idx.iter().map(|&j| grid_axis(data, j, spec)).collect();
    let levels = idx
        .iter()
        .map(|&j| match &schema.features[j].kind {
            FeatureKind::Categorical { levels } => Some(levels.clone()),
            FeatureKind::Numeric => None,
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut grid = PartialDependenceGrid {
        features: features.iter().map(|s| s.to_string()).collect(),
        axes,
        levels,
        values: Vec::new(),
    };

    let weights: Vec<Vec<f64>> = model
        .trees()
        .iter()
        .map(|t| leaf_weights(t, data, &in_subset))
        .collect();
    let n = data.n_rows() as f64;
    let mut full = vec![0.0; schema.len()];
    let mut stack = Vec::new();
    for k in 0..total {
        for (&j, v) in idx.iter().zip(grid.point(k)) {
            full[j] = v;
        }
        let mut sum = 0.0;
        for (tree, w) in model.trees().iter().zip(&weights) {
            let nodes = tree.nodes();
            stack.push(0usize);
            while let Some(node) = stack.pop() {
                match &nodes[node] {
                    Node::Leaf { value, .. } => sum += value * w[node],
                    Node::Split { rule, left, right, .. } => {
                        if !in_subset[rule.feature] {
                            stack.push(*left);
                            stack.push(*right);
                        } else if rule.goes_left(full[rule.feature]) {
                            stack.push(*left);
                        } else {
                            stack.push(*right);
                        }
                    }
                }
            }
        }
        grid.values.push(model.f0() + sum / n);
    }
    Ok(grid)
}
