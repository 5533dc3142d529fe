//! Least-squares regression tree with a fixed number of terminal nodes.
//!
//! Trees are grown best-first: at every step the current leaf whose best
//! admissible split gives the largest reduction in squared error is split,
//! until the requested number of leaves is reached or no leaf can be split.
//! The criterion is the plain (unweighted) sum of squares of the targets.

use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, UNSEEN_LEVEL};
use crate::error::{Error, Result};

/// Splits explaining less than this fraction of a node's raw sum of squares
/// are treated as no improvement.
const MIN_RELATIVE_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SplitKind {
    /// `x <= threshold` goes left.
    Threshold { value: f64 },
    /// Level codes that go left; all other codes, including unseen ones,
    /// go right. Sorted ascending.
    Levels {
        #[serde(rename = "levels")]
        left: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    #[serde(flatten)]
    pub kind: SplitKind,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, value: f64) -> bool {
        match &self.kind {
            SplitKind::Threshold { value: t } => value <= *t,
            SplitKind::Levels { left } => {
                value >= 0.0
                    && value <= u32::MAX as f64
                    && value.fract() == 0.0
                    && left.binary_search(&(value as u32)).is_ok()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Split {
        #[serde(flatten)]
        rule: SplitRule,
        left: usize,
        right: usize,
        /// Reduction in squared error achieved by this split.
        gain: f64,
        count: usize,
    },
    Leaf {
        leaf: usize,
        value: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    n_features: usize,
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Tree with a single leaf predicting `value`.
    pub fn constant(n_features: usize, value: f64, count: usize) -> Self {
        Self {
            n_features,
            nodes: vec![Node::Leaf { leaf: 0, value, count }],
        }
    }

    /// Builds a tree from its node array; node 0 is the root.
    pub fn from_nodes(n_features: usize, nodes: Vec<Node>) -> Result<Self> {
        let tree = Self { n_features, nodes };
        tree.validate()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Split rules with their recorded gains, in node order.
    pub fn splits(&self) -> impl Iterator<Item = (&SplitRule, f64)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { rule, gain, .. } => Some((rule, *gain)),
            Node::Leaf { .. } => None,
        })
    }

    pub fn total_gain(&self) -> f64 {
        self.splits().map(|(_, g)| g).sum()
    }

    /// Leaf id reached by `row`.
    pub fn route(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::SchemaMismatch(format!(
                "row has {} features, tree expects {}",
                row.len(),
                self.n_features
            )));
        }
        Ok(self.leaf_node(row).0)
    }

    /// Value of the leaf reached by `row`; the caller guarantees the width.
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.leaf_node(row).1
    }

    #[inline]
    fn leaf_node(&self, row: &[f64]) -> (usize, f64) {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { leaf, value, .. } => return (*leaf, *value),
                Node::Split { rule, left, right, .. } => {
                    idx = if rule.goes_left(row[rule.feature]) { *left } else { *right };
                }
            }
        }
    }

    /// Replaces the value of every leaf by `f(leaf_id, old_value)`.
    pub fn map_leaves(&mut self, mut f: impl FnMut(usize, f64) -> f64) {
        for node in &mut self.nodes {
            if let Node::Leaf { leaf, value, .. } = node {
                *value = f(*leaf, *value);
            }
        }
    }

    /// Leaf values indexed by leaf id.
    pub fn leaf_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_leaves()];
        for node in &self.nodes {
            if let Node::Leaf { leaf, value, .. } = node {
                out[*leaf] = *value;
            }
        }
        out
    }

    /// Checks links, leaf numbering and reachability of a deserialized tree.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::data(format!("malformed tree: {m}")));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        let n_leaves = self.n_leaves();
        let mut seen_leaf = vec![false; n_leaves];
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if visited[i] {
                return bad(format!("node {i} reached twice"));
            }
            visited[i] = true;
            match &self.nodes[i] {
                Node::Leaf { leaf, value, .. } => {
                    if *leaf >= n_leaves || seen_leaf[*leaf] {
                        return bad(format!("leaf id {leaf} invalid or duplicated"));
                    }
                    if !value.is_finite() {
                        return bad(format!("leaf {leaf} has non-finite value"));
                    }
                    seen_leaf[*leaf] = true;
                }
                Node::Split { rule, left, right, .. } => {
                    if rule.feature >= self.n_features {
                        return bad(format!("split on feature {} of {}", rule.feature, self.n_features));
                    }
                    if *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return bad(format!("node {i} links outside the tree"));
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return bad("unreachable nodes".into());
        }
        Ok(())
    }
}

/// Per-dataset split search state: row orders of numeric features are
/// sorted once and reused for every tree grown on the same data.
pub struct TreeGrower<'a> {
    data: &'a Dataset,
    sorted: Vec<Vec<Sorted>>,
    /// `recip[k] = 1 / k`, so split scans avoid divisions.
    recip: Vec<f64>,
    max_leaves: usize,
    min_node: usize,
}

/// A fitted tree together with the leaf id of every training row.
pub struct GrownTree {
    pub tree: RegressionTree,
    pub leaf_of_row: Vec<usize>,
}

/// A row of a numeric feature in sorted order, carrying its value so the
/// split scan reads values sequentially.
#[derive(Debug, Clone, Copy)]
struct Sorted {
    row: u32,
    value: f64,
}

struct Candidate {
    feature: usize,
    kind: SplitKind,
    gain: f64,
}

struct OpenLeaf {
    node: usize,
    rows: Vec<u32>,
    /// Row orders restricted to this leaf; `None` at the root, which uses
    /// the grower's presorted orders.
    sorted: Option<Vec<Vec<Sorted>>>,
    best: Option<Candidate>,
}

impl<'a> TreeGrower<'a> {
    pub fn new(data: &'a Dataset, max_leaves: usize, min_node: usize) -> Result<Self> {
        if max_leaves < 2 {
            return Err(Error::param(format!("number of leaves must be >= 2, got {max_leaves}")));
        }
        if min_node < 1 {
            return Err(Error::param("minimum node size must be >= 1"));
        }
        let n = data.n_rows();
        if n < 2 * min_node {
            return Err(Error::data(format!(
                "{n} rows cannot hold two nodes of at least {min_node} observations"
            )));
        }
        let sorted = data
            .columns()
            .iter()
            .map(|c| match c {
                Column::Numeric(v) => {
                    let mut idx: Vec<u32> = (0..n as u32).collect();
                    idx.sort_by(|&a, &b| v[a as usize].total_cmp(&v[b as usize]).then(a.cmp(&b)));
                    idx.into_iter()
                        .map(|row| Sorted {
                            row,
                            value: v[row as usize],
                        })
                        .collect()
                }
                Column::Categorical(_) => Vec::new(),
            })
            .collect();
        let recip = (0..=n).map(|k| 1.0 / k as f64).collect();
        Ok(Self {
            data,
            sorted,
            recip,
            max_leaves,
            min_node,
        })
    }

    /// Grows one tree on `targets`; leaf values are the target means.
    pub fn grow(&self, targets: &[f64]) -> Result<GrownTree> {
        let n = self.data.n_rows();
        if targets.len() != n {
            return Err(Error::data(format!("{} targets for {n} rows", targets.len())));
        }
        if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::Numeric(format!("target {i} is not finite")));
        }
        let mut nodes: Vec<Option<Node>> = vec![None];
        let mut root = OpenLeaf {
            node: 0,
            rows: (0..n as u32).collect(),
            sorted: None,
            best: None,
        };
        root.best = self.best_split(&root, targets);
        let mut open = vec![root];
        let mut goes_left = vec![false; n];
        let mut n_leaves = 1;

        while n_leaves < self.max_leaves {
            let mut pick: Option<usize> = None;
            for (i, leaf) in open.iter().enumerate() {
                if let Some(c) = &leaf.best {
                    let better = match pick {
                        None => true,
                        Some(p) => c.gain > open[p].best.as_ref().map_or(f64::NEG_INFINITY, |b| b.gain),
                    };
                    if better {
                        pick = Some(i);
                    }
                }
            }
            let Some(pick) = pick else { break };
            let parent = open.swap_remove(pick);
            let cand = parent.best.expect("picked leaf has a split");
            let rule = SplitRule {
                feature: cand.feature,
                kind: cand.kind,
            };
            let col = self.data.column(rule.feature);
            for &r in &parent.rows {
                goes_left[r as usize] = rule.goes_left(col.value(r as usize));
            }
            let (lrows, rrows): (Vec<u32>, Vec<u32>) =
                parent.rows.iter().partition(|&&r| goes_left[r as usize]);
            // The last split's children are never split, so skip their search.
            let last = n_leaves + 1 == self.max_leaves;
            let mut lsorted = Vec::new();
            let mut rsorted = Vec::new();
            if !last {
                for s in parent.sorted.as_ref().unwrap_or(&self.sorted) {
                    let (l, r): (Vec<Sorted>, Vec<Sorted>) = s.iter().partition(|e| goes_left[e.row as usize]);
                    lsorted.push(l);
                    rsorted.push(r);
                }
            }
            let left_id = nodes.len();
            let right_id = left_id + 1;
            nodes.push(None);
            nodes.push(None);
            nodes[parent.node] = Some(Node::Split {
                rule,
                left: left_id,
                right: right_id,
                gain: cand.gain,
                count: parent.rows.len(),
            });
            for (node, rows, sorted) in [(left_id, lrows, lsorted), (right_id, rrows, rsorted)] {
                let mut leaf = OpenLeaf {
                    node,
                    rows,
                    sorted: Some(sorted),
                    best: None,
                };
                if !last {
                    leaf.best = self.best_split(&leaf, targets);
                }
                open.push(leaf);
            }
            n_leaves += 1;
        }

        // Leaf ids follow node order so numbering is independent of growth order.
        open.sort_by_key(|l| l.node);
        let mut leaf_of_row = vec![0usize; n];
        for (leaf_id, leaf) in open.iter().enumerate() {
            let sum: f64 = leaf.rows.iter().map(|&r| targets[r as usize]).sum();
            let value = sum / leaf.rows.len() as f64;
            for &r in &leaf.rows {
                leaf_of_row[r as usize] = leaf_id;
            }
            nodes[leaf.node] = Some(Node::Leaf {
                leaf: leaf_id,
                value,
                count: leaf.rows.len(),
            });
        }
        let nodes = nodes.into_iter().map(|n| n.expect("every node assigned")).collect();
        Ok(GrownTree {
            tree: RegressionTree {
                n_features: self.data.n_features(),
                nodes,
            },
            leaf_of_row,
        })
    }

    fn best_split(&self, leaf: &OpenLeaf, targets: &[f64]) -> Option<Candidate> {
        let m = leaf.rows.len();
        if m < 2 * self.min_node {
            return None;
        }
        let total: f64 = leaf.rows.iter().map(|&r| targets[r as usize]).sum();
        let raw_ss: f64 = leaf.rows.iter().map(|&r| targets[r as usize].powi(2)).sum();
        let floor = MIN_RELATIVE_GAIN * raw_ss;
        let sorted = leaf.sorted.as_ref().unwrap_or(&self.sorted);
        let mut best: Option<Candidate> = None;
        for (j, col) in self.data.columns().iter().enumerate() {
            let found = match col {
                Column::Numeric(_) => self.best_numeric(&sorted[j], targets, total),
                Column::Categorical(codes) => {
                    let n_levels = self.data.schema().features[j].n_levels();
                    self.best_categorical(&leaf.rows, codes, n_levels, targets, total)
                }
            };
            if let Some((kind, gain)) = found {
                if gain > floor && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate { feature: j, kind, gain });
                }
            }
        }
        best
    }

    fn best_numeric(&self, order: &[Sorted], targets: &[f64], total: f64) -> Option<(SplitKind, f64)> {
        let m = order.len();
        let min = self.min_node;
        let mut left_sum = 0.0;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m - 1 {
            left_sum += targets[order[k].row as usize];
            let n_left = k + 1;
            if n_left < min {
                continue;
            }
            if m - n_left < min {
                break;
            }
            if order[k].value >= order[k + 1].value {
                continue;
            }
            let gain = self.split_gain(left_sum, n_left, total - left_sum, m - n_left);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        best.map(|(k, gain)| {
            let value = midpoint(order[k].value, order[k + 1].value);
            (SplitKind::Threshold { value }, gain)
        })
    }

    fn best_categorical(
        &self,
        rows: &[u32],
        codes: &[u32],
        n_levels: usize,
        targets: &[f64],
        total: f64,
    ) -> Option<(SplitKind, f64)> {
        let mut sums = vec![0.0; n_levels];
        let mut counts = vec![0usize; n_levels];
        let mut unseen = 0usize;
        for &r in rows {
            let c = codes[r as usize];
            if c == UNSEEN_LEVEL {
                // always on the right side
                unseen += 1;
                continue;
            }
            sums[c as usize] += targets[r as usize];
            counts[c as usize] += 1;
        }
        // Ordering levels by mean target makes prefix splits LS-optimal.
        let mut present: Vec<usize> = (0..n_levels).filter(|&l| counts[l] > 0).collect();
        let n_prefixes = if unseen > 0 { present.len() } else { present.len().saturating_sub(1) };
        if n_prefixes == 0 {
            return None;
        }
        present.sort_by(|&a, &b| {
            let ma = sums[a] / counts[a] as f64;
            let mb = sums[b] / counts[b] as f64;
            ma.total_cmp(&mb).then(a.cmp(&b))
        });
        let m = rows.len();
        let mut left_sum = 0.0;
        let mut n_left = 0;
        let mut best: Option<(usize, f64)> = None;
        for (k, &level) in present.iter().enumerate().take(n_prefixes) {
            left_sum += sums[level];
            n_left += counts[level];
            if n_left < self.min_node || m - n_left < self.min_node {
                continue;
            }
            let gain = self.split_gain(left_sum, n_left, total - left_sum, m - n_left);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        best.map(|(k, gain)| {
            let mut left: Vec<u32> = present[..=k].iter().map(|&l| l as u32).collect();
            left.sort_unstable();
            (SplitKind::Levels { left }, gain)
        })
    }

    /// Parent SSE minus children SSE: `n_l n_r / n * (mean_l - mean_r)^2`.
    #[inline]
    fn split_gain(&self, left_sum: f64, n_left: usize, right_sum: f64, n_right: usize) -> f64 {
        let r = &self.recip;
        let diff = left_sum * r[n_left] - right_sum * r[n_right];
        (n_left * n_right) as f64 * r[n_left + n_right] * diff * diff
    }
}

/// A threshold strictly between `lo < hi` when one is representable.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid < hi {
        mid
    } else {
        lo
    }
}

/// Fits one least-squares tree with at most `max_leaves` leaves to `targets`.
pub fn fit_tree(data: &Dataset, targets: &[f64], max_leaves: usize, min_node: usize) -> Result<RegressionTree> {
    Ok(TreeGrower::new(data, max_leaves, min_node)?.grow(targets)?.tree)
}
