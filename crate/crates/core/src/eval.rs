//! Model-quality metrics: MAD against a known predictor function, ordered
//! Lorenz curves, Gini indices and minimax model selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean absolute deviation between true and fitted log-mean values.
pub fn mad(truth: &[f64], fitted: &[f64]) -> Result<f64> {
    if truth.len() != fitted.len() {
        return Err(Error::data(format!(
            "MAD needs equal lengths, got {} and {}",
            truth.len(),
            fitted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::data("MAD of empty vectors"));
    }
    let total: f64 = truth.iter().zip(fitted).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / truth.len() as f64)
}

/// Ordered Lorenz curve of losses against base premiums, sorted by the
/// relative premium `competing / base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzResult {
    /// Distinct relative premiums in ascending order; entry `k` produced
    /// curve vertex `k + 1`.
    pub relative: Vec<f64>,
    /// Ordered premium distribution, starting at 0 and ending at 1.
    pub premium: Vec<f64>,
    /// Ordered loss distribution, starting at 0 and ending at 1.
    pub loss: Vec<f64>,
    /// Twice the signed area between the line of equality and the curve;
    /// positive when the curve lies below the line.
    pub gini: f64,
}

pub fn ordered_lorenz(base: &[f64], competing: &[f64], losses: &[f64]) -> Result<LorenzResult> {
    let n = base.len();
    if competing.len() != n || losses.len() != n {
        return Err(Error::data(format!(
            "Lorenz curve needs equal lengths, got {n}, {}, {}",
            competing.len(),
            losses.len()
        )));
    }
    if let Some(i) = base.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::data(format!("base premium {i} must be positive, got {}", base[i])));
    }
    if let Some(i) = competing.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::data(format!("competing premium {i} must be positive, got {}", competing[i])));
    }
    if let Some(i) = losses.iter().position(|y| !(y.is_finite() && *y >= 0.0)) {
        return Err(Error::data(format!("loss {i} must be >= 0, got {}", losses[i])));
    }
    if !(losses.iter().sum::<f64>() > 0.0) {
        return Err(Error::data("total loss must be positive"));
    }

    let ratio: Vec<f64> = competing.iter().zip(base).map(|(p, b)| p / b).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ratio[a].total_cmp(&ratio[b]).then(a.cmp(&b)));

    let mut relative = Vec::new();
    let mut premium = vec![0.0];
    let mut loss = vec![0.0];
    let (mut cum_b, mut cum_y) = (0.0, 0.0);
    let mut k = 0;
    while k < n {
        let s = ratio[order[k]];
        // all policies with R <= s enter together
        while k < n && ratio[order[k]] == s {
            cum_b += base[order[k]];
            cum_y += losses[order[k]];
            k += 1;
        }
        relative.push(s);
        premium.push(cum_b);
        loss.push(cum_y);
    }
    // Normalising by the sums in sorted order keeps every share <= 1 and
    // makes the final vertex exactly (1, 1).
    premium.iter_mut().for_each(|v| *v /= cum_b);
    loss.iter_mut().for_each(|v| *v /= cum_y);

    let mut area = 0.0;
    for k in 0..premium.len() - 1 {
        let gap0 = premium[k] - loss[k];
        let gap1 = premium[k + 1] - loss[k + 1];
        area += (premium[k + 1] - premium[k]) * (gap0 + gap1) / 2.0;
    }
    Ok(LorenzResult {
        relative,
        premium,
        loss,
        gini: 2.0 * area,
    })
}

/// Gini indices for every (base, competing) pair of score vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniMatrix {
    /// `gini[b][p]`: model `b` as base, model `p` as competing premium.
    pub gini: Vec<Vec<f64>>,
    /// Largest Gini over competitors, per base model.
    pub max_per_base: Vec<f64>,
    /// Base model with the smallest maximal Gini (first on ties).
    pub selected: usize,
}

pub fn gini_matrix(scores: &[Vec<f64>], losses: &[f64]) -> Result<GiniMatrix> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::data(format!("Gini matrix needs at least 2 models, got {k}")));
    }
    let mut gini = vec![vec![0.0; k]; k];
    for b in 0..k {
        for p in 0..k {
            if b != p {
                gini[b][p] = ordered_lorenz(&scores[b], &scores[p], losses)?.gini;
            }
        }
    }
    let max_per_base: Vec<f64> = (0..k)
        .map(|b| {
            (0..k)
                .filter(|&p| p != b)
                .map(|p| gini[b][p])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let selected = minimax(&max_per_base);
    Ok(GiniMatrix {
        gini,
        max_per_base,
        selected,
    })
}

fn minimax(max_per_base: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in max_per_base.iter().enumerate() {
        if *v < max_per_base[best] {
            best = i;
        }
    }
    best
}

/// Mean and standard error of Gini matrices over repeated data splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniSummary {
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub max_per_base: Vec<f64>,
    pub selected: usize,
    pub replications: usize,
}

pub fn summarize_gini(runs: &[GiniMatrix]) -> Result<GiniSummary> {
    let r = runs.len();
    if r == 0 {
        return Err(Error::data("no Gini matrices to summarise"));
    }
    let k = runs[0].gini.len();
    if runs.iter().any(|m| m.gini.len() != k) {
        return Err(Error::data("Gini matrices have different sizes"));
    }
    let mut mean = vec![vec![0.0; k]; k];
    let mut se = vec![vec![0.0; k]; k];
    for b in 0..k {
        for p in 0..k {
            let vals: Vec<f64> = runs.iter().map(|m| m.gini[b][p]).collect();
            let m = vals.iter().sum::<f64>() / r as f64;
            mean[b][p] = m;
            if r > 1 {
                let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (r - 1) as f64;
                se[b][p] = (var / r as f64).sqrt();
            }
        }
    }
    let max_per_base: Vec<f64> = (0..k)
        .map(|b| {
            (0..k)
                .filter(|&p| p != b)
                .map(|p| mean[b][p])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let selected = minimax(&max_per_base);
    Ok(GiniSummary {
        mean,
        se,
        max_per_base,
        selected,
        replications: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(mad(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(mad(&[0.0], &[1.0, 0.0]).is_err());
        let truth = [0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0];
        let fit = [0.45, 0.02, 0.61, 0.5, -0.1, 0.05, 0.4, 0.0, 0.52, 0.03];
        // |dev| = .05 .02 .11 0 .1 .05 .1 0 .02 .03 -> 0.48 / 10
        assert!((mad(&truth, &fit).unwrap() - 0.048).abs() < 1e-15);
    }

    #[test]
    fn identical_scores_give_zero_gini() {
        let b = [1.0, 2.0, 3.0];
        let r = ordered_lorenz(&b, &b, &[0.0, 5.0, 1.0]).unwrap();
        assert_eq!(r.premium, vec![0.0, 1.0]);
        assert_eq!(r.loss, vec![0.0, 1.0]);
        assert_eq!(r.gini, 0.0);
    }

    #[test]
    fn two_policy_hand_example() {
        let r = ordered_lorenz(&[1.0, 1.0], &[2.0, 1.0], &[0.0, 10.0]).unwrap();
        assert_eq!(r.premium, vec![0.0, 0.5, 1.0]);
        assert_eq!(r.loss, vec![0.0, 1.0, 1.0]);
        assert_eq!(r.gini, -0.5);
    }

    #[test]
    fn ties_enter_together() {
        let r = ordered_lorenz(&[1.0; 4], &[1.0, 2.0, 1.0, 2.0], &[1.0, 0.0, 3.0, 0.0]).unwrap();
        assert_eq!(r.relative, vec![1.0, 2.0]);
        assert_eq!(r.premium, vec![0.0, 0.5, 1.0]);
        assert_eq!(r.loss, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_nonpositive_premiums() {
        assert!(ordered_lorenz(&[1.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(ordered_lorenz(&[1.0, 1.0], &[1.0, -1.0], &[1.0, 1.0]).is_err());
        assert!(ordered_lorenz(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_diagonal_and_minimax() {
        let y = [0.0, 1.0, 4.0, 0.0, 2.0];
        let good = vec![0.5, 1.0, 3.0, 0.4, 2.0];
        let flat = vec![1.0; 5];
        let m = gini_matrix(&[flat.clone(), good.clone()], &y).unwrap();
        assert_eq!(m.gini[0][0], 0.0);
        assert_eq!(m.gini[1][1], 0.0);
        assert!(m.gini[0][1] > 0.0);
        assert_eq!(m.selected, 1);
        let same = gini_matrix(&[good.clone(), good], &y).unwrap();
        assert_eq!(same.gini[0][1], 0.0);
        assert_eq!(same.selected, 0);
    }

    #[test]
    fn summary_mean_and_se() {
        let a = GiniMatrix {
            gini: vec![vec![0.0, 0.1], vec![0.3, 0.0]],
            max_per_base: vec![0.1, 0.3],
            selected: 0,
        };
        let b = GiniMatrix {
            gini: vec![vec![0.0, 0.3], vec![0.1, 0.0]],
            max_per_base: vec![0.3, 0.1],
            selected: 1,
        };
        let s = summarize_gini(&[a, b]).unwrap();
        assert!((s.mean[0][1] - 0.2).abs() < 1e-15);
        assert!((s.se[0][1] - 0.1).abs() < 1e-15);
        assert_eq!(s.selected, 0);
    }
}
