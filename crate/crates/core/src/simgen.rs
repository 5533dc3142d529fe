//! Synthetic benchmark designs with Tweedie responses and known log-means.
//!
//! Every generator draws from one `ChaCha8Rng` stream seeded by the caller,
//! so output is reproducible bit for bit. Exposures are fixed at `w = 1`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tweedie::{sample_tweedie, TweedieParams};

/// Dispersion used by the two fixed-function designs.
pub const FIXED_DESIGN_PHI: f64 = 0.5;
/// Index used by the two fixed-function designs.
pub const FIXED_DESIGN_RHO: f64 = 1.5;

/// A generated dataset together with the true `F(x) = log mu(x)` per row.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub true_f: Vec<f64>,
}

fn feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn assemble(names: Vec<String>, columns: Vec<Vec<f64>>, y: Vec<f64>, true_f: Vec<f64>) -> Result<Simulated> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let data = Dataset::from_numeric(&refs, columns, y, None)?;
    Ok(Simulated { data, true_f })
}

fn draw_response<R: Rng>(f: f64, phi: f64, rho: f64, rng: &mut R) -> Result<f64> {
    let p = TweedieParams::new(f.exp(), phi, rho)?;
    sample_tweedie(&p, 1.0, rng)
}

/// Step function `F(x) = 0.5 * 1{x > 0.5}`.
pub fn model1_f(x: f64) -> f64 {
    if x > 0.5 {
        0.5
    } else {
        0.0
    }
}

/// Two hills and two valleys on the unit square.
pub fn model2_f(x1: f64, x2: f64) -> f64 {
    (-5.0 * (1.0 - x1).powi(2) + x2 * x2).exp() + (-5.0 * x1 * x1 + (1.0 - x2).powi(2)).exp()
}

/// One uniform predictor with a discontinuous target. Per row the stream
/// yields `x`, then the response.
pub fn gen_model1(n: usize, seed: u64) -> Result<Simulated> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let xi: f64 = rng.random();
        let fi = model1_f(xi);
        y.push(draw_response(fi, FIXED_DESIGN_PHI, FIXED_DESIGN_RHO, &mut rng)?);
        x.push(xi);
        f.push(fi);
    }
    assemble(feature_names(1), vec![x], y, f)
}

/// Two uniform predictors with an interaction surface. Per row the stream
/// yields `x1`, `x2`, then the response.
pub fn gen_model2(n: usize, seed: u64) -> Result<Simulated> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x1, mut x2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut y, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let fi = model2_f(a, b);
        y.push(draw_response(fi, FIXED_DESIGN_PHI, FIXED_DESIGN_RHO, &mut rng)?);
        x1.push(a);
        x2.push(b);
        f.push(fi);
    }
    assemble(feature_names(2), vec![x1, x2], y, f)
}

/// Settings of the random function generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfgSpec {
    pub p: usize,
    pub n_terms: usize,
    pub phi: f64,
    pub rho: f64,
    pub seed: u64,
}

impl Default for RfgSpec {
    fn default() -> Self {
        Self {
            p: 10,
            n_terms: 20,
            phi: 1.0,
            rho: 1.5,
            seed: 0,
        }
    }
}

impl RfgSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::param("RFG needs p >= 1"));
        }
        if self.n_terms == 0 {
            return Err(Error::param("RFG needs at least one term"));
        }
        TweedieParams::new(1.0, self.phi, self.rho)?;
        Ok(())
    }
}

/// One Gaussian bump `b * exp(-0.5 (z - u)' V (z - u))` on a feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfgTerm {
    pub coefficient: f64,
    /// Feature indices forming `z`, in permutation order.
    pub features: Vec<usize>,
    pub center: Vec<f64>,
    /// Eigenvalues `d` of `V`.
    pub scales: Vec<f64>,
    /// Orthonormal eigenvectors `U`, row-major `p_k x p_k`.
    pub rotation: Vec<f64>,
    /// `V = U diag(d) U'`, row-major `p_k x p_k`.
    pub precision: Vec<f64>,
}

impl RfgTerm {
    pub fn order(&self) -> usize {
        self.features.len()
    }

    pub fn rotation_matrix(&self) -> DMatrix<f64> {
        let k = self.order();
        DMatrix::from_row_slice(k, k, &self.rotation)
    }

    /// The bump `g(z)` without its coefficient.
    pub fn bump(&self, x: &[f64]) -> f64 {
        let k = self.order();
        let diff: Vec<f64> = self.features.iter().zip(&self.center).map(|(&j, u)| x[j] - u).collect();
        let mut q = 0.0;
        for a in 0..k {
            let row = &self.precision[a * k..(a + 1) * k];
            q += diff[a] * row.iter().zip(&diff).map(|(v, d)| v * d).sum::<f64>();
        }
        (-0.5 * q).exp()
    }
}

/// Interaction order `min(floor(2.5 + r), p)`, `r ~ Exp(mean 2)` by inverse CDF.
fn draw_order<R: Rng>(p: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let r = -2.0 * (1.0 - u).ln();
    ((2.5 + r).floor() as usize).min(p)
}

/// Haar-distributed orthonormal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
fn random_orthonormal<R: Rng>(k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// A random predictor function `F(x) = sum_k b_k g_k(z_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfgFunction {
    pub p: usize,
    pub terms: Vec<RfgTerm>,
}

impl RfgFunction {
    /// Draws the terms from `rng`. Within a term the order is: coefficient,
    /// interaction order, feature permutation, center, eigenvalues, rotation.
    pub fn draw<R: Rng>(p: usize, n_terms: usize, rng: &mut R) -> Self {
        let terms = (0..n_terms)
            .map(|_| {
                let coefficient = rng.random_range(-1.0..=1.0);
                let k = draw_order(p, rng);
                let mut perm: Vec<usize> = (0..p).collect();
                rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), rng);
                let features = perm[..k].to_vec();
                let center: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                let scales: Vec<f64> = (0..k)
                    .map(|_| {
                        let s: f64 = rng.random_range(0.1..=2.0);
                        s * s
                    })
                    .collect();
                let u = random_orthonormal(k, rng);
                let v = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(scales.clone())) * u.transpose();
                RfgTerm {
                    coefficient,
                    features,
                    center,
                    scales,
                    rotation: u.transpose().as_slice().to_vec(),
                    precision: v.transpose().as_slice().to_vec(),
                }
            })
            .collect();
        Self { p, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coefficient * t.bump(x)).sum()
    }

    /// Draws `n` rows with `x ~ N(0, I_p)`; per row the stream yields the
    /// `p` coordinates, then the response.
    pub fn sample<R: Rng>(&self, n: usize, phi: f64, rho: f64, rng: &mut R) -> Result<Simulated> {
        if n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        let mut cols = vec![Vec::with_capacity(n); self.p];
        let (mut y, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut row = vec![0.0; self.p];
        for _ in 0..n {
            for v in row.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let fi = self.eval(&row);
            y.push(draw_response(fi, phi, rho, rng)?);
            for (c, v) in cols.iter_mut().zip(&row) {
                c.push(*v);
            }
            f.push(fi);
        }
        assemble(feature_names(self.p), cols, y, f)
    }
}

impl RfgFunction {
    /// Draws `n` rows from a fresh stream seeded with `seed`.
    pub fn sample_seeded(&self, n: usize, phi: f64, rho: f64, seed: u64) -> Result<Simulated> {
        self.sample(n, phi, rho, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Draws a function from `spec.seed` and then `n` rows from the same stream.
pub fn gen_rfg(n: usize, spec: &RfgSpec) -> Result<(RfgFunction, Simulated)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let func = RfgFunction::draw(spec.p, spec.n_terms, &mut rng);
    let sim = func.sample(n, spec.phi, spec.rho, &mut rng)?;
    Ok((func, sim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model1_values() {
        assert_eq!(model1_f(0.4), 0.0);
        assert_eq!(model1_f(0.6), 0.5);
        assert_eq!(model1_f(0.5), 0.0);
    }

    #[test]
    fn model2_values() {
        assert!((model2_f(1.0, 0.0) - (1.0 + (-4.0f64).exp())).abs() < 1e-15);
        assert!((model2_f(0.5, 0.5) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        for &(a, b) in &[(0.1, 0.7), (0.33, 0.25), (0.9, 0.05)] {
            assert!((model2_f(a, b) - model2_f(1.0 - a, 1.0 - b)).abs() < 1e-14);
        }
    }

    #[test]
    fn model1_conditional_mean() {
        let sim = gen_model1(100_000, 3).unwrap();
        let d = &sim.data;
        let ys: Vec<f64> = (0..d.n_rows()).filter(|&i| d.value(i, 0) > 0.5).map(|i| d.y()[i]).collect();
        let mu = 0.5f64.exp();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let se = (FIXED_DESIGN_PHI * mu.powf(FIXED_DESIGN_RHO) / ys.len() as f64).sqrt();
        assert!((mean - mu).abs() < 3.0 * se, "mean {mean} vs {mu} (se {se})");
    }

    #[test]
    fn responses_nonnegative_with_zeros() {
        let sim = gen_model2(2000, 5).unwrap();
        assert!(sim.data.y().iter().all(|&y| y >= 0.0));
        assert!(sim.data.y().iter().any(|&y| y == 0.0));
        for i in 0..50 {
            let f = model2_f(sim.data.value(i, 0), sim.data.value(i, 1));
            assert_eq!(sim.true_f[i], f);
        }
    }

    #[test]
    fn generators_reproducible() {
        let a = gen_model2(300, 11).unwrap();
        let b = gen_model2(300, 11).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.true_f, b.true_f);
        let spec = RfgSpec { seed: 4, ..RfgSpec::default() };
        let (fa, sa) = gen_rfg(200, &spec).unwrap();
        let (fb, sb) = gen_rfg(200, &spec).unwrap();
        assert_eq!(fa, fb);
        assert_eq!(sa.data, sb.data);
        assert_ne!(gen_model1(50, 1).unwrap().data, gen_model1(50, 2).unwrap().data);
    }

    #[test]
    fn rfg_rotations_orthonormal_and_bumps_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let func = RfgFunction::draw(10, 20, &mut rng);
            for t in &func.terms {
                let u = t.rotation_matrix();
                let gram = u.transpose() * &u;
                let k = t.order();
                let err = (gram - DMatrix::<f64>::identity(k, k)).abs().max();
                assert!(err < 1e-12, "{err}");
                let mut x = vec![0.0; 10];
                for (&j, &c) in t.features.iter().zip(&t.center) {
                    x[j] = c;
                }
                assert_eq!(t.bump(&x), 1.0);
                assert!(t.scales.iter().all(|&d| (0.01..=4.0).contains(&d)));
                assert!((-1.0..=1.0).contains(&t.coefficient));
            }
        }
    }

    #[test]
    fn rfg_true_f_matches_eval() {
        let spec = RfgSpec { seed: 1, ..RfgSpec::default() };
        let (func, sim) = gen_rfg(100, &spec).unwrap();
        let mut row = Vec::new();
        for i in 0..100 {
            sim.data.fill_row(i, &mut row);
            assert_eq!(func.eval(&row), sim.true_f[i]);
        }
    }

    #[test]
    fn interaction_order_mean_matches_law() {
        // E[min(floor(2.5 + r), 10)] = 2 + sum_{j=1}^{8} exp(-(j - 0.5) / 2)
        let expected = 2.0 + (1..=8).map(|j| (-(j as f64 - 0.5) / 2.0).exp()).sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws: Vec<f64> = (0..10_000).map(|_| draw_order(10, &mut rng) as f64).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let se = (var / draws.len() as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "mean {mean}, expected {expected}");
        assert!(draws.iter().all(|&d| (2.0..=10.0).contains(&d)));
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(gen_rfg(10, &RfgSpec { p: 0, ..RfgSpec::default() }).is_err());
        assert!(gen_rfg(10, &RfgSpec { rho: 2.0, ..RfgSpec::default() }).is_err());
        assert!(gen_model1(0, 0).is_err());
    }
}
