//! Joint estimation of the index `rho` and dispersion `phi` by profile
//! likelihood around the boosting fit.
//!
//! For each `rho` on a grid the mean is fitted by boosting, `phi` is then
//! maximised by Brent's method on `log phi`, and the grid point with the
//! largest full Tweedie log-likelihood wins.

use serde::{Deserialize, Serialize};

use crate::boost::{cv_tune, fit, BoostConfig, BoostedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::optimize::brent_minimize;
use crate::tweedie::{check_rho, PortfolioLikelihood};

/// Search interval for `phi`.
pub const PHI_BOUNDS: (f64, f64) = (1e-4, 1e4);
/// Brent tolerance on `log phi`.
pub const PHI_LOG_TOL: f64 = 1e-8;
const PHI_SCAN_POINTS: usize = 37;

/// Maximum-likelihood dispersion for fixed means and index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub phi: f64,
    pub loglik: f64,
    /// The likelihood kept increasing up to an end of [`PHI_BOUNDS`].
    pub at_boundary: bool,
}

/// Maximises `sum_i log f(y_i | exp(F_i), phi / w_i, rho)` over `phi`.
///
/// A coarse scan on `log phi` brackets the maximum, which Brent's method
/// then refines. When the best scan point is an end of the interval and the
/// end beats the refined point, the end is returned with `at_boundary` set.
pub fn phi_given_rho(data: &Dataset, f: &[f64], rho: f64) -> Result<PhiEstimate> {
    check_rho(rho)?;
    if f.len() != data.n_rows() {
        return Err(Error::data(format!(
            "{} fitted values for {} rows",
            f.len(),
            data.n_rows()
        )));
    }
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("fitted value {i} is not finite")));
    }
    let (y, w) = (data.y(), data.w());
    let mut lik = PortfolioLikelihood::new(y, w, f, rho);
    let mut objective = |log_phi: f64| {
        let v = lik.eval(log_phi.exp());
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let (lo, hi) = (PHI_BOUNDS.0.ln(), PHI_BOUNDS.1.ln());
    let step = (hi - lo) / (PHI_SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..PHI_SCAN_POINTS).map(|k| lo + step * k as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&g| objective(g)).collect();
    let mut best = 0;
    for k in 1..values.len() {
        if values[k] < values[best] {
            best = k;
        }
    }
    if !values[best].is_finite() {
        return Err(Error::Numeric("log-likelihood is not finite for any phi".into()));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(PHI_SCAN_POINTS - 1)];
    let m = brent_minimize(objective, a, b, PHI_LOG_TOL);

    let edge = best == 0 || best == PHI_SCAN_POINTS - 1;
    if edge && values[best] <= m.fx {
        return Ok(PhiEstimate {
            phi: grid[best].exp(),
            loglik: -values[best],
            at_boundary: true,
        });
    }
    Ok(PhiEstimate {
        phi: m.x.exp(),
        loglik: -m.fx,
        at_boundary: false,
    })
}

/// How `(M, L)` is chosen for the per-`rho` fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Tuning {
    /// Use the given number of trees and leaves everywhere.
    Fixed { n_trees: usize, n_leaves: usize },
    /// Cross-validate once at `rho` and reuse the choice on the whole grid.
    Shared { rho: f64, leaves: Vec<usize> },
    /// Cross-validate separately at every grid point.
    PerPoint { leaves: Vec<usize> },
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning::Shared {
            rho: 1.5,
            leaves: vec![2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    /// Boosting settings; `rho` is overridden per grid point and `n_trees`
    /// is the CV ceiling unless tuning is fixed.
    pub boost: BoostConfig,
    pub grid_points: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub tuning: Tuning,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            boost: BoostConfig::default(),
            grid_points: 50,
            rho_min: 1.01,
            rho_max: 1.99,
            tuning: Tuning::default(),
        }
    }
}

impl ProfileConfig {
    pub fn rho_grid(&self) -> Result<Vec<f64>> {
        if self.grid_points == 0 {
            return Err(Error::param("rho grid needs at least one point"));
        }
        check_rho(self.rho_min)?;
        check_rho(self.rho_max)?;
        if self.rho_min > self.rho_max {
            return Err(Error::param(format!(
                "rho grid bounds reversed: {} > {}",
                self.rho_min, self.rho_max
            )));
        }
        if self.grid_points == 1 {
            return Ok(vec![self.rho_min]);
        }
        let step = (self.rho_max - self.rho_min) / (self.grid_points - 1) as f64;
        let mut grid: Vec<f64> = (0..self.grid_points).map(|j| self.rho_min + step * j as f64).collect();
        *grid.last_mut().expect("non-empty") = self.rho_max;
        Ok(grid)
    }
}

/// A grid point whose fit failed and was left out of the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub rho: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileResult {
    /// Grid points that were fitted successfully, ascending.
    pub rho_grid: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub loglik: Vec<f64>,
    pub phi_at_boundary: Vec<bool>,
    /// `(M, L)` used at each grid point.
    pub n_trees: Vec<usize>,
    pub n_leaves: Vec<usize>,
    pub best_index: usize,
    pub rho_star: f64,
    pub phi_star_final: f64,
    pub failures: Vec<GridFailure>,
}

impl ProfileResult {
    /// `(rho, loglik)` pairs for plotting.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.rho_grid.iter().copied().zip(self.loglik.iter().copied()).collect()
    }
}

fn tuned(data: &Dataset, base: &BoostConfig, rho: f64, leaves: &[usize]) -> Result<(usize, usize)> {
    let cfg = BoostConfig { rho, ..base.clone() };
    let cv = cv_tune(data, &cfg, leaves)?;
    Ok((cv.best_n_trees, cv.best_leaves))
}

/// Profiles the likelihood over the `rho` grid and returns the curve with
/// the model fitted at the selected `rho`, carrying its `phi`.
pub fn estimate_rho_phi(data: &Dataset, cfg: &ProfileConfig) -> Result<(ProfileResult, BoostedModel)> {
    let grid = cfg.rho_grid()?;
    cfg.boost.validate()?;
    let shared = match &cfg.tuning {
        Tuning::Fixed { n_trees, n_leaves } => Some((*n_trees, *n_leaves)),
        Tuning::Shared { rho, leaves } => {
            check_rho(*rho)?;
            Some(tuned(data, &cfg.boost, *rho, leaves)?)
        }
        Tuning::PerPoint { .. } => None,
    };

    let mut out = ProfileResult {
        rho_grid: Vec::new(),
        phi_star: Vec::new(),
        loglik: Vec::new(),
        phi_at_boundary: Vec::new(),
        n_trees: Vec::new(),
        n_leaves: Vec::new(),
        best_index: 0,
        rho_star: f64::NAN,
        phi_star_final: f64::NAN,
        failures: Vec::new(),
    };
    let mut best: Option<BoostedModel> = None;

    for &rho in &grid {
        let point = || -> Result<(usize, usize, PhiEstimate, BoostedModel)> {
            let (m, l) = match (&cfg.tuning, shared) {
                (_, Some(ml)) => ml,
                (Tuning::PerPoint { leaves }, None) => tuned(data, &cfg.boost, rho, leaves)?,
                _ => unreachable!("shared tuning resolved above"),
            };
            let model = fit(
                data,
                &BoostConfig {
                    rho,
                    n_trees: m,
                    n_leaves: l,
                    ..cfg.boost.clone()
                },
            )?;
            let f = model.predict(data)?;
            let est = phi_given_rho(data, &f, rho)?;
            if !est.loglik.is_finite() {
                return Err(Error::Numeric(format!("log-likelihood {}", est.loglik)));
            }
            Ok((m, l, est, model))
        };
        match point() {
            Ok((m, l, est, mut model)) => {
                let better = out.loglik.is_empty() || est.loglik > out.loglik[out.best_index];
                out.rho_grid.push(rho);
                out.phi_star.push(est.phi);
                out.loglik.push(est.loglik);
                out.phi_at_boundary.push(est.at_boundary);
                out.n_trees.push(m);
                out.n_leaves.push(l);
                if better {
                    out.best_index = out.rho_grid.len() - 1;
                    model.set_phi(est.phi);
                    best = Some(model);
                }
            }
            Err(e) => out.failures.push(GridFailure {
                rho,
                message: e.to_string(),
            }),
        }
    }

    let model = best.ok_or_else(|| {
        let why = out.failures.first().map(|f| f.message.clone()).unwrap_or_default();
        Error::Unfittable(format!("every rho grid point failed: {why}"))
    })?;
    out.rho_star = out.rho_grid[out.best_index];
    out.phi_star_final = out.phi_star[out.best_index];
    Ok((out, model))
}
