//! Tweedie compound Poisson distribution with index `1 < rho < 2`.
//!
//! A `Tw(mu, phi, rho)` variable is a Poisson number of i.i.d. gamma
//! summands. It has a point mass `exp(-lambda)` at zero, mean `mu` and
//! variance `phi * mu^rho`. Boosting works on the log-mean scale
//! `F = log(mu)`, so the loss and gradient kernels below take `F` directly.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-weight gap below the largest series term at which summation stops.
/// `exp(-37)` is below double precision epsilon.
const SERIES_LOG_CUTOFF: f64 = 37.0;

/// Upper bound on series terms visited on either side of the peak.
const SERIES_MAX_TERMS: usize = 1_000_000;

/// Mean, dispersion and index of a Tweedie compound Poisson distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TweedieParams {
    mu: f64,
    phi: f64,
    rho: f64,
}

impl TweedieParams {
    pub fn new(mu: f64, phi: f64, rho: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::param(format!("mu must be positive and finite, got {mu}")));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::param(format!("phi must be positive and finite, got {phi}")));
        }
        check_rho(rho)?;
        Ok(Self { mu, phi, rho })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Poisson rate, gamma shape and gamma scale of the same distribution.
    pub fn to_compound_poisson(&self) -> CompoundPoissonParams {
        let (mu, phi, rho) = (self.mu, self.phi, self.rho);
        CompoundPoissonParams {
            lambda: mu.powf(2.0 - rho) / (phi * (2.0 - rho)),
            alpha: (2.0 - rho) / (rho - 1.0),
            gamma: phi * (rho - 1.0) * mu.powf(rho - 1.0),
        }
    }

    /// The same distribution for an observation of exposure `w`, i.e.
    /// `Tw(mu, phi / w, rho)`.
    pub fn with_exposure(&self, w: f64) -> Result<Self> {
        Self::new(self.mu, self.phi / w, self.rho)
    }

    pub fn variance(&self) -> f64 {
        self.phi * self.mu.powf(self.rho)
    }
}

/// Poisson-gamma parametrisation: `N ~ Pois(lambda)`, summands
/// `Gamma(alpha, gamma)` with mean `alpha * gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonParams {
    lambda: f64,
    alpha: f64,
    gamma: f64,
}

impl CompoundPoissonParams {
    pub fn new(lambda: f64, alpha: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("alpha", alpha), ("gamma", gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { lambda, alpha, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn to_tweedie(&self) -> TweedieParams {
        let (lambda, alpha, gamma) = (self.lambda, self.alpha, self.gamma);
        let rho = (alpha + 2.0) / (alpha + 1.0);
        let mu = lambda * alpha * gamma;
        let variance = lambda * alpha * (alpha + 1.0) * gamma * gamma;
        TweedieParams {
            mu,
            phi: variance / mu.powf(rho),
            rho,
        }
    }
}

/// One policy: pure premium `y >= 0`, exposure `w > 0` and the current
/// log-mean prediction `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedObservation {
    pub y: f64,
    pub w: f64,
    pub f: f64,
}

impl WeightedObservation {
    pub fn new(y: f64, w: f64, f: f64) -> Result<Self> {
        if !(y.is_finite() && y >= 0.0) {
            return Err(Error::data(format!("response must be finite and >= 0, got {y}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::data(format!("weight must be finite and > 0, got {w}")));
        }
        if !f.is_finite() {
            return Err(Error::data(format!("prediction must be finite, got {f}")));
        }
        Ok(Self { y, w, f })
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 1.0 && rho < 2.0 {
        Ok(())
    } else {
        Err(Error::param(format!("rho must lie in (1, 2), got {rho}")))
    }
}

/// `log a(z, phi, rho)` for `z > 0`, where `a = (1/z) * sum_{t>=1} W_t`.
///
/// The terms are log-concave in `t`; summation starts at the largest term
/// and walks outward until terms fall `SERIES_LOG_CUTOFF` below it.
pub fn log_series_normalizer(z: f64, phi: f64, rho: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::param(format!("series normalizer needs z > 0, got {z}")));
    }
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::param(format!("phi must be positive and finite, got {phi}")));
    }
    check_rho(rho)?;
    Ok(log_series_unchecked(z, phi, rho))
}

fn log_series_unchecked(z: f64, phi: f64, rho: f64) -> f64 {
    let alpha = (2.0 - rho) / (rho - 1.0);
    series_sum(z, phi, rho, |t| libm::lgamma(t as f64 + 1.0) + libm::lgamma(t as f64 * alpha))
}

/// `lgamma(t + 1) + lgamma(t * alpha)` for a fixed `alpha`, memoised by `t`.
struct GammaTable {
    alpha: f64,
    values: Vec<f64>,
}

impl GammaTable {
    fn new(alpha: f64) -> Self {
        Self {
            alpha,
            values: vec![f64::NAN],
        }
    }

    fn get(&mut self, t: usize) -> f64 {
        while self.values.len() <= t {
            let k = self.values.len() as f64;
            self.values.push(libm::lgamma(k + 1.0) + libm::lgamma(k * self.alpha));
        }
        self.values[t]
    }
}

fn series_sum<G: FnMut(usize) -> f64>(z: f64, phi: f64, rho: f64, mut lg: G) -> f64 {
    let alpha = (2.0 - rho) / (rho - 1.0);
    // log W_t = t * c - lgamma(t + 1) - lgamma(t * alpha)
    let c = alpha * z.ln() - alpha * (rho - 1.0).ln() - (1.0 + alpha) * phi.ln() - (2.0 - rho).ln();
    let mut log_w = |t: usize| t as f64 * c - lg(t);

    // Stirling estimate of the stationary point, refined by hill climbing.
    let guess = z.powf(2.0 - rho) / ((2.0 - rho) * phi);
    let mut t = if guess.is_finite() && guess < SERIES_MAX_TERMS as f64 {
        (guess.round() as usize).max(1)
    } else {
        1
    };
    let mut best = log_w(t);
    loop {
        let up = log_w(t + 1);
        if up > best {
            t += 1;
            best = up;
        } else {
            break;
        }
    }
    while t > 1 {
        let down = log_w(t - 1);
        if down > best {
            t -= 1;
            best = down;
        } else {
            break;
        }
    }

    let mut total = 1.0;
    for k in t + 1..t + SERIES_MAX_TERMS {
        let rel = log_w(k) - best;
        if rel < -SERIES_LOG_CUTOFF {
            break;
        }
        total += rel.exp();
    }
    for k in (1..t).rev() {
        let rel = log_w(k) - best;
        if rel < -SERIES_LOG_CUTOFF {
            break;
        }
        total += rel.exp();
    }
    best + total.ln() - z.ln()
}

fn log_density_parts<G: FnMut(usize) -> f64>(z: f64, mu: f64, phi: f64, rho: f64, lg: G) -> f64 {
    let kappa = mu.powf(2.0 - rho) / (2.0 - rho);
    let theta = mu.powf(1.0 - rho) / (1.0 - rho);
    log_density_terms(z, theta, kappa, phi, rho, lg)
}

#[inline]
fn log_density_terms<G: FnMut(usize) -> f64>(z: f64, theta: f64, kappa: f64, phi: f64, rho: f64, lg: G) -> f64 {
    if z == 0.0 {
        return -kappa / phi;
    }
    if !(z > 0.0) {
        return f64::NEG_INFINITY;
    }
    (z * theta - kappa) / phi + series_sum(z, phi, rho, lg)
}

/// Log density (or log point mass at zero) of `z` under `Tw(mu, phi, rho)`.
///
/// Negative `z` has zero density and returns `-inf`.
pub fn tweedie_log_density(z: f64, p: &TweedieParams) -> f64 {
    let alpha = (2.0 - p.rho) / (p.rho - 1.0);
    log_density_parts(z, p.mu, p.phi, p.rho, |t| {
        libm::lgamma(t as f64 + 1.0) + libm::lgamma(t as f64 * alpha)
    })
}

/// Portfolio log-likelihood as a function of `phi` with the means and the
/// index held fixed; per-row and log-gamma terms are computed once.
pub struct PortfolioLikelihood<'a> {
    y: &'a [f64],
    w: &'a [f64],
    theta: Vec<f64>,
    kappa: Vec<f64>,
    rho: f64,
    table: GammaTable,
}

impl<'a> PortfolioLikelihood<'a> {
    pub fn new(y: &'a [f64], w: &'a [f64], f: &[f64], rho: f64) -> Self {
        let mu: Vec<f64> = f.iter().map(|v| v.exp()).collect();
        Self {
            y,
            w,
            theta: mu.iter().map(|m| m.powf(1.0 - rho) / (1.0 - rho)).collect(),
            kappa: mu.iter().map(|m| m.powf(2.0 - rho) / (2.0 - rho)).collect(),
            rho,
            table: GammaTable::new((2.0 - rho) / (rho - 1.0)),
        }
    }

    /// `sum_i log f(y_i | mu_i, phi / w_i, rho)`.
    pub fn eval(&mut self, phi: f64) -> f64 {
        let table = &mut self.table;
        let mut total = 0.0;
        for i in 0..self.y.len() {
            let p = phi / self.w[i];
            total += log_density_terms(self.y[i], self.theta[i], self.kappa[i], p, self.rho, |t| table.get(t));
        }
        total
    }
}

/// Sum of `log f(y_i | exp(F_i), phi / w_i, rho)` over a portfolio.
///
/// Equal, bit for bit, to summing [`tweedie_log_density`] over the rows.
pub fn portfolio_log_likelihood(y: &[f64], w: &[f64], f: &[f64], phi: f64, rho: f64) -> f64 {
    PortfolioLikelihood::new(y, w, f, rho).eval(phi)
}

/// Per-observation boosting loss
/// `w * (-y * exp((1-rho)F)/(1-rho) + exp((2-rho)F)/(2-rho))`.
#[inline]
pub fn loss(y: f64, w: f64, f: f64, rho: f64) -> f64 {
    let tail = ((2.0 - rho) * f).exp() / (2.0 - rho);
    if y > 0.0 {
        w * (-y * ((1.0 - rho) * f).exp() / (1.0 - rho) + tail)
    } else {
        // skip 0 * exp(..) so a very negative F cannot produce NaN
        w * tail
    }
}

/// Negative derivative of [`loss`] with respect to `F`.
#[inline]
pub fn neg_grad(y: f64, w: f64, f: f64, rho: f64) -> f64 {
    let tail = ((2.0 - rho) * f).exp();
    if y > 0.0 {
        w * (y * ((1.0 - rho) * f).exp() - tail)
    } else {
        -w * tail
    }
}

pub fn loss_psi(obs: &WeightedObservation, rho: f64) -> f64 {
    loss(obs.y, obs.w, obs.f, rho)
}

pub fn neg_gradient(obs: &WeightedObservation, rho: f64) -> f64 {
    neg_grad(obs.y, obs.w, obs.f, rho)
}

/// Draws a pure premium for exposure `w`, i.e. from `Tw(mu, phi / w, rho)`.
///
/// The claim count is Poisson; given `N = n > 0` the total is drawn as one
/// `Gamma(n * alpha, gamma)` variate, which is the exact law of the sum.
pub fn sample_tweedie<R: Rng + ?Sized>(p: &TweedieParams, w: f64, rng: &mut R) -> Result<f64> {
    let cp = p.with_exposure(w)?.to_compound_poisson();
    let count = Poisson::new(cp.lambda)
        .map_err(|e| Error::Numeric(format!("poisson rate {}: {e}", cp.lambda)))?
        .sample(rng);
    if count == 0.0 {
        return Ok(0.0);
    }
    let total = Gamma::new(count * cp.alpha, cp.gamma)
        .map_err(|e| Error::Numeric(format!("gamma summand: {e}")))?
        .sample(rng);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force Poisson mixture of gamma densities, summed over the
    /// claim count directly from (lambda, alpha, gamma).
    fn mixture_log_density(z: f64, cp: &CompoundPoissonParams) -> f64 {
        let (lambda, alpha, gamma) = (cp.lambda(), cp.alpha(), cp.gamma());
        let term = |j: f64| {
            j * lambda.ln() - lambda - libm::lgamma(j + 1.0) + (j * alpha - 1.0) * z.ln()
                - z / gamma
                - j * alpha * gamma.ln()
                - libm::lgamma(j * alpha)
        };
        let terms: Vec<f64> = (1..20_000).map(|j| term(j as f64)).collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    #[test]
    fn reparametrisation_unit_case() {
        let cp = TweedieParams::new(1.0, 1.0, 1.5).unwrap().to_compound_poisson();
        assert!((cp.lambda() - 2.0).abs() < 1e-15);
        assert!((cp.alpha() - 1.0).abs() < 1e-15);
        assert!((cp.gamma() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reparametrisation_scalar_oracle() {
        // mu=2, phi=0.5, rho=1.5
        let cp = TweedieParams::new(2.0, 0.5, 1.5).unwrap().to_compound_poisson();
        let lambda = 2f64.sqrt() / (0.5 * 0.5);
        let gamma = 0.5 * 0.5 * 2f64.sqrt();
        assert!((cp.lambda() - lambda).abs() < 1e-14);
        assert!((cp.alpha() - 1.0).abs() < 1e-15);
        assert!((cp.gamma() - gamma).abs() < 1e-15);
    }

    #[test]
    fn reparametrisation_round_trip() {
        for &(mu, phi, rho) in &[(1.0, 1.0, 1.5), (2.0, 0.5, 1.5), (0.03, 7.0, 1.11), (40.0, 0.2, 1.93)] {
            let p = TweedieParams::new(mu, phi, rho).unwrap();
            let back = p.to_compound_poisson().to_tweedie();
            assert!(((back.mu() - mu) / mu).abs() < 1e-12);
            assert!(((back.phi() - phi) / phi).abs() < 1e-12);
            assert!(((back.rho() - rho) / rho).abs() < 1e-12);
        }
    }

    #[test]
    fn params_reject_out_of_range() {
        assert!(TweedieParams::new(0.0, 1.0, 1.5).is_err());
        assert!(TweedieParams::new(1.0, -1.0, 1.5).is_err());
        assert!(TweedieParams::new(1.0, 1.0, 1.0).is_err());
        assert!(TweedieParams::new(1.0, 1.0, 2.0).is_err());
        assert!(CompoundPoissonParams::new(1.0, 0.0, 1.0).is_err());
        assert!(WeightedObservation::new(-1.0, 1.0, 0.0).is_err());
        assert!(WeightedObservation::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn normalizer_domain() {
        assert!(log_series_normalizer(0.0, 1.0, 1.5).is_err());
        assert!(log_series_normalizer(-2.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn normalizer_first_term() {
        // W_1 = 1 / (0.5 * 1 * 0.5 * 1 * Gamma(1)) = 4 at z = 1.
        let log_a = log_series_normalizer(1.0, 1.0, 1.5).unwrap();
        assert!(log_a > 4f64.ln());
        // alpha = 1: W_t = 4^t / (t! (t-1)!), so a(1) = sum over t.
        let mut sum = 0.0;
        let mut fact = 1.0;
        let mut fact_prev = 1.0;
        for t in 1..40 {
            fact *= t as f64;
            if t > 1 {
                fact_prev *= (t - 1) as f64;
            }
            sum += 4f64.powi(t) / (fact * fact_prev);
        }
        assert!((log_a - sum.ln()).abs() < 1e-13);
    }

    #[test]
    fn point_mass_at_zero() {
        let p = TweedieParams::new(1.0, 1.0, 1.5).unwrap();
        assert_eq!(tweedie_log_density(0.0, &p), -2.0);
    }

    #[test]
    fn density_matches_mixture_on_grid() {
        for &z in &[0.1, 1.0, 10.0] {
            for &mu in &[1.0, 2.0] {
                for &phi in &[0.5, 1.0, 2.0] {
                    for &rho in &[1.2, 1.5, 1.8] {
                        let p = TweedieParams::new(mu, phi, rho).unwrap();
                        let got = tweedie_log_density(z, &p);
                        let want = mixture_log_density(z, &p.to_compound_poisson());
                        let rel = ((got - want) / want).abs();
                        assert!(rel < 1e-10, "z={z} mu={mu} phi={phi} rho={rho}: {got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn portfolio_matches_row_sum() {
        let y = [0.0, 0.3, 2.5, 40.0, 0.0, 1.0];
        let w = [1.0, 2.0, 0.5, 1.0, 3.0, 1.0];
        let f: [f64; 6] = [-0.5, 0.1, 0.7, 2.0, 0.0, -3.0];
        for rho in [1.05, 1.5, 1.93] {
            let direct: f64 = (0..6)
                .map(|i| {
                    let p = TweedieParams::new(f[i].exp(), 1.7 / w[i], rho).unwrap();
                    tweedie_log_density(y[i], &p)
                })
                .sum();
            assert_eq!(portfolio_log_likelihood(&y, &w, &f, 1.7, rho), direct);
        }
    }

    #[test]
    fn density_extreme_arguments_finite() {
        for &(z, phi, rho) in &[(1e-8, 1.0, 1.5), (1e4, 0.01, 1.3), (500.0, 0.05, 1.9), (1e-3, 50.0, 1.05)] {
            let p = TweedieParams::new(1.0, phi, rho).unwrap();
            let v = tweedie_log_density(z, &p);
            assert!(v.is_finite(), "z={z} phi={phi} rho={rho} gave {v}");
        }
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss(0.0, 1.0, 0.0, 1.5), 2.0);
        assert_eq!(loss(2.0, 1.0, 0.0, 1.5), 6.0);
        assert_eq!(loss(2.0, 3.0, 0.4, 1.5), 3.0 * loss(2.0, 1.0, 0.4, 1.5));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(neg_grad(1.0, 1.0, 0.0, 1.5), 0.0);
        assert_eq!(neg_grad(2.0, 1.0, 0.0, 1.5), 1.0);
        let obs = WeightedObservation::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(neg_gradient(&obs, 1.5), 1.0);
        assert_eq!(loss_psi(&obs, 1.5), 6.0);
    }

    #[test]
    fn sampling_zero_mass_and_moments() {
        let p = TweedieParams::new(1.0, 1.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_tweedie(&p, 1.0, &mut rng).unwrap()).collect();
        let zeros = draws.iter().filter(|&&d| d == 0.0).count() as f64 / n as f64;
        let p0 = (-2f64).exp();
        let se0 = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((zeros - p0).abs() < 4.0 * se0, "zero fraction {zeros} vs {p0}");
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 4.0 * (1.0 / n as f64).sqrt());
    }

    #[test]
    fn sampling_reproducible() {
        let p = TweedieParams::new(2.0, 0.7, 1.3).unwrap();
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..100).map(|_| sample_tweedie(&p, 1.5, &mut rng).unwrap()).collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..100).map(|_| sample_tweedie(&p, 1.5, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }
}
