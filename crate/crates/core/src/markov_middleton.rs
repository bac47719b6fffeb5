//! Finite-state Markov-Middleton impulsive noise.
//!
//! A hidden state `w_t ∈ {0, .., W-1}` selects the variance of a
//! circularly-symmetric complex Gaussian noise sample. State 0 is background
//! noise; higher states are increasingly strong impulses. State priors are
//! truncated Poisson weights and the state sequence is a Markov chain that
//! repeats the previous state with extra probability `r`.
//!
//! Variances are totals over both real dimensions, so with unit-energy PSK
//! the SNR is `1 / σ₀²`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::trellis::lse;

/// The four model parameters plus the number of states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovMiddletonParams {
    /// `W`, number of noise states.
    pub num_states: usize,
    /// `A`, impulsive index.
    pub impulsive_index: f64,
    /// `Λ`, impulsive-to-background power ratio.
    pub power_ratio: f64,
    /// `r`, self-transition bias in `[0, 1)`.
    pub correlation: f64,
    /// `σ₀²`, background variance per complex sample.
    pub background_var: f64,
}

impl MarkovMiddletonParams {
    pub fn new(
        num_states: usize,
        impulsive_index: f64,
        power_ratio: f64,
        correlation: f64,
        background_var: f64,
    ) -> Result<Self> {
        let p = Self {
            num_states,
            impulsive_index,
            power_ratio,
            correlation,
            background_var,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.num_states == 0 {
            return bad("W must be at least 1".into());
        }
        if !(self.impulsive_index > 0.0 && self.impulsive_index.is_finite()) {
            return bad(format!("A = {} must be positive", self.impulsive_index));
        }
        if !(self.power_ratio > 0.0 && self.power_ratio.is_finite()) {
            return bad(format!("Λ = {} must be positive", self.power_ratio));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad(format!("r = {} must lie in [0, 1)", self.correlation));
        }
        if !(self.background_var > 0.0 && self.background_var.is_finite()) {
            return bad(format!("σ₀² = {} must be positive", self.background_var));
        }
        Ok(())
    }

    pub fn with_background_var(self, background_var: f64) -> Self {
        Self { background_var, ..self }
    }

    /// Sets `σ₀² = 10^(-snr/10)`, i.e. SNR relative to unit symbol energy.
    pub fn with_snr_db(self, snr_db: f64) -> Self {
        self.with_background_var(snr_to_background_var(snr_db))
    }

    /// Truncated Poisson priors `p'(w = j)`.
    pub fn truncated_priors(&self) -> Vec<f64> {
        let a = self.impulsive_index;
        // log(e^-A A^j / j!), with log j! accumulated term by term
        let mut log_fact = 0.0;
        let logs: Vec<f64> = (0..self.num_states)
            .map(|j| {
                if j > 0 {
                    log_fact += (j as f64).ln();
                }
                -a + j as f64 * a.ln() - log_fact
            })
            .collect();
        let z = lse(&logs);
        logs.iter().map(|l| (l - z).exp()).collect()
    }

    /// Per-state variances `σ_j² = (1 + jΛ/A) σ₀²`.
    pub fn state_variances(&self) -> Vec<f64> {
        (0..self.num_states)
            .map(|j| (1.0 + j as f64 * self.power_ratio / self.impulsive_index) * self.background_var)
            .collect()
    }

    /// Row-stochastic `P[i][j] = r·[i = j] + (1 - r)·p'(j)`.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let priors = self.truncated_priors();
        let r = self.correlation;
        (0..self.num_states)
            .map(|i| {
                priors
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| if i == j { r + (1.0 - r) * p } else { (1.0 - r) * p })
                    .collect()
            })
            .collect()
    }

    /// Average background and impulsive powers `(σ_B², σ_I²)`. `σ_I²` is 0
    /// when `W = 1`.
    pub fn average_powers(&self) -> (f64, f64) {
        let priors = self.truncated_priors();
        let vars = self.state_variances();
        let background = priors[0] * vars[0];
        let impulsive = priors.iter().zip(&vars).skip(1).map(|(p, v)| p * v).sum();
        (background, impulsive)
    }
}

pub fn snr_to_background_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Complex Gaussian log-density `-|y - x|²/σ² - ln(πσ²)`.
#[inline]
pub fn log_likelihood(y: Complex64, x: Complex64, state_var: f64) -> f64 {
    -(y - x).norm_sqr() / state_var - (std::f64::consts::PI * state_var).ln()
}

/// Derived tables of a parameter set, shared read-only by detectors and the
/// sampler.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    params: MarkovMiddletonParams,
    priors: Vec<f64>,
    log_priors: Vec<f64>,
    variances: Vec<f64>,
    log_norm: Vec<f64>,
    log_transition: Vec<f64>,
    prior_cdf: Vec<f64>,
}

impl NoiseModel {
    pub fn new(params: MarkovMiddletonParams) -> Result<Self> {
        params.validate()?;
        let priors = params.truncated_priors();
        let variances = params.state_variances();
        let log_transition = params.transition_matrix().into_iter().flatten().map(f64::ln).collect();
        let mut acc = 0.0;
        let prior_cdf = priors
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            params,
            log_priors: priors.iter().map(|p| p.ln()).collect(),
            log_norm: variances.iter().map(|v| -(std::f64::consts::PI * v).ln()).collect(),
            priors,
            variances,
            log_transition,
            prior_cdf,
        })
    }

    pub fn params(&self) -> &MarkovMiddletonParams {
        &self.params
    }

    pub fn num_states(&self) -> usize {
        self.params.num_states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn log_priors(&self) -> &[f64] {
        &self.log_priors
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `ln P[from][to]`.
    #[inline]
    pub fn log_transition(&self, from: usize, to: usize) -> f64 {
        self.log_transition[from * self.params.num_states + to]
    }

    /// `log p(y | x, w = state)`.
    #[inline]
    pub fn log_likelihood(&self, y: Complex64, x: Complex64, state: usize) -> f64 {
        -(y - x).norm_sqr() / self.variances[state] + self.log_norm[state]
    }

    fn draw_prior_state(&self, u: f64) -> usize {
        self.prior_cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.params.num_states - 1)
    }

    /// Draws a realization of length `len` from `rng`.
    ///
    /// Each step consumes one uniform for the state and two standard normals
    /// for the sample, so parameter changes that keep `W` reuse the same
    /// underlying random numbers.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> NoiseRealization {
        let r = self.params.correlation;
        let mut states = Vec::with_capacity(len);
        let mut samples = Vec::with_capacity(len);
        let mut state = 0;
        for t in 0..len {
            let u: f64 = rng.random();
            state = if t == 0 {
                self.draw_prior_state(u)
            } else if u < r {
                state
            } else {
                // conditional on leaving the "stay" branch, u is uniform on [r, 1)
                self.draw_prior_state((u - r) / (1.0 - r))
            };
            let scale = (self.variances[state] / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            states.push(state);
            samples.push(Complex64::new(scale * re, scale * im));
        }
        NoiseRealization { states, samples }
    }
}

/// State path and complex noise samples.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub states: Vec<usize>,
    pub samples: Vec<Complex64>,
}

impl NoiseRealization {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Seeded realization of length `len`.
pub fn sample_noise(params: &MarkovMiddletonParams, len: usize, seed: u64) -> Result<NoiseRealization> {
    if len == 0 {
        return Err(Error::InvalidParams("noise length must be at least 1".into()));
    }
    let model = NoiseModel::new(*params)?;
    Ok(model.sample(len, &mut rng::rng_from_seed(seed)))
}

/// Mean length of maximal runs of identical states.
pub fn mean_run_length(states: &[usize]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let runs = 1 + states.windows(2).filter(|w| w[0] != w[1]).count();
    states.len() as f64 / runs as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(w: usize, a: f64, lambda: f64, r: f64) -> MarkovMiddletonParams {
        MarkovMiddletonParams::new(w, a, lambda, r, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(MarkovMiddletonParams::new(0, 0.1, 1.0, 0.0, 1.0).is_err());
        assert!(MarkovMiddletonParams::new(2, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(MarkovMiddletonParams::new(2, 0.1, -1.0, 0.0, 1.0).is_err());
        assert!(MarkovMiddletonParams::new(2, 0.1, 1.0, 1.0, 1.0).is_err());
        assert!(MarkovMiddletonParams::new(2, 0.1, 1.0, -0.1, 1.0).is_err());
        assert!(MarkovMiddletonParams::new(2, 0.1, 1.0, 0.0, 0.0).is_err());
        assert!(MarkovMiddletonParams::new(2, 0.1, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn priors() {
        assert_eq!(params(1, 0.7, 1.0, 0.0).truncated_priors(), vec![1.0]);
        let p = params(2, 0.3, 1.0, 0.0).truncated_priors();
        assert_abs_diff_eq!(p[0], 1.0 / 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.3 / 1.3, epsilon = 1e-12);
        // direct Poisson evaluation for W = 4, A = 0.1
        let a: f64 = 0.1;
        let raw: Vec<f64> = [1.0, 1.0, 2.0, 6.0]
            .iter()
            .enumerate()
            .map(|(j, f)| (-a).exp() * a.powi(j as i32) / f)
            .collect();
        let s: f64 = raw.iter().sum();
        let p = params(4, a, 1.0, 0.0).truncated_priors();
        for j in 0..4 {
            assert_abs_diff_eq!(p[j], raw[j] / s, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // many states do not overflow
        let big = params(60, 5.0, 1.0, 0.0).truncated_priors();
        assert!(big.iter().all(|p| p.is_finite()));
        assert_abs_diff_eq!(big.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn variances() {
        let v = params(4, 0.1, 10.0, 0.0).state_variances();
        assert_eq!(v[0], 1.0);
        assert_abs_diff_eq!(v[1], 101.0, epsilon = 1e-9);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let v = params(4, 0.3, 50.0, 0.0).state_variances();
        assert_abs_diff_eq!(v[3], 501.0, epsilon = 1e-9);
    }

    #[test]
    fn transition_matrix_examples() {
        let p = params(4, 0.3, 10.0, 0.0);
        let priors = p.truncated_priors();
        for row in p.transition_matrix() {
            for (a, b) in row.iter().zip(&priors) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
        // W = 2, r = 0.9, p' = [0.8, 0.2]: solve A/(1+A) = 0.2 -> A = 0.25
        let p = params(2, 0.25, 10.0, 0.9);
        let m = p.transition_matrix();
        assert_abs_diff_eq!(m[0][0], 0.98, epsilon = 1e-12);
        assert_abs_diff_eq!(m[0][1], 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(m[1][0], 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(m[1][1], 0.92, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_examples() {
        let x = Complex64::new(0.3, -0.2);
        assert_abs_diff_eq!(
            log_likelihood(x, x, 2.0),
            -(std::f64::consts::PI * 2.0).ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            log_likelihood(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 1.0),
            -1.0 - std::f64::consts::PI.ln(),
            epsilon = 1e-15
        );
        // ratio across states against the density written out directly
        let y = Complex64::new(0.9, 0.4);
        let x = Complex64::new(1.0, 0.0);
        let dens = |v: f64| (-(y - x).norm_sqr() / v).exp() / (std::f64::consts::PI * v);
        let ratio = (log_likelihood(y, x, 0.5) - log_likelihood(y, x, 7.0)).exp();
        assert_abs_diff_eq!(ratio, dens(0.5) / dens(7.0), epsilon = 1e-12);
    }

    #[test]
    fn average_powers_examples() {
        assert_eq!(params(1, 0.3, 10.0, 0.0).average_powers(), (1.0, 0.0));
        let p = params(2, 0.3, 10.0, 0.0);
        let (b, i) = p.average_powers();
        assert_abs_diff_eq!(b, 1.0 / 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(i, 0.3 / 1.3 * (1.0 + 10.0 / 0.3), epsilon = 1e-12);
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = params(4, 0.3, 10.0, 0.9);
        let a = sample_noise(&p, 500, 11).unwrap();
        let b = sample_noise(&p, 500, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_noise(&p, 500, 12).unwrap();
        assert_ne!(a, c);
        assert!(sample_noise(&p, 0, 1).is_err());
    }

    #[test]
    fn single_state_is_awgn() {
        let p = params(1, 0.3, 10.0, 0.5).with_background_var(2.0);
        let n = sample_noise(&p, 100_000, 5).unwrap();
        assert!(n.states.iter().all(|&s| s == 0));
        let mean_pow = n.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n.len() as f64;
        // |n|² is exponential with mean 2 and standard deviation 2
        let se = 2.0 / (n.len() as f64).sqrt();
        assert!((mean_pow - 2.0).abs() < 3.0 * se, "mean power {mean_pow}");
    }

    #[test]
    fn correlation_lengthens_runs() {
        let a = sample_noise(&params(4, 0.3, 10.0, 0.0), 50_000, 3).unwrap();
        let b = sample_noise(&params(4, 0.3, 10.0, 0.9), 50_000, 3).unwrap();
        assert!(mean_run_length(&b.states) > 3.0 * mean_run_length(&a.states));
    }
}
