//! Closed-form sample-complexity and concentration bounds, plus a Monte Carlo
//! check of the matrix Chernoff step.
//!
//! Probability-valued outputs are clamped to `[0, 1]`.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::features::MonomialBasis;
use crate::learner::{whiten, NormalEquations, DROP_SCALE};
use crate::linalg::{self, Matrix, SymMatrix};
use crate::par;
use crate::pufsim::ChallengeDistribution;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Feature dimension.
    pub n: usize,
    /// Mask pixels.
    pub n_mask: usize,
    /// Detector pixels.
    pub n_pixels: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Subgaussian parameter of the response noise.
    pub tau_e: f64,
    /// Smallest eigenvalue of the whitened challenge second moment.
    pub xi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear_order: Option<usize>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        require(self.n >= 1 && self.n_mask >= 1 && self.n_pixels >= 1, "n, N and M must be >= 1")?;
        require(self.epsilon > 0.0 && self.epsilon < 1.0, "epsilon must lie in (0, 1)")?;
        require(self.delta > 0.0 && self.delta < 1.0, "delta must lie in (0, 1)")?;
        require(self.tau_e >= 0.0 && self.tau_e.is_finite(), "tau_e must be >= 0")?;
        require(self.xi > 0.0 && self.xi.is_finite(), "xi must be > 0")?;
        Ok(())
    }

    /// `η = ln(2M/δ)`, the per-event exponent that makes all `2M` events hold with prob. `1 − δ`.
    pub fn eta(&self) -> f64 {
        failure_exponent(self.n_pixels, self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub eta: f64,
    /// Samples for `λ_min(C̃ᵀC̃) > mξ/2` with probability `1 − e^{-η}`.
    pub m_eig: f64,
    /// Samples for `‖s̃ − ŝ̃‖ < ε/√n` with probability `1 − e^{-η}`.
    pub m_err: f64,
    pub m_required: f64,
    /// Chernoff failure probability at `m_required`.
    pub chernoff_fail: f64,
    /// Operation count `n²m + n³`.
    pub time_estimate: f64,
}

pub fn failure_exponent(n_pixels: usize, delta: f64) -> f64 {
    (2.0 * n_pixels as f64 / delta).ln()
}

/// `(8n/ξ)(η + ln n)`: enough samples that the Chernoff failure is at most `e^{-η}`.
pub fn m_bound_eig(n: usize, xi: f64, eta: f64) -> f64 {
    let n = n as f64;
    8.0 * n / xi * (eta + n.ln())
}

/// `(4n²τ²/(ε²ξ))(η + ln 2n)`: enough samples that the estimate is `ε/√n`-close with prob. `1 − e^{-η}`.
pub fn m_bound_err(n: usize, tau_e: f64, epsilon: f64, xi: f64, eta: f64) -> f64 {
    let n = n as f64;
    4.0 * n * n * tau_e * tau_e / (epsilon * epsilon * xi) * (eta + (2.0 * n).ln())
}

/// Samples sufficient for PAC learning every detector pixel.
pub fn sample_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let n = inputs.n as f64;
    let m = inputs.n_pixels as f64;
    let (xi, tau, eps, delta) = (inputs.xi, inputs.tau_e, inputs.epsilon, inputs.delta);
    let m_eig = 8.0 * n / xi * (2.0 * m * n / delta).ln();
    let m_err = 4.0 * n * n * tau * tau / (eps * eps * xi) * (4.0 * m * n / delta).ln();
    let m_required = m_eig.max(m_err);
    Ok(BoundReport {
        eta: inputs.eta(),
        m_eig,
        m_err,
        m_required,
        chernoff_fail: chernoff_failure(m_required, inputs.n, xi)?,
        time_estimate: n * n * m_required + n * n * n,
    })
}

/// `min(1, n·exp(−mξ/(8n)))`, the probability that `λ_min(C̃ᵀC̃) ≤ mξ/2`.
pub fn chernoff_failure(m: f64, n: usize, xi: f64) -> Result<f64> {
    require(m >= 0.0, "m must be >= 0")?;
    require(n >= 1, "n must be >= 1")?;
    require(xi > 0.0, "xi must be > 0")?;
    let nf = n as f64;
    Ok(clamp_prob(nf * (-m * xi / (8.0 * nf)).exp()))
}

/// `min(1, 2n·exp(−ε²mξ/(4n²τ²)))`, the probability that `‖s̃ − ŝ̃‖ ≥ ε/√n`
/// given the Chernoff event did not fail.
pub fn estimation_failure(m: f64, n: usize, xi: f64, tau_e: f64, epsilon: f64) -> Result<f64> {
    require(m >= 0.0 && n >= 1 && xi > 0.0 && epsilon > 0.0, "invalid estimation bound input")?;
    if tau_e == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let expo = -epsilon * epsilon * m * xi / (4.0 * nf * nf * tau_e * tau_e);
    Ok(clamp_prob(2.0 * nf * expo.exp()))
}

/// `Pr[X > t] ≤ exp(−t²/(2τ²))` for `τ`-subgaussian `X`.
pub fn subgaussian_tail(tau: f64, t: f64) -> Result<f64> {
    require(tau > 0.0, "tau must be > 0")?;
    require(t >= 0.0, "t must be >= 0")?;
    Ok((-t * t / (2.0 * tau * tau)).exp())
}

/// `Pr[‖v‖ ≥ t] ≤ 2n·exp(−t²/(2τ²n))` for a `τ`-subgaussian vector in `Rⁿ`.
pub fn subgaussian_vector_tail(tau: f64, n: usize, t: f64) -> Result<f64> {
    require(tau > 0.0, "tau must be > 0")?;
    require(n >= 1, "n must be >= 1")?;
    require(t >= 0.0, "t must be >= 0")?;
    let nf = n as f64;
    Ok(clamp_prob(2.0 * nf * (-t * t / (2.0 * tau * tau * nf)).exp()))
}

/// Parameter of `Σ μᵢXᵢ` for independent `τᵢ`-subgaussian `Xᵢ`.
pub fn linear_combination_tau(taus: &[f64], mus: &[f64]) -> Result<f64> {
    check_len(taus.len(), mus.len())?;
    Ok(taus
        .iter()
        .zip(mus)
        .map(|(t, m)| m * m * t * t)
        .sum::<f64>()
        .sqrt())
}

/// Parameter of `A·x` for a `τ`-subgaussian vector `x`: `τ·‖Aᵀ‖`.
pub fn matrix_transform_tau(tau: f64, a: &Matrix) -> Result<f64> {
    require(tau > 0.0, "tau must be > 0")?;
    Ok(tau * linalg::operator_norm(&a.transpose())?)
}

/// `τ/√λ_min(CᵀC)`: the same parameter for `A = (CᵀC)⁻¹Cᵀ` without forming `A`.
pub fn least_squares_tau(tau: f64, c: &Matrix) -> Result<f64> {
    require(tau > 0.0, "tau must be > 0")?;
    let lmin = linalg::sym_eig(&c.gram())?.lambda_min();
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite { lambda_min: lmin });
    }
    Ok(tau / lmin.sqrt())
}

/// Slack for comparing an empirical frequency against probability `p`:
/// three binomial standard errors plus one count.
pub fn binomial_margin(p: f64, trials: usize) -> f64 {
    let t = trials as f64;
    3.0 * (p * (1.0 - p) / t).sqrt() + 1.0 / t
}

/// A random feature vector with known second moment.
pub trait FeatureSource: Sync {
    fn dim(&self) -> usize;
    fn second_moment(&self) -> SymMatrix;
    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// Monomial expansion of challenges drawn from a distribution.
#[derive(Debug, Clone)]
pub struct ExpandedChallenges {
    pub basis: MonomialBasis,
    pub dist: ChallengeDistribution,
}

impl FeatureSource for ExpandedChallenges {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn second_moment(&self) -> SymMatrix {
        self.dist.second_moment(&self.basis)
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let b = self.dist.sample(self.basis.num_vars(), rng);
        self.basis
            .expand_into(&b, out)
            .expect("buffer sized from the basis");
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffReport {
    pub m: usize,
    pub n: usize,
    pub kept: usize,
    pub xi: f64,
    pub trials: usize,
    pub failures: usize,
    pub empirical_fail_rate: f64,
    pub bound: f64,
    pub margin: f64,
    pub within_margin: bool,
}

/// Frequency of `λ_min(C̃ᵀC̃) ≤ mξ/2` over `trials` independent challenge matrices.
pub fn chernoff_validate<S: FeatureSource>(
    source: &S,
    m: usize,
    trials: usize,
    root_seed: u64,
) -> Result<ChernoffReport> {
    require(m >= 1 && trials >= 1, "m and trials must be >= 1")?;
    let n = source.dim();
    let whitening = whiten(&source.second_moment(), DROP_SCALE)?;
    let xi = whitening.xi_hat();
    if !(xi > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let pk = whitening.kept_basis();
    let threshold = m as f64 * xi / 2.0;

    let outcomes = par::map_indexed(trials, |t| -> Result<bool> {
        let mut rng = par::trial_rng(root_seed, t as u64);
        let mut ne = NormalEquations::new(n, 0);
        let mut c = vec![0.0; n];
        for _ in 0..m {
            source.sample_into(&mut rng, &mut c);
            ne.add(&c, &[]);
        }
        let lmin = linalg::sym_eig(&ne.gram().congruence(&pk)?)?.lambda_min();
        Ok(lmin <= threshold)
    });
    let failures = outcomes
        .into_iter()
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&f| f)
        .count();

    let bound = chernoff_failure(m as f64, n, xi)?;
    let rate = failures as f64 / trials as f64;
    let margin = binomial_margin(bound, trials);
    Ok(ChernoffReport {
        m,
        n,
        kept: whitening.kept().len(),
        xi,
        trials,
        failures,
        empirical_fail_rate: rate,
        bound,
        margin,
        within_margin: rate <= bound + margin,
    })
}
