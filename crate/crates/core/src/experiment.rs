//! End-to-end attack trials: build a PUF, collect CRPs, fit, evaluate.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{sample_bound, BoundInputs, BoundReport};
use crate::error::{Error, Result};
use crate::features::MonomialBasis;
use crate::learner::{
    pac_evaluate, pilot_whitening, solve_normal_equations, LearnedModel, NormalEquations, PacReport,
    WhiteningMap,
};
use crate::par;
use crate::pufsim::{new_linear_puf, new_nonlinear_puf, ChallengeDistribution, NoiseModel, OpticalPuf, Puf};

/// Linear PUF when `eta` is empty, nonlinear of order `eta.len()` otherwise.
pub fn build_puf(n_mask: usize, n_pixels: usize, eta: &[f64], seed: u64) -> Result<Puf> {
    let base = new_linear_puf(n_mask, n_pixels, seed)?;
    if eta.is_empty() {
        Ok(Puf::Linear(base))
    } else {
        let coupling_seed = seed ^ 0xa5a5_a5a5_a5a5_a5a5;
        Ok(Puf::Nonlinear(new_nonlinear_puf(base, eta.to_vec(), coupling_seed)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub n_mask: usize,
    pub n_pixels: usize,
    /// Nonlinear strengths; empty for a linear medium.
    pub eta: Vec<f64>,
    /// Feature degree; defaults to the PUF's response degree.
    pub degree: Option<usize>,
    pub distribution: ChallengeDistribution,
    pub noise: NoiseModel,
    pub m: usize,
    pub pac_samples: usize,
    pub epsilon: f64,
}

impl AttackSpec {
    pub fn response_degree(&self) -> usize {
        if self.eta.is_empty() {
            2
        } else {
            4 * self.eta.len() + 2
        }
    }

    pub fn basis(&self) -> Result<MonomialBasis> {
        MonomialBasis::new(self.n_mask, self.degree.unwrap_or_else(|| self.response_degree()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub model: LearnedModel,
    pub whitening: WhiteningMap,
    pub pac: PacReport,
    pub m: usize,
    pub n: usize,
    pub seconds: f64,
}

impl TrialOutcome {
    pub fn xi_hat(&self) -> f64 {
        self.whitening.xi_hat()
    }

    pub fn certificate(&self) -> Option<f64> {
        self.pac
            .analytic_bound
            .as_ref()
            .map(|v| v.iter().copied().fold(0.0, f64::max))
    }
}

/// Stream `m` CRPs from `puf` into the normal equations.
pub fn collect_normal_equations<P: OpticalPuf, R: Rng + ?Sized>(
    puf: &P,
    basis: &MonomialBasis,
    dist: &ChallengeDistribution,
    noise: &NoiseModel,
    m: usize,
    rng: &mut R,
) -> Result<NormalEquations> {
    dist.validate()?;
    noise.validate()?;
    if basis.num_vars() != puf.num_mask_pixels() {
        return Err(Error::DimensionMismatch {
            expected: puf.num_mask_pixels(),
            got: basis.num_vars(),
        });
    }
    let px = puf.num_detector_pixels();
    let mut ne = NormalEquations::new(basis.len(), px);
    let mut b = vec![0.0; basis.num_vars()];
    let mut c = vec![0.0; basis.len()];
    let mut r = vec![0.0; px];
    for _ in 0..m {
        dist.sample_into(rng, &mut b);
        puf.intensities_into(&b, &mut r);
        for v in r.iter_mut() {
            *v += noise.draw(rng);
        }
        basis.expand_into(&b, &mut c)?;
        ne.add(&c, &r);
    }
    Ok(ne)
}

/// One attack against a given PUF: pilot whitening and a fit on `m` CRPs drawn
/// from `fit_rng`, then a PAC evaluation on challenges drawn from `eval_rng`.
pub fn attack<P, R1, R2>(puf: &P, spec: &AttackSpec, fit_rng: &mut R1, eval_rng: &mut R2) -> Result<TrialOutcome>
where
    P: OpticalPuf,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let start = Instant::now();
    let basis = spec.basis()?;
    let whitening = pilot_whitening(&basis, &spec.distribution, fit_rng)?;
    let ne = collect_normal_equations(puf, &basis, &spec.distribution, &spec.noise, spec.m, fit_rng)?;
    let model = solve_normal_equations(&ne, &whitening)?.embed(&basis, &whitening, 0.0);
    let pac = pac_evaluate(&model, puf, &spec.distribution, spec.pac_samples, spec.epsilon, eval_rng)?;
    Ok(TrialOutcome {
        n: basis.len(),
        m: spec.m,
        model,
        whitening,
        pac,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Independent trials, each with its own PUF and random stream derived from `root_seed`.
pub fn run_trials(spec: &AttackSpec, trials: usize, root_seed: u64) -> Vec<Result<TrialOutcome>> {
    par::map_indexed(trials, |t| {
        let mut rng = par::trial_rng(root_seed, t as u64);
        let puf = build_puf(spec.n_mask, spec.n_pixels, &spec.eta, rng.random())?;
        let mut eval_rng = ChaCha8Rng::seed_from_u64(rng.random());
        attack(&puf, spec, &mut rng, &mut eval_rng)
    })
}

/// `ξ̂` from a pilot batch, for sizing `m` before an experiment.
pub fn pilot_xi(basis: &MonomialBasis, dist: &ChallengeDistribution, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pilot_whitening(basis, dist, &mut rng)?.xi_hat())
}

/// The sample bound for an attack spec at the given `ξ`, `ε` and `δ`.
pub fn bound_for(spec: &AttackSpec, xi: f64, delta: f64) -> Result<BoundReport> {
    let basis = spec.basis()?;
    sample_bound(&BoundInputs {
        n: basis.len(),
        n_mask: spec.n_mask,
        n_pixels: spec.n_pixels,
        epsilon: spec.epsilon,
        delta,
        tau_e: spec.noise.tau(),
        xi,
        nonlinear_order: (!spec.eta.is_empty()).then_some(spec.eta.len()),
    })
}
