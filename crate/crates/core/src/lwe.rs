//! Least squares against LWE-style samples, with and without reduction mod `p`.
//!
//! Without the reduction the samples are an integer linear system with small
//! noise and the attack recovers the secret by rounding. With it, the same
//! solver produces an estimate unrelated to the secret.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::learner::{solve_normal_equations, NormalEquations, WhiteningMap};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LweParams {
    /// Secret dimension.
    pub n: usize,
    pub p: u64,
    /// Number of samples.
    pub m: usize,
    /// Width of the rounded Gaussian error.
    pub sigma: f64,
    /// Reduce `b` mod `p`.
    pub modular: bool,
}

impl LweParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("LWE needs n >= 1 and m >= 1"));
        }
        if self.p < 2 {
            return Err(Error::invalid("LWE modulus must be >= 2"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid("LWE sigma must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LweSampleSet {
    pub params: LweParams,
    /// Row-major `m × n`, entries in `[0, p)`.
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    /// Hidden secret in `[0, p)ⁿ`; kept for evaluation only.
    pub s_true: Vec<i64>,
    pub errors: Vec<i64>,
}

/// Rounded continuous Gaussian of width `sigma`.
fn rounded_gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> i64 {
    if sigma == 0.0 {
        return 0;
    }
    let z: f64 = rng.sample(StandardNormal);
    (sigma * z).round() as i64
}

pub fn gen_lwe(params: &LweParams, seed: u64) -> Result<LweSampleSet> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params.p as i64;
    let s_true: Vec<i64> = (0..params.n).map(|_| rng.random_range(0..p)).collect();
    let mut set = LweSampleSet {
        params: *params,
        a: Vec::new(),
        b: Vec::new(),
        s_true,
        errors: Vec::new(),
    };
    set.extend(params.m, &mut rng);
    Ok(set)
}

impl LweSampleSet {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn row(&self, i: usize) -> &[i64] {
        let n = self.params.n;
        &self.a[i * n..(i + 1) * n]
    }

    fn extend<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) {
        let p = self.params.p as i64;
        for _ in 0..count {
            let row: Vec<i64> = (0..self.params.n).map(|_| rng.random_range(0..p)).collect();
            let e = rounded_gaussian(self.params.sigma, rng);
            let exact = dot_i128(&row, &self.s_true) + i128::from(e);
            let b = if self.params.modular {
                exact.rem_euclid(i128::from(p))
            } else {
                exact
            };
            self.a.extend(row);
            self.b.push(b as i64);
            self.errors.push(e);
        }
    }

    /// `count` further samples under the same secret.
    pub fn fresh(&self, count: usize, seed: u64) -> LweSampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = LweSampleSet {
            params: LweParams {
                m: count,
                ..self.params
            },
            a: Vec::new(),
            b: Vec::new(),
            s_true: self.s_true.clone(),
            errors: Vec::new(),
        };
        out.extend(count, &mut rng);
        out
    }
}

fn dot_i128(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| i128::from(x) * i128::from(y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityCheck {
    pub statistic: f64,
    /// 95th percentile of chi-square with `p − 1` degrees of freedom.
    pub critical: f64,
    pub consistent_with_uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LweAttackReport {
    pub s_hat_rounded: Vec<i64>,
    pub coeff_exact: bool,
    /// `|b − ⟨a, ŝ⟩|` reduced mod `p` into `[0, p/2]`, per held-out sample.
    pub residuals: Vec<i64>,
    pub median_residual: f64,
    pub uniformity: UniformityCheck,
}

/// Real least squares on `(A, b)` ignoring any modulus, rounded into `[0, p)`.
pub fn ls_attack_lwe(samples: &LweSampleSet, holdout: &LweSampleSet) -> Result<LweAttackReport> {
    let n = samples.params.n;
    let p = samples.params.p as i64;
    if holdout.params.n != n || holdout.params.p != samples.params.p {
        return Err(Error::invalid("held-out samples use different LWE parameters"));
    }
    let mut ne = NormalEquations::new(n, 1);
    let mut row = vec![0.0; n];
    for i in 0..samples.len() {
        for (r, &a) in row.iter_mut().zip(samples.row(i)) {
            *r = a as f64;
        }
        ne.add(&row, &[samples.b[i] as f64]);
    }
    let est = solve_normal_equations(&ne, &WhiteningMap::identity(n))?;
    let s_hat_rounded: Vec<i64> = est.s_tilde[0]
        .iter()
        .map(|v| (v.round() as i64).rem_euclid(p))
        .collect();
    let coeff_exact = s_hat_rounded == samples.s_true;

    let raw: Vec<i64> = (0..holdout.len())
        .map(|i| {
            let r = i128::from(holdout.b[i]) - dot_i128(holdout.row(i), &s_hat_rounded);
            r.rem_euclid(i128::from(p)) as i64
        })
        .collect();
    let residuals: Vec<i64> = raw.iter().map(|&r| r.min(p - r)).collect();

    Ok(LweAttackReport {
        median_residual: median(&residuals),
        uniformity: chi_square_uniform(&raw, p as usize)?,
        s_hat_rounded,
        coeff_exact,
        residuals,
    })
}

fn median(v: &[i64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_unstable();
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2] as f64
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2]) as f64
    }
}

/// Pearson chi-square of values in `[0, buckets)` against the uniform distribution.
pub fn chi_square_uniform(values: &[i64], buckets: usize) -> Result<UniformityCheck> {
    if buckets < 2 || values.is_empty() {
        return Err(Error::invalid("chi-square needs >= 2 buckets and >= 1 value"));
    }
    let mut counts = vec![0usize; buckets];
    for &v in values {
        counts[v as usize] += 1;
    }
    let expected = values.len() as f64 / buckets as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((buckets - 1) as f64)
        .map_err(|e| Error::invalid(format!("chi-square: {e}")))?;
    let critical = dist.inverse_cdf(0.95);
    Ok(UniformityCheck {
        statistic,
        critical,
        consistent_with_uniform: statistic <= critical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LweTrial {
    pub seed: u64,
    pub modular: bool,
    pub recovered: bool,
    pub median_residual: f64,
    pub uniform_residuals: bool,
}

/// Run the attack on seeds `root_seed, root_seed + 1, …`, once without and once
/// with reduction mod `p` per seed. Rows come back in seed order.
pub fn lwe_contrast(n: usize, p: u64, sigma: f64, m: usize, seeds: usize, root_seed: u64) -> Result<Vec<LweTrial>> {
    let holdout = m.max(10 * p as usize);
    let rows = par::map_indexed(seeds, |i| -> Result<[LweTrial; 2]> {
        let seed = root_seed.wrapping_add(i as u64);
        let run = |modular: bool| -> Result<LweTrial> {
            let params = LweParams { n, p, m, sigma, modular };
            let samples = gen_lwe(&params, seed)?;
            let report = ls_attack_lwe(&samples, &samples.fresh(holdout, seed ^ 0x9e37_79b9_7f4a_7c15))?;
            Ok(LweTrial {
                seed,
                modular,
                recovered: report.coeff_exact,
                median_residual: report.median_residual,
                uniform_residuals: report.uniformity.consistent_with_uniform,
            })
        };
        Ok([run(false)?, run(true)?])
    });
    let mut out = Vec::with_capacity(2 * seeds);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}
