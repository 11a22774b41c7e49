use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use optpuf::bounds::{chernoff_validate, m_bound_eig, sample_bound, BoundInputs, BoundReport, ExpandedChallenges};
use optpuf::experiment::{attack, bound_for, build_puf, pilot_xi, run_trials, AttackSpec};
use optpuf::learner::{pac_evaluate, DROP_SCALE};
use optpuf::lwe::lwe_contrast;
use optpuf::par::trial_rng;
use optpuf::pufsim::{orientation_bound, OrientationGrid};
use optpuf::{feature_dim, whiten, LearnedModel, MonomialBasis, OpticalPuf, Puf};

use crate::config::{digest, distribution, noise, resolve, ConfigError, DistributionKind, NoiseKind};
use crate::output::{write_csv, write_json, Header};

// Stream indices under the root seed.
const FIT_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

fn default_pac_samples() -> usize {
    10_000
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    0.1
}
fn default_q() -> f64 {
    0.5
}
fn default_degree() -> usize {
    2
}

#[derive(Args, Serialize, Debug)]
pub struct PufFlags {
    /// Mask pixels N.
    #[arg(long)]
    n_mask: Option<usize>,
    /// Detector pixels M.
    #[arg(long)]
    n_pixels: Option<usize>,
    /// Nonlinear strengths, comma separated; omit for a linear medium.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    distribution: Option<DistributionKind>,
    #[arg(long)]
    bernoulli_q: Option<f64>,
    #[arg(long, value_enum)]
    noise: Option<NoiseKind>,
    #[arg(long)]
    noise_a: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    noise_alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Serialize, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// CRP CSV destination (stdout if omitted).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Also write the PUF as JSON.
    #[arg(long)]
    #[serde(skip)]
    puf_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    puf: PufFlags,
    /// Number of challenges.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    n_mask: usize,
    n_pixels: usize,
    #[serde(default)]
    eta: Vec<f64>,
    #[serde(default)]
    distribution: Option<DistributionKind>,
    #[serde(default = "default_q")]
    bernoulli_q: f64,
    #[serde(default)]
    noise: Option<NoiseKind>,
    #[serde(default)]
    noise_a: f64,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default)]
    noise_alpha: f64,
    #[serde(default)]
    seed: u64,
    m: usize,
}

#[derive(Serialize)]
struct CrpRow {
    challenge: Vec<f64>,
    pixel: usize,
    response: f64,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg: SimulateConfig = resolve(args.config.as_deref(), args)?;
    let header = Header::new("simulate", digest(&cfg));
    let start = Instant::now();
    let dist = distribution(cfg.distribution.unwrap_or(DistributionKind::Uniform), cfg.bernoulli_q)?;
    let noise_model = noise(
        cfg.noise.unwrap_or(NoiseKind::None),
        cfg.noise_a,
        cfg.noise_sigma,
        cfg.noise_alpha,
    )?;
    let puf = build_puf(cfg.n_mask, cfg.n_pixels, &cfg.eta, cfg.seed)?;
    let mut rng = trial_rng(cfg.seed, FIT_STREAM);
    let mut rows = Vec::with_capacity(cfg.m * cfg.n_pixels);
    let mut r = vec![0.0; cfg.n_pixels];
    for _ in 0..cfg.m {
        let b = dist.sample(cfg.n_mask, &mut rng);
        puf.intensities_into(&b, &mut r);
        for (pixel, clean) in r.iter().enumerate() {
            rows.push(CrpRow {
                challenge: b.clone(),
                pixel,
                response: clean + optpuf::pufsim::sample_noise(&noise_model, &mut rng)?,
            });
        }
    }
    if let Some(p) = &args.puf_out {
        write_json(Some(p), &header, &puf)?;
    }
    write_crp_csv(args.out.as_deref(), &header, start.elapsed().as_secs_f64(), cfg.n_mask, &rows)
}

// csv cannot name the columns of a flattened Vec, so the header is written by hand.
fn write_crp_csv(path: Option<&Path>, header: &Header, wall: f64, n_mask: usize, rows: &[CrpRow]) -> Result<()> {
    let mut names: Vec<String> = (0..n_mask).map(|i| format!("challenge_{i}")).collect();
    names.push("pixel".into());
    names.push("response".into());
    let flat: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v: Vec<String> = r.challenge.iter().map(|x| x.to_string()).collect();
            v.push(r.pixel.to_string());
            v.push(r.response.to_string());
            v
        })
        .collect();
    let mut table = Vec::with_capacity(flat.len() + 1);
    table.push(names);
    table.extend(flat);
    crate::output::write_records(path, header, wall, &table)
}

// ---------------------------------------------------------------- attack / evaluate

#[derive(Args, Serialize, Debug)]
pub struct AttackFlags {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    puf: PufFlags,
    /// Attack a stored PUF instead of one generated from the seed.
    #[arg(long)]
    puf_file: Option<PathBuf>,
    /// Feature degree (defaults to the response degree of the PUF).
    #[arg(long)]
    degree: Option<usize>,
    /// Training CRPs.
    #[arg(long)]
    m: Option<usize>,
    /// Fresh challenges for the PAC check.
    #[arg(long)]
    pac_samples: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    n_mask: Option<usize>,
    n_pixels: Option<usize>,
    #[serde(default)]
    eta: Vec<f64>,
    #[serde(default)]
    distribution: Option<DistributionKind>,
    #[serde(default = "default_q")]
    bernoulli_q: f64,
    #[serde(default)]
    noise: Option<NoiseKind>,
    #[serde(default)]
    noise_a: f64,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default)]
    noise_alpha: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    puf_file: Option<PathBuf>,
    #[serde(default)]
    degree: Option<usize>,
    m: usize,
    #[serde(default = "default_pac_samples")]
    pac_samples: usize,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
}

impl AttackConfig {
    fn load_puf(&self) -> Result<Puf> {
        match &self.puf_file {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                let puf: Puf = serde_json::from_str(&text).map_err(|e| ConfigError::new(format!("{}: {e}", p.display())))?;
                Ok(puf)
            }
            None => {
                let (Some(n), Some(px)) = (self.n_mask, self.n_pixels) else {
                    return Err(ConfigError::new("n_mask and n_pixels are required without puf_file").into());
                };
                Ok(build_puf(n, px, &self.eta, self.seed)?)
            }
        }
    }

    fn spec(&self, puf: &Puf) -> Result<AttackSpec> {
        let eta = match puf {
            Puf::Linear(_) => vec![],
            Puf::Nonlinear(p) => p.eta().to_vec(),
        };
        Ok(AttackSpec {
            n_mask: puf.num_mask_pixels(),
            n_pixels: puf.num_detector_pixels(),
            eta,
            degree: self.degree,
            distribution: distribution(self.distribution.unwrap_or(DistributionKind::Uniform), self.bernoulli_q)?,
            noise: noise(
                self.noise.unwrap_or(NoiseKind::None),
                self.noise_a,
                self.noise_sigma,
                self.noise_alpha,
            )?,
            m: self.m,
            pac_samples: self.pac_samples,
            epsilon: self.epsilon,
        })
    }
}

#[derive(Args, Serialize, Debug)]
pub struct AttackArgs {
    /// Metrics CSV destination (stdout if omitted).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Learned model JSON destination.
    #[arg(long)]
    #[serde(skip)]
    model_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    flags: AttackFlags,
}

#[derive(Serialize, Debug, PartialEq)]
pub struct AttackMetrics {
    pub m: usize,
    pub n: usize,
    pub kept: usize,
    pub xi_hat: f64,
    pub max_err: f64,
    pub certificate: Option<f64>,
    pub epsilon: f64,
    pub pass: bool,
}

pub fn attack_cmd(args: &AttackArgs) -> Result<()> {
    let cfg: AttackConfig = resolve(args.flags.config.as_deref(), &args.flags)?;
    let header = Header::new("attack", digest(&cfg));
    let puf = cfg.load_puf()?;
    let spec = cfg.spec(&puf)?;
    let mut fit_rng = trial_rng(cfg.seed, FIT_STREAM);
    let mut eval_rng = trial_rng(cfg.seed, EVAL_STREAM);
    let out = attack(&puf, &spec, &mut fit_rng, &mut eval_rng)?;
    let metrics = AttackMetrics {
        m: out.m,
        n: out.n,
        kept: out.whitening.kept().len(),
        xi_hat: out.xi_hat(),
        max_err: out.pac.max_err,
        certificate: out.certificate(),
        epsilon: spec.epsilon,
        pass: out.pac.pass,
    };
    if let Some(p) = &args.model_out {
        write_json(Some(p), &header, &out.model)?;
    }
    write_csv(args.out.as_deref(), &header, out.seconds, &[metrics])
}

#[derive(Args, Serialize, Debug)]
pub struct EvaluateArgs {
    /// Learned model JSON written by `attack`.
    #[arg(long)]
    #[serde(skip)]
    model: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    flags: AttackFlags,
}

#[derive(Serialize)]
struct EvaluateRow {
    max_err: f64,
    certificate: Option<f64>,
    challenges_evaluated: usize,
    pass: bool,
}

/// Re-run the PAC check of `attack` (same config, same evaluation stream) on a stored model.
pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg: AttackConfig = resolve(args.flags.config.as_deref(), &args.flags)?;
    let header = Header::new("evaluate", digest(&cfg));
    let start = Instant::now();
    let text = fs::read_to_string(&args.model).with_context(|| format!("cannot read {}", args.model.display()))?;
    let model: LearnedModel =
        serde_json::from_str(&text).map_err(|e| ConfigError::new(format!("{}: {e}", args.model.display())))?;
    let puf = cfg.load_puf()?;
    let spec = cfg.spec(&puf)?;
    let mut eval_rng = trial_rng(cfg.seed, EVAL_STREAM);
    let pac = pac_evaluate(&model, &puf, &spec.distribution, spec.pac_samples, spec.epsilon, &mut eval_rng)?;
    let row = EvaluateRow {
        max_err: pac.max_err,
        certificate: pac.analytic_bound.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max)),
        challenges_evaluated: pac.challenges_evaluated,
        pass: pac.pass,
    };
    write_csv(args.out.as_deref(), &header, start.elapsed().as_secs_f64(), &[row])
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Training set size.
    M,
    /// Mask pixels N.
    NMask,
    /// Half-width of bounded uniform noise.
    NoiseA,
}

#[derive(Args, Serialize, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    flags: AttackFlags,
    #[arg(long, value_enum)]
    vary: Option<SweepAxis>,
    /// Grid values, comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Interpret `m` grid values as multiples of the sample bound.
    #[arg(long)]
    relative_to_bound: Option<bool>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    n_mask: usize,
    n_pixels: usize,
    #[serde(default)]
    eta: Vec<f64>,
    #[serde(default)]
    distribution: Option<DistributionKind>,
    #[serde(default = "default_q")]
    bernoulli_q: f64,
    #[serde(default)]
    noise: Option<NoiseKind>,
    #[serde(default)]
    noise_a: f64,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default)]
    noise_alpha: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    degree: Option<usize>,
    #[serde(default)]
    m: usize,
    #[serde(default = "default_pac_samples")]
    pac_samples: usize,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    vary: SweepAxis,
    values: Vec<f64>,
    #[serde(default)]
    relative_to_bound: bool,
    trials: usize,
    #[serde(default = "default_delta")]
    delta: f64,
}

#[derive(Serialize, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub m: usize,
    pub n_mask: usize,
    pub noise_a: f64,
    pub n: usize,
    pub xi_hat: f64,
    pub m_bound: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_max_err: f64,
    pub predicted_success: f64,
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let cfg: SweepConfig = resolve(args.flags.config.as_deref(), args)?;
    if cfg.values.is_empty() || cfg.trials == 0 {
        return Err(ConfigError::new("sweep needs at least one grid value and one trial").into());
    }
    let header = Header::new("sweep", digest(&cfg));
    let start = Instant::now();
    let dist = distribution(cfg.distribution.unwrap_or(DistributionKind::Uniform), cfg.bernoulli_q)?;
    let noise_kind = cfg.noise.unwrap_or(NoiseKind::None);

    let mut rows = Vec::with_capacity(cfg.values.len());
    for (i, &value) in cfg.values.iter().enumerate() {
        let mut n_mask = cfg.n_mask;
        let mut noise_kind = noise_kind;
        let mut noise_a = cfg.noise_a;
        match cfg.vary {
            SweepAxis::NMask => n_mask = positive_int(value, "n_mask")?,
            SweepAxis::NoiseA => {
                noise_kind = NoiseKind::BoundedUniform;
                noise_a = value;
            }
            SweepAxis::M => {}
        }
        let mut spec = AttackSpec {
            n_mask,
            n_pixels: cfg.n_pixels,
            eta: cfg.eta.clone(),
            degree: cfg.degree,
            distribution: dist,
            noise: noise(noise_kind, noise_a, cfg.noise_sigma, cfg.noise_alpha)?,
            m: cfg.m,
            pac_samples: cfg.pac_samples,
            epsilon: cfg.epsilon,
        };
        let basis = spec.basis()?;
        let xi = pilot_xi(&basis, &dist, cfg.seed)?;
        let m_bound = bound_for(&spec, xi, cfg.delta)?.m_required;
        if cfg.vary == SweepAxis::M {
            spec.m = if cfg.relative_to_bound {
                (value * m_bound).ceil() as usize
            } else {
                positive_int(value, "m")?
            };
        }
        if spec.m == 0 {
            return Err(ConfigError::new("m must be >= 1").into());
        }
        let point_seed = cfg.seed.wrapping_add((i as u64) << 32);
        let mut errs = Vec::with_capacity(cfg.trials);
        let mut successes = 0;
        for outcome in run_trials(&spec, cfg.trials, point_seed) {
            match outcome {
                Ok(o) => {
                    successes += usize::from(o.pac.pass);
                    errs.push(o.pac.max_err);
                }
                // Too few samples for a full-rank fit counts as a failed trial.
                Err(optpuf::Error::Singular { .. }) => errs.push(f64::INFINITY),
                Err(e) => return Err(e.into()),
            }
        }
        rows.push(SweepRow {
            value,
            m: spec.m,
            n_mask,
            noise_a: spec.noise.tau(),
            n: basis.len(),
            xi_hat: xi,
            m_bound,
            trials: cfg.trials,
            successes,
            success_rate: successes as f64 / cfg.trials as f64,
            median_max_err: median(&mut errs),
            predicted_success: if spec.m as f64 >= m_bound { 1.0 - cfg.delta } else { 0.0 },
        });
    }
    write_csv(args.out.as_deref(), &header, start.elapsed().as_secs_f64(), &rows)
}

fn positive_int(v: f64, what: &str) -> Result<usize, ConfigError> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(ConfigError::new(format!("{what} grid values must be positive integers, got {v}")))
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

// ---------------------------------------------------------------- bounds

#[derive(Args, Serialize, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_mask: Option<usize>,
    #[arg(long)]
    n_pixels: Option<usize>,
    /// Feature degree used for n and the analytic ξ.
    #[arg(long)]
    degree: Option<usize>,
    /// Feature dimension (default: number of monomials of the degree).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tau_e: Option<f64>,
    /// Smallest retained second-moment eigenvalue (default: exact value for the distribution).
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, value_enum)]
    distribution: Option<DistributionKind>,
    #[arg(long)]
    bernoulli_q: Option<f64>,
    #[arg(long)]
    nonlinear_order: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    n_mask: usize,
    n_pixels: usize,
    #[serde(default = "default_degree")]
    degree: usize,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    tau_e: f64,
    #[serde(default)]
    xi: Option<f64>,
    #[serde(default)]
    distribution: Option<DistributionKind>,
    #[serde(default = "default_q")]
    bernoulli_q: f64,
    #[serde(default)]
    nonlinear_order: Option<usize>,
}

#[derive(Serialize)]
struct BoundsOutput {
    inputs: BoundInputs,
    report: BoundReport,
}

pub fn bounds(args: &BoundsArgs) -> Result<()> {
    let cfg: BoundsConfig = resolve(args.config.as_deref(), args)?;
    let header = Header::new("bounds", digest(&cfg));
    let n = match cfg.n {
        Some(n) => n,
        None => feature_dim(cfg.n_mask, cfg.degree)?,
    };
    let xi = match cfg.xi {
        Some(x) => x,
        None => {
            let dist = distribution(cfg.distribution.unwrap_or(DistributionKind::Uniform), cfg.bernoulli_q)?;
            let basis = MonomialBasis::new(cfg.n_mask, cfg.degree)?;
            whiten(&dist.second_moment(&basis), DROP_SCALE)?.xi_hat()
        }
    };
    let inputs = BoundInputs {
        n,
        n_mask: cfg.n_mask,
        n_pixels: cfg.n_pixels,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        tau_e: cfg.tau_e,
        xi,
        nonlinear_order: cfg.nonlinear_order,
    };
    let report = sample_bound(&inputs)?;
    write_json(args.out.as_deref(), &header, &BoundsOutput { inputs, report })
}

// ---------------------------------------------------------------- chernoff

#[derive(Args, Serialize, Debug)]
pub struct ChernoffArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_mask: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_enum)]
    distribution: Option<DistributionKind>,
    #[arg(long)]
    bernoulli_q: Option<f64>,
    /// Challenges per trial (default: the eigenvalue sample bound at `exponent`).
    #[arg(long)]
    m: Option<usize>,
    /// Confidence exponent η used to size `m`.
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct ChernoffConfig {
    n_mask: usize,
    #[serde(default = "default_degree")]
    degree: usize,
    #[serde(default)]
    distribution: Option<DistributionKind>,
    #[serde(default = "default_q")]
    bernoulli_q: f64,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default = "default_exponent")]
    exponent: f64,
    trials: usize,
    #[serde(default)]
    seed: u64,
}

fn default_exponent() -> f64 {
    2.0
}

pub fn chernoff(args: &ChernoffArgs) -> Result<()> {
    let cfg: ChernoffConfig = resolve(args.config.as_deref(), args)?;
    let header = Header::new("chernoff", digest(&cfg));
    let start = Instant::now();
    let source = ExpandedChallenges {
        basis: MonomialBasis::new(cfg.n_mask, cfg.degree)?,
        dist: distribution(cfg.distribution.unwrap_or(DistributionKind::Uniform), cfg.bernoulli_q)?,
    };
    let m = match cfg.m {
        Some(m) => m,
        None => {
            let xi = whiten(&source.dist.second_moment(&source.basis), DROP_SCALE)?.xi_hat();
            m_bound_eig(source.basis.len(), xi, cfg.exponent).ceil() as usize
        }
    };
    let report = chernoff_validate(&source, m, cfg.trials, cfg.seed)?;
    write_csv(args.out.as_deref(), &header, start.elapsed().as_secs_f64(), &[report])
}

// ---------------------------------------------------------------- lwe-demo

#[derive(Args, Serialize, Debug)]
pub struct LweArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Secret dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Modulus.
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Samples per instance (default 50n).
    #[arg(long)]
    m: Option<usize>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct LweConfig {
    #[serde(default = "default_lwe_n")]
    n: usize,
    #[serde(default = "default_lwe_p")]
    p: u64,
    #[serde(default = "default_lwe_sigma")]
    sigma: f64,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default = "default_lwe_seeds")]
    seeds: usize,
    #[serde(default)]
    seed: u64,
}

fn default_lwe_n() -> usize {
    32
}
fn default_lwe_p() -> u64 {
    97
}
fn default_lwe_sigma() -> f64 {
    2.0
}
fn default_lwe_seeds() -> usize {
    100
}

#[derive(Serialize)]
struct LweRow {
    seed: u64,
    modular: u8,
    recovered: u8,
    median_residual: f64,
}

pub fn lwe_demo(args: &LweArgs) -> Result<()> {
    let cfg: LweConfig = resolve(args.config.as_deref(), args)?;
    let header = Header::new("lwe-demo", digest(&cfg));
    let start = Instant::now();
    let m = cfg.m.unwrap_or(50 * cfg.n);
    let rows: Vec<LweRow> = lwe_contrast(cfg.n, cfg.p, cfg.sigma, m, cfg.seeds, cfg.seed)?
        .into_iter()
        .map(|t| LweRow {
            seed: t.seed,
            modular: t.modular.into(),
            recovered: t.recovered.into(),
            median_residual: t.median_residual,
        })
        .collect();
    write_csv(args.out.as_deref(), &header, start.elapsed().as_secs_f64(), &rows)
}

// ---------------------------------------------------------------- orientations

#[derive(Args, Serialize, Debug)]
pub struct OrientationArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Side length L of the illuminable square.
    #[arg(long)]
    side_length: Option<f64>,
    /// Positional uncertainty ℓ.
    #[arg(long)]
    position_uncertainty: Option<f64>,
    /// Angular uncertainty α in radians.
    #[arg(long)]
    angular_uncertainty: Option<f64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct OrientationConfig {
    side_length: f64,
    position_uncertainty: f64,
    angular_uncertainty: f64,
}

#[derive(Serialize)]
struct OrientationRow {
    side_length: f64,
    position_uncertainty: f64,
    angular_uncertainty: f64,
    lattice_count: usize,
    bound: f64,
}

pub fn orientations(args: &OrientationArgs) -> Result<()> {
    let cfg: OrientationConfig = resolve(args.config.as_deref(), args)?;
    let header = Header::new("orientations", digest(&cfg));
    let grid = OrientationGrid {
        side_length: cfg.side_length,
        position_uncertainty: cfg.position_uncertainty,
        angular_uncertainty: cfg.angular_uncertainty,
    };
    let row = OrientationRow {
        side_length: grid.side_length,
        position_uncertainty: grid.position_uncertainty,
        angular_uncertainty: grid.angular_uncertainty,
        lattice_count: grid.lattice_count()?,
        bound: orientation_bound(&grid)?,
    };
    write_csv(args.out.as_deref(), &header, 0.0, &[row])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&mut [1.0, f64::INFINITY, 2.0]), 2.0);
    }

    #[test]
    fn grid_values_must_be_integers() {
        assert_eq!(positive_int(12.0, "m").unwrap(), 12);
        assert!(positive_int(1.5, "m").is_err());
        assert!(positive_int(0.0, "m").is_err());
    }

    #[test]
    fn fit_and_eval_streams_differ() {
        use rand::Rng;
        let a: u64 = trial_rng(5, FIT_STREAM).random();
        let b: u64 = trial_rng(5, EVAL_STREAM).random();
        assert_ne!(a, b);
    }
}
