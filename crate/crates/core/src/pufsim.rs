//! Ground-truth optical PUF simulators.
//!
//! The scattering token is reduced to its transmission matrix `T`: detector
//! pixel `i` sees the field `(T·b)_i` for mask `b` and records `|(T·b)_i|²`.
//! The weakly nonlinear variant adds perturbative source terms driven by
//! `ψ_L |ψ_L|^{2k}`, which keeps the response an exact polynomial of degree
//! `4d + 2` in the mask pixels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::features::MonomialBasis;
use crate::linalg::{Matrix, SymMatrix};

/// How mask challenges are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChallengeDistribution {
    /// Independent uniform on `[0, 1]`.
    Uniform,
    /// Independent uniform on `{0, 1}`.
    Binary,
    /// Independent `{0, 1}` with `Pr[1] = q`.
    Bernoulli { q: f64 },
}

impl ChallengeDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChallengeDistribution::Bernoulli { q } if !(q > 0.0 && q <= 1.0) => {
                Err(Error::invalid(format!("bernoulli q must lie in (0, 1], got {q}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            ChallengeDistribution::Uniform => out.iter_mut().for_each(|v| *v = rng.random()),
            ChallengeDistribution::Binary => {
                out.iter_mut().for_each(|v| *v = f64::from(u8::from(rng.random::<bool>())))
            }
            ChallengeDistribution::Bernoulli { q } => out
                .iter_mut()
                .for_each(|v| *v = f64::from(u8::from(rng.random_bool(q)))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut b = vec![0.0; n];
        self.sample_into(rng, &mut b);
        b
    }

    /// `E[b^k]` for one mask pixel.
    pub fn raw_moment(&self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match *self {
            ChallengeDistribution::Uniform => 1.0 / f64::from(k + 1),
            ChallengeDistribution::Binary => 0.5,
            ChallengeDistribution::Bernoulli { q } => q,
        }
    }

    /// Exact `E[cᵀc]` for the expanded challenge `c`.
    pub fn second_moment(&self, basis: &MonomialBasis) -> SymMatrix {
        let exps = basis.monomial_indices();
        let n = basis.len();
        let mut m = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                m[(a, b)] = exps[a]
                    .iter()
                    .zip(&exps[b])
                    .map(|(x, y)| self.raw_moment(x + y))
                    .product();
            }
        }
        SymMatrix::from_upper(m)
    }
}

/// Per-pixel measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Uniform on `[-a, a]`.
    BoundedUniform { a: f64 },
    /// Centered Gaussian, resampled until `|e| <= alpha`.
    TruncatedGaussian { sigma: f64, alpha: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::BoundedUniform { a } if a >= 0.0 && a.is_finite() => Ok(()),
            NoiseModel::BoundedUniform { a } => {
                Err(Error::invalid(format!("uniform noise half-width must be >= 0, got {a}")))
            }
            NoiseModel::TruncatedGaussian { sigma, alpha } => {
                if !(alpha > 0.0) || !alpha.is_finite() {
                    Err(Error::invalid(format!("truncation alpha must be > 0, got {alpha}")))
                } else if !(sigma >= 0.0) || !sigma.is_finite() {
                    Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Subgaussian parameter: every model is zero-mean with support in `[-τ, τ]`.
    pub fn tau(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::BoundedUniform { a } => a,
            NoiseModel::TruncatedGaussian { alpha, .. } => alpha,
        }
    }

    /// All supported models are symmetric about zero.
    pub fn mean(&self) -> f64 {
        0.0
    }

    /// Draw one sample; assumes `validate` passed.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::BoundedUniform { a } => {
                if a == 0.0 {
                    0.0
                } else {
                    rng.random_range(-a..=a)
                }
            }
            NoiseModel::TruncatedGaussian { sigma, alpha } => loop {
                let z: f64 = rng.sample(StandardNormal);
                let e = sigma * z;
                if e.abs() <= alpha {
                    break e;
                }
            },
        }
    }
}

pub fn sample_noise<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> Result<f64> {
    model.validate()?;
    Ok(model.draw(rng))
}

/// Common interface of the simulated PUFs.
pub trait OpticalPuf: Sync {
    fn num_mask_pixels(&self) -> usize;
    fn num_detector_pixels(&self) -> usize;
    /// Polynomial degree of the clean response in the mask pixels.
    fn response_degree(&self) -> usize;
    /// Clean intensities into `out`; lengths are the caller's responsibility.
    fn intensities_into(&self, b: &[f64], out: &mut [f64]);

    /// Exact coefficient vector of `pixel` in `basis`, when it is known in closed form.
    fn true_secret(&self, _pixel: usize, _basis: &MonomialBasis) -> Option<Vec<f64>> {
        None
    }

    fn respond_clean(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.num_mask_pixels(), b.len())?;
        let mut out = vec![0.0; self.num_detector_pixels()];
        self.intensities_into(b, &mut out);
        Ok(out)
    }

    fn respond<R: Rng + ?Sized>(&self, b: &[f64], noise: &NoiseModel, rng: &mut R) -> Result<Vec<f64>>
    where
        Self: Sized,
    {
        noise.validate()?;
        let mut out = self.respond_clean(b)?;
        for r in out.iter_mut() {
            *r += noise.draw(rng);
        }
        Ok(out)
    }
}

fn complex_gaussian_matrix(rows: usize, cols: usize, variance: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let sd = (variance / 2.0).sqrt();
    (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect()
}

fn mat_vec(t: &[Complex64], cols: usize, row: usize, b: &[f64]) -> Complex64 {
    t[row * cols..(row + 1) * cols]
        .iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (t, &bj)| acc + t * bj)
}

/// Linear scattering medium described by its `M × N` transmission matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPuf {
    n_mask: usize,
    n_pixels: usize,
    /// Row-major, row = detector pixel.
    t: Vec<Complex64>,
}

/// Random linear PUF with i.i.d. `CN(0, 1/N)` transmission coefficients.
pub fn new_linear_puf(n_mask: usize, n_pixels: usize, seed: u64) -> Result<LinearPuf> {
    if n_mask == 0 || n_pixels == 0 {
        return Err(Error::invalid("a PUF needs at least one mask and one detector pixel"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = complex_gaussian_matrix(n_pixels, n_mask, 1.0 / n_mask as f64, &mut rng);
    Ok(LinearPuf {
        n_mask,
        n_pixels,
        t,
    })
}

impl LinearPuf {
    pub fn from_transmission(n_mask: usize, n_pixels: usize, t: Vec<Complex64>) -> Result<Self> {
        if n_mask == 0 || n_pixels == 0 {
            return Err(Error::invalid("a PUF needs at least one mask and one detector pixel"));
        }
        check_len(n_mask * n_pixels, t.len())?;
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LinearPuf {
            n_mask,
            n_pixels,
            t,
        })
    }

    pub fn transmission(&self, pixel: usize, mask: usize) -> Complex64 {
        self.t[pixel * self.n_mask + mask]
    }

    pub fn transmission_row(&self, pixel: usize) -> &[Complex64] {
        &self.t[pixel * self.n_mask..(pixel + 1) * self.n_mask]
    }

    /// Field at every detector pixel, `T·b`.
    pub fn respond_amplitude(&self, b: &[f64]) -> Result<Vec<Complex64>> {
        check_len(self.n_mask, b.len())?;
        Ok((0..self.n_pixels).map(|i| mat_vec(&self.t, self.n_mask, i, b)).collect())
    }
}

impl OpticalPuf for LinearPuf {
    fn num_mask_pixels(&self) -> usize {
        self.n_mask
    }

    fn num_detector_pixels(&self) -> usize {
        self.n_pixels
    }

    fn response_degree(&self) -> usize {
        2
    }

    fn intensities_into(&self, b: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = mat_vec(&self.t, self.n_mask, i, b).norm_sqr();
        }
    }

    fn true_secret(&self, pixel: usize, basis: &MonomialBasis) -> Option<Vec<f64>> {
        secret_of(self, pixel, basis).ok()
    }
}

/// Weakly nonlinear medium: `ψ_i = (Tb)_i + Σ_k η_k (U_k b)_i |(Tb)_i|^{2k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearPuf {
    base: LinearPuf,
    eta: Vec<f64>,
    /// One row-major `M × N` coupling matrix per order.
    u: Vec<Vec<Complex64>>,
}

/// Nonlinear PUF of order `eta.len()` on top of `base`, couplings drawn like `T`.
pub fn new_nonlinear_puf(base: LinearPuf, eta: Vec<f64>, seed: u64) -> Result<NonlinearPuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (base.n_pixels, base.n_mask);
    let u = (0..eta.len())
        .map(|_| complex_gaussian_matrix(rows, cols, 1.0 / cols as f64, &mut rng))
        .collect();
    NonlinearPuf::from_parts(base, eta, u)
}

impl NonlinearPuf {
    pub fn from_parts(base: LinearPuf, eta: Vec<f64>, u: Vec<Vec<Complex64>>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::invalid("nonlinear order d must be at least 1"));
        }
        if eta.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite);
        }
        check_len(eta.len(), u.len())?;
        for uk in &u {
            check_len(base.t.len(), uk.len())?;
        }
        Ok(NonlinearPuf { base, eta, u })
    }

    pub fn order(&self) -> usize {
        self.eta.len()
    }

    pub fn base(&self) -> &LinearPuf {
        &self.base
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn field(&self, b: &[f64]) -> Result<Vec<Complex64>> {
        check_len(self.base.n_mask, b.len())?;
        Ok((0..self.base.n_pixels).map(|i| self.field_at(i, b)).collect())
    }

    fn field_at(&self, i: usize, b: &[f64]) -> Complex64 {
        let n = self.base.n_mask;
        let lin = mat_vec(&self.base.t, n, i, b);
        let intensity = lin.norm_sqr();
        let mut psi = lin;
        let mut pow = 1.0;
        for (eta_k, uk) in self.eta.iter().zip(&self.u) {
            pow *= intensity;
            psi += mat_vec(uk, n, i, b) * (eta_k * pow);
        }
        psi
    }
}

impl OpticalPuf for NonlinearPuf {
    fn num_mask_pixels(&self) -> usize {
        self.base.n_mask
    }

    fn num_detector_pixels(&self) -> usize {
        self.base.n_pixels
    }

    fn response_degree(&self) -> usize {
        4 * self.order() + 2
    }

    fn intensities_into(&self, b: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.field_at(i, b).norm_sqr();
        }
    }
}

/// Either kind of simulated PUF; this is what gets serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PufRecord", into = "PufRecord")]
pub enum Puf {
    Linear(LinearPuf),
    Nonlinear(NonlinearPuf),
}

impl Puf {
    pub fn linear(&self) -> &LinearPuf {
        match self {
            Puf::Linear(p) => p,
            Puf::Nonlinear(p) => &p.base,
        }
    }
}

impl OpticalPuf for Puf {
    fn num_mask_pixels(&self) -> usize {
        self.linear().n_mask
    }

    fn num_detector_pixels(&self) -> usize {
        self.linear().n_pixels
    }

    fn response_degree(&self) -> usize {
        match self {
            Puf::Linear(p) => p.response_degree(),
            Puf::Nonlinear(p) => p.response_degree(),
        }
    }

    fn intensities_into(&self, b: &[f64], out: &mut [f64]) {
        match self {
            Puf::Linear(p) => p.intensities_into(b, out),
            Puf::Nonlinear(p) => p.intensities_into(b, out),
        }
    }

    fn true_secret(&self, pixel: usize, basis: &MonomialBasis) -> Option<Vec<f64>> {
        match self {
            Puf::Linear(p) => p.true_secret(pixel, basis),
            Puf::Nonlinear(_) => None,
        }
    }
}

/// JSON layout of a PUF: row-major real/imaginary arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PufRecord {
    #[serde(rename = "N")]
    pub n_mask: usize,
    #[serde(rename = "M")]
    pub n_pixels: usize,
    #[serde(rename = "T_real")]
    pub t_real: Vec<f64>,
    #[serde(rename = "T_imag")]
    pub t_imag: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(rename = "U_real", default, skip_serializing_if = "Option::is_none")]
    pub u_real: Option<Vec<Vec<f64>>>,
    #[serde(rename = "U_imag", default, skip_serializing_if = "Option::is_none")]
    pub u_imag: Option<Vec<Vec<f64>>>,
}

fn split(z: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

fn join(re: &[f64], im: &[f64]) -> Result<Vec<Complex64>> {
    check_len(re.len(), im.len())?;
    Ok(re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect())
}

impl From<Puf> for PufRecord {
    fn from(p: Puf) -> Self {
        let lin = p.linear();
        let (t_real, t_imag) = split(&lin.t);
        let mut rec = PufRecord {
            n_mask: lin.n_mask,
            n_pixels: lin.n_pixels,
            t_real,
            t_imag,
            d: None,
            eta: None,
            u_real: None,
            u_imag: None,
        };
        if let Puf::Nonlinear(nl) = &p {
            let (ur, ui): (Vec<_>, Vec<_>) = nl.u.iter().map(|u| split(u)).unzip();
            rec.d = Some(nl.order());
            rec.eta = Some(nl.eta.clone());
            rec.u_real = Some(ur);
            rec.u_imag = Some(ui);
        }
        rec
    }
}

impl TryFrom<PufRecord> for Puf {
    type Error = Error;

    fn try_from(rec: PufRecord) -> Result<Self> {
        let t = join(&rec.t_real, &rec.t_imag)?;
        let base = LinearPuf::from_transmission(rec.n_mask, rec.n_pixels, t)?;
        match (rec.eta, rec.u_real, rec.u_imag) {
            (None, None, None) => Ok(Puf::Linear(base)),
            (Some(eta), Some(ur), Some(ui)) => {
                if let Some(d) = rec.d {
                    check_len(d, eta.len())?;
                }
                check_len(ur.len(), ui.len())?;
                let u = ur
                    .iter()
                    .zip(&ui)
                    .map(|(r, i)| join(r, i))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Puf::Nonlinear(NonlinearPuf::from_parts(base, eta, u)?))
            }
            _ => Err(Error::invalid(
                "nonlinear PUF record needs eta, U_real and U_imag together",
            )),
        }
    }
}

/// True coefficient vector of one detector pixel in the degree-2 monomial basis.
pub fn secret_of(puf: &LinearPuf, pixel: usize, basis: &MonomialBasis) -> Result<Vec<f64>> {
    if basis.degree() != 2 {
        return Err(Error::invalid(format!(
            "linear PUF secrets live in the degree-2 basis, got degree {}",
            basis.degree()
        )));
    }
    check_len(puf.n_mask, basis.num_vars())?;
    if pixel >= puf.n_pixels {
        return Err(Error::invalid(format!(
            "pixel {pixel} out of range for {} detector pixels",
            puf.n_pixels
        )));
    }
    let row = puf.transmission_row(pixel);
    let mut s = vec![0.0; basis.len()];
    for (idx, e) in basis.monomial_indices().iter().enumerate() {
        let vars: Vec<usize> = e
            .iter()
            .enumerate()
            .flat_map(|(j, &p)| std::iter::repeat_n(j, p as usize))
            .collect();
        s[idx] = match vars.as_slice() {
            [j, k] if j == k => row[*j].norm_sqr(),
            [j, k] => 2.0 * (row[*j] * row[*k].conj()).re,
            _ => 0.0,
        };
    }
    Ok(s)
}

/// Alignment tolerances of a non-integrated PUF reader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationGrid {
    /// Side `L` of the illuminable square.
    pub side_length: f64,
    /// Positional uncertainty `±ℓ`.
    pub position_uncertainty: f64,
    /// Angular uncertainty `±α` (radians).
    pub angular_uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub phi: f64,
}

impl OrientationGrid {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.side_length) && ok(self.position_uncertainty) && ok(self.angular_uncertainty) {
            Ok(())
        } else {
            Err(Error::invalid("orientation grid parameters must be positive and finite"))
        }
    }

    fn spatial_steps(&self) -> usize {
        lattice_points(self.side_length, 2.0 * self.position_uncertainty)
    }

    fn angular_steps(&self) -> usize {
        lattice_points(PI, 2.0 * self.angular_uncertainty)
    }

    /// Size of the lattice produced by `enumerate_orientations`.
    pub fn lattice_count(&self) -> Result<usize> {
        self.validate()?;
        let s = self.spatial_steps();
        let a = self.angular_steps();
        Ok(s * s * a * a)
    }
}

/// Points `0, step, 2·step, … ≤ extent`.
fn lattice_points(extent: f64, step: f64) -> usize {
    // Small slack so that exact multiples are not lost to rounding.
    (extent / step * (1.0 + 1e-12)).floor() as usize + 1
}

/// Upper bound `π²L² / (16 α² ℓ²)` on distinguishable laser orientations.
pub fn orientation_bound(grid: &OrientationGrid) -> Result<f64> {
    grid.validate()?;
    let (l, ell, alpha) = (
        grid.side_length,
        grid.position_uncertainty,
        grid.angular_uncertainty,
    );
    Ok(PI * PI * l * l / (16.0 * alpha * alpha * ell * ell))
}

/// Lattice of poses separated by `2ℓ` in position and `2α` in angle.
pub fn enumerate_orientations(grid: &OrientationGrid) -> Result<Vec<Orientation>> {
    let count = grid.lattice_count()?;
    let s = grid.spatial_steps();
    let a = grid.angular_steps();
    let dx = 2.0 * grid.position_uncertainty;
    let da = 2.0 * grid.angular_uncertainty;
    let mut out = Vec::with_capacity(count);
    for ix in 0..s {
        for iy in 0..s {
            for it in 0..a {
                for ip in 0..a {
                    out.push(Orientation {
                        x: ix as f64 * dx,
                        y: iy as f64 * dx,
                        theta: it as f64 * da,
                        phi: ip as f64 * da,
                    });
                }
            }
        }
    }
    Ok(out)
}
