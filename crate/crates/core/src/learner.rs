//! Least-squares modeling attack.
//!
//! Challenges are expanded into monomial features `c`, rotated into the
//! eigenbasis `P` of the challenge second moment `E[cᵀc]`, and directions
//! with zero eigenvalue are dropped. Each detector pixel is then an ordinary
//! least-squares problem `ŝ̃ = (C̃ᵀC̃)⁻¹ C̃ᵀ r` sharing one factorization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{check_len, Error, Result};
use crate::features::MonomialBasis;
use crate::linalg::{self, dot, Cholesky, Matrix, SymMatrix};
use crate::par;
use crate::pufsim::{ChallengeDistribution, NoiseModel, OpticalPuf};

/// Eigenvalues at or below `dim * DROP_SCALE * max(λ_max, 1)` are dropped.
pub const DROP_SCALE: f64 = linalg::ZERO_EIGENVALUE_SCALE;

/// Minimum pilot batch used to estimate `E[cᵀc]`.
pub const PILOT_MIN: usize = 10_000;

/// Failure budget used when a singular fit suggests a larger sample count.
const SUGGESTION_DELTA: f64 = 0.1;

/// Challenge/response pairs: one row per challenge.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpSet {
    challenges: Matrix,
    responses: Matrix,
    noise: NoiseModel,
}

impl CrpSet {
    pub fn new(challenges: Matrix, responses: Matrix, noise: NoiseModel) -> Result<Self> {
        if challenges.rows() == 0 {
            return Err(Error::invalid("a CRP set needs at least one challenge"));
        }
        check_len(challenges.rows(), responses.rows())?;
        if challenges.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("challenge entries must lie in [0, 1]"));
        }
        if !responses.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(CrpSet {
            challenges,
            responses,
            noise,
        })
    }

    /// Query `puf` on `m` fresh challenges.
    pub fn generate<P: OpticalPuf, R: Rng + ?Sized>(
        puf: &P,
        dist: &ChallengeDistribution,
        noise: &NoiseModel,
        m: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self::generate_recording_noise(puf, dist, noise, m, rng)?.0)
    }

    /// Like `generate`, also returning the injected noise (`m × M`).
    pub fn generate_recording_noise<P: OpticalPuf, R: Rng + ?Sized>(
        puf: &P,
        dist: &ChallengeDistribution,
        noise: &NoiseModel,
        m: usize,
        rng: &mut R,
    ) -> Result<(Self, Matrix)> {
        dist.validate()?;
        noise.validate()?;
        let (n, px) = (puf.num_mask_pixels(), puf.num_detector_pixels());
        let mut challenges = Matrix::zeros(m, n);
        let mut responses = Matrix::zeros(m, px);
        let mut errors = Matrix::zeros(m, px);
        for i in 0..m {
            dist.sample_into(rng, challenges.row_mut(i));
            puf.intensities_into(challenges.row(i), responses.row_mut(i));
            for (r, e) in responses.row_mut(i).iter_mut().zip(errors.row_mut(i)) {
                *e = noise.draw(rng);
                *r += *e;
            }
        }
        Ok((CrpSet::new(challenges, responses, *noise)?, errors))
    }

    pub fn len(&self) -> usize {
        self.challenges.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn challenges(&self) -> &Matrix {
        &self.challenges
    }

    pub fn responses(&self) -> &Matrix {
        &self.responses
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn num_detector_pixels(&self) -> usize {
        self.responses.cols()
    }
}

/// Running `CᵀC` and `Cᵀr` in the monomial basis.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    dim: usize,
    n_pixels: usize,
    /// Upper triangle only until `gram()` mirrors it.
    gram_upper: Vec<f64>,
    rhs: Matrix,
    count: usize,
}

impl NormalEquations {
    pub fn new(dim: usize, n_pixels: usize) -> Self {
        NormalEquations {
            dim,
            n_pixels,
            gram_upper: vec![0.0; dim * dim],
            rhs: Matrix::zeros(dim, n_pixels),
            count: 0,
        }
    }

    /// Accumulate one expanded challenge `c` with its responses `r`.
    pub fn add(&mut self, c: &[f64], r: &[f64]) {
        debug_assert_eq!(c.len(), self.dim);
        debug_assert_eq!(r.len(), self.n_pixels);
        let n = self.dim;
        for a in 0..n {
            let ca = c[a];
            if ca == 0.0 {
                continue;
            }
            let row = &mut self.gram_upper[a * n + a..(a + 1) * n];
            for (g, &cb) in row.iter_mut().zip(&c[a..]) {
                *g += ca * cb;
            }
            for (h, &rk) in self.rhs.row_mut(a).iter_mut().zip(r) {
                *h += ca * rk;
            }
        }
        self.count += 1;
    }

    pub fn from_crps(crps: &CrpSet, basis: &MonomialBasis) -> Result<Self> {
        let mut ne = NormalEquations::new(basis.len(), crps.num_detector_pixels());
        let mut c = vec![0.0; basis.len()];
        for i in 0..crps.len() {
            basis.expand_into(crps.challenges.row(i), &mut c)?;
            ne.add(&c, crps.responses.row(i));
        }
        Ok(ne)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> SymMatrix {
        let m = Matrix::from_vec(self.dim, self.dim, self.gram_upper.clone())
            .expect("gram storage is dim x dim");
        SymMatrix::from_upper(m)
    }

    pub fn rhs(&self) -> &Matrix {
        &self.rhs
    }
}

/// `(1/m) Σ cᵢᵀcᵢ` over the expanded challenges.
pub fn estimate_second_moment(challenges: &Matrix, basis: &MonomialBasis) -> Result<SymMatrix> {
    if challenges.rows() == 0 {
        return Err(Error::invalid("cannot estimate a second moment from zero challenges"));
    }
    check_len(basis.num_vars(), challenges.cols())?;
    let mut ne = NormalEquations::new(basis.len(), 0);
    let mut c = vec![0.0; basis.len()];
    for i in 0..challenges.rows() {
        basis.expand_into(challenges.row(i), &mut c)?;
        ne.add(&c, &[]);
    }
    Ok(ne.gram().scale(1.0 / challenges.rows() as f64))
}

/// Orthogonal diagonalization of the challenge second moment, minus its null directions.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningMap {
    p: Matrix,
    eigenvalues: Vec<f64>,
    kept: Vec<usize>,
    xi_hat: f64,
}

impl WhiteningMap {
    /// No rotation, nothing dropped.
    pub fn identity(dim: usize) -> Self {
        WhiteningMap {
            p: Matrix::identity(dim),
            eigenvalues: vec![1.0; dim],
            kept: (0..dim).collect(),
            xi_hat: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn rotation(&self) -> &Matrix {
        &self.p
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn dropped(&self) -> usize {
        self.dim() - self.kept.len()
    }

    /// Smallest retained eigenvalue.
    pub fn xi_hat(&self) -> f64 {
        self.xi_hat
    }

    /// Columns of `P` for the retained directions (`n × k`).
    pub fn kept_basis(&self) -> Matrix {
        self.p.select_columns(&self.kept)
    }

    /// `c̃ = cP` restricted to retained directions.
    pub fn rotate(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), c.len())?;
        Ok(self
            .kept
            .iter()
            .map(|&j| (0..c.len()).map(|i| c[i] * self.p[(i, j)]).sum())
            .collect())
    }
}

/// Diagonalize `second_moment` and drop eigenvalues at or below
/// `dim * threshold_scale * max(λ_max, 1)`.
pub fn whiten(second_moment: &SymMatrix, threshold_scale: f64) -> Result<WhiteningMap> {
    let eig = linalg::sym_eig(second_moment)?;
    let dim = second_moment.dim();
    let threshold = linalg::zero_threshold(dim, eig.lambda_max(), threshold_scale);
    let kept: Vec<usize> = (0..dim).filter(|&j| eig.eigenvalues[j] > threshold).collect();
    let xi_hat = match kept.last() {
        Some(&j) => eig.eigenvalues[j],
        None => return Err(Error::DegenerateDistribution),
    };
    Ok(WhiteningMap {
        p: eig.vectors,
        eigenvalues: eig.eigenvalues,
        kept,
        xi_hat,
    })
}

/// Number of pilot challenges used to estimate `E[cᵀc]` for a basis of size `n`.
pub fn pilot_size(n: usize) -> usize {
    (10 * n).max(PILOT_MIN)
}

/// Whitening estimated from a fresh pilot batch drawn from `dist`.
pub fn pilot_whitening<R: Rng + ?Sized>(
    basis: &MonomialBasis,
    dist: &ChallengeDistribution,
    rng: &mut R,
) -> Result<WhiteningMap> {
    dist.validate()?;
    let m = pilot_size(basis.len());
    let mut challenges = Matrix::zeros(m, basis.num_vars());
    for i in 0..m {
        dist.sample_into(rng, challenges.row_mut(i));
    }
    whiten(&estimate_second_moment(&challenges, basis)?, DROP_SCALE)
}

/// Per-pixel least-squares solution in whitened coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedEstimate {
    /// `ŝ̃` per pixel, one entry per retained direction.
    pub s_tilde: Vec<Vec<f64>>,
}

impl WhitenedEstimate {
    /// Rotate back to the monomial basis, filling dropped directions with `fill`.
    pub fn embed(&self, basis: &MonomialBasis, whitening: &WhiteningMap, fill: f64) -> LearnedModel {
        let n = basis.len();
        let mut s_hat = Vec::with_capacity(self.s_tilde.len());
        let mut s0 = Vec::with_capacity(self.s_tilde.len());
        for st in &self.s_tilde {
            let mut full = vec![fill; n];
            for (&j, &v) in whitening.kept.iter().zip(st) {
                full[j] = v;
            }
            let mut s = whitening.p.mul_vec(&full).expect("P is n x n");
            s0.push(s[0]);
            s[0] = 0.0;
            s_hat.push(s);
        }
        LearnedModel {
            basis: basis.clone(),
            kept_indices: whitening.kept.clone(),
            eigenvalues: whitening.eigenvalues.clone(),
            s_hat,
            s0,
        }
    }
}

/// Solve the whitened normal equations for every detector pixel.
///
/// This is the shared kernel of the PUF attack and the LWE contrast.
pub fn solve_normal_equations(ne: &NormalEquations, whitening: &WhiteningMap) -> Result<WhitenedEstimate> {
    check_len(ne.dim, whitening.dim())?;
    let pk = whitening.kept_basis();
    let gram_t = ne.gram().congruence(&pk)?;
    let rhs_t = pk.transpose().matmul(&ne.rhs)?;
    let chol = Cholesky::new(&gram_t).map_err(|e| match e {
        Error::NotPositiveDefinite { lambda_min } => {
            let eta = (2.0 * ne.n_pixels.max(1) as f64 / SUGGESTION_DELTA).ln();
            Error::Singular {
                lambda_min,
                suggested_m: bounds::m_bound_eig(pk.cols(), whitening.xi_hat, eta),
            }
        }
        other => other,
    })?;
    let columns: Vec<Vec<f64>> = (0..ne.n_pixels).map(|j| rhs_t.column(j)).collect();
    let s_tilde = par::map_slice(&columns, |col| chol.solve_vec(col))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(WhitenedEstimate { s_tilde })
}

pub fn fit_whitened(crps: &CrpSet, basis: &MonomialBasis, whitening: &WhiteningMap) -> Result<WhitenedEstimate> {
    solve_normal_equations(&NormalEquations::from_crps(crps, basis)?, whitening)
}

/// Least-squares estimate of every pixel's secret; dropped directions re-embed as 0.
pub fn fit(crps: &CrpSet, basis: &MonomialBasis, whitening: &WhiteningMap) -> Result<LearnedModel> {
    Ok(fit_whitened(crps, basis, whitening)?.embed(basis, whitening, 0.0))
}

/// Learned per-pixel polynomial model of the PUF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedModel {
    pub basis: MonomialBasis,
    pub kept_indices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Coefficients per pixel; the constant entry is zero and lives in `s0`.
    pub s_hat: Vec<Vec<f64>>,
    pub s0: Vec<f64>,
}

impl LearnedModel {
    /// Wrap known secrets (constant term moved to `s0`).
    pub fn from_secrets(basis: MonomialBasis, secrets: Vec<Vec<f64>>) -> Result<Self> {
        for s in &secrets {
            check_len(basis.len(), s.len())?;
        }
        let n = basis.len();
        let s0 = secrets.iter().map(|s| s[0]).collect();
        let s_hat = secrets
            .into_iter()
            .map(|mut s| {
                s[0] = 0.0;
                s
            })
            .collect();
        Ok(LearnedModel {
            basis,
            kept_indices: (0..n).collect(),
            eigenvalues: vec![1.0; n],
            s_hat,
            s0,
        })
    }

    pub fn num_detector_pixels(&self) -> usize {
        self.s_hat.len()
    }

    pub fn xi_hat(&self) -> f64 {
        self.kept_indices
            .iter()
            .map(|&j| self.eigenvalues[j])
            .fold(f64::INFINITY, f64::min)
    }

    /// Full coefficient vector of a pixel, constant term included.
    pub fn coefficients(&self, pixel: usize) -> Vec<f64> {
        let mut s = self.s_hat[pixel].clone();
        s[0] = self.s0[pixel];
        s
    }

    pub fn predict(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.predict_with(b, true)
    }

    /// `include_offset = false` drops the fitted constant `s0`.
    pub fn predict_with(&self, b: &[f64], include_offset: bool) -> Result<Vec<f64>> {
        let c = self.basis.expand(b)?;
        Ok(self.predict_expanded(c.values(), include_offset))
    }

    fn predict_expanded(&self, c: &[f64], include_offset: bool) -> Vec<f64> {
        self.s_hat
            .iter()
            .zip(&self.s0)
            .map(|(s, &s0)| dot(c, s) + if include_offset { s0 } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacReport {
    /// Max over pixels and evaluated challenges of `|predict − clean|`.
    pub max_err: f64,
    pub per_pixel_max_err: Vec<f64>,
    /// `√n · ‖s − ŝ‖` per pixel, when the true secret is known.
    pub analytic_bound: Option<Vec<f64>>,
    pub challenges_evaluated: usize,
    pub epsilon: f64,
    pub pass: bool,
}

/// Empirical PAC check: `k` sampled challenges plus the all-zeros and all-ones corners.
pub fn pac_evaluate<P: OpticalPuf, R: Rng + ?Sized>(
    model: &LearnedModel,
    puf: &P,
    sampler: &ChallengeDistribution,
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<PacReport> {
    let n_mask = puf.num_mask_pixels();
    check_len(model.basis.num_vars(), n_mask)?;
    check_len(puf.num_detector_pixels(), model.num_detector_pixels())?;
    sampler.validate()?;

    let mut challenges: Vec<Vec<f64>> = Vec::with_capacity(k + 2);
    challenges.push(vec![0.0; n_mask]);
    challenges.push(vec![1.0; n_mask]);
    for _ in 0..k {
        challenges.push(sampler.sample(n_mask, rng));
    }

    let px = puf.num_detector_pixels();
    let errors = par::map_slice(&challenges, |b| {
        let c = model.basis.expand(b).expect("challenge length checked");
        let pred = model.predict_expanded(c.values(), true);
        let mut clean = vec![0.0; px];
        puf.intensities_into(b, &mut clean);
        pred.iter().zip(&clean).map(|(p, t)| (p - t).abs()).collect::<Vec<f64>>()
    });
    let mut per_pixel = vec![0.0_f64; px];
    for e in &errors {
        for (m, v) in per_pixel.iter_mut().zip(e) {
            *m = m.max(*v);
        }
    }
    let max_err = per_pixel.iter().copied().fold(0.0, f64::max);

    let analytic_bound = (0..px)
        .map(|i| {
            puf.true_secret(i, &model.basis).map(|s| {
                let diff: Vec<f64> = s
                    .iter()
                    .zip(model.coefficients(i))
                    .map(|(a, b)| a - b)
                    .collect();
                (model.basis.len() as f64).sqrt() * linalg::norm(&diff)
            })
        })
        .collect::<Option<Vec<f64>>>();

    Ok(PacReport {
        max_err,
        per_pixel_max_err: per_pixel,
        analytic_bound,
        challenges_evaluated: challenges.len(),
        epsilon,
        pass: max_err <= epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pufsim::{new_linear_puf, new_nonlinear_puf, secret_of, LinearPuf};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn setup(n: usize, m_px: usize, seed: u64) -> (LinearPuf, MonomialBasis) {
        (new_linear_puf(n, m_px, seed).unwrap(), MonomialBasis::new(n, 2).unwrap())
    }

    #[test]
    fn second_moment_examples() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let b = [0.3, 0.8];
        let single = estimate_second_moment(&Matrix::from_rows(&[b]).unwrap(), &basis).unwrap();
        assert_eq!(single, linalg::outer(basis.expand(&b).unwrap().values()));

        let zeros = estimate_second_moment(&Matrix::zeros(5, 2), &basis).unwrap();
        let mut expected = Matrix::zeros(6, 6);
        expected[(0, 0)] = 1.0;
        assert_eq!(zeros.as_matrix(), &expected);
        assert!(estimate_second_moment(&Matrix::zeros(0, 2), &basis).is_err());
    }

    #[test]
    fn second_moment_converges_to_uniform_moments() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let mut r = rng(3);
        let m = 1_000_000;
        let mut ch = Matrix::zeros(m, 2);
        for i in 0..m {
            ChallengeDistribution::Uniform.sample_into(&mut r, ch.row_mut(i));
        }
        let est = estimate_second_moment(&ch, &basis).unwrap();
        let e = est.as_matrix();
        // (entry, value, E[X²] of the summand for the standard error)
        let checks = [
            ((0, 1), 0.5, 1.0 / 3.0),       // E[b1]
            ((1, 1), 1.0 / 3.0, 1.0 / 5.0), // E[b1²]
            ((1, 3), 0.25, 1.0 / 7.0),      // E[b1³]
            ((3, 5), 1.0 / 9.0, 1.0 / 25.0), // E[b1²b2²]
        ];
        for ((i, j), mean, second) in checks {
            let se = ((second - mean * mean) / m as f64).sqrt();
            assert!((e[(i, j)] - mean).abs() <= 3.0 * se, "({i},{j}) = {}", e[(i, j)]);
        }
    }

    #[test]
    fn whiten_identity_and_degenerate() {
        let w = whiten(&SymMatrix::identity(4), DROP_SCALE).unwrap();
        assert_eq!(w.kept(), &[0, 1, 2, 3]);
        assert_eq!(w.xi_hat(), 1.0);
        assert_eq!(
            whiten(&SymMatrix::from_diag(&[0.0, 0.0]), DROP_SCALE).unwrap_err(),
            Error::DegenerateDistribution
        );
    }

    #[test]
    fn dead_mask_pixel_drops_its_monomials() {
        // Pixel 2 is always dark: every monomial containing b_2 is identically 0.
        let basis = MonomialBasis::new(3, 2).unwrap();
        let mut r = rng(8);
        let m = 5000;
        let mut ch = Matrix::zeros(m, 3);
        for i in 0..m {
            ch[(i, 0)] = r.random();
            ch[(i, 1)] = r.random();
        }
        let w = whiten(&estimate_second_moment(&ch, &basis).unwrap(), DROP_SCALE).unwrap();
        let with_dead = basis
            .monomial_indices()
            .iter()
            .filter(|e| e[2] > 0)
            .count();
        assert_eq!(w.dropped(), with_dead);
        // Retained directions carry no weight on the dead monomials.
        let pk = w.kept_basis();
        for (i, e) in basis.monomial_indices().iter().enumerate() {
            if e[2] > 0 {
                assert!(pk.row(i).iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn binary_challenges_drop_square_terms() {
        let basis = MonomialBasis::new(4, 2).unwrap();
        let w = pilot_whitening(&basis, &ChallengeDistribution::Binary, &mut rng(2)).unwrap();
        assert_eq!(w.dropped(), 4);
        assert_eq!(w.kept().len(), 11);
        let exact = whiten(&ChallengeDistribution::Binary.second_moment(&basis), DROP_SCALE).unwrap();
        assert_eq!(exact.dropped(), 4);
    }

    #[test]
    fn noiseless_fit_recovers_secret() {
        let (puf, basis) = setup(4, 3, 5);
        let mut r = rng(1);
        let w = pilot_whitening(&basis, &ChallengeDistribution::Uniform, &mut r).unwrap();
        let crps = CrpSet::generate(&puf, &ChallengeDistribution::Uniform, &NoiseModel::None, basis.len(), &mut r)
            .unwrap();
        let model = fit(&crps, &basis, &w).unwrap();
        for i in 0..3 {
            let truth = secret_of(&puf, i, &basis).unwrap();
            for (a, b) in truth.iter().zip(model.coefficients(i)) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_responses_give_zero_model() {
        let basis = MonomialBasis::new(3, 2).unwrap();
        let mut r = rng(4);
        let w = pilot_whitening(&basis, &ChallengeDistribution::Uniform, &mut r).unwrap();
        let mut ch = Matrix::zeros(40, 3);
        for i in 0..40 {
            ChallengeDistribution::Uniform.sample_into(&mut r, ch.row_mut(i));
        }
        let crps = CrpSet::new(ch, Matrix::zeros(40, 2), NoiseModel::None).unwrap();
        let model = fit(&crps, &basis, &w).unwrap();
        assert!(model.s_hat.iter().flatten().all(|&v| v == 0.0));
        assert!(model.s0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_few_challenges_is_singular_with_suggestion() {
        let (puf, basis) = setup(4, 1, 5);
        let mut r = rng(1);
        let w = pilot_whitening(&basis, &ChallengeDistribution::Uniform, &mut r).unwrap();
        let crps = CrpSet::generate(&puf, &ChallengeDistribution::Uniform, &NoiseModel::None, 5, &mut r).unwrap();
        match fit(&crps, &basis, &w) {
            Err(Error::Singular { suggested_m, lambda_min }) => {
                assert!(suggested_m > 15.0);
                assert!(lambda_min.abs() < 1e-6);
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn crp_validation() {
        assert!(CrpSet::new(Matrix::zeros(0, 2), Matrix::zeros(0, 1), NoiseModel::None).is_err());
        let bad = Matrix::from_rows(&[[1.5, 0.0]]).unwrap();
        assert!(CrpSet::new(bad, Matrix::zeros(1, 1), NoiseModel::None).is_err());
        assert!(CrpSet::new(Matrix::zeros(2, 2), Matrix::zeros(3, 1), NoiseModel::None).is_err());
    }

    #[test]
    fn predict_examples() {
        let (puf, basis) = setup(5, 3, 2);
        let secrets = (0..3).map(|i| secret_of(&puf, i, &basis).unwrap()).collect();
        let model = LearnedModel::from_secrets(basis.clone(), secrets).unwrap();
        let b = ChallengeDistribution::Uniform.sample(5, &mut rng(0));
        let p = model.predict(&b).unwrap();
        for (x, y) in p.iter().zip(puf.respond_clean(&b).unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }

        let mut with_offset = model.clone();
        with_offset.s0 = vec![0.5, -1.0, 2.0];
        assert_eq!(with_offset.predict(&[0.0; 5]).unwrap(), vec![0.5, -1.0, 2.0]);
        assert_eq!(with_offset.predict_with(&[0.0; 5], false).unwrap(), vec![0.0; 3]);
        assert!(model.predict(&[0.0; 4]).is_err());
    }

    #[test]
    fn predict_matches_direct_polynomial_evaluation() {
        let (puf, basis) = setup(3, 2, 9);
        let mut r = rng(3);
        let w = pilot_whitening(&basis, &ChallengeDistribution::Uniform, &mut r).unwrap();
        let crps = CrpSet::generate(&puf, &ChallengeDistribution::Uniform, &NoiseModel::BoundedUniform { a: 0.1 }, 200, &mut r)
            .unwrap();
        let model = fit(&crps, &basis, &w).unwrap();
        for _ in 0..50 {
            let b = ChallengeDistribution::Uniform.sample(3, &mut r);
            let pred = model.predict(&b).unwrap();
            for (px, p) in pred.iter().enumerate() {
                // Independent evaluator: Σ coeff · Π b_j^e_j with explicit loops.
                let coeffs = model.coefficients(px);
                let mut direct = 0.0;
                for (e, coef) in basis.monomial_indices().iter().zip(&coeffs) {
                    let mut term = *coef;
                    for (j, &p) in e.iter().enumerate() {
                        for _ in 0..p {
                            term *= b[j];
                        }
                    }
                    direct += term;
                }
                assert!((p - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pac_ground_truth_and_perturbation() {
        let (puf, basis) = setup(3, 2, 4);
        let secrets: Vec<Vec<f64>> = (0..2).map(|i| secret_of(&puf, i, &basis).unwrap()).collect();
        let model = LearnedModel::from_secrets(basis.clone(), secrets.clone()).unwrap();
        let report = pac_evaluate(&model, &puf, &ChallengeDistribution::Uniform, 500, 1e-9, &mut rng(1)).unwrap();
        assert!(report.max_err < 1e-14);
        assert!(report.pass);
        assert!(report.analytic_bound.as_ref().unwrap().iter().all(|&v| v < 1e-14));

        let eps = 0.01;
        let cross = basis.index_map()[[1u32, 1, 0].as_slice()];
        let mut perturbed = model.clone();
        perturbed.s_hat[0][cross] += eps;
        let report = pac_evaluate(&perturbed, &puf, &ChallengeDistribution::Uniform, 0, eps / 2.0, &mut rng(1)).unwrap();
        assert!(report.max_err >= eps * (1.0 - 1e-9));
        assert!(!report.pass);
        assert_eq!(report.challenges_evaluated, 2);
    }

    #[test]
    fn nonlinear_model_has_no_certificate() {
        let base = new_linear_puf(2, 1, 3).unwrap();
        let nl = new_nonlinear_puf(base, vec![0.05], 4).unwrap();
        let basis = MonomialBasis::new(2, 6).unwrap();
        let model = LearnedModel::from_secrets(basis.clone(), vec![vec![0.0; basis.len()]]).unwrap();
        let report = pac_evaluate(&model, &nl, &ChallengeDistribution::Uniform, 10, 1.0, &mut rng(0)).unwrap();
        assert!(report.analytic_bound.is_none());
    }

    #[test]
    fn rotation_preserves_inner_products() {
        let basis = MonomialBasis::new(3, 2).unwrap();
        let mut r = rng(10);
        let w = pilot_whitening(&basis, &ChallengeDistribution::Uniform, &mut r).unwrap();
        let p = w.rotation();
        for _ in 0..20 {
            let c: Vec<f64> = (0..basis.len()).map(|_| r.random_range(-1.0..1.0)).collect();
            let s: Vec<f64> = (0..basis.len()).map(|_| r.random_range(-1.0..1.0)).collect();
            let cp = p.tr_mul_vec(&c).unwrap();
            let pts = p.tr_mul_vec(&s).unwrap();
            assert!((dot(&c, &s) - dot(&cp, &pts)).abs() < 1e-10);
        }
    }

    #[test]
    fn model_json_layout() {
        let t = vec![Complex64::new(0.5, 0.1), Complex64::new(-0.2, 0.3)];
        let puf = LinearPuf::from_transmission(2, 1, t).unwrap();
        let basis = MonomialBasis::new(2, 2).unwrap();
        let model = LearnedModel::from_secrets(basis.clone(), vec![secret_of(&puf, 0, &basis).unwrap()]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&model).unwrap();
        for key in ["basis", "kept_indices", "eigenvalues", "s_hat", "s0"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["basis"][1], serde_json::json!([1, 0]));
        let back: LearnedModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, model);
    }
}
