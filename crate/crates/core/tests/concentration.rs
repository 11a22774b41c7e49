use optpuf::bounds::{
    binomial_margin, chernoff_validate, least_squares_tau, linear_combination_tau, m_bound_eig, matrix_transform_tau,
    subgaussian_tail, subgaussian_vector_tail, ExpandedChallenges,
};
use optpuf::learner::DROP_SCALE;
use optpuf::linalg::{self, spd_solve, Matrix};
use optpuf::pufsim::sample_noise;
use optpuf::{whiten, ChallengeDistribution, MonomialBasis, NoiseModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 100_000;

fn frequency(hits: usize) -> f64 {
    hits as f64 / DRAWS as f64
}

#[test]
fn chernoff_rate_at_eta_two() {
    let source = ExpandedChallenges {
        basis: MonomialBasis::new(2, 2).unwrap(),
        dist: ChallengeDistribution::Uniform,
    };
    let xi = whiten(&source.dist.second_moment(&source.basis), DROP_SCALE)
        .unwrap()
        .xi_hat();
    let m = m_bound_eig(6, xi, 2.0).ceil() as usize;
    let report = chernoff_validate(&source, m, 200, 11).unwrap();
    assert!((report.bound - (-2.0f64).exp()).abs() < 1e-3, "bound {}", report.bound);
    assert!(report.within_margin, "{report:?}");
}

#[test]
fn chernoff_small_m_fails_often() {
    let source = ExpandedChallenges {
        basis: MonomialBasis::new(2, 2).unwrap(),
        dist: ChallengeDistribution::Uniform,
    };
    let report = chernoff_validate(&source, 12, 200, 3).unwrap();
    assert!(report.empirical_fail_rate > 0.5);
    assert_eq!(report.bound, 1.0);
}

#[test]
fn bounded_noise_moments_and_tail() {
    let a = 0.05;
    let model = NoiseModel::BoundedUniform { a };
    let tau = model.tau();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..DRAWS).map(|_| sample_noise(&model, &mut rng).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / DRAWS as f64;
    let second = xs.iter().map(|x| x * x).sum::<f64>() / DRAWS as f64;
    assert!(mean.abs() < 3.0 * (a * a / 3.0 / DRAWS as f64).sqrt());
    assert!(second <= tau * tau);
    for t in [0.01, 0.02, 0.03, 0.04] {
        let bound = subgaussian_tail(tau, t).unwrap();
        let hits = xs.iter().filter(|&&x| x > t).count();
        assert!(frequency(hits) <= bound + binomial_margin(bound, DRAWS), "t = {t}");
    }
}

#[test]
fn linear_combination_tail() {
    let models = [
        NoiseModel::BoundedUniform { a: 0.3 },
        NoiseModel::TruncatedGaussian { sigma: 0.5, alpha: 1.0 },
        NoiseModel::BoundedUniform { a: 1.0 },
    ];
    let mus = [2.0, -0.5, 0.25];
    let taus: Vec<f64> = models.iter().map(NoiseModel::tau).collect();
    let tau = linear_combination_tau(&taus, &mus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ys: Vec<f64> = (0..DRAWS)
        .map(|_| {
            models
                .iter()
                .zip(&mus)
                .map(|(m, mu)| mu * sample_noise(m, &mut rng).unwrap())
                .sum()
        })
        .collect();
    for t in [0.25, 0.5, 0.75, 1.0] {
        let bound = subgaussian_tail(tau, t).unwrap();
        let hits = ys.iter().filter(|&&y| y > t).count();
        assert!(frequency(hits) <= bound + binomial_margin(bound, DRAWS), "t = {t}");
    }
}

#[test]
fn vector_tail() {
    let n = 6;
    let tau = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let norms: Vec<f64> = (0..DRAWS)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-tau..tau)).collect();
            linalg::norm(&v)
        })
        .collect();
    for t in [1.0, 1.5, 2.0, 2.4] {
        let bound = subgaussian_vector_tail(tau, n, t).unwrap();
        let hits = norms.iter().filter(|&&x| x >= t).count();
        assert!(frequency(hits) <= bound + binomial_margin(bound, DRAWS), "t = {t}");
    }
}

#[test]
fn least_squares_transform_parameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
    let c = Matrix::from_rows(&rows).unwrap();
    // A = (CᵀC)⁻¹Cᵀ, formed explicitly.
    let a = spd_solve(&c.gram(), &c.transpose()).unwrap();
    let tau = 0.1;
    let direct = matrix_transform_tau(tau, &a).unwrap();
    let shortcut = least_squares_tau(tau, &c).unwrap();
    assert!((direct - shortcut).abs() < 1e-8 * shortcut, "{direct} vs {shortcut}");

    // Each coordinate of A·e is τ'-subgaussian.
    let hits = (0..DRAWS)
        .filter(|_| {
            let e: Vec<f64> = (0..30).map(|_| rng.random_range(-tau..tau)).collect();
            a.mul_vec(&e).unwrap()[0] > 0.5 * shortcut
        })
        .count();
    let bound = subgaussian_tail(shortcut, 0.5 * shortcut).unwrap();
    assert!(frequency(hits) <= bound + binomial_margin(bound, DRAWS));
}
