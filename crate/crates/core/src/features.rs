//! Monomial feature expansion of mask challenges.
//!
//! A challenge `b ∈ [0,1]^N` maps to the vector of every monomial of total
//! degree at most `D`, led by the constant term. Once the response is a
//! polynomial of degree `D` in `b`, it is linear in this feature vector.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// `binomial(n_vars + degree, degree)`: number of monomials of degree `≤ degree`.
pub fn feature_dim(n_vars: usize, degree: usize) -> Result<usize> {
    if n_vars == 0 || degree == 0 {
        return Err(Error::invalid("feature_dim needs N >= 1 and D >= 1"));
    }
    // binomial(n + d, d) = prod_{i=1..d} (n + i) / i, exact at every step.
    let mut acc: usize = 1;
    for i in 1..=degree {
        acc = acc
            .checked_mul(n_vars + i)
            .ok_or(Error::Overflow("feature dimension"))?
            / i;
    }
    Ok(acc)
}

/// Exponent multi-indices in graded lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct MonomialBasis {
    num_vars: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
    /// Nonzero `(variable, power)` pairs per monomial.
    factors: Vec<Vec<(usize, u32)>>,
}

impl MonomialBasis {
    pub fn new(num_vars: usize, degree: usize) -> Result<Self> {
        let len = feature_dim(num_vars, degree)?;
        let mut exponents = Vec::with_capacity(len);
        let mut current = vec![0u32; num_vars];
        for d in 0..=degree {
            push_degree(&mut exponents, &mut current, 0, d as u32);
        }
        debug_assert_eq!(exponents.len(), len);
        Ok(Self::from_exponents(num_vars, degree, exponents))
    }

    fn from_exponents(num_vars: usize, degree: usize, exponents: Vec<Vec<u32>>) -> Self {
        let factors = exponents
            .iter()
            .map(|e| {
                e.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(j, &p)| (j, p))
                    .collect()
            })
            .collect();
        MonomialBasis {
            num_vars,
            degree,
            exponents,
            factors,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn monomial_indices(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn total_degree(&self, i: usize) -> u32 {
        self.exponents[i].iter().sum()
    }

    /// Position of a multi-index within the basis.
    pub fn index_map(&self) -> HashMap<&[u32], usize> {
        self.exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect()
    }

    pub fn expand(&self, b: &[f64]) -> Result<FeatureVector> {
        let mut out = vec![0.0; self.len()];
        self.expand_into(b, &mut out)?;
        Ok(FeatureVector(out))
    }

    /// Allocation-free expansion for hot loops; `out.len()` must equal `self.len()`.
    pub fn expand_into(&self, b: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.num_vars, b.len())?;
        check_len(self.len(), out.len())?;
        for (o, f) in out.iter_mut().zip(&self.factors) {
            let mut v = 1.0;
            for &(j, p) in f {
                v *= b[j].powi(p as i32);
            }
            *o = v;
        }
        Ok(())
    }
}

/// Append all exponent vectors of exactly `remaining` total degree over
/// variables `var..`, in descending lexicographic order.
fn push_degree(out: &mut Vec<Vec<u32>>, current: &mut [u32], var: usize, remaining: u32) {
    if var + 1 == current.len() {
        current[var] = remaining;
        out.push(current.to_vec());
        current[var] = 0;
        return;
    }
    for p in (0..=remaining).rev() {
        current[var] = p;
        push_degree(out, current, var + 1, remaining - p);
    }
    current[var] = 0;
}

impl TryFrom<Vec<Vec<u32>>> for MonomialBasis {
    type Error = Error;

    fn try_from(exponents: Vec<Vec<u32>>) -> Result<Self> {
        let num_vars = exponents.first().map_or(0, Vec::len);
        let degree = exponents
            .iter()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0);
        let canonical = MonomialBasis::new(num_vars, degree)?;
        if canonical.exponents != exponents {
            return Err(Error::invalid(
                "monomial basis is not in canonical graded-lex order",
            ));
        }
        Ok(canonical)
    }
}

impl From<MonomialBasis> for Vec<Vec<u32>> {
    fn from(b: MonomialBasis) -> Self {
        b.exponents
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, s: &[f64]) -> f64 {
        crate::linalg::dot(&self.0, s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dot(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn enumerate_by_brute_force(n: usize, d: usize) -> usize {
        // Count all vectors in {0..=d}^n with sum <= d.
        let mut count = 0;
        let mut idx = vec![0usize; n];
        loop {
            if idx.iter().sum::<usize>() <= d {
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return count;
                }
                idx[k] += 1;
                if idx[k] <= d {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn dims() {
        assert_eq!(feature_dim(2, 2).unwrap(), 6);
        assert_eq!(feature_dim(8, 2).unwrap(), 45);
        assert_eq!(feature_dim(4, 6).unwrap(), 210);
        assert_eq!(enumerate_by_brute_force(4, 6), 210);
        assert_eq!(feature_dim(3, 6).unwrap(), 84);
        assert!(feature_dim(0, 2).is_err());
        assert!(feature_dim(2, 0).is_err());
        assert_eq!(
            feature_dim(usize::MAX / 2, 3).unwrap_err(),
            Error::Overflow("feature dimension")
        );
    }

    #[test]
    fn canonical_order() {
        let b = MonomialBasis::new(1, 2).unwrap();
        assert_eq!(b.monomial_indices(), &[vec![0], vec![1], vec![2]]);
        let b = MonomialBasis::new(2, 1).unwrap();
        assert_eq!(b.monomial_indices(), &[vec![0, 0], vec![1, 0], vec![0, 1]]);
        let b = MonomialBasis::new(3, 2).unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!(b.monomial_indices()[0], vec![0, 0, 0]);
        assert_eq!(b.monomial_indices()[9], vec![0, 0, 2]);
        let degrees: Vec<u32> = (0..b.len()).map(|i| b.total_degree(i)).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lengths_match_feature_dim() {
        for n in 1..6 {
            for d in 1..5 {
                assert_eq!(
                    MonomialBasis::new(n, d).unwrap().len(),
                    enumerate_by_brute_force(n, d)
                );
            }
        }
    }

    #[test]
    fn expand_examples() {
        let b = MonomialBasis::new(3, 3).unwrap();
        let c = b.expand(&[0.0; 3]).unwrap();
        assert_eq!(c.values()[0], 1.0);
        assert!(c.values()[1..].iter().all(|&v| v == 0.0));

        let b = MonomialBasis::new(2, 2).unwrap();
        assert_eq!(b.expand(&[1.0, 1.0]).unwrap().values(), &[1.0; 6]);
        assert_eq!(
            b.expand(&[0.5, 0.25]).unwrap().values(),
            &[1.0, 0.5, 0.25, 0.25, 0.125, 0.0625]
        );
        assert_eq!(
            b.expand(&[0.5]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn multiplicativity() {
        let basis = MonomialBasis::new(3, 4).unwrap();
        let index = basis.index_map();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        let c = basis.expand(&b).unwrap();
        let exps = basis.monomial_indices();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let sum: Vec<u32> = exps[i].iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
                if let Some(&k) = index.get(sum.as_slice()) {
                    let prod = c.values()[i] * c.values()[j];
                    assert!((prod - c.values()[k]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn norm_bounded_by_dimension() {
        let basis = MonomialBasis::new(4, 3).unwrap();
        let n = basis.len() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let b: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let c = basis.expand(&b).unwrap();
            assert!(c.norm_sqr() <= n);
            assert!(c.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(basis.expand(&[1.0; 4]).unwrap().norm_sqr(), n);
    }

    #[test]
    fn serialization_round_trip() {
        let basis = MonomialBasis::new(3, 2).unwrap();
        let json = serde_json::to_string(&basis).unwrap();
        assert!(json.starts_with("[[0,0,0],[1,0,0],[0,1,0]"));
        let back: MonomialBasis = serde_json::from_str(&json).unwrap();
        assert_eq!(back, basis);

        let shuffled = "[[0,0],[0,1],[1,0]]";
        assert!(serde_json::from_str::<MonomialBasis>(shuffled).is_err());
    }
}
