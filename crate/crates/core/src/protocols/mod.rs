//! The three randomized simultaneous protocols and their exact error oracles.

mod disj;
pub mod gf3;
mod gip;
mod mod3;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

use crate::distributions::sample_zero_positions;
use crate::error::{Error, Result};

pub use disj::{disj_protocol, DisjProtocol, DISJ_INNER_ERROR, DISJ_THRESHOLD};
pub use gip::{exact_gip_error, gip_protocol, GipBase, GipProtocol};
pub use mod3::{exact_mod3_error, mod3_protocol, Mod3Block, Mod3Protocol};

/// `ceil(log2(m))` for `m >= 1`.
pub fn ceil_log2(m: u128) -> usize {
    assert!(m >= 1);
    (128 - (m - 1).leading_zeros()) as usize
}

/// `2^k >= m`, without overflow.
pub(crate) fn pow2_at_least(k: usize, m: u128) -> bool {
    k >= 128 || (1u128 << k) >= m
}

/// Smallest `ell` with `C(k, <=ell) >= n / delta`.
pub fn active_budget(n: usize, k: usize, delta: &BigRational) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    if *delta <= BigRational::from_integer(0.into()) || *delta > BigRational::one() {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1]")));
    }
    let need = BigRational::from_integer(BigInt::from(n)) / delta;
    let mut term = BigUint::one();
    let mut sum = BigUint::one();
    for ell in 0..=k {
        if ell > 0 {
            term = term * BigUint::from(k - ell + 1) / BigUint::from(ell);
            sum += &term;
        }
        if BigRational::from_integer(BigInt::from(sum.clone())) >= need {
            return Ok(ell);
        }
    }
    Err(Error::Infeasible(format!(
        "2^{k} < {need}: no budget reaches n/delta for n = {n}, k = {k}"
    )))
}

/// [`active_budget`] at `delta = 1/3`.
pub fn active_budget_third(n: usize, k: usize) -> Result<usize> {
    active_budget(n, k, &BigRational::new(1.into(), 3.into()))
}

/// A row vector `y` with at most `ell` zeros, kept with its zero positions.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MaskVector {
    y: Vec<bool>,
    zeros: Vec<usize>,
}

impl MaskVector {
    pub fn from_zeros(k: usize, mut zeros: Vec<usize>) -> Result<Self> {
        zeros.sort_unstable();
        zeros.dedup();
        if let Some(&z) = zeros.iter().find(|&&z| z >= k) {
            return Err(Error::PlayerOutOfRange { player: z, k });
        }
        let mut y = vec![true; k];
        for &z in &zeros {
            y[z] = false;
        }
        Ok(Self { y, zeros })
    }

    pub fn from_bits(y: &[bool]) -> Self {
        let zeros = (0..y.len()).filter(|&i| !y[i]).collect();
        Self { y: y.to_vec(), zeros }
    }

    /// Uniform over vectors of length `k` with at most `ell` zeros.
    pub fn sample<R: Rng>(k: usize, ell: usize, rng: &mut R) -> Self {
        Self::from_zeros(k, sample_zero_positions(k, 0, ell, rng)).expect("positions in range")
    }

    /// Every vector of length `k` with at most `ell` zeros.
    pub fn enumerate(k: usize, ell: usize) -> impl Iterator<Item = MaskVector> {
        use itertools::Itertools;
        (0..=ell.min(k)).flat_map(move |j| {
            (0..k)
                .combinations(j)
                .map(move |z| MaskVector::from_zeros(k, z).expect("in range"))
        })
    }

    pub fn bits(&self) -> &[bool] {
        &self.y
    }

    pub fn zero_positions(&self) -> &[usize] {
        &self.zeros
    }

    pub fn matches_row(&self, row: &[u8]) -> bool {
        row.iter().zip(&self.y).all(|(&a, &b)| (a == 1) == b)
    }
}

fn check_epsilon(epsilon: f64) -> Result<BigRational> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    crate::combinatorics::rational_from_f64(epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_anchors() {
        assert_eq!(active_budget_third(8, 64).unwrap(), 1);
        assert_eq!(active_budget_third(8, 16).unwrap(), 2);
        assert_eq!(active_budget_third(256, 256).unwrap(), 2);
        assert!(matches!(active_budget_third(1, 1), Err(Error::Infeasible(_))));
    }

    #[test]
    fn budget_is_monotone() {
        for n in 1..40 {
            let mut prev = usize::MAX;
            for k in 8..30 {
                let l = active_budget_third(n, k).unwrap();
                assert!(l <= prev);
                prev = l;
                assert!(active_budget_third(n + 1, k).unwrap() >= l);
            }
        }
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(ceil_log2(8), 3);
    }

    #[test]
    fn mask_enumeration_counts() {
        assert_eq!(MaskVector::enumerate(16, 2).count(), 137);
        assert_eq!(MaskVector::enumerate(3, 5).count(), 8);
        let m = MaskVector::from_zeros(4, vec![2, 0]).unwrap();
        assert_eq!(m.zero_positions(), &[0, 2]);
        assert!(m.matches_row(&[0, 1, 0, 1]));
    }
}
