//! Binomial sums, majority tails, and exact checks of the binomial
//! expectation inequalities.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// `C(n, k)` as an exact big integer.
pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `C(n, <=k) = sum_{i <= min(k, n)} C(n, i)`.
pub fn binom_leq(n: u64, k: u64) -> BigUint {
    let top = k.min(n);
    let mut term = BigUint::one();
    let mut sum = BigUint::one();
    for i in 0..top {
        term = term * BigUint::from(n - i) / BigUint::from(i + 1);
        sum += &term;
    }
    sum
}

/// [`binom_leq`] narrowed to `u128`.
pub fn binom_leq_u128(n: u64, k: u64) -> Result<u128> {
    binom_leq(n, k)
        .to_u128()
        .ok_or_else(|| Error::Infeasible(format!("C({n},<={k}) exceeds 128 bits")))
}

/// `P[Bin(t, p) >= ceil(t/2)]` exactly.
pub fn majority_tail(t: usize, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let mut sum = BigRational::zero();
    for i in t.div_ceil(2)..=t {
        let c = BigRational::from_integer(binom(t as u64, i as u64).into());
        sum += c * pow(p, i) * pow(&q, t - i);
    }
    sum
}

/// `P[Bin(t, p) >= ceil(t/2)]` in double precision.
pub fn majority_tail_f64(t: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    let mut sum = 0.0;
    for i in t.div_ceil(2)..=t {
        let c = binom(t as u64, i as u64).to_f64().unwrap_or(f64::INFINITY);
        sum += c * p.powi(i as i32) * q.powi((t - i) as i32);
    }
    sum.min(1.0)
}

/// Smallest odd `t` with `majority_tail(t, p) <= target`, computed exactly.
pub fn odd_repetitions(p: &BigRational, target: &BigRational) -> Result<usize> {
    let half = BigRational::new(1.into(), 2.into());
    if *target >= BigRational::one() || *p <= *target {
        return Ok(1);
    }
    if *p >= half || *target <= BigRational::zero() {
        return Err(Error::Infeasible(format!(
            "majority cannot push error {p} below {target}"
        )));
    }
    let mut t = 1;
    loop {
        if majority_tail(t, p) <= *target {
            return Ok(t);
        }
        t += 2;
        if t > 1_000_001 {
            return Err(Error::Infeasible("repetition count too large".into()));
        }
    }
}

pub(crate) fn pow(x: &BigRational, e: usize) -> BigRational {
    num_traits::pow(x.clone(), e)
}

/// The shortest fraction within four ulps of a finite `f64`, so that
/// `1.0 / 3.0` becomes exactly `1/3`.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("{x} is not finite")));
    }
    let tol = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let ai = BigInt::from_f64(a).expect("finite");
        let h = &ai * &h1 + &h0;
        let k = &ai * &k1 + &k0;
        (h0, h1, k0, k1) = (h1, h.clone(), k1, k.clone());
        let approx = h.to_f64().unwrap_or(f64::NAN) / k.to_f64().unwrap_or(f64::NAN);
        if (approx - x).abs() <= tol {
            return Ok(BigRational::new(h, k));
        }
        let frac = y - a;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("{x} is not finite")))
}

/// The binomial pmf `P[Bin(n, p) = s]` for every `s`, in double precision.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|s| {
            let c = binom(n, s).to_f64().unwrap_or(f64::INFINITY);
            // 0^0 = 1 keeps the degenerate endpoints exact
            c * p.powi(s as i32) * (1.0 - p).powi((n - s) as i32)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BinomialExpectationsReport {
    pub n: u64,
    pub p: f64,
    pub checks: Vec<InequalityCheck>,
}

impl BinomialExpectationsReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

const SLACK: f64 = 1e-12;

/// `1/sqrt(x)` with the `0/0 = 0` convention extended to `1/sqrt(0) = 0`
/// only when the accompanying probability weight is zero.
fn inv_sqrt_weighted(weight: f64, x: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight / x.sqrt()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Evaluates the three expectations for `s ~ B(n-1, p)` (first two) and
/// `s ~ B(n, p)` (third) by exact summation over the pmf and compares them
/// against their bounds.
pub fn binomial_expectations_check(n: u64, p: f64) -> Result<BinomialExpectationsReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let q = 1.0 - p;
    let nf = n as f64;
    let short = binomial_pmf(n - 1, p);
    let full = binomial_pmf(n, p);

    let e1: f64 = short
        .iter()
        .enumerate()
        .map(|(s, &w)| inv_sqrt_weighted(w, nf - s as f64))
        .sum();
    let e2: f64 = short
        .iter()
        .enumerate()
        .map(|(s, &w)| inv_sqrt_weighted(w, s as f64 + 1.0))
        .sum();
    let e3: f64 = full
        .iter()
        .enumerate()
        .map(|(s, &w)| w * (s as f64 - p * nf).abs())
        .sum();

    let b1 = ratio(1.0, (q * nf).sqrt());
    let b2 = ratio(1.0, (p * nf).sqrt());
    let b3 = (p * q * nf).sqrt();
    let check = |name, lhs: f64, rhs: f64| InequalityCheck {
        name,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + SLACK) + SLACK,
    };
    Ok(BinomialExpectationsReport {
        n,
        p,
        checks: vec![
            check("inv_sqrt_failures", e1, b1),
            check("inv_sqrt_successes", e2, b2),
            check("mean_abs_deviation", e3, b3),
        ],
    })
}

/// Checks `(n/k)^k <= C(n,<=k) <= (e n/k)^k` for `1 <= k <= n` in exact
/// integer arithmetic. The upper side is tested against a rational just
/// below `e`, which is the stronger statement.
pub fn binom_sandwich_holds(n: u64, k: u64) -> bool {
    assert!(1 <= k && k <= n);
    let s = binom_leq(n, k);
    let kk = BigUint::from(k).pow(k as u32);
    let lower = BigUint::from(n).pow(k as u32) <= &kk * &s;
    let e_num = BigUint::from(2_718_281u64 * n).pow(k as u32);
    let e_den = BigUint::from(1_000_000u64 * k).pow(k as u32);
    let upper = &s * e_den <= e_num;
    lower && upper
}
