//! Input distributions with exact probability mass functions and samplers.
//!
//! Every pmf has a closed form, so it is evaluated in exact rational
//! arithmetic at any size; [`DistributionSpec::pmf_f64`] is a convenience
//! conversion.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;

use crate::combinatorics::{binom, binom_leq};
use crate::error::{Error, Result};
use crate::functions::eval_mod3xor;
use crate::matrix::InputMatrix;
use crate::tape::RandomTape;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistName {
    Upsilon,
    Mu,
    Sigma0,
    Sigma1,
    Sigma,
    Sigma0Ell,
    Sigma1Ell,
    SigmaEll,
    Nu,
    Uniform,
}

impl DistName {
    pub const ALL: [DistName; 10] = [
        DistName::Upsilon,
        DistName::Mu,
        DistName::Sigma0,
        DistName::Sigma1,
        DistName::Sigma,
        DistName::Sigma0Ell,
        DistName::Sigma1Ell,
        DistName::SigmaEll,
        DistName::Nu,
        DistName::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DistName::Upsilon => "upsilon",
            DistName::Mu => "mu",
            DistName::Sigma0 => "sigma0",
            DistName::Sigma1 => "sigma1",
            DistName::Sigma => "sigma",
            DistName::Sigma0Ell => "sigma0_ell",
            DistName::Sigma1Ell => "sigma1_ell",
            DistName::SigmaEll => "sigma_ell",
            DistName::Nu => "nu",
            DistName::Uniform => "uniform",
        }
    }

    fn needs_ell(self) -> bool {
        matches!(
            self,
            DistName::Upsilon | DistName::Sigma0Ell | DistName::Sigma1Ell | DistName::SigmaEll
        )
    }
}

impl fmt::Display for DistName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DistName::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown distribution {s:?}")))
    }
}

/// Which of the sigma components a sample or pmf refers to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sigma {
    Zero,
    One,
    Mix,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DistributionSpec {
    name: DistName,
    n: usize,
    k: usize,
    /// Row budget; equals `k` for the unparameterized sigma family.
    ell: usize,
    /// `(|F^-1(1)|, |F^-1(0)|)` for `nu`.
    nu: Option<(BigUint, BigUint)>,
}

fn rat(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn inv_pow(base: &BigUint, e: usize) -> BigRational {
    rat(BigUint::one(), base.pow(e as u32))
}

/// Counts of inputs on which the mod-3 row-parity function is 1 and 0.
pub fn nu_counts(n: usize, k: usize) -> Result<(BigUint, BigUint)> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    let mut good = BigUint::zero();
    for j in (0..=n).step_by(3) {
        good += binom(n as u64, j as u64);
    }
    let ones = good << ((k - 1) * n);
    let total = BigUint::one() << (n * k);
    let zeros = &total - &ones;
    Ok((ones, zeros))
}

/// Makes a distribution; `ell` is required for `upsilon` and the `*_ell`
/// variants and rejected elsewhere.
pub fn make_dist(name: DistName, n: usize, k: usize, ell: Option<usize>) -> Result<DistributionSpec> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    let ell = match (name.needs_ell(), ell) {
        (true, Some(l)) => l,
        (true, None) => {
            return Err(Error::InvalidDistribution(format!("{name} needs ell")));
        }
        (false, None) => k,
        (false, Some(_)) => {
            return Err(Error::InvalidDistribution(format!("{name} takes no ell")));
        }
    };
    if ell > k {
        return Err(Error::InvalidDistribution(format!("ell = {ell} exceeds k = {k}")));
    }
    if matches!(name, DistName::Sigma0Ell | DistName::Sigma1Ell | DistName::SigmaEll) && ell == 0 {
        return Err(Error::InvalidDistribution(format!(
            "{name} needs ell >= 1 so that some row is not all ones"
        )));
    }
    if name == DistName::Mu && k == 1 && n > 1 {
        return Err(Error::InvalidDistribution(
            "mu with k = 1 has empty support for n > 1".into(),
        ));
    }
    let nu = (name == DistName::Nu).then(|| nu_counts(n, k)).transpose()?;
    Ok(DistributionSpec { name, n, k, ell, nu })
}

impl DistributionSpec {
    pub fn name(&self) -> DistName {
        self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> Option<usize> {
        self.name.needs_ell().then_some(self.ell)
    }

    /// `(|F^-1(1)|, |F^-1(0)|)` when this is `nu`.
    pub fn nu_normalization(&self) -> Option<&(BigUint, BigUint)> {
        self.nu.as_ref()
    }

    fn sigma_part(&self) -> Option<Sigma> {
        match self.name {
            DistName::Sigma0 | DistName::Sigma0Ell => Some(Sigma::Zero),
            DistName::Sigma1 | DistName::Sigma1Ell => Some(Sigma::One),
            DistName::Sigma | DistName::SigmaEll => Some(Sigma::Mix),
            _ => None,
        }
    }

    /// Number of rows with weight in `[k - ell, k - 1]`.
    fn light_rows(&self) -> BigUint {
        binom_leq(self.k as u64, self.ell as u64) - BigUint::one()
    }

    fn is_light(&self, w: usize) -> bool {
        w + self.ell >= self.k && w < self.k
    }

    fn sigma_pmf(&self, part: Sigma, x: &InputMatrix) -> BigRational {
        let weights: Vec<usize> = (0..self.n).map(|r| x.row_weight(r)).collect();
        let full = weights.iter().filter(|&&w| w == self.k).count();
        let light = weights.iter().filter(|&&w| self.is_light(w)).count();
        let a = self.light_rows();
        let p0 = if light == self.n { inv_pow(&a, self.n) } else { BigRational::zero() };
        let p1 = if full == 1 && light == self.n - 1 {
            inv_pow(&a, self.n - 1) / BigRational::from_integer(BigInt::from(self.n))
        } else {
            BigRational::zero()
        };
        match part {
            Sigma::Zero => p0,
            Sigma::One => p1,
            Sigma::Mix => (p0 + p1) / BigRational::from_integer(2.into()),
        }
    }

    pub fn pmf(&self, x: &InputMatrix) -> Result<BigRational> {
        x.check_dims(self.n, self.k)?;
        let (n, k) = (self.n, self.k);
        if let Some(part) = self.sigma_part() {
            return Ok(self.sigma_pmf(part, x));
        }
        Ok(match self.name {
            DistName::Upsilon => {
                if (0..n).all(|r| x.row_weight(r) + self.ell >= k) {
                    inv_pow(&binom_leq(k as u64, self.ell as u64), n)
                } else {
                    BigRational::zero()
                }
            }
            DistName::Mu => {
                let marked = x.rows().filter(|r| r[..k - 1].iter().all(|&b| b == 1)).count();
                if marked == 1 {
                    rat(BigUint::one(), self.mu_support())
                } else {
                    BigRational::zero()
                }
            }
            DistName::Nu => {
                let (ones, zeros) = self.nu.as_ref().expect("nu counts");
                let total: BigUint = ones * 2u32 + zeros;
                let w = if eval_mod3xor(x) { 2u32 } else { 1 };
                rat(BigUint::from(w), total)
            }
            DistName::Uniform => rat(BigUint::one(), BigUint::one() << (n * k)),
            _ => unreachable!("sigma handled above"),
        })
    }

    pub fn pmf_f64(&self, x: &InputMatrix) -> Result<f64> {
        Ok(self.pmf(x)?.to_f64().unwrap_or(0.0))
    }

    /// Size of the support of `mu`.
    fn mu_support(&self) -> BigUint {
        let (n, k) = (self.n, self.k);
        let other = (BigUint::one() << (k - 1)) - BigUint::one();
        BigUint::from(n) * 2u32 * (other * 2u32).pow((n - 1) as u32)
    }

    /// The pmf at every matrix, in row-major numeric order.
    pub fn pmf_table(&self, cap_cells: usize) -> Result<Vec<BigRational>> {
        let cells = self.n * self.k;
        if cells > cap_cells || cells >= 64 {
            return Err(Error::CapExceeded {
                needed: 1u128 << cells.min(127),
                cap: 1u128 << cap_cells.min(127),
            });
        }
        InputMatrix::enumerate(self.n, self.k).map(|x| self.pmf(&x)).collect()
    }

    pub fn sample(&self, tape: &RandomTape) -> InputMatrix {
        let mut rng = tape.stream("dist", 0);
        let (n, k) = (self.n, self.k);
        let mut x = InputMatrix::zeros(n, k).expect("n, k >= 1");
        let fill = |x: &mut InputMatrix, r: usize, row: &[bool]| {
            for (c, &b) in row.iter().enumerate() {
                x.set(r, c, b);
            }
        };
        if let Some(part) = self.sigma_part() {
            let one = match part {
                Sigma::Zero => false,
                Sigma::One => true,
                Sigma::Mix => rng.gen_bool(0.5),
            };
            let special = one.then(|| rng.gen_range(0..n));
            for r in 0..n {
                let row = if Some(r) == special {
                    vec![true; k]
                } else {
                    sample_row_by_zeros(k, 1, self.ell, &mut rng)
                };
                fill(&mut x, r, &row);
            }
            return x;
        }
        match self.name {
            DistName::Upsilon => {
                for r in 0..n {
                    let row = sample_row_by_zeros(k, 0, self.ell, &mut rng);
                    fill(&mut x, r, &row);
                }
            }
            DistName::Mu => {
                let special = rng.gen_range(0..n);
                for r in 0..n {
                    let mut row: Vec<bool> = vec![true; k];
                    if r != special {
                        loop {
                            for b in row[..k - 1].iter_mut() {
                                *b = rng.gen_bool(0.5);
                            }
                            if !row[..k - 1].iter().all(|&b| b) {
                                break;
                            }
                        }
                    }
                    row[k - 1] = rng.gen_bool(0.5);
                    fill(&mut x, r, &row);
                }
            }
            DistName::Nu => {
                let (ones, zeros) = self.nu.as_ref().expect("nu counts");
                let want_one = bernoulli_ratio(&(ones * 2u32), &(ones * 2u32 + zeros), &mut rng);
                loop {
                    fill_uniform(&mut x, &mut rng);
                    if eval_mod3xor(&x) == want_one {
                        break;
                    }
                }
            }
            DistName::Uniform => fill_uniform(&mut x, &mut rng),
            _ => unreachable!("sigma handled above"),
        }
        x
    }

    /// Canonical CLI form, e.g. `upsilon:n=4,k=6,ell=2`.
    pub fn label(&self) -> String {
        match self.ell() {
            Some(l) => format!("{}:n={},k={},ell={}", self.name, self.n, self.k, l),
            None => format!("{}:n={},k={}", self.name, self.n, self.k),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let name: DistName = name.trim().parse()?;
        let (mut n, mut k, mut ell) = (None, None, None);
        for kv in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))?;
            let val: usize = val
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer in {kv:?}")))?;
            match key.trim() {
                "n" => n = Some(val),
                "k" => k = Some(val),
                "ell" | "l" => ell = Some(val),
                other => return Err(Error::Parse(format!("unknown parameter {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing n".into()))?;
        let k = k.ok_or_else(|| Error::Parse("missing k".into()))?;
        make_dist(name, n, k, ell)
    }
}

fn fill_uniform<R: Rng>(x: &mut InputMatrix, rng: &mut R) {
    for r in 0..x.n() {
        for c in 0..x.k() {
            x.set(r, c, rng.gen_bool(0.5));
        }
    }
}

/// `true` with probability `num/den`, exactly when both fit in `u128`.
fn bernoulli_ratio<R: Rng>(num: &BigUint, den: &BigUint, rng: &mut R) -> bool {
    match (num.to_u128(), den.to_u128()) {
        (Some(a), Some(b)) => rng.gen_range(0..b) < a,
        _ => rng.gen_bool((rat(num.clone(), den.clone())).to_f64().unwrap_or(0.5)),
    }
}

/// Uniform length-`k` row whose number of zeros lies in `[min_zeros, max_zeros]`.
pub fn sample_row_by_zeros<R: Rng>(k: usize, min_zeros: usize, max_zeros: usize, rng: &mut R) -> Vec<bool> {
    let zeros = sample_zero_positions(k, min_zeros, max_zeros, rng);
    let mut row = vec![true; k];
    for z in zeros {
        row[z] = false;
    }
    row
}

/// Zero positions, ascending, of such a row.
pub fn sample_zero_positions<R: Rng>(k: usize, min_zeros: usize, max_zeros: usize, rng: &mut R) -> Vec<usize> {
    let max_zeros = max_zeros.min(k);
    assert!(min_zeros <= max_zeros, "empty row set");
    let counts: Vec<BigUint> = (min_zeros..=max_zeros).map(|j| binom(k as u64, j as u64)).collect();
    let j = match counts.iter().map(|c| c.to_u128()).collect::<Option<Vec<u128>>>() {
        Some(exact) if exact.iter().try_fold(0u128, |a, &c| a.checked_add(c)).is_some() => {
            let total: u128 = exact.iter().sum();
            let mut r = rng.gen_range(0..total);
            let mut pick = 0;
            for (i, &c) in exact.iter().enumerate() {
                if r < c {
                    pick = i;
                    break;
                }
                r -= c;
            }
            min_zeros + pick
        }
        _ => {
            let w: Vec<f64> = counts.iter().map(|c| c.to_f64().unwrap_or(f64::MAX)).collect();
            min_zeros + WeightedIndex::new(&w).expect("positive weights").sample(rng)
        }
    };
    let mut z = sample_indices(rng, k, j).into_vec();
    z.sort_unstable();
    z
}
