//! Evaluator for the box-norm upper bound on `|E phi chi|^(2^k)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `E_{u0,u1} prod_{z in {0,1}^k} C^{|z|} phi(u^z)` with `C` complex
/// conjugation and `u^z_j = u^{z_j}_j`, for `u0, u1` uniform over
/// `U_1 x ... x U_k` with `|U_j| = sizes[j]`.
pub fn bns_rhs<F>(phi: F, sizes: &[usize], cap: u128) -> Result<f64>
where
    F: Fn(&[usize]) -> Complex64,
{
    let k = sizes.len();
    if k == 0 || sizes.contains(&0) {
        return Err(Error::InvalidParameter("every set must be nonempty".into()));
    }
    let points = sizes
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128));
    let pairs = points.and_then(|p| p.checked_mul(p));
    let needed = pairs.unwrap_or(u128::MAX);
    if needed > cap || k >= 32 {
        return Err(Error::CapExceeded { needed, cap });
    }
    let mut u0 = vec![0usize; k];
    let mut u1 = vec![0usize; k];
    let mut arg = vec![0usize; k];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut prod = Complex64::new(1.0, 0.0);
        for z in 0u32..1 << k {
            for j in 0..k {
                arg[j] = if z >> j & 1 == 1 { u1[j] } else { u0[j] };
            }
            let v = phi(&arg);
            prod *= if z.count_ones() % 2 == 1 { v.conj() } else { v };
        }
        total += prod;
        if !advance(&mut u0, sizes) && !advance(&mut u1, sizes) {
            break;
        }
    }
    Ok(total.re / needed as f64)
}

/// Mixed-radix increment; false on wrap-around.
fn advance(u: &mut [usize], sizes: &[usize]) -> bool {
    for (d, &s) in u.iter_mut().zip(sizes) {
        *d += 1;
        if *d < s {
            return true;
        }
        *d = 0;
    }
    false
}

/// The mod-3 row character as a function of the `k` columns, each column
/// an `n`-bit integer with bit `r` holding row `r`.
pub fn mod3_row_character(n: usize) -> impl Fn(&[usize]) -> Complex64 {
    move |cols| {
        let parity = cols.iter().fold(0usize, |a, &c| a ^ c) & ((1usize << n) - 1);
        let s = parity.count_ones() % 3;
        Complex64::from_polar(1.0, 2.0 * PI * s as f64 / 3.0)
    }
}

/// `(1 - 3 * 2^-(k+1))^n`.
pub fn bns_mod3_closed_form(n: usize, k: usize) -> f64 {
    (1.0 - 3.0 * 0.5f64.powi(k as i32 + 1)).powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_is_quarter() {
        let v = bns_rhs(mod3_row_character(1), &[2], 1 << 20).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_is_one() {
        let v = bns_rhs(|_| Complex64::new(1.0, 0.0), &[3, 2, 2], 1 << 20).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            bns_rhs(mod3_row_character(3), &[8, 8, 8], 1000),
            Err(Error::CapExceeded { .. })
        ));
    }
}
