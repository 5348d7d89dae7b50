//! GF(3) polynomials `p_u` and their sums over rows.
//!
//! Within one row, a monomial is a bitmask over variables `0..k` (bit `i`
//! stands for `x_i`).

use serde::Serialize;

use crate::matrix::InputMatrix;

fn m3(v: i64) -> u8 {
    v.rem_euclid(3) as u8
}

/// `prod (x_i + 1) - prod (x_i + u_i - 1) - 1` over GF(3), evaluated directly.
pub fn p_u_eval(u: &[bool], x: &[bool]) -> u8 {
    assert_eq!(u.len(), x.len());
    let mut a = 1i64;
    let mut b = 1i64;
    for (&ui, &xi) in u.iter().zip(x) {
        a = a * (xi as i64 + 1) % 3;
        b = b * (xi as i64 + ui as i64 - 1) % 3;
    }
    m3(a - b - 1)
}

/// Coefficient of `x^mask` in the expansion of `p_u`.
///
/// The first product contributes 1 to every monomial. The second contributes
/// `prod_{i not in mask} (u_i - 1)`, which is `(-1)^(k - |mask|)` when `u`
/// vanishes off the mask and 0 otherwise. The constant `-1` hits the empty
/// monomial.
pub fn p_u_coefficient(u: &[bool], mask: u64) -> u8 {
    let k = u.len();
    let outside_all_zero = (0..k).all(|i| mask >> i & 1 == 1 || !u[i]);
    let mut c = 1i64;
    if outside_all_zero {
        let missing = k - mask.count_ones() as usize;
        c -= if missing.is_multiple_of(2) { 1 } else { -1 };
    }
    if mask == 0 {
        c -= 1;
    }
    m3(c)
}

/// Nonzero-coefficient monomials of `p_u` as `(coefficient, mask)`.
pub fn row_monomials(u: &[bool]) -> Vec<(u8, u64)> {
    let k = u.len();
    assert!(k < 40, "expansion has 2^k terms");
    (0..1u64 << k)
        .filter_map(|mask| {
            let c = p_u_coefficient(u, mask);
            (c != 0).then_some((c, mask))
        })
        .collect()
}

/// The player a monomial goes to: the lowest-index variable it omits.
/// Panics on the full monomial, which never has a nonzero coefficient.
pub fn owner(mask: u64, k: usize) -> usize {
    let p = mask.trailing_ones() as usize;
    assert!(p < k, "the full monomial has no owner");
    p
}

/// Every nonzero monomial of `p_u` paired with its owner.
pub fn monomial_partition(u: &[bool]) -> Vec<(u64, usize)> {
    let k = u.len();
    row_monomials(u)
        .into_iter()
        .map(|(_, mask)| (mask, owner(mask, k)))
        .collect()
}

/// `row_monomials` grouped by owner: entry `i` lists player `i`'s share.
pub fn monomials_by_owner(u: &[bool]) -> Vec<Vec<(u8, u64)>> {
    let k = u.len();
    let mut out = vec![Vec::new(); k];
    for (c, mask) in row_monomials(u) {
        out[owner(mask, k)].push((c, mask));
    }
    out
}

/// Values of `sum_{M subset of x} coeffs[M]` at every point `x`, by the
/// subset-sum transform.
pub fn subset_sums(mut coeffs: Vec<u8>) -> Vec<u8> {
    let len = coeffs.len();
    assert!(len.is_power_of_two());
    let mut bit = 1;
    while bit < len {
        for x in 0..len {
            if x & bit != 0 {
                coeffs[x] = (coeffs[x] + coeffs[x ^ bit]) % 3;
            }
        }
        bit <<= 1;
    }
    coeffs
}

/// `GF(3)` value as two bits: 0 -> 00, 1 -> 01, 2 -> 10.
pub fn encode(v: u8) -> [bool; 2] {
    [v == 2, v == 1]
}

pub fn decode(bits: &[bool]) -> u8 {
    match bits {
        [false, false] => 0,
        [false, true] => 1,
        [true, false] => 2,
        _ => panic!("not a GF(3) code: {bits:?}"),
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Monomial {
    pub coef: u8,
    /// Matrix cells `(row, col)`, sorted.
    pub vars: Vec<(usize, usize)>,
}

/// A polynomial over GF(3) in the cells of an input matrix.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct Gf3Poly {
    terms: Vec<Monomial>,
}

impl Gf3Poly {
    /// `p_u` in the cells of row 0.
    pub fn p_u(u: &[bool]) -> Self {
        Self::f_nku(1, u)
    }

    /// `sum_r p_u(X_r)`.
    pub fn f_nku(n: usize, u: &[bool]) -> Self {
        let k = u.len();
        let row = row_monomials(u);
        let mut terms = Vec::with_capacity(n * row.len());
        for r in 0..n {
            for &(coef, mask) in &row {
                let vars = (0..k).filter(|&c| mask >> c & 1 == 1).map(|c| (r, c)).collect();
                terms.push(Monomial { coef, vars });
            }
        }
        Self { terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.vars.len()).max().unwrap_or(0)
    }

    /// Largest number of variables any monomial takes from a single row.
    pub fn max_row_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| {
                let mut best = 0;
                let mut i = 0;
                while i < t.vars.len() {
                    let r = t.vars[i].0;
                    let j = t.vars[i..].iter().take_while(|v| v.0 == r).count();
                    best = best.max(j);
                    i += j;
                }
                best
            })
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &InputMatrix) -> u8 {
        let s: u32 = self
            .terms
            .iter()
            .filter(|t| t.vars.iter().all(|&(r, c)| x.get(r, c) == 1))
            .map(|t| t.coef as u32)
            .sum();
        (s % 3) as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(v: u64, k: usize) -> Vec<bool> {
        (0..k).map(|i| v >> i & 1 == 1).collect()
    }

    /// Multiplies out both products naively, one linear factor at a time.
    fn expand_naive(u: &[bool]) -> Vec<u8> {
        let k = u.len();
        let mul = |poly: &Vec<i64>, i: usize, c: i64| {
            let mut out = vec![0i64; poly.len()];
            for (m, &a) in poly.iter().enumerate() {
                out[m | 1 << i] += a;
                out[m] += a * c;
            }
            out
        };
        let mut a = vec![0i64; 1 << k];
        a[0] = 1;
        let mut b = a.clone();
        for i in 0..k {
            a = mul(&a, i, 1);
            b = mul(&b, i, u[i] as i64 - 1);
        }
        let mut out: Vec<u8> = a.iter().zip(&b).map(|(x, y)| m3(x - y)).collect();
        out[0] = m3(out[0] as i64 - 1);
        out
    }

    #[test]
    fn small_values() {
        assert_eq!(p_u_eval(&[false], &[true]), 1);
        assert_eq!(p_u_eval(&[false, false], &[true, true]), 0);
    }

    #[test]
    fn coefficients_match_naive_expansion() {
        for k in 1..=6 {
            for uv in 0..1u64 << k {
                let u = bits(uv, k);
                let naive = expand_naive(&u);
                for mask in 0..1u64 << k {
                    assert_eq!(p_u_coefficient(&u, mask), naive[mask as usize]);
                }
            }
        }
    }

    #[test]
    fn partition_for_k2() {
        let part = monomial_partition(&[false, false]);
        assert!(part.contains(&(0b01, 1)));
        assert!(part.contains(&(0b10, 0)));
        assert!(part.contains(&(0b00, 0)));
        assert_eq!(part.len(), 3);
    }

    #[test]
    fn polynomial_matches_direct_evaluation() {
        let u = [true, false, true];
        let f = Gf3Poly::f_nku(2, &u);
        assert!(f.max_row_degree() <= 2);
        for x in InputMatrix::enumerate(2, 3) {
            let direct: u32 = (0..2)
                .map(|r| {
                    let row: Vec<bool> = x.row(r).iter().map(|&b| b == 1).collect();
                    p_u_eval(&u, &row) as u32
                })
                .sum();
            assert_eq!(f.eval(&x) as u32, direct % 3);
        }
    }

    #[test]
    fn codes_round_trip() {
        for v in 0..3 {
            assert_eq!(decode(&encode(v)), v);
        }
    }
}
