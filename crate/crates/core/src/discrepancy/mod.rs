//! Correlation and discrepancy oracles over cylinder intersections.
//!
//! A [`CorrelationQuery`] stores the signed weight `c(x)` of every input
//! `x` (in row-major numeric order): `(-1)^F(x) mu(x)` on the domain of a
//! Boolean target, or `e(s(x)/3) / 2^(nk)` for the mod-3 character. The
//! correlation of a cylinder intersection `chi` is `|sum_x c(x) chi(x)|`.

mod bns;
mod bounds;

use std::f64::consts::PI;

use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cylinder::CylinderIntersection;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::functions::{row_parity_sum_mod3, PartialFunctionSpec};
use crate::matrix::InputMatrix;
use crate::tape::RandomTape;

pub use bns::{bns_mod3_closed_form, bns_rhs, mod3_row_character};
pub use bounds::{
    best_available, bound_suite, classify, stated_bound, BoundMethod, BoundReport, BoundRow, BoundStatus, SuiteOptions,
    BOUND_NAMES,
};

/// Default bound on the number of cylinder table combinations.
pub const DEFAULT_DISC_CAP: u128 = 1 << 20;
/// Largest `n * k` for which a query materializes its weights.
pub const MAX_QUERY_CELLS: usize = 20;

/// Which player sets the cylinder intersections may use.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderFamily {
    Subset(Vec<usize>),
    Budget(usize),
    All,
}

impl CylinderFamily {
    /// Every admissible player set, smallest first.
    pub fn subsets(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            CylinderFamily::Subset(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                if let Some(&p) = s.iter().find(|&&p| p >= k) {
                    return Err(Error::PlayerOutOfRange { player: p, k });
                }
                Ok(vec![s])
            }
            CylinderFamily::Budget(l) => Ok((0..=(*l).min(k))
                .flat_map(|size| (0..k).combinations(size))
                .collect()),
            CylinderFamily::All => Ok((0..=k).flat_map(|size| (0..k).combinations(size)).collect()),
        }
    }

    /// The largest admissible sets; every other admissible set is contained in one.
    pub fn maximal_subsets(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            CylinderFamily::Budget(l) => Ok((0..k).combinations((*l).min(k)).collect()),
            CylinderFamily::All => Ok(vec![(0..k).collect()]),
            other => other.subsets(k),
        }
    }

    pub fn admits(&self, players: &[usize]) -> bool {
        match self {
            CylinderFamily::Subset(s) => players.iter().all(|p| s.contains(p)),
            CylinderFamily::Budget(l) => players.len() <= *l,
            CylinderFamily::All => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationQuery {
    n: usize,
    k: usize,
    coeffs: Vec<Complex64>,
    real: bool,
    family: CylinderFamily,
    label: String,
    /// `keys[i][x]`: index into player `i`'s table at input `x`.
    keys: Vec<Vec<u32>>,
}

fn check_cells(n: usize, k: usize) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    let cells = n * k;
    if cells > MAX_QUERY_CELLS {
        return Err(Error::CapExceeded {
            needed: 1u128 << cells.min(127),
            cap: 1u128 << MAX_QUERY_CELLS,
        });
    }
    Ok(1usize << cells)
}

/// Product of `block` pmfs over consecutive row blocks of a stacked matrix.
pub fn product_weight(block: &DistributionSpec) -> impl Fn(&InputMatrix) -> f64 + '_ {
    move |x| {
        x.split_rows(block.n())
            .expect("stacked shape")
            .iter()
            .map(|b| block.pmf_f64(b).expect("block shape"))
            .product()
    }
}

impl CorrelationQuery {
    /// Signed weights of a Boolean target under an arbitrary weight function.
    pub fn boolean<W>(target: &PartialFunctionSpec, weight: W, family: CylinderFamily) -> Result<Self>
    where
        W: Fn(&InputMatrix) -> f64,
    {
        let (n, k) = (target.n(), target.k());
        let size = check_cells(n, k)?;
        let mut coeffs = Vec::with_capacity(size);
        for x in InputMatrix::enumerate(n, k) {
            let w = weight(&x);
            coeffs.push(Complex64::new(
                match target.eval(&x)? {
                    Some(v) => if v { -w } else { w },
                    None if w != 0.0 => return Err(Error::WeightOutsideDomain),
                    None => 0.0,
                },
                0.0,
            ));
        }
        Self::from_coefficients(n, k, coeffs, true, family, target.name().to_string())
    }

    pub fn with_distribution(
        target: &PartialFunctionSpec,
        dist: &DistributionSpec,
        family: CylinderFamily,
    ) -> Result<Self> {
        if dist.n() != target.n() || dist.k() != target.k() {
            return Err(Error::DimensionMismatch {
                expected_n: target.n(),
                expected_k: target.k(),
                n: dist.n(),
                k: dist.k(),
            });
        }
        let mut q = Self::boolean(target, |x| dist.pmf_f64(x).expect("shape"), family)?;
        q.label = format!("{} under {}", target.name(), dist.label());
        Ok(q)
    }

    /// `X -> e(s(X)/3)` with `s` the number of odd rows, under the uniform weight.
    pub fn mod3_character(n: usize, k: usize, family: CylinderFamily) -> Result<Self> {
        let size = check_cells(n, k)?;
        let scale = 1.0 / size as f64;
        let coeffs = InputMatrix::enumerate(n, k)
            .map(|x| Complex64::from_polar(scale, 2.0 * PI * row_parity_sum_mod3(&x) as f64 / 3.0))
            .collect();
        Self::from_coefficients(n, k, coeffs, false, family, "mod3 character".into())
    }

    pub fn from_coefficients(
        n: usize,
        k: usize,
        coeffs: Vec<Complex64>,
        real: bool,
        family: CylinderFamily,
        label: String,
    ) -> Result<Self> {
        let size = check_cells(n, k)?;
        if coeffs.len() != size {
            return Err(Error::WrongLength {
                expected: size,
                got: coeffs.len(),
            });
        }
        family.subsets(k)?;
        let keys = (0..k)
            .map(|p| {
                InputMatrix::enumerate(n, k)
                    .map(|x| x.view_key(p) as u32)
                    .collect()
            })
            .collect();
        Ok(Self {
            n,
            k,
            coeffs,
            real,
            family,
            label,
            keys,
        })
    }

    pub fn with_family(&self, family: CylinderFamily) -> Result<Self> {
        family.subsets(self.k)?;
        Ok(Self {
            family,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> &CylinderFamily {
        &self.family
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `|sum_x c(x) chi(x)|`.
    pub fn correlation(&self, chi: &CylinderIntersection) -> Result<f64> {
        if chi.n() != self.n || chi.k() != self.k {
            return Err(Error::DimensionMismatch {
                expected_n: self.n,
                expected_k: self.k,
                n: chi.n(),
                k: chi.k(),
            });
        }
        let players = chi.players();
        if !self.family.admits(&players) {
            return Err(Error::InvalidParameter(format!(
                "players {players:?} fall outside {:?}",
                self.family
            )));
        }
        let tables: Vec<(&[u32], &[bool])> = players
            .iter()
            .map(|&p| (self.keys[p].as_slice(), chi.table(p).expect("listed")))
            .collect();
        let sum: Complex64 = (0..self.coeffs.len())
            .filter(|&x| tables.iter().all(|(keys, t)| t[keys[x] as usize]))
            .map(|x| self.coeffs[x])
            .sum();
        Ok(sum.norm())
    }

    fn table_len(&self) -> usize {
        1usize << (self.n * (self.k - 1))
    }

    /// Number of table combinations a naive search over `subset` visits.
    pub fn combinations(&self, subset: &[usize]) -> u128 {
        let bits = self.table_len() as u128 * subset.len() as u128;
        if bits >= 127 {
            u128::MAX
        } else {
            1u128 << bits
        }
    }

    /// Aggregates `c(x) * prod_others chi(x)` by the free player's key.
    fn aggregate(&self, free: usize, fixed: &[(usize, &[bool])]) -> Vec<Complex64> {
        let mut a = vec![Complex64::new(0.0, 0.0); self.table_len()];
        let keys = &self.keys[free];
        'x: for x in 0..self.coeffs.len() {
            for &(p, t) in fixed {
                if !t[self.keys[p][x] as usize] {
                    continue 'x;
                }
            }
            a[keys[x] as usize] += self.coeffs[x];
        }
        a
    }

    /// Exact maximum over the family.
    pub fn exact_disc(&self, cap: u128) -> Result<ExactDisc> {
        let subsets = self.family.subsets(self.k)?;
        let needed = subsets
            .iter()
            .fold(0u128, |acc, s| acc.saturating_add(self.combinations(s)));
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        let mut best: Option<ExactDisc> = None;
        for s in subsets {
            let cand = self.exact_disc_subset(&s)?;
            if best.as_ref().is_none_or(|b| cand.value > b.value + 1e-15) {
                best = Some(cand);
            }
        }
        let mut best = best.expect("family has a set");
        best.combinations = needed;
        Ok(best)
    }

    /// Exact `disc_S`: tables of all but the last player of `S` are
    /// enumerated, and the last player's table is optimized in closed form.
    pub fn exact_disc_subset(&self, subset: &[usize]) -> Result<ExactDisc> {
        let t = self.table_len();
        let n = self.n;
        let k = self.k;
        let Some((&last, rest)) = subset.split_last() else {
            let value = self.coeffs.iter().sum::<Complex64>().norm();
            return Ok(ExactDisc {
                value,
                subset: Vec::new(),
                witness: CylinderIntersection::all_ones(n, k),
                combinations: 1,
            });
        };
        if t > 63 && !rest.is_empty() {
            return Err(Error::CapExceeded {
                needed: self.combinations(subset),
                cap: 1 << 63,
            });
        }
        let outer: u128 = if rest.is_empty() { 1 } else { 1u128 << (t * rest.len()) };
        let unpack = |code: u128| -> Vec<Vec<bool>> {
            (0..rest.len())
                .map(|j| (0..t).map(|b| (code >> (j * t + b)) & 1 == 1).collect())
                .collect()
        };
        let (value, code, mask) = (0..outer)
            .into_par_iter()
            .map(|code| {
                let tables = unpack(code);
                let fixed: Vec<(usize, &[bool])> =
                    rest.iter().zip(&tables).map(|(&p, t)| (p, t.as_slice())).collect();
                let a = self.aggregate(last, &fixed);
                let (v, mask) = best_subset_sum(&a, self.real);
                (v, code, mask)
            })
            .reduce(
                || (f64::NEG_INFINITY, 0, Vec::new()),
                |x, y| {
                    if y.0 > x.0 + 1e-15 || (y.0 >= x.0 - 1e-15 && y.1 < x.1 && !y.2.is_empty()) {
                        y
                    } else {
                        x
                    }
                },
            );
        let mut witness = CylinderIntersection::all_ones(n, k);
        for (&p, table) in rest.iter().zip(unpack(code)) {
            witness = witness.with_table(p, table)?;
        }
        witness = witness.with_table(last, mask)?;
        Ok(ExactDisc {
            value,
            subset: subset.to_vec(),
            witness,
            combinations: self.combinations(subset),
        })
    }

    /// Alternating maximization. `restarts = 0` returns the all-ones cylinder.
    pub fn heuristic_disc(&self, restarts: usize, tape: &RandomTape) -> Result<HeuristicDisc> {
        let (n, k) = (self.n, self.k);
        let base = self.coeffs.iter().sum::<Complex64>().norm();
        let mut best = HeuristicDisc {
            value: base,
            subset: Vec::new(),
            witness: CylinderIntersection::all_ones(n, k),
            sweeps: 0,
        };
        let t = self.table_len();
        for (si, s) in self.family.maximal_subsets(k)?.into_iter().enumerate() {
            if s.is_empty() {
                continue;
            }
            for r in 0..restarts {
                let mut rng = tape.child("subset", si as u64).stream("restart", r as u64);
                let mut tables: Vec<Vec<bool>> =
                    s.iter().map(|_| (0..t).map(|_| rng.gen_bool(0.5)).collect()).collect();
                let mut value = self.value_of(&s, &tables);
                let mut sweeps = 0;
                loop {
                    sweeps += 1;
                    let before = value;
                    for i in 0..s.len() {
                        let fixed: Vec<(usize, &[bool])> = s
                            .iter()
                            .zip(&tables)
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(_, (&p, tb))| (p, tb.as_slice()))
                            .collect();
                        let a = self.aggregate(s[i], &fixed);
                        let current: Complex64 =
                            a.iter().zip(&tables[i]).filter(|(_, &b)| b).map(|(c, _)| c).sum();
                        let (v, table) = improve(&a, current, self.real);
                        if v > value + 1e-15 {
                            value = v;
                            tables[i] = table;
                        }
                    }
                    if value <= before + 1e-15 || sweeps >= 256 {
                        break;
                    }
                }
                if value > best.value + 1e-15 {
                    let mut w = CylinderIntersection::all_ones(n, k);
                    for (&p, tb) in s.iter().zip(&tables) {
                        w = w.with_table(p, tb.clone())?;
                    }
                    best = HeuristicDisc {
                        value,
                        subset: s.clone(),
                        witness: w,
                        sweeps,
                    };
                }
            }
        }
        Ok(best)
    }

    fn value_of(&self, s: &[usize], tables: &[Vec<bool>]) -> f64 {
        let tb: Vec<(&[u32], &[bool])> = s
            .iter()
            .zip(tables)
            .map(|(&p, t)| (self.keys[p].as_slice(), t.as_slice()))
            .collect();
        (0..self.coeffs.len())
            .filter(|&x| tb.iter().all(|(keys, t)| t[keys[x] as usize]))
            .map(|x| self.coeffs[x])
            .sum::<Complex64>()
            .norm()
    }
}

/// One improvement step for a free table with aggregated coefficients `a`
/// and current sum `current`; zero coefficients mark the entry 1.
fn improve(a: &[Complex64], current: Complex64, real: bool) -> (f64, Vec<bool>) {
    if real {
        let pos: Vec<bool> = a.iter().map(|c| c.re >= 0.0).collect();
        let neg: Vec<bool> = a.iter().map(|c| c.re <= 0.0).collect();
        let sum = |t: &[bool]| a.iter().zip(t).filter(|(_, &b)| b).map(|(c, _)| c.re).sum::<f64>().abs();
        let (vp, vn) = (sum(&pos), sum(&neg));
        return if vp >= vn { (vp, pos) } else { (vn, neg) };
    }
    let d = if current.norm() > 0.0 { current / current.norm() } else { Complex64::new(1.0, 0.0) };
    let table: Vec<bool> = a.iter().map(|c| (c * d.conj()).re >= 0.0).collect();
    let v = a
        .iter()
        .zip(&table)
        .filter(|(_, &b)| b)
        .map(|(c, _)| c)
        .sum::<Complex64>()
        .norm();
    (v, table)
}

/// `max_{b in {0,1}^len} |sum_j b_j a_j|` with a maximizing `b`.
///
/// Real weights: take all positive or all negative entries. Complex
/// weights: an optimal `b` selects an open half-plane, and half-plane
/// selections only change where the boundary crosses some `a_j`, so
/// testing one direction strictly between consecutive crossings is exhaustive.
pub fn best_subset_sum(a: &[Complex64], real: bool) -> (f64, Vec<bool>) {
    if real {
        let pos: f64 = a.iter().map(|c| c.re.max(0.0)).sum();
        let neg: f64 = a.iter().map(|c| c.re.min(0.0)).sum();
        return if pos >= -neg {
            (pos, a.iter().map(|c| c.re >= 0.0).collect())
        } else {
            (-neg, a.iter().map(|c| c.re <= 0.0).collect())
        };
    }
    let nonzero: Vec<usize> = (0..a.len()).filter(|&j| a[j].norm() > 0.0).collect();
    if nonzero.is_empty() {
        return (0.0, vec![true; a.len()]);
    }
    let tau = 2.0 * PI;
    let mut cuts: Vec<f64> = nonzero
        .iter()
        .flat_map(|&j| {
            let phi = a[j].arg();
            [(phi + PI / 2.0).rem_euclid(tau), (phi - PI / 2.0).rem_euclid(tau)]
        })
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for i in 0..cuts.len() {
        let lo = cuts[i];
        let hi = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + tau };
        let theta = (lo + hi) / 2.0;
        let dir = Complex64::from_polar(1.0, -theta);
        let mask: Vec<bool> = a.iter().map(|c| (c * dir).re > 0.0).collect();
        let v = a
            .iter()
            .zip(&mask)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c)
            .sum::<Complex64>()
            .norm();
        if v > best.0 {
            best = (v, mask);
        }
    }
    best
}

/// All `S`-cylinder intersections for one player set, in table order.
pub fn enumerate_cylinders(
    n: usize,
    k: usize,
    subset: &[usize],
    cap: u128,
) -> Result<impl Iterator<Item = CylinderIntersection>> {
    let t = CylinderIntersection::table_len(n, k)?;
    let bits = t * subset.len();
    let needed = if bits >= 127 { u128::MAX } else { 1u128 << bits };
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    let subset = subset.to_vec();
    Ok((0..needed).map(move |code| {
        let mut c = CylinderIntersection::all_ones(n, k);
        for (j, &p) in subset.iter().enumerate() {
            let table = (0..t).map(|b| (code >> (j * t + b)) & 1 == 1).collect();
            c = c.with_table(p, table).expect("valid table");
        }
        c
    }))
}

#[derive(Clone, Debug)]
pub struct ExactDisc {
    pub value: f64,
    pub subset: Vec<usize>,
    pub witness: CylinderIntersection,
    pub combinations: u128,
}

#[derive(Clone, Debug)]
pub struct HeuristicDisc {
    pub value: f64,
    pub subset: Vec<usize>,
    pub witness: CylinderIntersection,
    pub sweeps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_dist, DistName};

    fn gip12() -> CorrelationQuery {
        let u = make_dist(DistName::Uniform, 1, 2, None).unwrap();
        CorrelationQuery::with_distribution(&PartialFunctionSpec::gip(1, 2), &u, CylinderFamily::All).unwrap()
    }

    #[test]
    fn all_ones_cylinder_on_gip12() {
        let q = gip12();
        let c = q.correlation(&CylinderIntersection::all_ones(1, 2)).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_cylinder_has_zero_correlation() {
        let q = gip12();
        let z = CylinderIntersection::all_ones(1, 2).with_table(0, vec![false, false]).unwrap();
        assert_eq!(q.correlation(&z).unwrap(), 0.0);
    }

    #[test]
    fn character_small_case() {
        let q = CorrelationQuery::mod3_character(1, 1, CylinderFamily::All).unwrap();
        let c = q.correlation(&CylinderIntersection::all_ones(1, 1)).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_gip12_is_half() {
        let d = gip12().exact_disc(DEFAULT_DISC_CAP).unwrap();
        assert!((d.value - 0.5).abs() < 1e-15);
        assert!((gip12().correlation(&d.witness).unwrap() - d.value).abs() < 1e-15);
    }

    #[test]
    fn empty_family_is_bias() {
        let q = gip12().with_family(CylinderFamily::Subset(vec![])).unwrap();
        let d = q.exact_disc(DEFAULT_DISC_CAP).unwrap();
        let bias: f64 = q.coefficients().iter().map(|c| c.re).sum();
        assert!((d.value - bias.abs()).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let q = CorrelationQuery::mod3_character(2, 3, CylinderFamily::All).unwrap();
        assert!(matches!(q.exact_disc(1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn weight_outside_domain_is_rejected() {
        let f = PartialFunctionSpec::udisj(2, 1);
        let u = make_dist(DistName::Uniform, 2, 1, None).unwrap();
        assert_eq!(
            CorrelationQuery::with_distribution(&f, &u, CylinderFamily::All).unwrap_err(),
            Error::WeightOutsideDomain
        );
    }

    #[test]
    fn heuristic_zero_restarts_is_baseline() {
        let q = gip12();
        let h = q.heuristic_disc(0, &RandomTape::new(3)).unwrap();
        assert!((h.value - 0.5).abs() < 1e-15);
        assert!(h.subset.is_empty());
    }

    #[test]
    fn half_plane_search_matches_brute_force() {
        let mut rng = RandomTape::new(11).stream("t", 0);
        for _ in 0..200 {
            let len = rng.gen_range(1..9);
            let a: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let brute = (0u32..1 << len)
                .map(|m| {
                    (0..len)
                        .filter(|&j| m >> j & 1 == 1)
                        .map(|j| a[j])
                        .sum::<Complex64>()
                        .norm()
                })
                .fold(0.0, f64::max);
            let (v, mask) = best_subset_sum(&a, false);
            assert!((v - brute).abs() < 1e-12);
            let got: Complex64 = a.iter().zip(&mask).filter(|(_, &b)| b).map(|(c, _)| c).sum();
            assert!((got.norm() - v).abs() < 1e-12);
        }
    }
}
