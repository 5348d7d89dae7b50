use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;

use super::{active_budget_third, check_epsilon, pow2_at_least, MaskVector};
use crate::combinatorics::{binom_leq, majority_tail, odd_repetitions};
use crate::error::{Error, Result};
use crate::matrix::{InputMatrix, View};
use crate::model::{
    amplify, Combine, ComposedSession, Family, Part, Protocol, ProtocolInfo, ProtocolSpec,
    Session, Transcript,
};
use crate::tape::RandomTape;

/// A single unamplified run on a block with `C(k, <=ell) >= 3n`.
#[derive(Debug)]
pub struct GipBase {
    ell: usize,
    info: ProtocolInfo,
}

impl GipBase {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let ell = active_budget_third(n, k)?;
        Ok(Self {
            ell,
            info: ProtocolInfo {
                family: Family::Gip,
                n,
                k,
                epsilon: 1.0 / 3.0,
                simultaneous: true,
                randomized: true,
                cost_ceiling: ell,
            },
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// The session that would result from drawing `mask`.
    pub fn session_with_mask(&self, mask: MaskVector) -> GipSession {
        assert!(mask.zero_positions().len() <= self.ell, "mask outside budget");
        GipSession { mask }
    }

    /// Number of masks the base run draws from.
    pub fn mask_space(&self) -> BigUint {
        binom_leq(self.info.k as u64, self.ell as u64)
    }

    /// Probability over the mask that the base run answers wrongly: the
    /// mask must equal a row occurring an odd number of times.
    pub fn exact_failure(&self, x: &InputMatrix) -> BigRational {
        let bad = heavy_row_counts(x, self.ell)
            .values()
            .filter(|&&m| m % 2 == 1)
            .count();
        BigRational::new(BigInt::from(bad), BigInt::from(self.mask_space()))
    }
}

/// Multiplicities of the distinct rows with at most `ell` zeros.
fn heavy_row_counts(x: &InputMatrix, ell: usize) -> HashMap<&[u8], usize> {
    let mut counts = HashMap::new();
    for r in 0..x.n() {
        if x.row_weight(r) + ell >= x.k() {
            *counts.entry(x.row(r)).or_insert(0) += 1;
        }
    }
    counts
}

/// Probability that a uniform mask with at most `ell` zeros equals some
/// row of `x`: the distinct heavy rows over `C(k, <=ell)`.
pub fn exact_gip_error(x: &InputMatrix, n: usize, k: usize, ell: usize) -> Result<BigRational> {
    x.check_dims(n, k)?;
    if !pow2_at_least(k, 3 * n as u128) {
        return Err(Error::Infeasible(format!(
            "2^{k} < 3n = {}: several blocks are needed",
            3 * n
        )));
    }
    if ell > k {
        return Err(Error::InvalidParameter(format!("ell = {ell} exceeds k = {k}")));
    }
    let r = heavy_row_counts(x, ell).len();
    Ok(BigRational::new(
        BigInt::from(r),
        BigInt::from(binom_leq(k as u64, ell as u64)),
    ))
}

#[derive(Debug, Clone)]
pub struct GipSession {
    mask: MaskVector,
}

impl GipSession {
    pub fn mask(&self) -> &MaskVector {
        &self.mask
    }
}

impl Session for GipSession {
    fn schedule(&self) -> Vec<(usize, usize)> {
        self.mask.zero_positions().iter().map(|&z| (z, 1)).collect()
    }

    fn message(&self, view: &View<'_>, _board: &Transcript) -> Vec<bool> {
        let me = view.player();
        let zeros = self.mask.zero_positions();
        let idx = zeros.binary_search(&me).expect("speaker is a zero position");
        let y = self.mask.bits();
        let mut parity = false;
        for r in 0..view.n() {
            // zeros before me, ones after me, ones off the mask; my column is free
            let hit = view.visible_columns().all(|c| {
                let want = match zeros.binary_search(&c) {
                    Ok(pos) => pos > idx,
                    Err(_) => y[c],
                };
                view.get(r, c) == Some(want as u8)
            });
            parity ^= hit;
        }
        vec![parity]
    }

    fn output(&self, board: &Transcript) -> bool {
        board
            .entries()
            .iter()
            .fold(false, |acc, e| acc ^ e.bits.iter().fold(false, |a, &b| a ^ b))
    }
}

impl Protocol for GipBase {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }

    fn session<'a>(&'a self, tape: &RandomTape) -> Box<dyn Session + 'a> {
        let mut rng = tape.stream("gip-mask", 0);
        let mask = MaskVector::sample(self.info.k, self.ell, &mut rng);
        Box::new(self.session_with_mask(mask))
    }
}

/// One horizontal block of the full protocol.
#[derive(Debug, Clone)]
pub struct GipBlock {
    pub rows: Range<usize>,
    pub base: Arc<GipBase>,
    pub repetitions: usize,
    protocol: ProtocolSpec,
}

/// The amplified, possibly block-partitioned GIP protocol.
#[derive(Debug)]
pub struct GipProtocol {
    blocks: Vec<GipBlock>,
    info: ProtocolInfo,
}

/// Builds the protocol for `n x k` inputs with error at most `epsilon`.
///
/// With `2^k >= 3n` there is a single block. Otherwise rows are cut into
/// consecutive blocks of `floor(2^k / 3)` rows, each run to error
/// `epsilon / B`, and the block answers are XORed.
pub fn gip_protocol(n: usize, k: usize, epsilon: f64) -> Result<Arc<GipProtocol>> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    if !pow2_at_least(k, n as u128) {
        return Err(Error::Infeasible(format!("2^{k} < n = {n}")));
    }
    let eps = check_epsilon(epsilon)?;
    let third = BigRational::new(1.into(), 3.into());
    let block_rows = if pow2_at_least(k, 3 * n as u128) {
        n
    } else {
        ((1usize << k) / 3).min(n)
    };
    if block_rows == 0 {
        return Err(Error::Infeasible(format!(
            "k = {k} leaves no room for a block of rows"
        )));
    }
    let b = n.div_ceil(block_rows);
    let per_block = &eps / BigRational::from_integer(BigInt::from(b));
    let t = odd_repetitions(&third, &per_block)?;
    let mut blocks = Vec::with_capacity(b);
    let mut cache: HashMap<usize, Arc<GipBase>> = HashMap::new();
    for i in 0..b {
        let rows = i * block_rows..((i + 1) * block_rows).min(n);
        let len = rows.len();
        let base = match cache.get(&len) {
            Some(base) => base.clone(),
            None => {
                let base = Arc::new(GipBase::new(len, k)?);
                cache.insert(len, base.clone());
                base
            }
        };
        let protocol = amplify(base.clone(), t)?;
        blocks.push(GipBlock {
            rows,
            base,
            repetitions: t,
            protocol,
        });
    }
    let cost_ceiling = blocks.iter().map(|b| b.protocol.info().cost_ceiling).sum();
    Ok(Arc::new(GipProtocol {
        blocks,
        info: ProtocolInfo {
            family: Family::Gip,
            n,
            k,
            epsilon,
            simultaneous: true,
            randomized: true,
            cost_ceiling,
        },
    }))
}

impl GipProtocol {
    pub fn blocks(&self) -> &[GipBlock] {
        &self.blocks
    }

    /// Budget of the first block, which is the largest.
    pub fn ell(&self) -> usize {
        self.blocks[0].base.ell()
    }

    /// Worst-case bits of one unamplified run per block.
    pub fn base_cost_ceiling(&self) -> usize {
        self.blocks.iter().map(|b| b.base.ell()).sum()
    }

    /// Exact probability over the tape that the protocol answers wrongly on `x`.
    pub fn exact_failure(&self, x: &InputMatrix) -> Result<BigRational> {
        x.check_dims(self.info.n, self.info.k)?;
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());
        let mut even = one.clone();
        for b in &self.blocks {
            let rows: Vec<usize> = b.rows.clone().collect();
            let sub = x.select_rows(&rows).expect("nonempty block");
            let q = majority_tail(b.repetitions, &b.base.exact_failure(&sub));
            even *= &one - &two * q;
        }
        Ok((one - even) / two)
    }
}

impl Protocol for GipProtocol {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }

    fn session<'a>(&'a self, tape: &RandomTape) -> Box<dyn Session + 'a> {
        if self.blocks.len() == 1 {
            return self.blocks[0].protocol.session(tape);
        }
        let parts = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| Part {
                rows: Some(b.rows.clone().collect()),
                session: b.protocol.session(&tape.child("block", i as u64)),
            })
            .collect();
        Box::new(ComposedSession::new(self.info.k, parts, Combine::Xor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::eval_gip;
    use crate::model::{execute, replay_is_stable, run};
    use num_traits::Zero;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn exact_error_anchors() {
        let ones = InputMatrix::ones(8, 16).unwrap();
        assert_eq!(exact_gip_error(&ones, 8, 16, 2).unwrap(), r(1, 137));
        let zeros = InputMatrix::zeros(8, 16).unwrap();
        assert!(exact_gip_error(&zeros, 8, 16, 2).unwrap().is_zero());
    }

    #[test]
    fn light_rows_never_fail() {
        let p = gip_protocol(8, 16, 1.0 / 3.0).unwrap();
        assert_eq!(p.ell(), 2);
        let mut x = InputMatrix::zeros(8, 16).unwrap();
        x.set(3, 5, true);
        for seed in 0..50 {
            let out = run(p.as_ref(), &x, &RandomTape::new(seed)).unwrap();
            assert_eq!(out.output, eval_gip(&x));
        }
    }

    #[test]
    fn base_is_exact_off_collisions() {
        let base = GipBase::new(3, 5).unwrap();
        for idx in (0..1u64 << 15).step_by(97) {
            let x = InputMatrix::from_index(3, 5, idx).unwrap();
            for m in MaskVector::enumerate(5, base.ell()) {
                let collides = x.rows().any(|row| m.matches_row(row));
                let s = base.session_with_mask(m);
                let out = execute(&s, &x).unwrap();
                assert!(out.cost_bits <= base.ell());
                if !collides {
                    assert_eq!(out.output, eval_gip(&x));
                }
                assert!(replay_is_stable(&s, &x).unwrap());
            }
        }
    }

    #[test]
    fn blocks_when_k_is_small() {
        let p = gip_protocol(8, 3, 1.0 / 3.0).unwrap();
        assert_eq!(p.blocks().len(), 4);
        assert!(p.blocks().iter().all(|b| 3 * b.rows.len() <= 8));
        assert!(gip_protocol(9, 3, 0.3).is_err());
        assert!(gip_protocol(1, 1, 0.3).is_err());
        let x = InputMatrix::ones(8, 3).unwrap();
        let out = run(p.as_ref(), &x, &RandomTape::new(5)).unwrap();
        assert!(out.cost_bits <= p.info().cost_ceiling);
    }

    #[test]
    fn failure_is_below_collision() {
        let p = gip_protocol(4, 5, 0.3).unwrap();
        let base = &p.blocks()[0].base;
        for idx in (0..1u64 << 20).step_by(4099) {
            let x = InputMatrix::from_index(4, 5, idx).unwrap();
            let col = exact_gip_error(&x, 4, 5, base.ell()).unwrap();
            assert!(base.exact_failure(&x) <= col);
            assert!(col <= r(1, 3));
        }
    }
}
