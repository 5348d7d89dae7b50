use std::ops::Range;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use itertools::Itertools;
use rand::Rng;

use super::gf3::{decode, encode, monomials_by_owner, p_u_eval};
use super::{ceil_log2, check_epsilon, pow2_at_least};
use crate::combinatorics::{binom, majority_tail, odd_repetitions, pow};
use crate::error::{Error, Result};
use crate::matrix::{InputMatrix, View};
use crate::model::{Family, Protocol, ProtocolInfo, Session, Transcript};
use crate::tape::RandomTape;

/// One horizontal block, run on `k_eff` virtual columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mod3Block {
    pub rows: Range<usize>,
    /// Number of virtual players `ceil(log2(3 * rows))`.
    pub k_eff: usize,
    /// Whether columns `k_eff - 1 ..` are XOR-folded into the last virtual column.
    pub fold: bool,
    pub repetitions: usize,
}

#[derive(Debug)]
pub struct Mod3Protocol {
    blocks: Vec<Mod3Block>,
    info: ProtocolInfo,
}

/// MOD3-of-XORs with error at most `epsilon`.
pub fn mod3_protocol(n: usize, k: usize, epsilon: f64) -> Result<Arc<Mod3Protocol>> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    if !pow2_at_least(k, n as u128) {
        return Err(Error::Infeasible(format!("2^{k} < n = {n}")));
    }
    let eps = check_epsilon(epsilon)?;
    let third = BigRational::new(1.into(), 3.into());
    let big_l = ceil_log2(3 * n as u128);
    let block_rows = if k >= big_l { n } else { ((1usize << k) / 3).min(n) };
    if block_rows == 0 {
        return Err(Error::Infeasible(format!(
            "k = {k} leaves no room for a block of rows"
        )));
    }
    let b = n.div_ceil(block_rows);
    let t = odd_repetitions(&third, &(&eps / BigRational::from_integer(BigInt::from(b))))?;
    let blocks: Vec<Mod3Block> = (0..b)
        .map(|i| {
            let rows = i * block_rows..((i + 1) * block_rows).min(n);
            let k_eff = ceil_log2(3 * rows.len() as u128);
            Mod3Block {
                rows,
                k_eff,
                fold: k > k_eff,
                repetitions: t,
            }
        })
        .collect();
    let cost_ceiling = blocks.iter().map(|b| 2 * b.k_eff * b.repetitions).sum();
    Ok(Arc::new(Mod3Protocol {
        blocks,
        info: ProtocolInfo {
            family: Family::Mod3,
            n,
            k,
            epsilon,
            simultaneous: true,
            randomized: true,
            cost_ceiling,
        },
    }))
}

/// Virtual row of `row` (bit `j` is virtual column `j`).
fn virtual_row(row: &[u8], k_eff: usize) -> u64 {
    let mut v = 0u64;
    for (c, &b) in row.iter().enumerate() {
        let j = c.min(k_eff - 1);
        v ^= (b as u64) << j;
    }
    v
}

fn bits_of(v: u64, k: usize) -> Vec<bool> {
    (0..k).map(|i| v >> i & 1 == 1).collect()
}

/// Per-(block, repetition) draw of the point `u`.
#[derive(Clone, Debug)]
struct Draw {
    u: Vec<bool>,
    by_owner: Vec<Vec<(u8, u64)>>,
}

impl Draw {
    fn new(u: Vec<bool>) -> Self {
        let by_owner = monomials_by_owner(&u);
        Self { u, by_owner }
    }
}

/// Distribution of a GF(3) value.
type Dist3 = [BigRational; 3];

fn zero3() -> Dist3 {
    [BigRational::zero(), BigRational::zero(), BigRational::zero()]
}

impl Mod3Protocol {
    pub fn blocks(&self) -> &[Mod3Block] {
        &self.blocks
    }

    /// Bits of one unamplified run summed over blocks: `2 k_eff` per block.
    pub fn base_cost(&self) -> usize {
        self.blocks.iter().map(|b| 2 * b.k_eff).sum()
    }

    /// Session with explicit points, indexed `[block][repetition]`.
    pub fn session_with_points(&self, points: Vec<Vec<Vec<bool>>>) -> Result<Mod3Session<'_>> {
        if points.len() != self.blocks.len() {
            return Err(Error::InvalidParameter("one point list per block".into()));
        }
        let mut draws = Vec::with_capacity(points.len());
        for (block, us) in self.blocks.iter().zip(points) {
            if us.len() != block.repetitions || us.iter().any(|u| u.len() != block.k_eff) {
                return Err(Error::InvalidParameter(format!(
                    "block needs {} points of length {}",
                    block.repetitions, block.k_eff
                )));
            }
            draws.push(us.into_iter().map(Draw::new).collect());
        }
        Ok(Mod3Session { proto: self, draws })
    }

    fn block_virtual_rows(&self, x: &InputMatrix, b: usize) -> Vec<u64> {
        let block = &self.blocks[b];
        block.rows.clone().map(|r| virtual_row(x.row(r), block.k_eff)).collect()
    }

    /// Probability that one draw of `u` in block `b` equals some virtual row.
    pub fn collision_probability(&self, x: &InputMatrix, b: usize) -> Result<BigRational> {
        x.check_dims(self.info.n, self.info.k)?;
        let mut rows = self.block_virtual_rows(x, b);
        rows.sort_unstable();
        rows.dedup();
        Ok(BigRational::new(
            BigInt::from(rows.len()),
            BigInt::from(BigUint::one() << self.blocks[b].k_eff),
        ))
    }

    /// Distribution of the GF(3) block sum reported by a single draw.
    fn single_draw_distribution(&self, x: &InputMatrix, b: usize) -> (u8, Dist3) {
        let (truth, weight) = self.single_draw_weights(x, b);
        let den = BigInt::from(BigUint::one() << self.blocks[b].k_eff);
        (truth, weight.map(|w| BigRational::new(BigInt::from(w), den.clone())))
    }

    /// Number of the `2^k_eff` points that make a single draw report each value.
    fn single_draw_weights(&self, x: &InputMatrix, b: usize) -> (u8, [u64; 3]) {
        let k_eff = self.blocks[b].k_eff;
        let rows = self.block_virtual_rows(x, b);
        let truth = (rows.iter().filter(|v| v.count_ones() % 2 == 1).count() % 3) as u8;
        let mut sorted = rows.clone();
        sorted.sort_unstable();
        let mut weight = [0u64; 3];
        weight[truth as usize] = 1u64 << k_eff;
        for (v, group) in &sorted.iter().chunk_by(|&&v| v) {
            let m = group.count();
            let vb = bits_of(v, k_eff);
            let parity = (v.count_ones() % 2) as u8;
            let delta = (p_u_eval(&vb, &vb) + 3 - parity) % 3;
            let off = ((m % 3) as u8 * delta) % 3;
            if off != 0 {
                weight[truth as usize] -= 1;
                weight[((truth + off) % 3) as usize] += 1;
            }
        }
        (truth, weight)
    }

    /// Probability over one unamplified draw per block that the base run,
    /// with block sums added, answers wrongly.
    pub fn base_failure(&self, x: &InputMatrix) -> Result<BigRational> {
        x.check_dims(self.info.n, self.info.k)?;
        let mut truth = 0u8;
        let mut acc = [BigUint::one(), BigUint::zero(), BigUint::zero()];
        let mut bits = 0;
        for b in 0..self.blocks.len() {
            let (t, w) = self.single_draw_weights(x, b);
            truth = (truth + t) % 3;
            bits += self.blocks[b].k_eff;
            let mut next = [BigUint::zero(), BigUint::zero(), BigUint::zero()];
            for (i, a) in acc.iter().enumerate() {
                for (j, &c) in w.iter().enumerate() {
                    if c != 0 {
                        next[(i + j) % 3] += a * c;
                    }
                }
            }
            acc = next;
        }
        let wrong: BigUint = (0..3).filter(|&v| (v == 0) != (truth == 0)).map(|v| &acc[v]).sum();
        Ok(BigRational::new(wrong.into(), (BigUint::one() << bits).into()))
    }

    fn total_distribution<F>(&self, x: &InputMatrix, per_block: F) -> (u8, Dist3)
    where
        F: Fn(&Self, &InputMatrix, usize) -> (u8, Dist3),
    {
        let mut truth = 0u8;
        let mut acc = zero3();
        acc[0] = BigRational::one();
        for b in 0..self.blocks.len() {
            let (t, d) = per_block(self, x, b);
            truth = (truth + t) % 3;
            let mut next = zero3();
            for (i, a) in acc.iter().enumerate() {
                for (j, p) in d.iter().enumerate() {
                    next[(i + j) % 3] += a * p;
                }
            }
            acc = next;
        }
        (truth, acc)
    }

    /// Exact probability over the tape that the protocol answers wrongly on `x`.
    pub fn exact_failure(&self, x: &InputMatrix) -> Result<BigRational> {
        x.check_dims(self.info.n, self.info.k)?;
        if self.blocks.len() == 1 {
            let t = self.blocks[0].repetitions;
            return Ok(majority_tail(t, &self.base_failure(x)?));
        }
        let (truth, dist) = self.total_distribution(x, |p, x, b| {
            let (t, d) = p.single_draw_distribution(x, b);
            (t, plurality_distribution(&d, p.blocks[b].repetitions))
        });
        Ok(wrong_answer(truth, &dist))
    }
}

/// Probability that `F = [sum == 0]` is misreported.
fn wrong_answer(truth: u8, dist: &Dist3) -> BigRational {
    let mut p = BigRational::zero();
    for (v, w) in dist.iter().enumerate() {
        if (v == 0) != (truth == 0) {
            p += w;
        }
    }
    p
}

/// Distribution of the plurality of `t` independent draws from `d`, ties
/// broken toward the smallest value.
fn plurality_distribution(d: &Dist3, t: usize) -> Dist3 {
    let mut out = zero3();
    for c0 in 0..=t {
        for c1 in 0..=t - c0 {
            let c2 = t - c0 - c1;
            let coeff = binom(t as u64, c0 as u64) * binom((t - c0) as u64, c1 as u64);
            let p = BigRational::from_integer(coeff.into())
                * pow(&d[0], c0)
                * pow(&d[1], c1)
                * pow(&d[2], c2);
            out[plurality(&[c0, c1, c2])] += p;
        }
    }
    out
}

fn plurality(counts: &[usize; 3]) -> usize {
    let mut best = 0;
    for v in 1..3 {
        if counts[v] > counts[best] {
            best = v;
        }
    }
    best
}

/// Distinct virtual rows over `2^k_eff` for the single-block regime `2^k >= 3n`.
pub fn exact_mod3_error(x: &InputMatrix, n: usize, k: usize) -> Result<BigRational> {
    x.check_dims(n, k)?;
    let l = ceil_log2(3 * n as u128);
    if k < l {
        return Err(Error::Infeasible(format!(
            "k = {k} < ceil(log2 3n) = {l}: several blocks are needed"
        )));
    }
    let mut rows: Vec<u64> = x.rows().map(|r| virtual_row(r, l)).collect();
    rows.sort_unstable();
    rows.dedup();
    Ok(BigRational::new(
        BigInt::from(rows.len()),
        BigInt::from(BigUint::one() << l),
    ))
}

pub struct Mod3Session<'a> {
    proto: &'a Mod3Protocol,
    draws: Vec<Vec<Draw>>,
}

impl Mod3Session<'_> {
    /// The points drawn, indexed `[block][repetition]`.
    pub fn points(&self) -> Vec<Vec<&[bool]>> {
        self.draws
            .iter()
            .map(|ds| ds.iter().map(|d| d.u.as_slice()).collect())
            .collect()
    }

    /// Reported GF(3) sums, indexed `[block][repetition]`.
    pub fn reported_sums(&self, board: &Transcript) -> Vec<Vec<u8>> {
        let blocks = &self.proto.blocks;
        let mut offsets = vec![0usize; self.proto.info.k];
        let mut out = Vec::with_capacity(blocks.len());
        for block in blocks {
            let mut sums = vec![0u8; block.repetitions];
            for (p, offset) in offsets.iter_mut().enumerate().take(block.k_eff) {
                let bits = board.bits_of(p);
                for s in sums.iter_mut() {
                    *s = (*s + decode(&bits[*offset..*offset + 2])) % 3;
                    *offset += 2;
                }
            }
            out.push(sums);
        }
        out
    }

    /// Player's virtual-row view of a block: its own virtual column reads 0.
    fn visible_virtual_rows(&self, view: &View<'_>, block: &Mod3Block) -> Vec<u64> {
        let me = view.player();
        block
            .rows
            .clone()
            .map(|r| {
                let mut v = 0u64;
                for c in view.visible_columns() {
                    let j = c.min(block.k_eff - 1);
                    if j != me {
                        v ^= (view.get(r, c).expect("visible") as u64) << j;
                    }
                }
                v
            })
            .collect()
    }
}

impl Session for Mod3Session<'_> {
    fn schedule(&self) -> Vec<(usize, usize)> {
        let top = self.proto.blocks.iter().map(|b| b.k_eff).max().unwrap_or(0);
        (0..top)
            .map(|p| {
                let len = self
                    .proto
                    .blocks
                    .iter()
                    .filter(|b| p < b.k_eff)
                    .map(|b| 2 * b.repetitions)
                    .sum();
                (p, len)
            })
            .collect()
    }

    fn message(&self, view: &View<'_>, _board: &Transcript) -> Vec<bool> {
        let me = view.player();
        let mut out = Vec::new();
        for (block, draws) in self.proto.blocks.iter().zip(&self.draws) {
            if me >= block.k_eff {
                continue;
            }
            let rows = self.visible_virtual_rows(view, block);
            for d in draws {
                let mut s = 0u32;
                for &v in &rows {
                    for &(c, mask) in &d.by_owner[me] {
                        if v & mask == mask {
                            s += c as u32;
                        }
                    }
                }
                out.extend(encode((s % 3) as u8));
            }
        }
        out
    }

    fn output(&self, board: &Transcript) -> bool {
        let sums = self.reported_sums(board);
        if sums.len() == 1 {
            let t = sums[0].len();
            let ones = sums[0].iter().filter(|&&s| s == 0).count();
            return 2 * ones > t;
        }
        let total: usize = sums
            .iter()
            .map(|reps| {
                let mut counts = [0usize; 3];
                for &s in reps {
                    counts[s as usize] += 1;
                }
                plurality(&counts)
            })
            .sum();
        total.is_multiple_of(3)
    }
}

impl Protocol for Mod3Protocol {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }

    fn session<'a>(&'a self, tape: &RandomTape) -> Box<dyn Session + 'a> {
        let draws = self
            .blocks
            .iter()
            .enumerate()
            .map(|(b, block)| {
                let bt = tape.child("block", b as u64);
                (0..block.repetitions)
                    .map(|r| {
                        let mut rng = bt.stream("mod3-point", r as u64);
                        Draw::new((0..block.k_eff).map(|_| rng.gen_bool(0.5)).collect())
                    })
                    .collect()
            })
            .collect();
        Box::new(Mod3Session { proto: self, draws })
    }
}
