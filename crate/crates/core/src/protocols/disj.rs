use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use super::{check_epsilon, gip_protocol, pow2_at_least, GipProtocol};
use crate::combinatorics::{binom, pow};
use crate::error::{Error, Result};
use crate::functions::{eval_disj, eval_gip};
use crate::matrix::InputMatrix;
use crate::model::{
    Combine, ComposedSession, ConstantSession, Family, Part, Protocol, ProtocolInfo, Session,
};
use crate::tape::RandomTape;

/// Error each inner GIP run is amplified to.
pub const DISJ_INNER_ERROR: f64 = 1.0 / 16.0;
/// Declare "disjoint" when at least this fraction of inner runs answer 0.
pub const DISJ_THRESHOLD: (usize, usize) = (3, 4);
/// Half the gap between the zero-answer rates on either side of the threshold.
const GAP: f64 = 3.0 / 16.0;

/// Largest `n` for which [`DisjProtocol::exact_failure`] enumerates subsets.
pub const DISJ_EXACT_MAX_ROWS: usize = 12;

#[derive(Debug)]
pub struct DisjProtocol {
    repetitions: usize,
    /// `inner[s]` runs on `s`-row submatrices; `inner[0]` is unused.
    inner: Vec<Option<Arc<GipProtocol>>>,
    info: ProtocolInfo,
}

/// `ceil(ln(1/epsilon) / (2 (3/16)^2))`, at least 1.
pub fn disj_repetitions(epsilon: f64) -> usize {
    ((1.0 / epsilon).ln() / (2.0 * GAP * GAP)).ceil().max(1.0) as usize
}

/// Set disjointness by thresholding the zero rate of GIP on random row subsets.
pub fn disj_protocol(n: usize, k: usize, epsilon: f64) -> Result<Arc<DisjProtocol>> {
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix { n, k });
    }
    if !pow2_at_least(k, n as u128) {
        return Err(Error::Infeasible(format!("2^{k} < n = {n}")));
    }
    check_epsilon(epsilon)?;
    let repetitions = disj_repetitions(epsilon);
    let mut inner = vec![None];
    for s in 1..=n {
        inner.push(Some(gip_protocol(s, k, DISJ_INNER_ERROR)?));
    }
    let worst = inner
        .iter()
        .flatten()
        .map(|p| p.info().cost_ceiling)
        .max()
        .unwrap_or(0);
    Ok(Arc::new(DisjProtocol {
        repetitions,
        inner,
        info: ProtocolInfo {
            family: Family::Disj,
            n,
            k,
            epsilon,
            simultaneous: true,
            randomized: true,
            cost_ceiling: repetitions * worst,
        },
    }))
}

impl DisjProtocol {
    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn inner(&self, rows: usize) -> Option<&Arc<GipProtocol>> {
        self.inner.get(rows).and_then(Option::as_ref)
    }

    fn check_exact(&self, x: &InputMatrix) -> Result<()> {
        x.check_dims(self.info.n, self.info.k)?;
        if self.info.n > DISJ_EXACT_MAX_ROWS {
            return Err(Error::CapExceeded {
                needed: 1u128 << self.info.n,
                cap: 1u128 << DISJ_EXACT_MAX_ROWS,
            });
        }
        Ok(())
    }

    /// Probability that a single repetition answers 0 on `x`.
    pub fn zero_answer_probability(&self, x: &InputMatrix) -> Result<BigRational> {
        self.check_exact(x)?;
        let n = self.info.n;
        let mut total = BigRational::zero();
        for subset in 0u32..1 << n {
            if subset == 0 {
                total += BigRational::one();
                continue;
            }
            let rows: Vec<usize> = (0..n).filter(|&r| subset >> r & 1 == 1).collect();
            let sub = x.select_rows(&rows).expect("nonempty");
            let f = self.inner[rows.len()].as_ref().expect("inner").exact_failure(&sub)?;
            total += if eval_gip(&sub) { f } else { BigRational::one() - f };
        }
        Ok(total / BigRational::from_integer(BigInt::from(1u64 << n)))
    }

    /// Exact probability over the tape that the protocol answers wrongly on `x`.
    pub fn exact_failure(&self, x: &InputMatrix) -> Result<BigRational> {
        let p0 = self.zero_answer_probability(x)?;
        let t = self.repetitions;
        let (num, den) = DISJ_THRESHOLD;
        let need = (num * t).div_ceil(den);
        let q = BigRational::one() - &p0;
        let mut says_disjoint = BigRational::zero();
        for z in need..=t {
            let c = BigRational::from_integer(binom(t as u64, z as u64).into());
            says_disjoint += c * pow(&p0, z) * pow(&q, t - z);
        }
        Ok(if eval_disj(x) {
            BigRational::one() - says_disjoint
        } else {
            says_disjoint
        })
    }
}

impl Protocol for DisjProtocol {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }

    fn session<'a>(&'a self, tape: &RandomTape) -> Box<dyn Session + 'a> {
        let n = self.info.n;
        let parts = (0..self.repetitions)
            .map(|r| {
                let mut rng = tape.stream("subset", r as u64);
                let rows: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                if rows.is_empty() {
                    Part {
                        rows: None,
                        session: Box::new(ConstantSession(false)),
                    }
                } else {
                    let inner = self.inner[rows.len()].as_ref().expect("inner");
                    Part {
                        session: inner.session(&tape.child("rep", r as u64)),
                        rows: Some(rows),
                    }
                }
            })
            .collect();
        let (num, den) = DISJ_THRESHOLD;
        Box::new(ComposedSession::new(
            self.info.k,
            parts,
            Combine::ZeroFractionAtLeast { num, den },
        ))
    }
}
