//! Reference evaluators. `None` stands for "undefined" on partial functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::InputMatrix;

/// 1 iff the number of all-ones rows is odd.
pub fn eval_gip(x: &InputMatrix) -> bool {
    x.all_ones_rows() % 2 == 1
}

/// 1 iff no row is all ones.
pub fn eval_disj(x: &InputMatrix) -> bool {
    x.all_ones_rows() == 0
}

/// Promise disjointness: defined only with at most one all-ones row.
pub fn eval_udisj(x: &InputMatrix) -> Option<bool> {
    match x.all_ones_rows() {
        0 => Some(true),
        1 => Some(false),
        _ => None,
    }
}

/// Sum of row parities modulo 3.
pub fn row_parity_sum_mod3(x: &InputMatrix) -> u8 {
    let odd = x.rows().filter(|r| r.iter().fold(0, |a, &b| a ^ b) == 1).count();
    (odd % 3) as u8
}

/// 1 iff the number of odd-parity rows is divisible by 3.
pub fn eval_mod3xor(x: &InputMatrix) -> bool {
    row_parity_sum_mod3(x) == 0
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Outer {
    Xor,
    And,
    /// AND restricted to inputs with at most one zero.
    UAnd,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Inner {
    Gip,
    Disj,
    UDisj,
}

impl Inner {
    pub fn eval(self, x: &InputMatrix) -> Option<bool> {
        match self {
            Inner::Gip => Some(eval_gip(x)),
            Inner::Disj => Some(eval_disj(x)),
            Inner::UDisj => eval_udisj(x),
        }
    }
}

impl Outer {
    pub fn eval(self, bits: &[bool]) -> Option<bool> {
        match self {
            Outer::Xor => Some(bits.iter().filter(|&&b| b).count() % 2 == 1),
            Outer::And => Some(bits.iter().all(|&b| b)),
            Outer::UAnd => {
                let zeros = bits.iter().filter(|&&b| !b).count();
                (zeros <= 1).then_some(zeros == 0)
            }
        }
    }
}

/// `outer(inner(X_1), ..., inner(X_m))`, undefined if any inner value is
/// undefined or the inner values fall outside the outer domain.
pub fn eval_composed(outer: Outer, blocks: &[InputMatrix], inner: Inner) -> Result<Option<bool>> {
    let k = blocks.first().ok_or(Error::EmptyMatrix { n: 0, k: 0 })?.k();
    if blocks.iter().any(|b| b.k() != k) {
        return Err(Error::MismatchedBlocks);
    }
    let vals: Option<Vec<bool>> = blocks.iter().map(|b| inner.eval(b)).collect();
    Ok(vals.and_then(|v| outer.eval(&v)))
}

type Evaluator = Arc<dyn Fn(&InputMatrix) -> Option<bool> + Send + Sync>;

/// A named, possibly partial, Boolean function on `n x k` matrices.
#[derive(Clone)]
pub struct PartialFunctionSpec {
    name: String,
    n: usize,
    k: usize,
    eval: Evaluator,
}

impl fmt::Debug for PartialFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PartialFunctionSpec({} on {}x{})", self.name, self.n, self.k)
    }
}

impl PartialFunctionSpec {
    pub fn custom<F>(name: impl Into<String>, n: usize, k: usize, f: F) -> Self
    where
        F: Fn(&InputMatrix) -> Option<bool> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            n,
            k,
            eval: Arc::new(f),
        }
    }

    pub fn gip(n: usize, k: usize) -> Self {
        Self::custom("gip", n, k, |x| Some(eval_gip(x)))
    }

    pub fn disj(n: usize, k: usize) -> Self {
        Self::custom("disj", n, k, |x| Some(eval_disj(x)))
    }

    pub fn udisj(n: usize, k: usize) -> Self {
        Self::custom("udisj", n, k, eval_udisj)
    }

    pub fn mod3xor(n: usize, k: usize) -> Self {
        Self::custom("mod3", n, k, |x| Some(eval_mod3xor(x)))
    }

    /// `outer` applied to `m` stacked blocks of `block_rows` rows each.
    pub fn composed(outer: Outer, inner: Inner, m: usize, block_rows: usize, k: usize) -> Self {
        let name = format!("{outer:?}_{m}({inner:?})").to_lowercase();
        Self::custom(name, m * block_rows, k, move |x| {
            let blocks = x.split_rows(block_rows).expect("stacked shape");
            eval_composed(outer, &blocks, inner).expect("shared k")
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eval(&self, x: &InputMatrix) -> Result<Option<bool>> {
        x.check_dims(self.n, self.k)?;
        Ok((self.eval)(x))
    }

    pub fn in_domain(&self, x: &InputMatrix) -> Result<bool> {
        Ok(self.eval(x)?.is_some())
    }
}
