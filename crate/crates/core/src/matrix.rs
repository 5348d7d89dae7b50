//! Boolean input matrices, per-player views and the shared text format.
//!
//! Rows are indexed `0..n` and columns (players) `0..k`. Column `i` is the
//! input written on player `i`'s forehead.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An `n x k` Boolean matrix with `n, k >= 1`, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct InputMatrix {
    n: usize,
    k: usize,
    bits: Vec<u8>,
}

impl InputMatrix {
    pub fn new(n: usize, k: usize, bits: Vec<u8>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::EmptyMatrix { n, k });
        }
        if bits.len() != n * k {
            return Err(Error::WrongLength {
                expected: n * k,
                got: bits.len(),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidEntry(b));
        }
        Ok(Self { n, k, bits })
    }

    pub fn zeros(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, vec![0; n * k])
    }

    pub fn ones(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, vec![1; n * k])
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.as_ref().len());
        let mut bits = Vec::with_capacity(n * k);
        for r in rows {
            let r = r.as_ref();
            if r.len() != k {
                return Err(Error::WrongLength {
                    expected: k,
                    got: r.len(),
                });
            }
            bits.extend_from_slice(r);
        }
        Self::new(n, k, bits)
    }

    /// Matrix whose row-major bit string, read as a binary number with
    /// entry `(0,0)` most significant, equals `index`.
    pub fn from_index(n: usize, k: usize, index: u64) -> Result<Self> {
        let cells = n * k;
        if cells > 64 || (cells < 64 && index >> cells != 0) {
            return Err(Error::InvalidParameter(format!(
                "index {index} does not fit a {n}x{k} matrix"
            )));
        }
        let bits = (0..cells)
            .map(|c| ((index >> (cells - 1 - c)) & 1) as u8)
            .collect();
        Self::new(n, k, bits)
    }

    /// Inverse of [`InputMatrix::from_index`]; requires `n * k <= 64`.
    pub fn index(&self) -> u64 {
        assert!(self.bits.len() <= 64, "matrix too large to index");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// All `n x k` matrices in row-major numeric order.
    pub fn enumerate(n: usize, k: usize) -> impl Iterator<Item = InputMatrix> {
        let cells = n * k;
        assert!(cells < 64, "domain too large to enumerate");
        (0..1u64 << cells).map(move |i| InputMatrix::from_index(n, k, i).expect("in range"))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.k + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.k + col] = value as u8;
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.bits[row * self.k..(row + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks(self.k)
    }

    pub fn column(&self, col: usize) -> Vec<u8> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn row_weight(&self, row: usize) -> usize {
        self.row(row).iter().map(|&b| b as usize).sum()
    }

    pub fn all_ones_rows(&self) -> usize {
        self.rows().filter(|r| r.iter().all(|&b| b == 1)).count()
    }

    /// Submatrix keeping the listed rows in the given order; `None` if empty.
    pub fn select_rows(&self, rows: &[usize]) -> Option<InputMatrix> {
        if rows.is_empty() {
            return None;
        }
        let bits = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        Some(InputMatrix {
            n: rows.len(),
            k: self.k,
            bits,
        })
    }

    /// Vertical concatenation of blocks sharing the same column count.
    pub fn stack(blocks: &[InputMatrix]) -> Result<InputMatrix> {
        let k = blocks.first().ok_or(Error::EmptyMatrix { n: 0, k: 0 })?.k;
        if blocks.iter().any(|b| b.k != k) {
            return Err(Error::MismatchedBlocks);
        }
        let bits = blocks.iter().flat_map(|b| b.bits.iter().copied()).collect();
        InputMatrix::new(blocks.iter().map(|b| b.n).sum(), k, bits)
    }

    /// Splits into consecutive blocks of `rows_per_block` rows each.
    pub fn split_rows(&self, rows_per_block: usize) -> Result<Vec<InputMatrix>> {
        if rows_per_block == 0 || !self.n.is_multiple_of(rows_per_block) {
            return Err(Error::InvalidParameter(format!(
                "cannot split {} rows into blocks of {rows_per_block}",
                self.n
            )));
        }
        Ok((0..self.n / rows_per_block)
            .map(|b| {
                let rows: Vec<usize> = (b * rows_per_block..(b + 1) * rows_per_block).collect();
                self.select_rows(&rows).expect("nonempty")
            })
            .collect())
    }

    /// The view of player `player`: every column except its own.
    pub fn view(&self, player: usize) -> Result<View<'_>> {
        if player >= self.k {
            return Err(Error::PlayerOutOfRange { player, k: self.k });
        }
        Ok(View {
            source: Cow::Borrowed(self),
            player,
        })
    }

    pub fn check_dims(&self, n: usize, k: usize) -> Result<()> {
        if self.n != n || self.k != k {
            return Err(Error::DimensionMismatch {
                expected_n: n,
                expected_k: k,
                n: self.n,
                k: self.k,
            });
        }
        Ok(())
    }

    /// Packs every column except `player` the way [`View::key`] does.
    pub fn view_key(&self, player: usize) -> u64 {
        let mut key = 0u64;
        let mut pos = 0;
        for c in (0..self.k).filter(|&c| c != player) {
            for r in 0..self.n {
                key |= (self.get(r, c) as u64) << (pos * self.n + r);
            }
            pos += 1;
        }
        key
    }

    /// A matrix whose view for `player` packs to `key`; column `player` is zero.
    pub fn from_view_key(n: usize, k: usize, player: usize, key: u64) -> Result<Self> {
        if player >= k {
            return Err(Error::PlayerOutOfRange { player, k });
        }
        let mut m = Self::zeros(n, k)?;
        for (pos, c) in (0..k).filter(|&c| c != player).enumerate() {
            for r in 0..n {
                m.set(r, c, (key >> (pos * n + r)) & 1 == 1);
            }
        }
        Ok(m)
    }

    /// Renders the shared text format: `"n k"` then one line of `0`/`1` per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.k);
        for r in self.rows() {
            s.extend(r.iter().map(|&b| if b == 1 { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for InputMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for InputMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [n, k] = dims[..] else {
            return Err(Error::Parse(format!("header must be \"n k\", got {header:?}")));
        };
        let mut bits = Vec::with_capacity(n * k);
        let mut rows = 0;
        for line in lines {
            if line.len() != k {
                return Err(Error::Parse(format!(
                    "row {rows} has {} characters, expected {k}",
                    line.len()
                )));
            }
            for c in line.chars() {
                bits.push(match c {
                    '0' => 0,
                    '1' => 1,
                    other => return Err(Error::Parse(format!("invalid character {other:?}"))),
                });
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse(format!("expected {n} rows, found {rows}")));
        }
        InputMatrix::new(n, k, bits)
    }
}

/// What one player sees: the source matrix minus the player's own column.
///
/// Only visible entries are reachable through this type; reading the hidden
/// column yields `None`.
#[derive(Clone, Debug)]
pub struct View<'a> {
    source: Cow<'a, InputMatrix>,
    player: usize,
}

impl<'a> View<'a> {
    pub fn player(&self) -> usize {
        self.player
    }

    pub fn n(&self) -> usize {
        self.source.n
    }

    pub fn k(&self) -> usize {
        self.source.k
    }

    pub fn get(&self, row: usize, col: usize) -> Option<u8> {
        (col != self.player).then(|| self.source.get(row, col))
    }

    pub fn visible_columns(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.source.k).filter(move |&c| c != self.player)
    }

    pub fn column(&self, col: usize) -> Option<Vec<u8>> {
        (col != self.player).then(|| self.source.column(col))
    }

    /// Builds a view of a derived matrix; `cell(row, col)` may only consult
    /// this view, and the derived value in `hidden` is never exposed.
    pub fn derive<F>(&self, n: usize, k: usize, hidden: usize, mut cell: F) -> Result<View<'static>>
    where
        F: FnMut(&View<'a>, usize, usize) -> u8,
    {
        let mut bits = Vec::with_capacity(n * k);
        for r in 0..n {
            for c in 0..k {
                bits.push(if c == hidden { 0 } else { cell(self, r, c) });
            }
        }
        let m = InputMatrix::new(n, k, bits)?;
        if hidden >= k {
            return Err(Error::PlayerOutOfRange { player: hidden, k });
        }
        Ok(View {
            source: Cow::Owned(m),
            player: hidden,
        })
    }

    /// The same player's view of the submatrix on `rows` (in order).
    pub fn restrict_rows(&self, rows: &[usize]) -> Result<View<'static>> {
        self.derive(rows.len(), self.k(), self.player, |v, r, c| {
            v.get(rows[r], c).expect("visible")
        })
    }

    /// Packs the visible columns (ascending, each `n` bits, row 0 lowest)
    /// into one integer; requires `n * (k - 1) <= 64`.
    pub fn key(&self) -> u64 {
        self.source.view_key(self.player)
    }
}
