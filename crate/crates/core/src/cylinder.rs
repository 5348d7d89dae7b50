//! Cylinder intersections: products of per-player Boolean tables where
//! player `i`'s table ignores column `i`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::InputMatrix;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CylinderIntersection {
    n: usize,
    k: usize,
    tables: BTreeMap<usize, Vec<bool>>,
}

impl CylinderIntersection {
    /// Number of entries in one player's table: `2^(n(k-1))`.
    pub fn table_len(n: usize, k: usize) -> Result<usize> {
        let bits = n * (k - 1);
        if bits >= 63 {
            return Err(Error::CapExceeded {
                needed: 1u128 << bits.min(127),
                cap: 1 << 62,
            });
        }
        Ok(1usize << bits)
    }

    /// The empty-set cylinder, identically 1.
    pub fn all_ones(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            tables: BTreeMap::new(),
        }
    }

    pub fn from_tables(n: usize, k: usize, tables: BTreeMap<usize, Vec<bool>>) -> Result<Self> {
        let len = Self::table_len(n, k)?;
        for (&p, t) in &tables {
            if p >= k {
                return Err(Error::PlayerOutOfRange { player: p, k });
            }
            if t.len() != len {
                return Err(Error::WrongLength {
                    expected: len,
                    got: t.len(),
                });
            }
        }
        Ok(Self { n, k, tables })
    }

    pub fn with_table(mut self, player: usize, table: Vec<bool>) -> Result<Self> {
        let mut single = BTreeMap::new();
        single.insert(player, table);
        let checked = Self::from_tables(self.n, self.k, single)?;
        self.tables.extend(checked.tables);
        Ok(self)
    }

    pub fn players(&self) -> Vec<usize> {
        self.tables.keys().copied().collect()
    }

    pub fn table(&self, player: usize) -> Option<&[bool]> {
        self.tables.get(&player).map(Vec::as_slice)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eval(&self, x: &InputMatrix) -> bool {
        self.tables.iter().all(|(&p, t)| t[x.view_key(p) as usize])
    }
}
