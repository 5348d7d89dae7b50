use std::fmt;

use serde::Serialize;

/// One blackboard write.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Entry {
    pub player: usize,
    pub bits: Vec<bool>,
}

/// The public blackboard after an execution.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Transcript {
    entries: Vec<Entry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<Entry>) -> Self {
        Self { entries }
    }

    pub fn push(&mut self, player: usize, bits: Vec<bool>) {
        self.entries.push(Entry { player, bits });
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn cost_bits(&self) -> usize {
        self.entries.iter().map(|e| e.bits.len()).sum()
    }

    /// The bits written by `player`, or an empty slice if it stayed silent.
    pub fn bits_of(&self, player: usize) -> &[bool] {
        self.entries
            .iter()
            .find(|e| e.player == player)
            .map_or(&[], |e| &e.bits)
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}:", e.player)?;
            for &b in &e.bits {
                f.write_str(if b { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}
