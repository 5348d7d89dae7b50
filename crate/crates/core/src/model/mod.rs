//! The number-on-the-forehead execution model.
//!
//! A [`Protocol`] is an immutable description. Binding it to a
//! [`RandomTape`] yields a [`Session`], which fixes every public random
//! choice. Each scheduled player writes one entry computed from its
//! [`View`], the session and the board so far. Simultaneous protocols ignore
//! the board. The output is a function of the finished transcript and the
//! session.

mod compose;
mod decompose;
mod transcript;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{InputMatrix, View};
use crate::tape::RandomTape;

pub use compose::{amplify, Combine, ComposedSession, Part};
pub use decompose::{decompose_to_cylinders, DEFAULT_DECOMPOSE_CAP};
pub use transcript::{Entry, Transcript};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gip,
    Disj,
    Mod3,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gip => "gip",
            Family::Disj => "disj",
            Family::Mod3 => "mod3",
            Family::Custom => "custom",
        })
    }
}

/// Static facts about a protocol.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct ProtocolInfo {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub simultaneous: bool,
    pub randomized: bool,
    /// Largest number of bits any execution can write.
    pub cost_ceiling: usize,
}

/// One execution's public state after the tape has been drawn.
pub trait Session: Send + Sync {
    /// Speaking players and their message lengths, in emission order.
    /// Depends only on the tape.
    fn schedule(&self) -> Vec<(usize, usize)>;

    /// What `view.player()` writes, given the entries already on the board.
    fn message(&self, view: &View<'_>, board: &Transcript) -> Vec<bool>;

    /// The protocol's answer, read off the blackboard.
    fn output(&self, board: &Transcript) -> bool;
}

pub trait Protocol: Send + Sync + fmt::Debug {
    fn info(&self) -> &ProtocolInfo;
    fn session<'a>(&'a self, tape: &RandomTape) -> Box<dyn Session + 'a>;
}

/// Shared handle to a runnable protocol.
pub type ProtocolSpec = Arc<dyn Protocol>;

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ProtocolOutcome {
    pub output: bool,
    pub transcript: Transcript,
    pub cost_bits: usize,
}

/// Runs `p` on `x` with public randomness `tape`.
pub fn run(p: &dyn Protocol, x: &InputMatrix, tape: &RandomTape) -> Result<ProtocolOutcome> {
    let info = p.info();
    x.check_dims(info.n, info.k)?;
    let session = p.session(tape);
    execute(session.as_ref(), x)
}

/// Drives an already-bound session on `x`.
pub fn execute(session: &dyn Session, x: &InputMatrix) -> Result<ProtocolOutcome> {
    let mut board = Transcript::new();
    for (player, len) in session.schedule() {
        let view = x.view(player)?;
        let bits = session.message(&view, &board);
        if bits.len() != len {
            return Err(Error::Protocol(format!(
                "player {player} wrote {} bits, scheduled {len}",
                bits.len()
            )));
        }
        board.push(player, bits);
    }
    let output = session.output(&board);
    let cost_bits = board.cost_bits();
    Ok(ProtocolOutcome {
        output,
        transcript: board,
        cost_bits,
    })
}

/// Recomputes every message against a board whose other entries have been
/// flipped bitwise, and reports whether every message survived unchanged.
pub fn replay_is_stable(session: &dyn Session, x: &InputMatrix) -> Result<bool> {
    let honest = execute(session, x)?;
    let entries = honest.transcript.entries();
    for (idx, entry) in entries.iter().enumerate() {
        let tampered = Transcript::from_entries(
            entries[..idx]
                .iter()
                .map(|e| Entry {
                    player: e.player,
                    bits: e.bits.iter().map(|b| !b).collect(),
                })
                .collect(),
        );
        if session.message(&x.view(entry.player)?, &tampered) != entry.bits {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A protocol that writes nothing and always answers `value`.
#[derive(Debug, Clone)]
pub struct Constant {
    value: bool,
    info: ProtocolInfo,
}

impl Constant {
    pub fn new(n: usize, k: usize, value: bool) -> Self {
        Self {
            value,
            info: ProtocolInfo {
                family: Family::Custom,
                n,
                k,
                epsilon: 0.0,
                simultaneous: true,
                randomized: false,
                cost_ceiling: 0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantSession(pub bool);

impl Session for ConstantSession {
    fn schedule(&self) -> Vec<(usize, usize)> {
        Vec::new()
    }
    fn message(&self, _view: &View<'_>, _board: &Transcript) -> Vec<bool> {
        Vec::new()
    }
    fn output(&self, _board: &Transcript) -> bool {
        self.0
    }
}

impl Protocol for Constant {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }
    fn session<'a>(&'a self, _tape: &RandomTape) -> Box<dyn Session + 'a> {
        Box::new(ConstantSession(self.value))
    }
}

/// Deterministic protocol in which the listed players announce a single
/// visible cell each and the output is a fixed Boolean function of the
/// announcements. Used for small hand-built examples.
#[derive(Clone)]
pub struct Announce {
    cells: Vec<(usize, usize, usize)>,
    rule: Arc<dyn Fn(&[bool]) -> bool + Send + Sync>,
    info: ProtocolInfo,
}

impl fmt::Debug for Announce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Announce").field("cells", &self.cells).finish()
    }
}

impl Announce {
    /// `cells` lists `(player, row, col)`; each player may appear once and
    /// must not announce its own column.
    pub fn new<F>(n: usize, k: usize, cells: Vec<(usize, usize, usize)>, rule: F) -> Result<Self>
    where
        F: Fn(&[bool]) -> bool + Send + Sync + 'static,
    {
        for (idx, &(p, r, c)) in cells.iter().enumerate() {
            if p >= k || c >= k {
                return Err(Error::PlayerOutOfRange { player: p.max(c), k });
            }
            if r >= n {
                return Err(Error::InvalidParameter(format!("row {r} out of range")));
            }
            if p == c {
                return Err(Error::InvalidParameter(format!(
                    "player {p} cannot see column {c}"
                )));
            }
            if cells[..idx].iter().any(|&(q, _, _)| q == p) {
                return Err(Error::InvalidParameter(format!("player {p} listed twice")));
            }
        }
        let cost = cells.len();
        Ok(Self {
            cells,
            rule: Arc::new(rule),
            info: ProtocolInfo {
                family: Family::Custom,
                n,
                k,
                epsilon: 0.0,
                simultaneous: true,
                randomized: false,
                cost_ceiling: cost,
            },
        })
    }
}

struct AnnounceSession<'a>(&'a Announce);

impl Session for AnnounceSession<'_> {
    fn schedule(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<_> = self.0.cells.iter().map(|&(p, _, _)| (p, 1)).collect();
        s.sort_unstable();
        s
    }
    fn message(&self, view: &View<'_>, _board: &Transcript) -> Vec<bool> {
        let &(_, r, c) = self
            .0
            .cells
            .iter()
            .find(|&&(p, _, _)| p == view.player())
            .expect("scheduled player");
        vec![view.get(r, c).expect("visible cell") == 1]
    }
    fn output(&self, board: &Transcript) -> bool {
        let bits: Vec<bool> = self
            .0
            .cells
            .iter()
            .map(|&(p, _, _)| board.bits_of(p).first().copied().unwrap_or(false))
            .collect();
        (self.0.rule)(&bits)
    }
}

impl Protocol for Announce {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }
    fn session<'a>(&'a self, _tape: &RandomTape) -> Box<dyn Session + 'a> {
        Box::new(AnnounceSession(self))
    }
}
