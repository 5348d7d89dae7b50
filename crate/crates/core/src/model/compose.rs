use std::sync::Arc;

use super::{Entry, Protocol, ProtocolInfo, ProtocolSpec, Session, Transcript};
use crate::combinatorics::majority_tail_f64;
use crate::error::{Error, Result};
use crate::matrix::View;
use crate::tape::RandomTape;

/// How the outputs of parallel parts become one answer.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Combine {
    Majority,
    Xor,
    /// 1 iff at least `num/den` of the parts answered 0.
    ZeroFractionAtLeast { num: usize, den: usize },
}

impl Combine {
    pub fn apply(&self, outputs: &[bool]) -> bool {
        let ones = outputs.iter().filter(|&&b| b).count();
        match *self {
            Combine::Majority => 2 * ones > outputs.len(),
            Combine::Xor => ones % 2 == 1,
            Combine::ZeroFractionAtLeast { num, den } => (outputs.len() - ones) * den >= num * outputs.len(),
        }
    }
}

/// A sub-execution on a subset of rows (all rows when `rows` is `None`).
pub struct Part<'a> {
    pub rows: Option<Vec<usize>>,
    pub session: Box<dyn Session + 'a>,
}

/// Runs simultaneous parts side by side. Each player writes one entry: the
/// concatenation of its messages in every part, in part order.
pub struct ComposedSession<'a> {
    k: usize,
    parts: Vec<Part<'a>>,
    schedules: Vec<Vec<(usize, usize)>>,
    /// `offsets[part][player]`: where the part's slice starts in the player's entry.
    offsets: Vec<Vec<usize>>,
    totals: Vec<usize>,
    combine: Combine,
}

impl<'a> ComposedSession<'a> {
    pub fn new(k: usize, parts: Vec<Part<'a>>, combine: Combine) -> Self {
        let schedules: Vec<_> = parts.iter().map(|p| p.session.schedule()).collect();
        let mut totals = vec![0usize; k];
        let mut offsets = Vec::with_capacity(parts.len());
        for sched in &schedules {
            offsets.push(totals.clone());
            for &(player, len) in sched {
                totals[player] += len;
            }
        }
        Self {
            k,
            parts,
            schedules,
            offsets,
            totals,
            combine,
        }
    }

    fn part_board(&self, part: usize, board: &Transcript) -> Transcript {
        let entries = self.schedules[part]
            .iter()
            .filter_map(|&(player, len)| {
                let bits = board.bits_of(player);
                let start = self.offsets[part][player];
                (bits.len() >= start + len).then(|| Entry {
                    player,
                    bits: bits[start..start + len].to_vec(),
                })
            })
            .collect();
        Transcript::from_entries(entries)
    }

    /// Each part's answer on a finished board.
    pub fn part_outputs(&self, board: &Transcript) -> Vec<bool> {
        (0..self.parts.len())
            .map(|i| self.parts[i].session.output(&self.part_board(i, board)))
            .collect()
    }
}

impl Session for ComposedSession<'_> {
    fn schedule(&self) -> Vec<(usize, usize)> {
        (0..self.k)
            .filter(|&p| self.totals[p] > 0)
            .map(|p| (p, self.totals[p]))
            .collect()
    }

    fn message(&self, view: &View<'_>, board: &Transcript) -> Vec<bool> {
        let me = view.player();
        let mut out = Vec::with_capacity(self.totals[me]);
        for (i, part) in self.parts.iter().enumerate() {
            if !self.schedules[i].iter().any(|&(p, _)| p == me) {
                continue;
            }
            let sub_board = self.part_board(i, board);
            let bits = match &part.rows {
                None => part.session.message(view, &sub_board),
                Some(rows) => {
                    let sub = view.restrict_rows(rows).expect("rows within matrix");
                    part.session.message(&sub, &sub_board)
                }
            };
            out.extend(bits);
        }
        out
    }

    fn output(&self, board: &Transcript) -> bool {
        self.combine.apply(&self.part_outputs(board))
    }
}

#[derive(Debug)]
struct Amplified {
    base: ProtocolSpec,
    t: usize,
    info: ProtocolInfo,
}

impl Protocol for Amplified {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }

    fn session<'a>(&'a self, tape: &RandomTape) -> Box<dyn Session + 'a> {
        let parts = (0..self.t)
            .map(|r| Part {
                rows: None,
                session: self.base.session(&tape.child("rep", r as u64)),
            })
            .collect();
        Box::new(ComposedSession::new(self.info.k, parts, Combine::Majority))
    }
}

/// Majority vote over `t` independent runs of `p`. `t = 1` returns `p` itself.
pub fn amplify(p: ProtocolSpec, t: usize) -> Result<ProtocolSpec> {
    if t == 0 || t.is_multiple_of(2) {
        return Err(Error::InvalidRepetitions(t));
    }
    if t == 1 {
        return Ok(p);
    }
    let base = p.info();
    let info = ProtocolInfo {
        family: base.family,
        n: base.n,
        k: base.k,
        epsilon: majority_tail_f64(t, base.epsilon),
        simultaneous: base.simultaneous,
        randomized: base.randomized,
        cost_ceiling: base.cost_ceiling * t,
    };
    Ok(Arc::new(Amplified { base: p, t, info }))
}
