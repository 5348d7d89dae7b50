use std::collections::{BTreeMap, HashMap};

use super::{execute, Protocol, Transcript};
use crate::cylinder::CylinderIntersection;
use crate::error::{Error, Result};
use crate::matrix::InputMatrix;
use crate::tape::RandomTape;

/// Default bound on the number of inputs enumerated.
pub const DEFAULT_DECOMPOSE_CAP: u128 = 1 << 20;

/// Writes a deterministic protocol's output as `sum a_t * chi_t(X)` over
/// its transcripts `t`. Each `chi_t` is the intersection of "player `i`
/// would write `t_i` from this view" over the speakers `i` of `t`.
///
/// Terms appear in first-seen order over the inputs in row-major numeric
/// order. A protocol that never speaks yields one term on the empty-set
/// cylinder.
pub fn decompose_to_cylinders(
    p: &dyn Protocol,
    cap: u128,
) -> Result<Vec<(bool, CylinderIntersection)>> {
    let info = p.info();
    if info.randomized {
        return Err(Error::RandomizedProtocol);
    }
    let (n, k) = (info.n, info.k);
    let cells = n * k;
    let needed = if cells >= 127 { u128::MAX } else { 1u128 << cells };
    if needed > cap || cells >= 64 {
        return Err(Error::CapExceeded { needed, cap });
    }
    let len = CylinderIntersection::table_len(n, k)?;
    let session = p.session(&RandomTape::new(0));

    let mut order: Vec<Transcript> = Vec::new();
    let mut outputs: HashMap<Transcript, bool> = HashMap::new();
    for x in InputMatrix::enumerate(n, k) {
        let out = execute(session.as_ref(), &x)?;
        if let Some(&prev) = outputs.get(&out.transcript) {
            if prev != out.output {
                return Err(Error::Protocol(
                    "output is not a function of the transcript".into(),
                ));
            }
        } else {
            outputs.insert(out.transcript.clone(), out.output);
            order.push(out.transcript);
        }
    }

    // For every speaker, the transcript prefix seen before it speaks is part
    // of the transcript itself, so one table per (transcript, speaker)
    // records which views would write the same bits after the same prefix.
    let mut terms = Vec::with_capacity(order.len());
    for t in order {
        let mut tables = BTreeMap::new();
        for (idx, entry) in t.entries().iter().enumerate() {
            let prefix = Transcript::from_entries(t.entries()[..idx].to_vec());
            let table = (0..len as u64)
                .map(|key| {
                    let y = InputMatrix::from_view_key(n, k, entry.player, key)?;
                    Ok(session.message(&y.view(entry.player)?, &prefix) == entry.bits)
                })
                .collect::<Result<Vec<bool>>>()?;
            tables
                .entry(entry.player)
                .and_modify(|acc: &mut Vec<bool>| {
                    for (a, b) in acc.iter_mut().zip(&table) {
                        *a &= *b;
                    }
                })
                .or_insert(table);
        }
        let a = outputs[&t];
        terms.push((a, CylinderIntersection::from_tables(n, k, tables)?));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Announce, Constant};

    #[test]
    fn constant_one_is_single_empty_cylinder() {
        let terms = decompose_to_cylinders(&Constant::new(1, 2, true), DEFAULT_DECOMPOSE_CAP).unwrap();
        assert_eq!(terms.len(), 1);
        assert!(terms[0].0);
        assert!(terms[0].1.players().is_empty());
    }

    #[test]
    fn constant_zero_keeps_a_zero_term() {
        let terms = decompose_to_cylinders(&Constant::new(2, 2, false), DEFAULT_DECOMPOSE_CAP).unwrap();
        assert_eq!(terms.len(), 1);
        assert!(!terms[0].0);
    }

    #[test]
    fn single_announcement_reconstructs() {
        let p = Announce::new(1, 2, vec![(0, 0, 1)], |b| b[0]).unwrap();
        let terms = decompose_to_cylinders(&p, DEFAULT_DECOMPOSE_CAP).unwrap();
        assert_eq!(terms.len(), 2);
        for x in InputMatrix::enumerate(1, 2) {
            let sum: usize = terms.iter().filter(|(a, c)| *a && c.eval(&x)).count();
            assert_eq!(sum, (x.get(0, 1) == 1) as usize);
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            decompose_to_cylinders(&Constant::new(4, 4, true), 100),
            Err(Error::CapExceeded { .. })
        ));
    }
}
