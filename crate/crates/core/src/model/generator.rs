use std::collections::BTreeMap;

use crate::model::{ModelParams, Piece, PieceSet, SwarmState};
use crate::policy::{Policy, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TransitionKind {
    Arrival,
    /// A peer of type `from` obtains `piece`; a departure if that completes it.
    Download {
        from: PieceSet,
        piece: Piece,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub kind: TransitionKind,
    pub rate: f64,
}

/// Positive off-diagonal entries of the generator row at `x`.
///
/// The download rate of `T_{c,i}` is
/// `(x_c/|x|) * (Us * h_i(c, F, x) + mu * sum_s x_s * h_i(c, s, x))`.
/// A contact with a peer of the same type contributes nothing.
pub fn generator_row(x: &SwarmState, p: &ModelParams, policy: Policy) -> Vec<Transition> {
    let mut row = vec![Transition {
        kind: TransitionKind::Arrival,
        rate: p.lambda,
    }];
    if x.is_empty() {
        return row;
    }
    let total = x.total() as f64;
    for (c, xc) in x.iter() {
        let mut rates: BTreeMap<Piece, f64> = BTreeMap::new();
        for (i, h) in policy.distribution(c, Source::Seed, x) {
            *rates.entry(i).or_insert(0.0) += p.us * h;
        }
        for (s, xs) in x.iter() {
            if s == c {
                continue;
            }
            for (i, h) in policy.distribution(c, Source::Peer(s), x) {
                *rates.entry(i).or_insert(0.0) += p.mu * xs as f64 * h;
            }
        }
        let weight = xc as f64 / total;
        row.extend(
            rates
                .into_iter()
                .filter(|&(_, r)| r > 0.0)
                .map(|(piece, r)| Transition {
                    kind: TransitionKind::Download { from: c, piece },
                    rate: weight * r,
                }),
        );
    }
    row
}

/// Sum of all rates in the generator row.
pub fn total_outflow(row: &[Transition]) -> f64 {
    row.iter().map(|t| t.rate).sum()
}
