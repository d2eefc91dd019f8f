use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Piece, PieceSet, MAX_PIECES};

/// Markov state: number of peers of each type.
///
/// Only types with a positive count are stored. Per-size counts `n_i` and
/// per-piece holder counts `m_j` are maintained incrementally so that
/// diagnostics and rarest-first selection are O(K).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwarmState {
    k: usize,
    counts: BTreeMap<PieceSet, u64>,
    total: u64,
    by_size: Vec<u64>,
    holders: Vec<u64>,
}

/// Result of a type-`c` peer downloading one piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DownloadOutcome {
    /// The peer is now of the given type.
    Promoted(PieceSet),
    /// The peer completed its collection and left.
    Departed,
}

/// Summary counts of a state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics {
    /// `n[i]`: peers holding exactly `i` pieces.
    pub n: Vec<u64>,
    /// `holders[j]`: peers holding piece `j`.
    pub holders: Vec<u64>,
    /// `one_club[j]`: peers holding every piece except `j`.
    pub one_club: Vec<u64>,
    /// Piece with the fewest holders, lowest index on ties.
    pub rarest: Piece,
}

impl SwarmState {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_PIECES {
            return Err(Error::InvalidParams(format!("K = {k} outside 1..={MAX_PIECES}")));
        }
        Ok(Self {
            k,
            counts: BTreeMap::new(),
            total: 0,
            by_size: vec![0; k],
            holders: vec![0; k],
        })
    }

    /// `n` peers, every one holding all pieces except `missing`.
    pub fn one_club(k: usize, missing: Piece, n: u64) -> Result<Self> {
        let mut x = Self::new(k)?;
        if missing >= k {
            return Err(Error::InvalidParams(format!("piece {missing} out of range")));
        }
        x.add_peers(PieceSet::full(k).without(missing), n)?;
        Ok(x)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `|x|`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, c: PieceSet) -> u64 {
        self.counts.get(&c).copied().unwrap_or(0)
    }

    /// Types present, in a fixed order, with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (PieceSet, u64)> + '_ {
        self.counts.iter().map(|(&c, &n)| (c, n))
    }

    pub fn distinct_types(&self) -> usize {
        self.counts.len()
    }

    /// `n_i` for `i = 0..K`.
    pub fn by_size(&self) -> &[u64] {
        &self.by_size
    }

    /// `m_j` for `j = 0..K`.
    pub fn holders(&self) -> &[u64] {
        &self.holders
    }

    pub fn full_set(&self) -> PieceSet {
        PieceSet::full(self.k)
    }

    /// Adds `n` peers of type `c`.
    pub fn add_peers(&mut self, c: PieceSet, n: u64) -> Result<()> {
        if !c.is_subset(self.full_set()) || c == self.full_set() {
            return Err(Error::Contract(format!(
                "type {c:?} is not a proper subset of the {} pieces",
                self.k
            )));
        }
        if n == 0 {
            return Ok(());
        }
        self.total = self
            .total
            .checked_add(n)
            .ok_or_else(|| Error::Contract("peer count overflow".into()))?;
        *self.counts.entry(c).or_insert(0) += n;
        self.by_size[c.len()] += n;
        for j in c.iter() {
            self.holders[j] += n;
        }
        Ok(())
    }

    fn remove_one(&mut self, c: PieceSet) {
        let slot = self.counts.get_mut(&c).expect("type present");
        *slot -= 1;
        if *slot == 0 {
            self.counts.remove(&c);
        }
        self.total -= 1;
        self.by_size[c.len()] -= 1;
        for j in c.iter() {
            self.holders[j] -= 1;
        }
    }

    /// A new peer with no pieces joins.
    pub fn apply_arrival(&mut self) {
        self.add_peers(PieceSet::EMPTY, 1)
            .expect("peer count overflow is a hard error");
    }

    /// A type-`c` peer downloads piece `i`; it departs if that completes its collection.
    pub fn apply_download(&mut self, c: PieceSet, i: Piece) -> Result<DownloadOutcome> {
        if i >= self.k || c.contains(i) {
            return Err(Error::Contract(format!(
                "piece {} is not missing from type {c:?}",
                i + 1
            )));
        }
        if self.count(c) == 0 {
            return Err(Error::Contract(format!("no peer of type {c:?} present")));
        }
        self.remove_one(c);
        let next = c.with(i);
        if next == self.full_set() {
            Ok(DownloadOutcome::Departed)
        } else {
            self.add_peers(next, 1)?;
            Ok(DownloadOutcome::Promoted(next))
        }
    }

    /// Type of the `r`-th peer under the fixed type ordering; `r < |x|`.
    pub fn peer_type(&self, r: u64) -> PieceSet {
        self.locate(r).0
    }

    /// Type of the `r`-th peer and its position among peers of that type.
    pub fn locate(&self, mut r: u64) -> (PieceSet, u64) {
        debug_assert!(r < self.total);
        for (&c, &n) in &self.counts {
            if r < n {
                return (c, r);
            }
            r -= n;
        }
        unreachable!("peer index beyond |x| = {}", self.total)
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let full = self.full_set();
        let one_club = (0..self.k).map(|j| self.count(full.without(j))).collect();
        let rarest = self
            .holders
            .iter()
            .enumerate()
            .min_by_key(|&(j, &m)| (m, j))
            .map(|(j, _)| j)
            .unwrap_or(0);
        Diagnostics {
            n: self.by_size.clone(),
            holders: self.holders.clone(),
            one_club,
            rarest,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(pieces: &[usize]) -> PieceSet {
        // one-based, as written in the model description
        PieceSet::from_pieces(pieces.iter().map(|p| p - 1))
    }

    fn state(k: usize, entries: &[(&[usize], u64)]) -> SwarmState {
        let mut x = SwarmState::new(k).unwrap();
        for &(c, n) in entries {
            x.add_peers(set(c), n).unwrap();
        }
        x
    }

    #[test]
    fn arrival_cases() {
        let mut x = SwarmState::new(3).unwrap();
        x.apply_arrival();
        assert_eq!(x, state(3, &[(&[], 1)]));
        assert_eq!(x.total(), 1);

        let mut x = state(3, &[(&[], 2)]);
        x.apply_arrival();
        assert_eq!(x, state(3, &[(&[], 3)]));

        let mut x = state(3, &[(&[1], 5)]);
        x.apply_arrival();
        assert_eq!(x, state(3, &[(&[1], 5), (&[], 1)]));
    }

    #[test]
    fn download_cases() {
        let mut x = state(2, &[(&[1], 1)]);
        assert_eq!(x.apply_download(set(&[1]), 1).unwrap(), DownloadOutcome::Departed);
        assert!(x.is_empty());
        assert_eq!(x, SwarmState::new(2).unwrap());

        let mut x = state(3, &[(&[], 2)]);
        x.apply_download(PieceSet::EMPTY, 0).unwrap();
        assert_eq!(x, state(3, &[(&[], 1), (&[1], 1)]));

        let mut x = state(2, &[(&[], 1), (&[1], 2)]);
        x.apply_download(PieceSet::EMPTY, 0).unwrap();
        assert_eq!(x, state(2, &[(&[1], 3)]));
    }

    #[test]
    fn download_contract_errors() {
        let mut x = state(3, &[(&[1], 1)]);
        assert!(matches!(x.apply_download(set(&[1]), 0), Err(Error::Contract(_))));
        assert!(matches!(x.apply_download(set(&[2]), 0), Err(Error::Contract(_))));
        assert!(matches!(x.apply_download(set(&[1]), 3), Err(Error::Contract(_))));
        assert!(x.add_peers(PieceSet::full(3), 1).is_err());
    }

    #[test]
    fn diagnostics_cases() {
        let d = SwarmState::new(4).unwrap().diagnostics();
        assert_eq!(d.n, vec![0; 4]);
        assert_eq!(d.holders, vec![0; 4]);
        assert_eq!(d.rarest, 0);

        let d = state(2, &[(&[1], 4)]).diagnostics();
        assert_eq!(d.n, vec![0, 4]);
        assert_eq!(d.holders, vec![4, 0]);
        assert_eq!(d.one_club[1], 4);
        assert_eq!(d.rarest, 1);

        let d = state(3, &[(&[], 1), (&[1, 2], 9)]).diagnostics();
        assert_eq!(d.n, vec![1, 0, 9]);
        assert_eq!(d.holders, vec![9, 9, 0]);
        assert_eq!(d.one_club, vec![0, 0, 9]);
        assert_eq!(d.rarest, 2);
    }

    #[test]
    fn peer_type_walks_counts() {
        let x = state(2, &[(&[], 2), (&[1], 3)]);
        let types: Vec<_> = (0..5).map(|r| x.peer_type(r)).collect();
        assert_eq!(types.iter().filter(|c| c.is_empty()).count(), 2);
        assert_eq!(types.iter().filter(|&&c| c == set(&[1])).count(), 3);
    }

    fn arb_state() -> impl Strategy<Value = SwarmState> {
        (1usize..6).prop_flat_map(|k| {
            let full = (1u64 << k) - 1;
            prop::collection::vec((0..full, 0u64..20), 0..10).prop_map(move |entries| {
                let mut x = SwarmState::new(k).unwrap();
                for (bits, n) in entries {
                    x.add_peers(PieceSet::from_bits(bits), n).unwrap();
                }
                x
            })
        })
    }

    proptest! {
        #[test]
        fn cached_counts_consistent(x in arb_state()) {
            let d = x.diagnostics();
            prop_assert_eq!(d.n.iter().sum::<u64>(), x.total());
            prop_assert_eq!(x.iter().map(|(_, n)| n).sum::<u64>(), x.total());
            prop_assert!(x.iter().all(|(_, n)| n > 0));
            for (j, &m) in d.holders.iter().enumerate() {
                let direct: u64 = x.iter().filter(|(c, _)| c.contains(j)).map(|(_, n)| n).sum();
                prop_assert_eq!(m, direct);
                prop_assert!(m <= x.total());
            }
        }

        #[test]
        fn arrival_and_download_commute(x in arb_state(), pick in any::<u64>(), piece in any::<usize>()) {
            prop_assume!(!x.is_empty());
            let c = x.peer_type(pick % x.total());
            let missing = x.full_set().difference(c);
            let i = missing.nth(piece % missing.len()).unwrap();
            let mut a = x.clone();
            a.apply_arrival();
            a.apply_download(c, i).unwrap();
            let mut b = x.clone();
            b.apply_download(c, i).unwrap();
            b.apply_arrival();
            prop_assert_eq!(a, b);
        }
    }
}
