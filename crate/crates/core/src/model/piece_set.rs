use std::fmt;

/// Largest supported piece count; a [`PieceSet`] is one machine word.
pub const MAX_PIECES: usize = 64;

/// Zero-based piece index.
pub type Piece = usize;

/// The set of pieces held by a peer, as a bit vector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PieceSet(u64);

impl PieceSet {
    pub const EMPTY: PieceSet = PieceSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        PieceSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// All `k` pieces.
    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_PIECES);
        if k == MAX_PIECES {
            PieceSet(u64::MAX)
        } else {
            PieceSet((1u64 << k) - 1)
        }
    }

    /// Pieces `0..j`.
    pub fn prefix(j: usize) -> Self {
        Self::full(j)
    }

    pub fn from_pieces<I: IntoIterator<Item = Piece>>(pieces: I) -> Self {
        pieces.into_iter().fold(Self::EMPTY, |s, i| s.with(i))
    }

    pub fn contains(self, i: Piece) -> bool {
        self.0 >> i & 1 == 1
    }

    #[must_use]
    pub fn with(self, i: Piece) -> Self {
        PieceSet(self.0 | 1 << i)
    }

    #[must_use]
    pub fn without(self, i: Piece) -> Self {
        PieceSet(self.0 & !(1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// `self - other`.
    #[must_use]
    pub fn difference(self, other: PieceSet) -> Self {
        PieceSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: PieceSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// The `n`-th smallest member, if any.
    pub fn nth(self, n: usize) -> Option<Piece> {
        let mut bits = self.0;
        for _ in 0..n {
            if bits == 0 {
                return None;
            }
            bits &= bits - 1;
        }
        (bits != 0).then(|| bits.trailing_zeros() as Piece)
    }

    pub fn first(self) -> Option<Piece> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as Piece)
    }

    pub fn iter(self) -> impl Iterator<Item = Piece> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as Piece;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

impl fmt::Debug for PieceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|i| i + 1)).finish()
    }
}
