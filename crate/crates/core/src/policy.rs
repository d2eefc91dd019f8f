//! Piece-selection policies satisfying the usefulness constraint: whenever
//! the source holds a piece the downloader lacks, some such piece is taken.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Piece, PieceSet, SwarmState};

/// Where a piece comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// The fixed seed, which holds every piece.
    Seed,
    /// A peer of the given type.
    Peer(PieceSet),
}

impl Source {
    fn pieces(self, x: &SwarmState) -> PieceSet {
        match self {
            Source::Seed => x.full_set(),
            Source::Peer(b) => b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Policy {
    /// Uniform over the useful pieces.
    #[default]
    RandomUseful,
    /// Useful piece with the fewest holders swarm-wide, ties uniform.
    RarestFirst,
    /// Lowest-indexed useful piece.
    Sequential,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::RandomUseful, Policy::RarestFirst, Policy::Sequential];

    pub fn name(self) -> &'static str {
        match self {
            Policy::RandomUseful => "random-useful",
            Policy::RarestFirst => "rarest-first",
            Policy::Sequential => "sequential",
        }
    }

    /// Draws the piece a type-`a` peer obtains from `src`.
    pub fn select<R: Rng + ?Sized>(self, a: PieceSet, src: Source, x: &SwarmState, rng: &mut R) -> Result<Piece> {
        match self {
            Policy::RandomUseful => select_random_useful(a, src, x, rng),
            Policy::RarestFirst => select_rarest_first(a, src, x, rng),
            Policy::Sequential => select_sequential(a, src, x),
        }
    }

    /// The selection law `h(a, src, x)` as `(piece, probability)` pairs with
    /// positive probability. Empty when `src` has nothing useful for `a`.
    pub fn distribution(self, a: PieceSet, src: Source, x: &SwarmState) -> Vec<(Piece, f64)> {
        let useful = src.pieces(x).difference(a);
        if useful.is_empty() {
            return Vec::new();
        }
        match self {
            Policy::RandomUseful => {
                let p = 1.0 / useful.len() as f64;
                useful.iter().map(|i| (i, p)).collect()
            }
            Policy::RarestFirst => {
                let ties = rarest_among(useful, x);
                let p = 1.0 / ties.len() as f64;
                ties.iter().map(|i| (i, p)).collect()
            }
            Policy::Sequential => vec![(useful.first().expect("nonempty"), 1.0)],
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown policy '{s}'")))
    }
}

fn useful_set(a: PieceSet, src: Source, x: &SwarmState) -> Result<PieceSet> {
    let useful = src.pieces(x).difference(a);
    if useful.is_empty() {
        return Err(Error::Contract(format!(
            "source {src:?} has no useful piece for type {a:?}"
        )));
    }
    Ok(useful)
}

fn uniform_member<R: Rng + ?Sized>(s: PieceSet, rng: &mut R) -> Piece {
    s.nth(rng.random_range(0..s.len())).expect("index within set")
}

fn rarest_among(useful: PieceSet, x: &SwarmState) -> PieceSet {
    let holders = x.holders();
    let min = useful.iter().map(|j| holders[j]).min().expect("nonempty");
    PieceSet::from_pieces(useful.iter().filter(|&j| holders[j] == min))
}

pub fn select_random_useful<R: Rng + ?Sized>(a: PieceSet, src: Source, x: &SwarmState, rng: &mut R) -> Result<Piece> {
    let useful = useful_set(a, src, x)?;
    Ok(uniform_member(useful, rng))
}

pub fn select_rarest_first<R: Rng + ?Sized>(a: PieceSet, src: Source, x: &SwarmState, rng: &mut R) -> Result<Piece> {
    let useful = useful_set(a, src, x)?;
    Ok(uniform_member(rarest_among(useful, x), rng))
}

pub fn select_sequential(a: PieceSet, src: Source, x: &SwarmState) -> Result<Piece> {
    Ok(useful_set(a, src, x)?.first().expect("nonempty"))
}

/// Checks the usefulness constraint for every `(a, src)` pair of types present
/// in `x` plus the seed: mass sums to one on `src - a` whenever that is
/// nonempty, and no mass falls outside it.
pub fn check_usefulness(policy: Policy, x: &SwarmState) -> Result<()> {
    let sources: Vec<Source> = std::iter::once(Source::Seed)
        .chain(x.iter().map(|(b, _)| Source::Peer(b)))
        .collect();
    for (a, _) in x.iter() {
        for &src in &sources {
            let useful = src.pieces(x).difference(a);
            let dist = policy.distribution(a, src, x);
            let mass: f64 = dist.iter().map(|&(_, p)| p).sum();
            let outside = dist.iter().any(|&(i, _)| !useful.contains(i));
            let expected = if useful.is_empty() { 0.0 } else { 1.0 };
            if outside || (mass - expected).abs() > 1e-12 {
                return Err(Error::Contract(format!(
                    "{policy} violates usefulness for a = {a:?}, src = {src:?}"
                )));
            }
        }
    }
    Ok(())
}
