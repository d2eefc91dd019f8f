//! The `mu = infinity` limit watched on its slow states, where every peer
//! holds the same `k` pieces, and the critical contact rate `mu_o`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// `n` peers that all hold the same `k` pieces; `(0, 0)` is the empty swarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedState {
    pub n: u64,
    pub k: usize,
}

impl ReducedState {
    pub const EMPTY: Self = Self { n: 0, k: 0 };

    pub fn new(n: u64, k: usize, pieces: usize) -> Result<Self> {
        let ok = (n == 0 && k == 0) || (n >= 1 && k < pieces);
        if !ok {
            return Err(Error::InvalidParams(format!(
                "({n}, {k}) is not a state for K = {pieces}"
            )));
        }
        Ok(Self { n, k })
    }
}

/// Jump times and states after each jump, starting from `(0, start)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub start: ReducedState,
    pub jumps: Vec<(f64, ReducedState)>,
    pub horizon: f64,
}

impl ReducedTrajectory {
    pub fn state_at(&self, t: f64) -> ReducedState {
        let i = self.jumps.partition_point(|&(s, _)| s <= t);
        if i == 0 {
            self.start
        } else {
            self.jumps[i - 1].1
        }
    }

    /// First time the top layer `k = K - 1` is occupied.
    pub fn top_layer_hit(&self, pieces: usize) -> Option<f64> {
        if self.start.n > 0 && self.start.k == pieces - 1 {
            return Some(0.0);
        }
        self.jumps
            .iter()
            .find(|(_, s)| s.n > 0 && s.k == pieces - 1)
            .map(|&(t, _)| t)
    }
}

/// Enabled transitions and their rates. New peers join the current layer
/// at rate `lambda`; the seed lifts the whole group one layer at rate `Us`
/// below the top, and on the top layer it completes one peer at a time.
pub fn reduced_rates(s: ReducedState, lambda: f64, us: f64, pieces: usize) -> Vec<(ReducedState, f64)> {
    let mut out = vec![(ReducedState { n: s.n + 1, k: s.k }, lambda)];
    if s.n == 0 {
        return out;
    }
    if s.k + 1 < pieces {
        out.push((ReducedState { n: s.n, k: s.k + 1 }, us));
    } else if s.n == 1 {
        out.push((ReducedState::EMPTY, us));
    } else {
        out.push((ReducedState { n: s.n - 1, k: s.k }, us));
    }
    out
}

pub fn mu_infinity_simulate<R: Rng + ?Sized>(
    lambda: f64,
    us: f64,
    pieces: usize,
    start: ReducedState,
    horizon: f64,
    rng: &mut R,
) -> Result<ReducedTrajectory> {
    if pieces < 2 {
        return Err(Error::InvalidParams("need K ≥ 2".into()));
    }
    if !(lambda >= 0.0 && us > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidParams("need lambda ≥ 0, Us > 0, horizon > 0".into()));
    }
    ReducedState::new(start.n, start.k, pieces)?;
    let mut s = start;
    let mut t = 0.0;
    let mut jumps = Vec::new();
    loop {
        let rates = reduced_rates(s, lambda, us, pieces);
        let total: f64 = rates.iter().map(|r| r.1).sum();
        if total <= 0.0 {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t > horizon {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = rates[rates.len() - 1].0;
        for &(to, r) in &rates {
            if u < r {
                pick = to;
                break;
            }
            u -= r;
        }
        s = pick;
        jumps.push((t, s));
    }
    Ok(ReducedTrajectory { start, jumps, horizon })
}

/// `lambda sum_{k=0}^{K-2} (K-k-1)/(K-k)`; zero for `K = 1`.
pub fn mu_o(lambda: f64, pieces: usize) -> Result<f64> {
    if pieces == 0 {
        return Err(Error::Domain("K must be ≥ 1".into()));
    }
    if pieces > crate::model::MAX_PIECES {
        let kf = pieces as f64;
        return Ok(lambda
            * (0..pieces - 1)
                .map(|k| (kf - k as f64 - 1.0) / (kf - k as f64))
                .sum::<f64>());
    }
    // Summed as an exact fraction so the only rounding is the final division.
    let (mut num, mut den) = (0u128, 1u128);
    for j in 2..=pieces as u128 {
        num = num * j + (j - 1) * den;
        den *= j;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    Ok(lambda * (num as f64 / den as f64))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Death rate `Us (1 + mu_o / (n mu))` of the birth-death heuristic for the
/// top-layer population near `lambda = Us`.
pub fn heuristic_death_rate(n: u64, us: f64, mu_o: f64, mu: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    us * (1.0 + mu_o / (n as f64 * mu))
}
