//! Exact transient law of the swarm on a truncated state space.
//!
//! States with more than `cap` peers are cut off: an arrival at `|x| = cap`
//! moves its probability into a sink, and the sink mass is reported as the
//! truncation leak. The chain is uniformized at rate
//! `lambda + Us + mu cap`, which dominates every outflow on the truncated
//! space, and Poisson weights are formed in log space.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{generator_row, ModelParams, PieceSet, SwarmState, TransitionKind};
use crate::policy::Policy;

/// Largest `K` the solver accepts.
pub const MAX_UNIFORMIZATION_K: usize = 3;
/// Default leak threshold.
pub const DEFAULT_LEAK: f64 = 1e-6;
const MAX_STATES: usize = 2_000_000;

/// Count of each proper subset, indexed by its bitmask.
pub type StateKey = Vec<u32>;

pub fn state_key(x: &SwarmState) -> StateKey {
    let mut key = vec![0u32; PieceSet::full(x.k()).bits() as usize];
    for (c, n) in x.iter() {
        key[c.bits() as usize] = n as u32;
    }
    key
}

fn key_to_state(k: usize, key: &[u32]) -> SwarmState {
    let mut x = SwarmState::new(k).expect("valid K");
    for (bits, &n) in key.iter().enumerate() {
        x.add_peers(PieceSet::from_bits(bits as u64), n as u64)
            .expect("proper subset");
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientDistribution {
    pub k: usize,
    pub cap: u64,
    pub t: f64,
    /// Probability lost to truncation and to the Poisson tail.
    pub leak: f64,
    pub states: Vec<StateKey>,
    pub probs: Vec<f64>,
    index: HashMap<StateKey, usize>,
}

impl TransientDistribution {
    pub fn prob(&self, x: &SwarmState) -> f64 {
        self.index.get(&state_key(x)).map_or(0.0, |&i| self.probs[i])
    }

    pub fn prob_key(&self, key: &[u32]) -> f64 {
        self.index.get(key).map_or(0.0, |&i| self.probs[i])
    }

    /// Law of `|x_t|` on `0..=cap`.
    pub fn total_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cap as usize + 1];
        for (key, &p) in self.states.iter().zip(&self.probs) {
            out[key.iter().map(|&n| n as usize).sum::<usize>()] += p;
        }
        out
    }

    pub fn state(&self, i: usize) -> SwarmState {
        key_to_state(self.k, &self.states[i])
    }
}

struct Space {
    states: Vec<StateKey>,
    index: HashMap<StateKey, usize>,
    // (target, rate); target == usize::MAX is the sink
    out: Vec<Vec<(usize, f64)>>,
}

const SINK: usize = usize::MAX;

fn build_space(p: &ModelParams, policy: Policy, initial: &SwarmState, cap: u64) -> Result<Space> {
    let mut space = Space {
        states: Vec::new(),
        index: HashMap::new(),
        out: Vec::new(),
    };
    let start = state_key(initial);
    space.index.insert(start.clone(), 0);
    space.states.push(start);
    let mut next = 0;
    while next < space.states.len() {
        let x = key_to_state(p.k, &space.states[next]);
        let mut edges = Vec::new();
        for t in generator_row(&x, p, policy) {
            let target = match t.kind {
                TransitionKind::Arrival if x.total() >= cap => None,
                TransitionKind::Arrival => {
                    let mut y = x.clone();
                    y.apply_arrival();
                    Some(y)
                }
                TransitionKind::Download { from, piece } => {
                    let mut y = x.clone();
                    y.apply_download(from, piece)?;
                    Some(y)
                }
            };
            let j = match target {
                None => SINK,
                Some(y) => {
                    let key = state_key(&y);
                    match space.index.get(&key) {
                        Some(&j) => j,
                        None => {
                            let j = space.states.len();
                            if j >= MAX_STATES {
                                return Err(Error::InvalidParams(format!(
                                    "truncated space exceeds {MAX_STATES} states at cap {cap}"
                                )));
                            }
                            space.index.insert(key.clone(), j);
                            space.states.push(key);
                            j
                        }
                    }
                }
            };
            edges.push((j, t.rate));
        }
        space.out.push(edges);
        next += 1;
    }
    Ok(space)
}

/// Transient law at time `t` from `initial`, truncated at `cap` peers.
/// Fails with [`Error::TruncationLeak`] when more than `threshold` of the
/// mass is lost.
pub fn uniformization_transient(
    p: &ModelParams,
    policy: Policy,
    initial: &SwarmState,
    t: f64,
    cap: u64,
    threshold: f64,
) -> Result<TransientDistribution> {
    p.validate()?;
    if p.k > MAX_UNIFORMIZATION_K || initial.k() != p.k {
        return Err(Error::InvalidParams(format!(
            "uniformization supports K ≤ {MAX_UNIFORMIZATION_K} with a matching initial state"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("time {t} must be finite and ≥ 0")));
    }
    if initial.total() > cap {
        return Err(Error::InvalidParams("initial state exceeds the cap".into()));
    }
    let space = build_space(p, policy, initial, cap)?;
    let m = space.states.len();
    let rate = p.lambda + p.us + p.mu * cap as f64;

    let mut v = vec![0.0; m];
    v[0] = 1.0;
    let mut acc = vec![0.0; m];
    let lt = rate * t;
    let mut accumulated_weight = 0.0;
    if lt == 0.0 {
        acc.copy_from_slice(&v);
        accumulated_weight = 1.0;
    } else {
        // Poisson(lt) weights until the remaining tail is negligible.
        let n_max = (lt + 12.0 * lt.sqrt() + 50.0).ceil() as usize;
        let mut log_fact = 0.0;
        let mut next = vec![0.0; m];
        for n in 0..=n_max {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            let w = (-lt + n as f64 * lt.ln() - log_fact).exp();
            accumulated_weight += w;
            for (a, &x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
            if n == n_max {
                break;
            }
            // v <- v (I + Q/rate); mass sent to the sink is dropped
            for (i, edges) in space.out.iter().enumerate() {
                let vi = v[i];
                if vi == 0.0 {
                    continue;
                }
                let mut stay = vi;
                for &(j, r) in edges {
                    let moved = vi * r / rate;
                    stay -= moved;
                    if j != SINK {
                        next[j] += moved;
                    }
                }
                next[i] += stay;
            }
            std::mem::swap(&mut v, &mut next);
            next.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    let kept: f64 = acc.iter().sum();
    let leak = (1.0 - kept).max(0.0).max(1.0 - accumulated_weight);
    if leak > threshold {
        return Err(Error::TruncationLeak { leak, threshold, cap });
    }
    Ok(TransientDistribution {
        k: p.k,
        cap,
        t,
        leak,
        states: space.states,
        probs: acc,
        index: space.index,
    })
}

/// Widens the cap in steps of `step` until the leak falls below `threshold`.
pub fn uniformization_adaptive(
    p: &ModelParams,
    policy: Policy,
    initial: &SwarmState,
    t: f64,
    threshold: f64,
) -> Result<TransientDistribution> {
    let step = 10;
    let mut cap = (initial.total() + step).max(step);
    loop {
        match uniformization_transient(p, policy, initial, t, cap, threshold) {
            Err(Error::TruncationLeak { .. }) => cap += step,
            other => return other,
        }
    }
}
