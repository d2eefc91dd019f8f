use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::coding::{CodingVector, Field, Subspace};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::{Departure, Sample, Strata, Trajectory, DEFAULT_MAX_PEERS};

/// Peers of the coded swarm, stored individually by subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedSwarmState {
    k: usize,
    peers: Vec<Subspace>,
    by_dim: Vec<u64>,
}

impl CodedSwarmState {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            peers: Vec::new(),
            by_dim: vec![0; k],
        }
    }

    /// `n` peers sharing the subspace `v` (dimension below `K`).
    pub fn uniform(v: Subspace, n: usize) -> Result<Self> {
        let k = v.ambient_dim();
        if v.dim() >= k {
            return Err(Error::Contract("a complete peer cannot be in the swarm".into()));
        }
        let mut s = Self::new(k);
        s.by_dim[v.dim()] = n as u64;
        s.peers = vec![v; n];
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.peers.len() as u64
    }

    pub fn peers(&self) -> &[Subspace] {
        &self.peers
    }

    /// Peers per subspace dimension `0..K`.
    pub fn by_dim(&self) -> &[u64] {
        &self.by_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedConfig {
    pub params: ModelParams,
    pub q: usize,
    pub horizon: f64,
    pub initial: CodedSwarmState,
    pub rng_seed: u64,
    pub sample_dt: f64,
    pub max_peers: u64,
}

impl CodedConfig {
    pub fn new(params: ModelParams, q: usize, horizon: f64, rng_seed: u64) -> Result<Self> {
        let cfg = Self {
            params,
            q,
            horizon,
            initial: CodedSwarmState::new(params.k),
            rng_seed,
            sample_dt: 1.0,
            max_peers: DEFAULT_MAX_PEERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_initial(mut self, initial: CodedSwarmState) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        Field::new(self.q)?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParams(format!("horizon {} must be > 0", self.horizon)));
        }
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sample_dt {} must be > 0",
                self.sample_dt
            )));
        }
        if self.initial.k() != self.params.k {
            return Err(Error::InvalidParams("initial state has the wrong K".into()));
        }
        Ok(())
    }
}

/// Effective seed departure rate `Us (1 - 1/q)`.
pub fn effective_seed_rate(us: f64, q: usize) -> f64 {
    us * (1.0 - 1.0 / q as f64)
}

pub fn nc_simulate(cfg: &CodedConfig) -> Result<Trajectory> {
    nc_simulate_with_rng(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.rng_seed))
}

/// Coded swarm: a contact from `B` to `A` delivers a uniform member of
/// `V_B`, the seed delivers a uniform member of `F_q^K`, and a peer leaves
/// once its subspace is all of `F_q^K`. Deliveries that do not raise the
/// dimension are null events.
///
/// `seed_uploads` in the result holds one entry: the number of seed
/// deliveries that raised a dimension.
pub fn nc_simulate_with_rng<R: Rng + ?Sized>(cfg: &CodedConfig, rng: &mut R) -> Result<Trajectory> {
    cfg.validate()?;
    let field = Field::new(cfg.q)?;
    let p = &cfg.params;
    let k = p.k;
    let mut state = cfg.initial.clone();
    let mut stamps = vec![0.0; state.peers.len()];

    let mut traj = Trajectory {
        k,
        strata_kind: Strata::Dimension,
        initial_total: state.total(),
        samples: Vec::new(),
        departures: Vec::new(),
        arrivals: 0,
        seed_uploads: vec![0],
        events: 0,
        null_events: 0,
        final_state: None,
    };
    let mut departures = 0u64;
    let mut t = 0.0;
    let mut next_sample = 0u64;
    let grid = |i: u64| i as f64 * cfg.sample_dt;

    loop {
        let n = state.peers.len();
        let seed_rate = if n == 0 { 0.0 } else { p.us };
        let rate = p.lambda + seed_rate + p.mu * n as f64;
        let e: f64 = Exp1.sample(rng);
        let t_next = t + e / rate;
        while grid(next_sample) <= cfg.horizon && grid(next_sample) < t_next {
            traj.samples.push(Sample {
                t: grid(next_sample),
                total: state.total(),
                strata: state.by_dim.clone(),
                holders: Vec::new(),
                one_club: Vec::new(),
                arrivals: traj.arrivals,
                departures,
            });
            next_sample += 1;
        }
        if t_next > cfg.horizon {
            break;
        }
        t = t_next;
        traj.events += 1;

        let u = rng.random::<f64>() * rate;
        if u < p.lambda || n == 0 {
            state.peers.push(Subspace::zero(k));
            state.by_dim[0] += 1;
            stamps.push(t);
            traj.arrivals += 1;
        } else {
            let a = rng.random_range(0..n);
            let from_seed = u < p.lambda + p.us;
            let v = if from_seed {
                CodingVector::random(k, &field, rng)
            } else {
                let b = rng.random_range(0..n);
                if b == a {
                    traj.null_events += 1;
                    continue;
                }
                state.peers[b].random_vector(&field, rng)
            };
            let before = state.peers[a].dim();
            if !state.peers[a].insert(&field, &v) {
                traj.null_events += 1;
                continue;
            }
            if from_seed {
                traj.seed_uploads[0] += 1;
            }
            state.by_dim[before] -= 1;
            if before + 1 == k {
                state.peers.swap_remove(a);
                let arrived = stamps.swap_remove(a);
                departures += 1;
                traj.departures.push(Departure {
                    time: t,
                    sojourn: t - arrived,
                });
            } else {
                state.by_dim[before + 1] += 1;
            }
        }
        if state.total() > cfg.max_peers {
            return Err(Error::PeerCap {
                cap: cfg.max_peers,
                total: state.total(),
            });
        }
    }
    Ok(traj)
}
