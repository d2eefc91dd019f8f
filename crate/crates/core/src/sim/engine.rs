use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::model::{DownloadOutcome, ModelParams, Piece, PieceSet, SwarmState};
use crate::policy::{Policy, Source};
use crate::sim::{Departure, Sample, Strata, Trajectory};

/// Default bound on `|x|` before a run is abandoned.
pub const DEFAULT_MAX_PEERS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub policy: Policy,
    pub horizon: f64,
    pub initial: SwarmState,
    pub rng_seed: u64,
    pub sample_dt: f64,
    pub max_peers: u64,
}

impl SimConfig {
    /// Run from the empty state with unit sampling interval.
    pub fn new(params: ModelParams, horizon: f64, rng_seed: u64) -> Result<Self> {
        let cfg = Self {
            params,
            policy: Policy::RandomUseful,
            horizon,
            initial: SwarmState::new(params.k)?,
            rng_seed,
            sample_dt: 1.0,
            max_peers: DEFAULT_MAX_PEERS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_initial(mut self, initial: SwarmState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
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
            return Err(Error::InvalidParams(format!(
                "initial state has K = {}, params have K = {}",
                self.initial.k(),
                self.params.k
            )));
        }
        Ok(())
    }
}

/// What a single step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Arrival,
    /// A peer of type `from`, the `offset`-th of its type, obtained `piece`.
    Download {
        from: PieceSet,
        offset: u64,
        piece: Piece,
        source: Source,
        departed: bool,
    },
    /// A contact with nothing useful, a self-contact, or a seed tick on an
    /// empty swarm. Time passes; counts do not change.
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub dt: f64,
    pub event: Event,
}

/// Total event rate `lambda + Us*1[|x|>0] + mu*|x|` of the hierarchical engine.
pub fn event_rate(x: &SwarmState, p: &ModelParams) -> f64 {
    let seed = if x.is_empty() { 0.0 } else { p.us };
    p.lambda + seed + p.mu * x.total() as f64
}

/// Exponential holding time at the current total event rate.
pub fn holding_time<R: Rng + ?Sized>(x: &SwarmState, p: &ModelParams, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / event_rate(x, p)
}

/// Draws and applies the next event, without advancing time.
///
/// The event class is drawn first (arrival, seed tick, or peer contact with
/// rates `lambda`, `Us`, `mu*|x|`), then a uniform actor peer, then for a
/// contact a uniform target among all `|x|` peers, then the piece from the
/// policy. Summed over the draws this gives `T_{c,i}` exactly the generator
/// rate, with the remaining mass on null events.
pub fn fire<R: Rng + ?Sized>(x: &mut SwarmState, p: &ModelParams, policy: Policy, rng: &mut R) -> Event {
    let u = rng.random::<f64>() * event_rate(x, p);
    if u < p.lambda || x.is_empty() {
        x.apply_arrival();
        return Event::Arrival;
    }
    let total = x.total();
    let (from, offset) = x.locate(rng.random_range(0..total));
    let source = if u < p.lambda + p.us {
        Source::Seed
    } else {
        let target = x.peer_type(rng.random_range(0..total));
        if target.difference(from).is_empty() {
            return Event::Null;
        }
        Source::Peer(target)
    };
    let piece = policy.select(from, source, x, rng).expect("source has a useful piece");
    let departed = matches!(
        x.apply_download(from, piece).expect("valid download"),
        DownloadOutcome::Departed
    );
    Event::Download {
        from,
        offset,
        piece,
        source,
        departed,
    }
}

/// Advances the chain by one event: holding time, then the jump.
pub fn step<R: Rng + ?Sized>(x: &mut SwarmState, p: &ModelParams, policy: Policy, rng: &mut R) -> StepOutcome {
    let dt = holding_time(x, p, rng);
    let event = fire(x, p, policy, rng);
    StepOutcome { dt, event }
}

fn record(x: &SwarmState, t: f64, arrivals: u64, departures: u64) -> Sample {
    let d = x.diagnostics();
    Sample {
        t,
        total: x.total(),
        strata: d.n,
        holders: d.holders,
        one_club: d.one_club,
        arrivals,
        departures,
    }
}

/// Simulates `cfg` with the stream seeded by `cfg.rng_seed`.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    simulate_with_rng(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.rng_seed))
}

/// Simulates `cfg` up to its horizon, sampling on the `sample_dt` grid.
///
/// Arrival stamps are kept per type; since peers of one type are
/// exchangeable, the actor's position within its type picks which stamp
/// moves, which gives exact sojourn times without per-peer identities.
pub fn simulate_with_rng<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Trajectory> {
    cfg.validate()?;
    let p = &cfg.params;
    let mut x = cfg.initial.clone();
    let mut stamps: BTreeMap<PieceSet, Vec<f64>> = x.iter().map(|(c, n)| (c, vec![0.0; n as usize])).collect();

    let mut traj = Trajectory {
        k: p.k,
        strata_kind: Strata::PieceCount,
        initial_total: x.total(),
        samples: Vec::new(),
        departures: Vec::new(),
        arrivals: 0,
        seed_uploads: vec![0; p.k],
        events: 0,
        null_events: 0,
        final_state: None,
    };
    let mut departures = 0u64;
    let mut t = 0.0;
    let mut next_sample = 0u64;
    let grid = |i: u64| i as f64 * cfg.sample_dt;

    loop {
        let t_next = t + holding_time(&x, p, rng);
        while grid(next_sample) <= cfg.horizon && grid(next_sample) < t_next {
            traj.samples
                .push(record(&x, grid(next_sample), traj.arrivals, departures));
            next_sample += 1;
        }
        if t_next > cfg.horizon {
            break;
        }
        t = t_next;
        traj.events += 1;
        match fire(&mut x, p, cfg.policy, rng) {
            Event::Arrival => {
                traj.arrivals += 1;
                stamps.entry(PieceSet::EMPTY).or_default().push(t);
            }
            Event::Download {
                from,
                offset,
                piece,
                source,
                departed,
            } => {
                let bucket = stamps.get_mut(&from).expect("stamps track counts");
                let arrived = bucket.swap_remove(offset as usize);
                if bucket.is_empty() {
                    stamps.remove(&from);
                }
                if source == Source::Seed {
                    traj.seed_uploads[piece] += 1;
                }
                if departed {
                    departures += 1;
                    traj.departures.push(Departure {
                        time: t,
                        sojourn: t - arrived,
                    });
                } else {
                    stamps.entry(from.with(piece)).or_default().push(arrived);
                }
            }
            Event::Null => traj.null_events += 1,
        }
        if x.total() > cfg.max_peers {
            return Err(Error::PeerCap {
                cap: cfg.max_peers,
                total: x.total(),
            });
        }
    }
    traj.final_state = Some(x);
    Ok(traj)
}
