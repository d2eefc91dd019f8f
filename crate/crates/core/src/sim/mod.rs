//! Exact event-by-event simulation of the swarm chain.

mod engine;
mod trajectory;

pub use engine::{
    event_rate, fire, holding_time, simulate, simulate_with_rng, step, Event, SimConfig, StepOutcome, DEFAULT_MAX_PEERS,
};
pub use trajectory::{Departure, PresenceProfile, Sample, Strata, Trajectory};
