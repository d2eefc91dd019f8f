//! Simulation and stability analysis of a seeded peer-to-peer swarm.
//!
//! Peers arrive with no pieces, pull random useful pieces from uniformly
//! chosen peers, receive pieces from a single fixed seed, and leave once
//! they hold all `K` pieces. The crate provides the Markov model, an exact
//! event-driven simulator with pluggable piece-selection policies, a random
//! linear network coding variant, and the closed-form bounds and drift
//! computations used to reason about when the swarm is stable.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coding;
mod error;
pub mod model;
pub mod policy;
pub mod replicas;
pub mod sim;

pub use error::{Error, Result};
pub use model::{ModelParams, Piece, PieceSet, SwarmState};
pub use policy::Policy;
pub use sim::{simulate, SimConfig, Trajectory};
