//! Random linear network coding variant of the swarm.
//!
//! Peers hold coded pieces rather than raw ones, so a peer's type is the
//! subspace of `F_q^K` spanned by the coding vectors it has received.

mod field;
mod subspace;
mod swarm;

pub use field::{Elem, Field, BINARY_POLYNOMIALS};
pub use subspace::{all_subspaces, useful_probability, CodingVector, Subspace};
pub use swarm::{effective_seed_rate, nc_simulate, nc_simulate_with_rng, CodedConfig, CodedSwarmState};
