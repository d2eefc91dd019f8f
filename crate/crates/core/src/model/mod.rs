//! State space and transition structure of the swarm Markov process.
//!
//! Pieces are indexed from 0 inside the library. Reports and CSV files
//! print them 1-based.

mod generator;
mod params;
mod piece_set;
mod state;

pub use generator::{generator_row, total_outflow, Transition, TransitionKind};
pub use params::ModelParams;
pub use piece_set::{Piece, PieceSet, MAX_PIECES};
pub use state::{Diagnostics, DownloadOutcome, SwarmState};
