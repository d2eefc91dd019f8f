use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// Contract violations (a caller asking for an impossible transition) are
/// reported as [`Error::Contract`]; everything else is a domain or resource
/// condition a caller can act on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("peer cap of {cap} exceeded: |x| = {total}")]
    PeerCap { cap: u64, total: u64 },

    #[error("too few samples in window [{t0}, {t1}]: found {found}, need {needed}")]
    TooFewSamples {
        t0: f64,
        t1: f64,
        found: usize,
        needed: usize,
    },

    #[error("truncation leak {leak:e} exceeds {threshold:e} at cap {cap}; widen the cap")]
    TruncationLeak { leak: f64, threshold: f64, cap: u64 },

    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
