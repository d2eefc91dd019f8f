//! Closed-form bounds, constant constructions, drift computations and
//! reduced models, with the Monte-Carlo oracles that check them.

mod bounds;
mod busy_period;
mod certificate;
mod dominance;
mod instability;
mod lyapunov;
mod reduced_chain;
mod uniformization;

pub use bounds::{
    compound_poisson_bound, compound_poisson_exceeds, kingman_bound, mgi_infinity_bound, mginfty_simulate,
    young_peer_service, OccupancyPath,
};
pub use busy_period::{busy_period_moments, simulate_busy_period, BusyPeriodMoments};
pub use certificate::{parse_kv, Certificate};
pub use dominance::{dominance_test, DominanceTest};
pub use instability::{
    alt_system_simulate, comparison_moments, instability_constants, AltFlags, AltSample, AltSystemRun,
    ComparisonMoments, InequalityCheck, InstabilityConstants,
};
pub use lyapunov::{
    default_eta_grid, drift_qv, drift_region_check, lyapunov_coefficients, sample_state, Drift, DriftCertificate,
    LyapunovCoefficients, COEFFICIENT_MARGIN, DRIFT_TOLERANCE,
};
pub use reduced_chain::{
    heuristic_death_rate, mu_infinity_simulate, mu_o, reduced_rates, ReducedState, ReducedTrajectory,
};
pub use uniformization::{
    state_key, uniformization_adaptive, uniformization_transient, StateKey, TransientDistribution, DEFAULT_LEAK,
    MAX_UNIFORMIZATION_K,
};
