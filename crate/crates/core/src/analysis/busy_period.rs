//! Busy-period moments of an M/GI/1 queue and a branching Monte-Carlo oracle.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// First and second moments of the number served `N` and length `L` of a
/// busy period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusyPeriodMoments {
    pub rho: f64,
    pub en: f64,
    pub en2: f64,
    pub el: f64,
    pub el2: f64,
    pub cov_nl: f64,
}

/// Closed-form moments for arrival rate `lambda` and service moments
/// `E[X] = ex`, `E[X^2] = ex2`.
pub fn busy_period_moments(lambda: f64, ex: f64, ex2: f64) -> Result<BusyPeriodMoments> {
    if !(lambda >= 0.0 && ex > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need lambda ≥ 0 and E[X] > 0, got {lambda}, {ex}"
        )));
    }
    // Relative slack for ex2 computed as var + mean^2 in floating point.
    if ex2 < ex * ex * (1.0 - 1e-12) {
        return Err(Error::InvalidParams(format!("E[X^2] = {ex2} < E[X]^2 = {}", ex * ex)));
    }
    let rho = lambda * ex;
    if rho >= 1.0 {
        return Err(Error::Domain(format!(
            "load rho = {rho} ≥ 1: busy period moments diverge"
        )));
    }
    let var = (ex2 - ex * ex).max(0.0);
    let d = 1.0 - rho;
    let d3 = d * d * d;
    Ok(BusyPeriodMoments {
        rho,
        en: 1.0 / d,
        en2: (1.0 + lambda * lambda * var) / d3,
        el: ex / d,
        el2: ex2 / d3,
        cov_nl: lambda * ex2 / d3,
    })
}

/// One busy period, simulated as a branching process: each customer's
/// service spawns a Poisson(`lambda * service`) number of offspring.
/// Returns `(N, L)`.
pub fn simulate_busy_period<R, S>(lambda: f64, service: &S, rng: &mut R) -> (u64, f64)
where
    R: Rng + ?Sized,
    S: Distribution<f64>,
{
    let mut pending = 1u64;
    let mut served = 0u64;
    let mut length = 0.0;
    while pending > 0 {
        pending -= 1;
        served += 1;
        let x = service.sample(rng);
        length += x;
        let mean = lambda * x;
        if mean > 0.0 {
            pending += Poisson::new(mean).expect("positive mean").sample(rng) as u64;
        }
    }
    (served, length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_example() {
        let m = busy_period_moments(0.5, 1.0, 2.0).unwrap();
        assert_eq!(m.rho, 0.5);
        assert!((m.en - 2.0).abs() < 1e-12);
        assert!((m.en2 - 10.0).abs() < 1e-12);
        assert!((m.el - 2.0).abs() < 1e-12);
        assert!((m.el2 - 16.0).abs() < 1e-12);
        assert!((m.cov_nl - 8.0).abs() < 1e-12);
    }

    #[test]
    fn limits() {
        let m = busy_period_moments(1e-12, 3.0, 9.0).unwrap();
        assert!((m.en - 1.0).abs() < 1e-9);
        assert!((m.el - 3.0).abs() < 1e-9);
        let det = busy_period_moments(0.5, 1.0, 1.0).unwrap();
        assert!((det.en2 - 1.0 / 0.125).abs() < 1e-12);
    }

    #[test]
    fn divergence_and_domain() {
        assert!(matches!(busy_period_moments(1.0, 1.0, 2.0), Err(Error::Domain(_))));
        assert!(busy_period_moments(0.5, 1.0, 0.5).is_err());
        assert!(busy_period_moments(0.5, 0.0, 0.0).is_err());
    }
}
