//! Maximal-inequality bounds for processes with stationary independent
//! increments and for M/GI/∞ occupancy, with path simulators to check them.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};

/// `P{sup_t X_t ≥ b} ≤ sigma2 / (-2 drift b)` for a process with drift
/// `drift < 0` and variance rate `sigma2`, capped at 1.
pub fn kingman_bound(drift: f64, sigma2: f64, b: f64) -> Result<f64> {
    if !(drift < 0.0) {
        return Err(Error::Domain(format!("drift {drift} must be negative")));
    }
    if !(sigma2 > 0.0 && b > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need sigma2 > 0 and B > 0, got {sigma2}, {b}"
        )));
    }
    Ok((sigma2 / (-2.0 * drift * b)).min(1.0))
}

/// Lower bound on `P{C_t < b + eps t for all t}` for a compound Poisson
/// process with batch rate `alpha` and batch moments `m1`, `m2`.
pub fn compound_poisson_bound(alpha: f64, m1: f64, m2: f64, b: f64, eps: f64) -> Result<f64> {
    if !(eps > alpha * m1) {
        return Err(Error::Domain(format!(
            "eps = {eps} must exceed alpha * m1 = {}",
            alpha * m1
        )));
    }
    if !(b > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need B > 0 and alpha > 0, got {b}, {alpha}"
        )));
    }
    if m2 < m1 * m1 {
        return Err(Error::InvalidParams(format!("m2 = {m2} < m1^2")));
    }
    Ok((1.0 - alpha * m2 / (2.0 * b * (eps - alpha * m1))).max(0.0))
}

/// `P{M_t ≥ b + eps t for some t} ≤ e^{lambda (m+1)} 2^{-b} / (1 - 2^{-eps})`
/// for an M/GI/∞ queue started empty, capped at 1.
pub fn mgi_infinity_bound(lambda: f64, m: f64, b: f64, eps: f64) -> Result<f64> {
    if !(b > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParams(format!("need B > 0 and eps > 0, got {b}, {eps}")));
    }
    if !(lambda >= 0.0 && m >= 0.0) {
        return Err(Error::InvalidParams("lambda and m must be nonnegative".into()));
    }
    // log-space so large lambda (m + 1) stays finite
    let log_bound =
        lambda * (m + 1.0) - b * std::f64::consts::LN_2 - (1.0 - (-eps * std::f64::consts::LN_2).exp()).ln();
    Ok(log_bound.exp().min(1.0))
}

/// Whether a compound Poisson path with batch rate `alpha` and batch law
/// `jumps` reaches `b + eps t` on `[0, horizon]`.
pub fn compound_poisson_exceeds<R, D>(alpha: f64, jumps: &D, b: f64, eps: f64, horizon: f64, rng: &mut R) -> bool
where
    R: Rng + ?Sized,
    D: Distribution<f64>,
{
    let mut t = 0.0;
    let mut c = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / alpha;
        if t > horizon {
            return false;
        }
        c += jumps.sample(rng);
        if c >= b + eps * t {
            return true;
        }
    }
}

/// Service law of the dominating queue for young peers: `K - 1` phases of
/// rate `mu / 2`.
pub fn young_peer_service(k: usize, mu: f64) -> Result<Gamma<f64>> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("need K ≥ 2, got {k}")));
    }
    Gamma::new((k - 1) as f64, 2.0 / mu).map_err(|e| Error::InvalidParams(e.to_string()))
}

/// Piecewise-constant occupancy path: `counts[i]` holds on `[times[i], times[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyPath {
    pub times: Vec<f64>,
    pub counts: Vec<u64>,
}

impl OccupancyPath {
    pub fn at(&self, t: f64) -> u64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            0
        } else {
            self.counts[i - 1]
        }
    }

    /// Whether the path reaches `b + eps t` anywhere. The boundary rises, so
    /// checking right after each upward jump suffices.
    pub fn exceeds(&self, b: f64, eps: f64) -> bool {
        self.times
            .iter()
            .zip(&self.counts)
            .zip(std::iter::once(&0).chain(&self.counts))
            .any(|((&t, &n), &prev)| n > prev && n as f64 >= b + eps * t)
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Exact M/GI/∞ occupancy from empty on `[0, horizon]`.
pub fn mginfty_simulate<R, S>(lambda: f64, service: &S, horizon: f64, rng: &mut R) -> OccupancyPath
where
    R: Rng + ?Sized,
    S: Distribution<f64>,
{
    let mut path = OccupancyPath {
        times: vec![0.0],
        counts: vec![0],
    };
    if lambda <= 0.0 {
        return path;
    }
    let mut departures: BinaryHeap<Reverse<OrderedFloat<f64>>> = BinaryHeap::new();
    let mut t = 0.0;
    let mut n = 0u64;
    loop {
        let e: f64 = Exp1.sample(rng);
        let arrival = t + e / lambda;
        while let Some(&Reverse(OrderedFloat(d))) = departures.peek() {
            if d > arrival || d > horizon {
                break;
            }
            departures.pop();
            n -= 1;
            path.times.push(d);
            path.counts.push(n);
        }
        if arrival > horizon {
            break;
        }
        t = arrival;
        n += 1;
        departures.push(Reverse(OrderedFloat(t + service.sample(rng))));
        path.times.push(t);
        path.counts.push(n);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kingman_cases() {
        assert!((kingman_bound(-1.0, 2.0, 10.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(kingman_bound(-1.0, 2.0, 1e12).unwrap() < 1e-11);
        assert_eq!(kingman_bound(-1.0, 2.0, 0.01).unwrap(), 1.0);
        assert!(matches!(kingman_bound(0.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn compound_cases() {
        assert!((compound_poisson_bound(1.0, 1.0, 2.0, 10.0, 2.0).unwrap() - 0.9).abs() < 1e-15);
        assert!(compound_poisson_bound(1.0, 1.0, 2.0, 1e12, 2.0).unwrap() > 1.0 - 1e-11);
        assert!(matches!(
            compound_poisson_bound(1.0, 1.0, 2.0, 10.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mgi_cases() {
        let v = mgi_infinity_bound(1.0, 1.0, 10.0, 1.0).unwrap();
        let want = 2.0 * (2.0f64).exp() / 1024.0;
        assert!((v - want).abs() < 1e-15 * want.max(1.0) * 10.0, "{v} vs {want}");
        assert!((v - 0.01444).abs() < 1e-5);
        assert!(mgi_infinity_bound(1.0, 1.0, 2000.0, 1.0).unwrap() < 1e-300);
    }

    #[test]
    fn zero_arrivals_stay_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = young_peer_service(3, 1.0).unwrap();
        let path = mginfty_simulate(0.0, &s, 100.0, &mut rng);
        assert_eq!(path.max(), 0);
        assert_eq!(path.at(50.0), 0);
    }

    #[test]
    fn occupancy_path_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = young_peer_service(4, 2.0).unwrap();
        let path = mginfty_simulate(3.0, &s, 50.0, &mut rng);
        assert!(path.times.windows(2).all(|w| w[0] <= w[1]));
        for w in path.counts.windows(2) {
            assert_eq!((w[1] as i64 - w[0] as i64).abs(), 1);
        }
        assert!(path.exceeds(1.0, 0.0));
        assert!(!path.exceeds(path.max() as f64 + 1.0, 0.0));
    }
}
