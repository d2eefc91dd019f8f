//! Quadratic potential `V(x) = sum_i b_i (n_0 + ... + n_i)^2 / 2` and its
//! drift under random useful selection when `lambda < Us`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{generator_row, ModelParams, PieceSet, SwarmState, TransitionKind};
use crate::policy::Policy;

/// Margin by which each `b_i` exceeds its lower limit.
pub const COEFFICIENT_MARGIN: f64 = 0.01;

/// Weights `b_0 > ... > b_{K-1} = 1` and suffix sums `a_i = b_i + ... + b_{K-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCoefficients {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

pub fn lyapunov_coefficients(lambda: f64, us: f64, k: usize) -> Result<LyapunovCoefficients> {
    if k == 0 {
        return Err(Error::InvalidParams("K must be ≥ 1".into()));
    }
    if !(lambda > 0.0 && lambda < us) {
        return Err(Error::Domain(format!("need 0 < lambda < Us, got {lambda}, {us}")));
    }
    let ratio = lambda / (us - lambda);
    let mut b = vec![0.0f64; k];
    let mut a = vec![0.0f64; k + 1];
    b[k - 1] = 1.0;
    a[k - 1] = 1.0;
    for i in (0..k - 1).rev() {
        b[i] = (1.0 + COEFFICIENT_MARGIN) * b[i + 1].max(ratio * a[i + 1]);
        a[i] = b[i] + a[i + 1];
    }
    a.truncate(k);
    let c = LyapunovCoefficients { b, a };
    c.verify(lambda, us)?;
    Ok(c)
}

impl LyapunovCoefficients {
    pub fn k(&self) -> usize {
        self.b.len()
    }

    /// Checks ordering, the suffix sums, and both forms of the coefficient
    /// condition, which must agree.
    pub fn verify(&self, lambda: f64, us: f64) -> Result<()> {
        let k = self.k();
        let fail = |m: String| Err(Error::Contract(format!("Lyapunov coefficients: {m}")));
        if k == 0 || self.a.len() != k || self.b[k - 1] != 1.0 {
            return fail("need b_{K-1} = 1 and matching lengths".into());
        }
        for i in 0..k {
            let suffix: f64 = self.b[i..].iter().sum();
            if (self.a[i] - suffix).abs() > 1e-12 * suffix {
                return fail(format!("a_{i} is not a suffix sum"));
            }
        }
        let ratio = lambda / (us - lambda);
        for i in 0..k.saturating_sub(1) {
            if !(self.b[i] > self.b[i + 1]) {
                return fail(format!("b_{i} ≤ b_{}", i + 1));
            }
            let first = self.b[i] > ratio * self.a[i + 1];
            let second = us * self.b[i] - lambda * self.a[i] > 0.0;
            if !(first && second) {
                return fail(format!("condition fails at i = {i} ({first}, {second})"));
            }
        }
        Ok(())
    }
}

/// Exact drift of `V` and its analytic upper bound at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    pub exact: f64,
    pub bound: f64,
}

/// Relative slack allowed between the exact drift and its bound.
pub const DRIFT_TOLERANCE: f64 = 1e-9;

/// `QV(x)` by enumerating the generator row, and the bound
/// `a_0 lambda/2 + lambda sum n_i a_i - sum (n_i - 1/2) b_i d_i` with
/// `d_i = n_i (Us + mu sum_{j>i} n_j) / |x|`.
///
/// Increments of `V` are formed directly: an arrival adds
/// `sum_i b_i (S_i + 1/2)` and a download by a peer holding `i` pieces adds
/// `b_i (1/2 - S_i)`, where `S_i = n_0 + ... + n_i`.
pub fn drift_qv(x: &SwarmState, p: &ModelParams, coeffs: &LyapunovCoefficients) -> Result<Drift> {
    let k = p.k;
    if x.k() != k || coeffs.k() != k {
        return Err(Error::InvalidParams(
            "state, parameters and coefficients disagree on K".into(),
        ));
    }
    let n: Vec<f64> = x.by_size().iter().map(|&c| c as f64).collect();
    let s: Vec<f64> = n
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let arrival_dv: f64 = (0..k).map(|i| coeffs.b[i] * (s[i] + 0.5)).sum();

    let mut exact = 0.0;
    for t in generator_row(x, p, Policy::RandomUseful) {
        exact += t.rate
            * match t.kind {
                TransitionKind::Arrival => arrival_dv,
                TransitionKind::Download { from, .. } => {
                    let i = from.len();
                    coeffs.b[i] * (0.5 - s[i])
                }
            };
    }

    let total = x.total() as f64;
    let mut bound = coeffs.a[0] * p.lambda / 2.0;
    for i in 0..k {
        bound += p.lambda * n[i] * coeffs.a[i];
        if n[i] > 0.0 {
            let above: f64 = n[i + 1..].iter().sum();
            let d = n[i] * (p.us + p.mu * above) / total;
            bound -= (n[i] - 0.5) * coeffs.b[i] * d;
        }
    }
    let scale = exact.abs().max(bound.abs()).max(1.0);
    if exact > bound + DRIFT_TOLERANCE * scale {
        return Err(Error::Contract(format!("drift {exact} exceeds its bound {bound}")));
    }
    Ok(Drift { exact, bound })
}

/// Certificate that `QV(x) ≤ -epsilon |x|` whenever `|x| ≥ l`.
///
/// `l_concentrated` covers states with some `n_i ≥ (1 - eta)|x|`;
/// `l_spread` covers the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCertificate {
    pub eta: f64,
    pub epsilon: f64,
    pub l_concentrated: f64,
    pub l_spread: f64,
    pub l: f64,
    /// States checked against the exact drift.
    pub checked: usize,
}

/// Default `eta` grid: `2^-1, 2^-2, ..., 2^-40`.
pub fn default_eta_grid() -> Vec<f64> {
    (1..=40).map(|j| 0.5f64.powi(j)).collect()
}

// Certificate from the analytic bounds alone, if `eta` works.
fn certificate_for(eta: f64, p: &ModelParams, c: &LyapunovCoefficients) -> Option<DriftCertificate> {
    let k = p.k;
    let kf = k as f64;
    let a0 = c.a[0];
    let g: Vec<f64> = (0..k)
        .map(|i| c.a[i] * p.lambda + kf * a0 * p.lambda * eta / (1.0 - eta) - c.b[i] * (1.0 - eta) * p.us)
        .collect();
    if g.iter().any(|&gi| !(gi < 0.0)) {
        return None;
    }
    let gmin = g.iter().map(|gi| -gi).fold(f64::INFINITY, f64::min);
    let epsilon = (1.0 - eta) * gmin / 4.0;
    let mut l_conc = 2.0 * a0 * p.lambda / ((1.0 - eta) * gmin);
    for (bi, gi) in c.b.iter().zip(&g) {
        l_conc = l_conc.max(bi * p.us / -gi);
    }
    // With K = 1 every state is concentrated.
    let l_spread = if k == 1 {
        0.0
    } else {
        let qa = (eta / kf).powi(3) * p.mu;
        let qb = a0 * kf * p.lambda + c.b[0] * p.mu / 2.0 + epsilon;
        let qc = a0 * p.lambda / 2.0;
        (qb + (qb * qb + 4.0 * qa * qc).sqrt()) / (2.0 * qa)
    };
    Some(DriftCertificate {
        eta,
        epsilon,
        l_concentrated: l_conc,
        l_spread,
        l: l_conc.max(l_spread),
        checked: 0,
    })
}

/// A state with `total` peers spread over the proper subsets by random
/// weights. With `concentrate = Some(eta)` one random size level holds at
/// least `(1 - eta)` of the peers.
pub fn sample_state<R: Rng + ?Sized>(
    k: usize,
    total: u64,
    concentrate: Option<f64>,
    rng: &mut R,
) -> Result<SwarmState> {
    let full = PieceSet::full(k);
    let mut x = SwarmState::new(k)?;
    let types: Vec<PieceSet> = if k <= 12 {
        (0..full.bits()).map(PieceSet::from_bits).collect()
    } else {
        // random sample of types for large K
        (0..64)
            .map(|_| PieceSet::from_bits(rng.random::<u64>() & full.bits()))
            .filter(|&c| c != full)
            .collect()
    };
    let mut weights: Vec<f64> = types.iter().map(|_| -rng.random::<f64>().ln()).collect();
    let mut remaining = total;
    if let Some(eta) = concentrate {
        let level = rng.random_range(0..k);
        let share = 1.0 - eta * rng.random::<f64>();
        let heavy = ((total as f64) * share).ceil() as u64;
        let at_level: Vec<usize> = (0..types.len()).filter(|&j| types[j].len() == level).collect();
        let j = at_level[rng.random_range(0..at_level.len())];
        x.add_peers(types[j], heavy.min(total))?;
        remaining -= heavy.min(total);
        weights[j] = 0.0;
    }
    let wsum: f64 = weights.iter().sum();
    let mut placed = 0u64;
    for (j, &c) in types.iter().enumerate() {
        if placed == remaining {
            break;
        }
        let share = ((weights[j] / wsum) * remaining as f64).floor() as u64;
        let share = share.min(remaining - placed);
        x.add_peers(c, share)?;
        placed += share;
    }
    if placed < remaining {
        x.add_peers(PieceSet::EMPTY, remaining - placed)?;
    }
    Ok(x)
}

/// Searches `eta_grid` for the certificate with the smallest `l`, then
/// checks `QV(x) ≤ -epsilon |x|` on `samples` random states with
/// `|x| ∈ [l, 10 l]`, half of them concentrated on one level.
pub fn drift_region_check<R: Rng + ?Sized>(
    p: &ModelParams,
    coeffs: &LyapunovCoefficients,
    eta_grid: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<DriftCertificate> {
    p.validate()?;
    if coeffs.k() != p.k {
        return Err(Error::InvalidParams("coefficients have the wrong K".into()));
    }
    let mut best = eta_grid
        .iter()
        .filter(|&&e| e > 0.0 && e < 1.0)
        .filter_map(|&eta| certificate_for(eta, p, coeffs))
        .filter(|c| c.l.is_finite() && c.l < u64::MAX as f64 / 16.0)
        .min_by(|x, y| x.l.total_cmp(&y.l))
        .ok_or_else(|| {
            Error::SearchFailed(format!(
                "no eta in the grid gives a negative drift bound at lambda = {}, Us = {}",
                p.lambda, p.us
            ))
        })?;

    let lo = best.l.max(1.0).ln();
    for j in 0..samples {
        let total = (lo + rng.random::<f64>() * 10f64.ln()).exp().ceil() as u64;
        let concentrate = (j % 2 == 0).then_some(best.eta);
        let x = sample_state(p.k, total, concentrate, rng)?;
        let d = drift_qv(&x, p, coeffs)?;
        if d.exact > -best.epsilon * x.total() as f64 {
            return Err(Error::Contract(format!(
                "certified drift fails at |x| = {}: QV = {}, limit {}",
                x.total(),
                d.exact,
                -best.epsilon * x.total() as f64
            )));
        }
    }
    best.checked = samples;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_piece_coefficients() {
        let c = lyapunov_coefficients(0.5, 1.0, 2).unwrap();
        assert_eq!(c.b, vec![1.01, 1.0]);
        assert!((c.a[0] - 2.01).abs() < 1e-15);
        assert!(1.0 * c.b[0] - 0.5 * c.a[0] > 0.0);
        assert_eq!(lyapunov_coefficients(0.5, 1.0, 1).unwrap().b, vec![1.0]);
        assert!(lyapunov_coefficients(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn coefficients_grow_near_critical() {
        let near = lyapunov_coefficients(0.999, 1.0, 3).unwrap();
        let far = lyapunov_coefficients(0.5, 1.0, 3).unwrap();
        assert!(near.b[0] > 1e5 * far.b[0]);
    }

    #[test]
    fn single_piece_drift() {
        let p = ModelParams::new(1, 0.3, 1.0, 0.8).unwrap();
        let c = lyapunov_coefficients(0.3, 0.8, 1).unwrap();
        for n in [1u64, 2, 7, 100] {
            let mut x = SwarmState::new(1).unwrap();
            x.add_peers(PieceSet::EMPTY, n).unwrap();
            let d = drift_qv(&x, &p, &c).unwrap();
            let want = 0.3 * (n as f64 + 0.5) - 0.8 * (n as f64 - 0.5);
            assert!((d.exact - want).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn empty_state_drift() {
        let p = ModelParams::new(3, 0.5, 1.0, 1.0).unwrap();
        let c = lyapunov_coefficients(0.5, 1.0, 3).unwrap();
        let d = drift_qv(&SwarmState::new(3).unwrap(), &p, &c).unwrap();
        assert!((d.exact - 0.5 * c.a[0] / 2.0).abs() < 1e-12);
        assert!((d.bound - d.exact).abs() < 1e-12);
    }

    #[test]
    fn certificate_small_case() {
        let p = ModelParams::new(2, 0.5, 1.0, 1.0).unwrap();
        let c = lyapunov_coefficients(0.5, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cert = drift_region_check(&p, &c, &default_eta_grid(), 200, &mut rng).unwrap();
        assert!(cert.epsilon > 0.0 && cert.l >= cert.l_concentrated);
        assert_eq!(cert.checked, 200);
    }

    #[test]
    fn unstable_rates_fail_search() {
        let p = ModelParams::new(3, 1.2, 1.0, 1.0).unwrap();
        let c = lyapunov_coefficients(0.5, 1.0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            drift_region_check(&p, &c, &default_eta_grid(), 10, &mut rng),
            Err(Error::SearchFailed(_))
        ));
    }

    #[test]
    fn sampled_states_have_requested_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for total in [0u64, 1, 5, 1000, 1 << 40] {
            for conc in [None, Some(0.01)] {
                let x = sample_state(3, total, conc, &mut rng).unwrap();
                assert_eq!(x.total(), total);
                if let (Some(eta), true) = (conc, total > 0) {
                    let max = *x.by_size().iter().max().unwrap();
                    assert!(max as f64 >= (1.0 - eta) * total as f64);
                }
            }
        }
    }
}
