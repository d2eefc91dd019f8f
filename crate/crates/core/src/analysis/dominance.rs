//! One-sided empirical test of stochastic ordering between two samples.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceTest {
    /// `sup_z (F_upper(z) - F_lower(z))`, the largest amount by which the
    /// sample claimed to be larger sits below the other.
    pub violation: f64,
    /// Allowed violation: the sum of the two DKW radii at level `alpha`.
    pub tolerance: f64,
    pub holds: bool,
}

/// Tests `lower ≤_st upper`, i.e. `F_lower(z) ≥ F_upper(z)` for all `z`.
///
/// Each empirical CDF is within `sqrt(ln(2/alpha) / (2n))` of its target
/// with probability at least `1 - alpha`, so a true ordering is rejected
/// with probability at most `2 alpha`.
pub fn dominance_test(lower: &[f64], upper: &[f64], alpha: f64) -> Result<DominanceTest> {
    if lower.is_empty() || upper.is_empty() {
        return Err(Error::InvalidParams("both samples must be non-empty".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, 1)")));
    }
    if lower.iter().chain(upper).any(|v| v.is_nan()) {
        return Err(Error::InvalidParams("samples contain NaN".into()));
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    lo.sort_by(f64::total_cmp);
    hi.sort_by(f64::total_cmp);
    let (nl, nh) = (lo.len() as f64, hi.len() as f64);

    // Both CDFs only change at sample points; evaluate just after each one.
    let mut violation: f64 = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < lo.len() || j < hi.len() {
        let z = match (lo.get(i), hi.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < lo.len() && lo[i] <= z {
            i += 1;
        }
        while j < hi.len() && hi[j] <= z {
            j += 1;
        }
        violation = violation.max(j as f64 / nh - i as f64 / nl);
    }
    let radius = |n: f64| ((2.0 / alpha).ln() / (2.0 * n)).sqrt();
    let tolerance = radius(nl) + radius(nh);
    Ok(DominanceTest {
        violation,
        tolerance,
        holds: violation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn ordered_samples() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        let t = dominance_test(&a, &b, 0.05).unwrap();
        assert_eq!(t.violation, 0.0);
        assert!(t.holds);
        let r = dominance_test(&b, &a, 0.05).unwrap();
        assert!((r.violation - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn detects_reversed_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let small: Vec<f64> = Exp::new(2.0).unwrap().sample_iter(&mut rng).take(5000).collect();
        let large: Vec<f64> = Exp::new(1.0).unwrap().sample_iter(&mut rng).take(5000).collect();
        assert!(dominance_test(&small, &large, 0.01).unwrap().holds);
        assert!(!dominance_test(&large, &small, 0.01).unwrap().holds);
    }

    #[test]
    fn identical_laws_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a: Vec<f64> = Exp::new(1.0).unwrap().sample_iter(&mut rng).take(2000).collect();
        let b: Vec<f64> = Exp::new(1.0).unwrap().sample_iter(&mut rng).take(2000).collect();
        assert!(dominance_test(&a, &b, 0.01).unwrap().holds);
    }
}
