use crate::error::{Error, Result};
use crate::model::MAX_PIECES;

/// Rates and piece count of the swarm model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Number of pieces the file is split into.
    pub k: usize,
    /// Poisson arrival rate of new peers.
    pub lambda: f64,
    /// Per-peer contact rate.
    pub mu: f64,
    /// Upload rate of the fixed seed.
    pub us: f64,
}

impl ModelParams {
    pub fn new(k: usize, lambda: f64, mu: f64, us: f64) -> Result<Self> {
        let p = Self { k, lambda, mu, us };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_PIECES {
            return Err(Error::InvalidParams(format!("K = {} outside 1..={MAX_PIECES}", self.k)));
        }
        for (name, v) in [("lambda", self.lambda), ("mu", self.mu), ("Us", self.us)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and > 0")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(ModelParams::new(0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(65, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 1.0, 1.0, f64::NAN).is_err());
        assert!(ModelParams::new(40, 0.6, 1.0, 1.0).is_ok());
    }
}
