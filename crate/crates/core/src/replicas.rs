//! Independent-replica runner.
//!
//! Every replica draws from its own ChaCha stream: the base seed is shared
//! and the replica index selects the stream, so a replica's output does not
//! depend on how work is scheduled. Results come back in replica order.
//! With the `parallel` feature replicas run on the rayon pool; otherwise
//! they run one after another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG stream for replica `index` under base seed `seed`.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `n` replicas one after another.
pub fn run_sequential<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    F: Fn(usize, &mut ChaCha8Rng) -> T,
{
    (0..n).map(|i| f(i, &mut replica_rng(seed, i as u64))).collect()
}

/// Runs `n` replicas on the rayon pool.
#[cfg(feature = "parallel")]
pub fn run_parallel<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| f(i, &mut replica_rng(seed, i as u64)))
        .collect()
}

/// Runs `n` replicas, in parallel when the `parallel` feature is enabled.
pub fn run<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_parallel(n, seed, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(n, seed, f)
    }
}

/// Sample mean, standard deviation and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            n,
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
        }
    }

    /// `|mean - target| <= z * se`.
    pub fn agrees_with(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.se
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn sequential_matches_dispatch() {
        let f = |i: usize, rng: &mut ChaCha8Rng| (i, rng.random::<u64>());
        assert_eq!(run_sequential(16, 9, f), run(16, 9, f));
    }

    #[test]
    fn streams_differ() {
        let a: u64 = replica_rng(1, 0).random();
        let b: u64 = replica_rng(1, 1).random();
        assert_ne!(a, b);
    }

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.se - s.sd / 2.0).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).se, 0.0);
    }
}
