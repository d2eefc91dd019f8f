use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::SwarmState;

/// What the per-stratum counts of a sample measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strata {
    /// `n_i`: peers holding exactly `i` pieces.
    PieceCount,
    /// Peers whose coding subspace has dimension `i`.
    Dimension,
}

impl Strata {
    fn column_prefix(self) -> &'static str {
        match self {
            Strata::PieceCount => "n",
            Strata::Dimension => "dim",
        }
    }
}

/// State statistics at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub total: u64,
    pub strata: Vec<u64>,
    /// Holders per piece; empty for coded runs.
    pub holders: Vec<u64>,
    /// `x_{F - {j}}` per piece; empty for coded runs.
    pub one_club: Vec<u64>,
    pub arrivals: u64,
    pub departures: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure {
    pub time: f64,
    /// Time since arrival. Peers present at t = 0 count from 0.
    pub sojourn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub k: usize,
    pub strata_kind: Strata,
    pub initial_total: u64,
    pub samples: Vec<Sample>,
    pub departures: Vec<Departure>,
    /// Cumulative arrivals over the run.
    pub arrivals: u64,
    /// Seed uploads that changed state, per piece (coded runs: one entry).
    pub seed_uploads: Vec<u64>,
    /// Events drawn, including null ones.
    pub events: u64,
    pub null_events: u64,
    /// State at the horizon; `None` for coded runs.
    pub final_state: Option<SwarmState>,
}

/// Time-averaged holder counts per piece, plus the average swarm size.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceProfile {
    pub avg_holders: Vec<f64>,
    pub avg_total: f64,
}

impl Trajectory {
    fn window(&self, t0: f64, t1: f64) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.t >= t0 && s.t <= t1)
    }

    /// Average of `|x|` over the grid samples in `[t0, t1]`.
    pub fn time_average_total(&self, t0: f64, t1: f64) -> Result<f64> {
        let (sum, n) = self
            .window(t0, t1)
            .fold((0.0, 0usize), |(s, n), x| (s + x.total as f64, n + 1));
        if n == 0 {
            return Err(Error::TooFewSamples {
                t0,
                t1,
                found: 0,
                needed: 1,
            });
        }
        Ok(sum / n as f64)
    }

    /// Least-squares slope of `|x_t|` against `t` over `[t0, t1]`.
    pub fn slope_estimate(&self, t0: f64, t1: f64) -> Result<f64> {
        const NEEDED: usize = 10;
        let pts: Vec<(f64, f64)> = self.window(t0, t1).map(|s| (s.t, s.total as f64)).collect();
        if pts.len() < NEEDED {
            return Err(Error::TooFewSamples {
                t0,
                t1,
                found: pts.len(),
                needed: NEEDED,
            });
        }
        Ok(least_squares_slope(&pts))
    }

    pub fn piece_presence_profile(&self) -> PresenceProfile {
        self.presence_over(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Grid-averaged holder counts over `[t0, t1]`. Samples sit on a uniform
    /// grid, so this is the time average of the piecewise-constant path.
    pub fn presence_over(&self, t0: f64, t1: f64) -> PresenceProfile {
        let mut sums = vec![0.0; self.k];
        let mut total = 0.0;
        let mut n = 0usize;
        for s in self.window(t0, t1) {
            for (acc, &m) in sums.iter_mut().zip(&s.holders) {
                *acc += m as f64;
            }
            total += s.total as f64;
            n += 1;
        }
        let n = n.max(1) as f64;
        PresenceProfile {
            avg_holders: sums.into_iter().map(|v| v / n).collect(),
            avg_total: total / n,
        }
    }

    /// `t,total,n_0,..,n_{K-1}` (or `dim_` columns for coded runs).
    pub fn write_counts_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let prefix = self.strata_kind.column_prefix();
        write!(w, "t,total")?;
        for i in 0..self.k {
            write!(w, ",{prefix}_{i}")?;
        }
        writeln!(w)?;
        for s in &self.samples {
            write!(w, "{},{}", s.t, s.total)?;
            for n in &s.strata {
                write!(w, ",{n}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// `piece,avg_holders` with 1-based piece numbers.
    pub fn write_presence_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "piece,avg_holders")?;
        for (j, v) in self.piece_presence_profile().avg_holders.iter().enumerate() {
            writeln!(w, "{},{}", j + 1, v)?;
        }
        Ok(())
    }

    /// `t_depart,sojourn`.
    pub fn write_departures_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t_depart,sojourn")?;
        for d in &self.departures {
            writeln!(w, "{},{}", d.time, d.sojourn)?;
        }
        Ok(())
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (num, den) = pts.iter().fold((0.0, 0.0), |(num, den), &(t, y)| {
        (num + (t - mt) * (y - my), den + (t - mt).powi(2))
    });
    num / den
}
