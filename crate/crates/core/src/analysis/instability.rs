//! Constants for the transience argument when `lambda > Us`, the launch
//! experiment from a large one-club population, and the moments of the
//! infected-peer batches.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::analysis::busy_period::busy_period_moments;
use crate::error::{Error, Result};
use crate::model::{ModelParams, PieceSet};

/// Constants of the construction. `b` is the slack and `n_o` the launch
/// population size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilityConstants {
    pub params: ModelParams,
    pub epsilon: f64,
    pub xi: f64,
    pub epsilon_o: f64,
    pub b: f64,
    pub n_o: u64,
    /// `2 xi (K - 1)`.
    pub rho: f64,
}

/// One inequality of the construction, as evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl std::fmt::Display for InequalityCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = if self.holds { "ok" } else { "FAILS" };
        write!(
            f,
            "{:<28} {:>14.6e} vs {:>14.6e}  {mark}",
            self.name, self.lhs, self.rhs
        )
    }
}

// ln of e^{lambda (2(K-1)/mu + 1)} 2^{-B} / (1 - 2^{-eps_o})
fn log_mginfty_term(p: &ModelParams, epsilon_o: f64, b: f64) -> f64 {
    let m = 2.0 * (p.k - 1) as f64 / p.mu;
    p.lambda * (m + 1.0) - b * LN_2 - (-(-epsilon_o * LN_2).exp_m1()).ln()
}

fn mg1_term(p: &ModelParams, epsilon: f64, xi: f64, b: f64) -> f64 {
    let k = p.k as f64;
    64.0 * k * k * xi * p.us / (2.0 * b * (epsilon - 4.0 * k * xi * p.us))
}

fn b_checks(p: &ModelParams, epsilon: f64, xi: f64, epsilon_o: f64, b: f64) -> [InequalityCheck; 4] {
    let lim = 0.1f64;
    let inf = log_mginfty_term(p, epsilon_o, b);
    let mg1 = mg1_term(p, epsilon, xi, b);
    let poi_l = p.lambda / (2.0 * b * epsilon);
    let poi_s = p.us / (2.0 * b * epsilon);
    [
        InequalityCheck {
            name: "ln(mginfty term) <= ln 0.1",
            lhs: inf,
            rhs: lim.ln(),
            holds: inf <= lim.ln(),
        },
        InequalityCheck {
            name: "mg1 batch term <= 0.1",
            lhs: mg1,
            rhs: lim,
            holds: mg1 > 0.0 && mg1 <= lim,
        },
        InequalityCheck {
            name: "lambda/(2 B eps) <= 0.1",
            lhs: poi_l,
            rhs: lim,
            holds: poi_l <= lim,
        },
        InequalityCheck {
            name: "Us/(2 B eps) <= 0.1",
            lhs: poi_s,
            rhs: lim,
            holds: poi_s <= lim,
        },
    ]
}

fn n_o_check(b: f64, xi: f64, n_o: u64) -> InequalityCheck {
    let n = n_o as f64;
    let lhs = if n > 3.0 * b { b / (n - 3.0 * b) } else { f64::INFINITY };
    InequalityCheck {
        name: "B/(N_o - 3B) <= xi",
        lhs,
        rhs: xi,
        holds: lhs <= xi,
    }
}

/// Chooses the constants: `eps = (lambda - Us)/4`, `xi` half the binding cap,
/// `eps_o = xi (lambda - Us - 3 eps)/2`, then the smallest integer `B` and
/// `N_o` that pass every check.
pub fn instability_constants(p: &ModelParams) -> Result<InstabilityConstants> {
    p.validate()?;
    if p.lambda <= p.us {
        return Err(Error::Domain(format!(
            "lambda = {} ≤ Us = {}: the swarm is not transient",
            p.lambda, p.us
        )));
    }
    if p.k < 2 {
        return Err(Error::Domain("the construction needs K ≥ 2".into()));
    }
    let k = p.k as f64;
    let gap = p.lambda - p.us;
    let epsilon = gap / 4.0;
    let xi = (epsilon / (4.0 * k * p.us)).min(1.0 / (4.0 * (k - 1.0) + 1.0)) / 2.0;
    let epsilon_o = xi * (gap - 3.0 * epsilon) / 2.0;

    let b_inf = (p.lambda * (2.0 * (k - 1.0) / p.mu + 1.0) - (-(-epsilon_o * LN_2).exp_m1()).ln() - 0.1f64.ln()) / LN_2;
    let b_mg1 = 64.0 * k * k * xi * p.us / (0.2 * (epsilon - 4.0 * k * xi * p.us));
    let b_poi = p.lambda.max(p.us) / (0.2 * epsilon);
    let target = b_inf.max(b_mg1).max(b_poi);
    // Start just below the closed-form minimum; rounding noise is absorbed by
    // the monotone step.
    let mut b = (target * (1.0 - 1e-12)).ceil().max(1.0);
    while !b_checks(p, epsilon, xi, epsilon_o, b).iter().all(|c| c.holds) {
        b += 1.0;
    }

    let mut n_o = ((b / xi + 3.0 * b) * (1.0 - 1e-12)).ceil() as u64;
    while !n_o_check(b, xi, n_o).holds {
        n_o += 1;
    }
    while n_o > 1 && n_o_check(b, xi, n_o - 1).holds {
        n_o -= 1;
    }

    let c = InstabilityConstants {
        params: *p,
        epsilon,
        xi,
        epsilon_o,
        b,
        n_o,
        rho: 2.0 * xi * (k - 1.0),
    };
    c.verify()?;
    Ok(c)
}

impl InstabilityConstants {
    /// Every inequality, evaluated by direct substitution.
    pub fn checks(&self) -> Vec<InequalityCheck> {
        let p = &self.params;
        let k = p.k as f64;
        let gap = p.lambda - p.us;
        let rho = 2.0 * self.xi * (k - 1.0);
        let seed_margin = self.epsilon - 4.0 * k * self.xi * p.us;
        let young_ratio = self.epsilon_o / (gap - 3.0 * self.epsilon);
        let mut out = vec![
            InequalityCheck {
                name: "3 eps < lambda - Us",
                lhs: 3.0 * self.epsilon,
                rhs: gap,
                holds: 3.0 * self.epsilon < gap && self.epsilon > 0.0,
            },
            InequalityCheck {
                name: "eps - 4 K xi Us > 0",
                lhs: seed_margin,
                rhs: 0.0,
                holds: seed_margin > 0.0 && self.xi > 0.0,
            },
            InequalityCheck {
                name: "rho = 2 xi (K-1) < 1/2",
                lhs: rho,
                rhs: 0.5,
                holds: rho < 0.5,
            },
            InequalityCheck {
                name: "eps_o/(lambda-Us-3eps) < xi",
                lhs: young_ratio,
                rhs: self.xi,
                holds: self.epsilon_o > 0.0 && young_ratio < self.xi,
            },
        ];
        out.extend(b_checks(p, self.epsilon, self.xi, self.epsilon_o, self.b));
        out.push(n_o_check(self.b, self.xi, self.n_o));
        out
    }

    pub fn verify(&self) -> Result<()> {
        self.params.validate()?;
        match self.checks().into_iter().find(|c| !c.holds) {
            None => Ok(()),
            Some(c) => Err(Error::Contract(format!("instability constants: {c}"))),
        }
    }

    /// Lower line `N_o - 3B + (lambda - Us - 3 eps) t` for the population.
    pub fn population_floor(&self, t: f64) -> f64 {
        let p = &self.params;
        self.n_o as f64 - 3.0 * self.b + (p.lambda - p.us - 3.0 * self.epsilon) * t
    }
}

/// Moments of the batch size `J` of infected-peer uploads attributed to one
/// seed-created root, through the reference M/GI/1 queue with arrival rate
/// `xi mu` and Gamma(`K-1`, `mu/2`) service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonMoments {
    pub rho: f64,
    /// `E[X] = 2(K-1)/mu`.
    pub ex: f64,
    /// `E[X^2]`.
    pub ex2: f64,
    /// Exact `E[J]`.
    pub ej: f64,
    /// Exact `E[J^2]`.
    pub ej2: f64,
    /// Upper bound on `E[J_1^2]` by `E[(J_1+1)^2]`.
    pub ej1_sq_bound: f64,
    /// Exact `E[J_2^2]`.
    pub ej2_sq: f64,
    /// `2 (E[J_1^2] bound + E[J_2^2])`.
    pub ej_sq_bound: f64,
    /// `16 (4K^2 - 2K)`.
    pub chain_bound: f64,
    pub bound_ej: f64,
    pub bound_ej2: f64,
    /// Rate of root arrivals, `xi Us`.
    pub batch_rate: f64,
}

pub fn comparison_moments(xi: f64, mu: f64, us: f64, k: usize) -> Result<ComparisonMoments> {
    if k < 2 {
        return Err(Error::InvalidParams("need K ≥ 2".into()));
    }
    if !(xi > 0.0 && mu > 0.0 && us > 0.0) {
        return Err(Error::InvalidParams("xi, mu and Us must be positive".into()));
    }
    let kf = k as f64;
    let rho = 2.0 * xi * (kf - 1.0);
    if rho >= 0.5 {
        return Err(Error::Domain(format!("rho = {rho} ≥ 1/2")));
    }
    let ex = 2.0 * (kf - 1.0) / mu;
    let var = 4.0 * (kf - 1.0) / (mu * mu);
    let ex2 = var + ex * ex;
    let arrival = xi * mu;
    let bp = busy_period_moments(arrival, ex, ex2)?;
    let d3 = (1.0 - rho).powi(3);

    let ej = (1.0 + mu * ex) / (1.0 - rho) - 1.0;
    // J1 = N - 1; J2 given L is Poisson(mu L).
    let ej1_sq = bp.en2 - 2.0 * bp.en + 1.0;
    let enl = bp.cov_nl + bp.en * bp.el;
    let ej1_j2 = mu * (enl - bp.el);
    let ej2_sq = mu * bp.el + mu * mu * bp.el2;
    let ej2 = ej1_sq + 2.0 * ej1_j2 + ej2_sq;

    let ej1_sq_bound = (1.0 + arrival * arrival * var) / d3;
    let ej_sq_bound = 2.0 * (ej1_sq_bound + ej2_sq);
    let chain_bound = 16.0 * (4.0 * kf * kf - 2.0 * kf);
    let m = ComparisonMoments {
        rho,
        ex,
        ex2,
        ej,
        ej2,
        ej1_sq_bound,
        ej2_sq,
        ej_sq_bound,
        chain_bound,
        bound_ej: 4.0 * kf,
        bound_ej2: 64.0 * kf * kf,
        batch_rate: xi * us,
    };
    let tol = 1e-12 * m.bound_ej2;
    if !(m.ej <= m.bound_ej
        && m.ej2 <= m.ej_sq_bound + tol
        && m.ej_sq_bound <= m.chain_bound + tol
        && m.chain_bound <= m.bound_ej2)
    {
        return Err(Error::Contract(format!("comparison moment chain broken: {m:?}")));
    }
    Ok(m)
}

/// Population counters of the launch experiment at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltSample {
    pub t: f64,
    /// Peers present.
    pub n: u64,
    /// Young peers present.
    pub y: u64,
    /// Cumulative uploads of piece one by infected peers.
    pub d: u64,
    /// Cumulative uploads of piece one by the seed.
    pub z: u64,
    /// Cumulative arrivals.
    pub a: u64,
}

/// Whether each path event held on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AltFlags {
    /// `A_t > -B + (lambda - eps) t`.
    pub arrivals: bool,
    /// `Z_t < B + (Us + eps) t`.
    pub seed: bool,
    /// `Y_t < B + eps_o t`.
    pub young: bool,
    /// `D_t < B + eps t`.
    pub infected: bool,
    /// `N_t ≥ N_o - 3B + (lambda - Us - 3 eps) t`.
    pub population: bool,
    /// `Y_t < xi N_t`.
    pub young_fraction: bool,
}

impl AltFlags {
    pub fn all_four(&self) -> bool {
        self.arrivals && self.seed && self.young && self.infected
    }

    /// The young fraction stayed below `xi` and the population above its floor.
    pub fn launched(&self) -> bool {
        self.young_fraction && self.population
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltSystemRun {
    pub samples: Vec<AltSample>,
    pub flags: AltFlags,
    pub last: AltSample,
    pub events: u64,
}

const MISSING: usize = 0;

/// Launch experiment from `N_o` one-club peers (all missing piece one),
/// simulated with the modified rates: each young peer pulls from the one
/// club at rate `mu max(O/N, 1/2)` and the seed serves the young peers at
/// aggregate rate `Us min(Y/N, xi)`. Other rates are those of the swarm
/// under random useful selection. Contacts that transfer nothing are not
/// simulated.
///
/// `p` sets the rates; the path events are judged against the lines built
/// from `consts` and its own parameters, so a launch state built for one
/// `lambda` can be replayed under another.
pub fn alt_system_simulate<R: Rng + ?Sized>(
    p: &ModelParams,
    consts: &InstabilityConstants,
    horizon: f64,
    sample_dt: f64,
    rng: &mut R,
) -> Result<AltSystemRun> {
    p.validate()?;
    consts.verify()?;
    if consts.params.k != p.k {
        return Err(Error::Contract("constants were built for a different K".into()));
    }
    if !(horizon > 0.0 && sample_dt > 0.0) {
        return Err(Error::InvalidParams("horizon and sample_dt must be positive".into()));
    }
    let full = PieceSet::full(p.k);
    let club = full.without(MISSING);
    let c = consts;
    let cp = &c.params;

    let mut one_club = c.n_o;
    let mut young: Vec<PieceSet> = Vec::new();
    let (mut a, mut d, mut z) = (0u64, 0u64, 0u64);
    let mut flags = AltFlags {
        arrivals: true,
        seed: true,
        young: true,
        infected: true,
        population: true,
        young_fraction: true,
    };
    let mut samples = Vec::new();
    let mut next_sample = 0u64;
    let mut t = 0.0;
    let mut events = 0u64;

    let snapshot = |t: f64, one_club: u64, young: &[PieceSet], a, d, z| AltSample {
        t,
        n: one_club + young.len() as u64,
        y: young.len() as u64,
        d,
        z,
        a,
    };
    let judge = |s: &AltSample, flags: &mut AltFlags| {
        let t = s.t;
        flags.arrivals &= s.a as f64 > -c.b + (cp.lambda - c.epsilon) * t;
        flags.seed &= (s.z as f64) < c.b + (cp.us + c.epsilon) * t;
        flags.young &= (s.y as f64) < c.b + c.epsilon_o * t;
        flags.infected &= (s.d as f64) < c.b + c.epsilon * t;
        flags.population &= s.n as f64 >= c.population_floor(t);
        flags.young_fraction &= (s.y as f64) < c.xi * s.n as f64;
    };
    judge(&snapshot(0.0, one_club, &young, a, d, z), &mut flags);

    // Reused rate buffers: per-young pull from the club, young-young pairs.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    loop {
        let y = young.len();
        let n = one_club + y as u64;
        let nf = n as f64;
        let infected = young.iter().filter(|s| s.contains(MISSING)).count() as f64;

        let (club_pull, pair_rate, seed_young, seed_club, infect_club) = if n == 0 {
            (0.0, 0.0, 0.0, 0.0, 0.0)
        } else {
            let o = one_club as f64;
            pairs.clear();
            for (i, &sa) in young.iter().enumerate() {
                for (j, &sb) in young.iter().enumerate() {
                    if i != j && !sb.is_subset(sa) {
                        pairs.push((i, j));
                    }
                }
            }
            (
                if one_club > 0 { p.mu * (o / nf).max(0.5) } else { 0.0 },
                p.mu / nf,
                p.us * (y as f64 / nf).min(c.xi),
                p.us * o / nf,
                p.mu * o * infected / nf,
            )
        };
        let rates = [
            p.lambda,
            club_pull * y as f64,
            pair_rate * pairs.len() as f64,
            seed_young,
            seed_club,
            infect_club,
        ];
        let total: f64 = rates.iter().sum();
        let e: f64 = Exp1.sample(rng);
        let t_next = t + e / total;

        while (next_sample as f64) * sample_dt <= horizon && (next_sample as f64) * sample_dt < t_next {
            samples.push(snapshot(next_sample as f64 * sample_dt, one_club, &young, a, d, z));
            next_sample += 1;
        }
        if t_next > horizon {
            judge(&snapshot(horizon, one_club, &young, a, d, z), &mut flags);
            break;
        }
        t = t_next;
        judge(&snapshot(t, one_club, &young, a, d, z), &mut flags);
        events += 1;

        let mut u = rng.random::<f64>() * total;
        let mut class = 0;
        while class + 1 < rates.len() && u >= rates[class] {
            u -= rates[class];
            class += 1;
        }
        // (young index, piece) of a young peer's download, if any
        let mut got: Option<(usize, usize)> = None;
        match class {
            0 => {
                young.push(PieceSet::EMPTY);
                a += 1;
            }
            1 => {
                let i = rng.random_range(0..y);
                let useful = club.difference(young[i]);
                let piece = useful.nth(rng.random_range(0..useful.len())).expect("useful piece");
                got = Some((i, piece));
            }
            2 => {
                let (i, j) = pairs[rng.random_range(0..pairs.len())];
                let useful = young[j].difference(young[i]);
                let piece = useful.nth(rng.random_range(0..useful.len())).expect("useful piece");
                if piece == MISSING {
                    d += 1;
                }
                got = Some((i, piece));
            }
            3 => {
                let i = rng.random_range(0..y);
                let useful = full.difference(young[i]);
                let piece = useful.nth(rng.random_range(0..useful.len())).expect("useful piece");
                if piece == MISSING {
                    z += 1;
                }
                got = Some((i, piece));
            }
            4 => {
                one_club -= 1;
                z += 1;
            }
            _ => {
                one_club -= 1;
                d += 1;
            }
        }
        if let Some((i, piece)) = got {
            let s = young[i].with(piece);
            if s == full {
                young.swap_remove(i);
            } else if s == club {
                young.swap_remove(i);
                one_club += 1;
            } else {
                young[i] = s;
            }
        }
        judge(&snapshot(t, one_club, &young, a, d, z), &mut flags);
    }
    Ok(AltSystemRun {
        samples,
        flags,
        last: snapshot(horizon, one_club, &young, a, d, z),
        events,
    })
}
