//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::HashMap;
use std::time::Instant;

use missing_piece::analysis::*;
use missing_piece::coding::{all_subspaces, nc_simulate_with_rng, useful_probability, CodedConfig, Field};
use missing_piece::replicas::{self, Summary};
use missing_piece::sim::simulate_with_rng;
use missing_piece::{ModelParams, Policy, SimConfig, SwarmState, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

const WINDOW: (f64, f64) = (200.0, 1000.0);
const HORIZON: f64 = 1000.0;
const REPLICAS: usize = 20;

struct Gate {
    failures: usize,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, start: Instant, outcome: Result<String, String>) {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn in_band(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

fn swarm_runs(lambda: f64, seed: u64) -> Vec<Trajectory> {
    let p = ModelParams::new(40, lambda, 1.0, 1.0).unwrap();
    replicas::run(REPLICAS, seed, |_, rng| {
        let cfg = SimConfig::new(p, HORIZON, 0).unwrap();
        simulate_with_rng(&cfg, rng).unwrap()
    })
}

fn mean_of(runs: &[Trajectory], f: impl Fn(&Trajectory) -> f64) -> f64 {
    runs.iter().map(f).sum::<f64>() / runs.len() as f64
}

fn stable_band() -> Result<String, String> {
    let mut notes = Vec::new();
    let mut ok = true;
    for (lambda, band, seed) in [(0.6, (20.0, 45.0), 101), (0.8, (30.0, 65.0), 102)] {
        let runs = swarm_runs(lambda, seed);
        let avg = mean_of(&runs, |t| t.time_average_total(WINDOW.0, WINDOW.1).unwrap());
        ok &= in_band(avg, band);
        notes.push(format!("lambda {lambda}: mean |x| {avg:.2} in {band:?}"));
    }
    check(ok, notes.join("; "))
}

/// Replicas whose last sample has a piece held by no peer.
fn syndrome_count(runs: &[Trajectory]) -> usize {
    runs.iter()
        .filter(|t| t.samples.last().is_some_and(|s| s.total > 0 && s.holders.contains(&0)))
        .count()
}

fn unstable_slope(fast: &[Trajectory]) -> Result<String, String> {
    let mut notes = Vec::new();
    let mut ok = true;
    let slow = swarm_runs(1.2, 104);
    for (lambda, runs, band) in [(1.4, fast, (0.25, 0.55)), (1.2, slow.as_slice(), (0.10, 0.35))] {
        let slope = mean_of(runs, |t| t.slope_estimate(WINDOW.0, WINDOW.1).unwrap());
        ok &= in_band(slope, band);
        notes.push(format!(
            "lambda {lambda}: slope {slope:.3} in {band:?} ({} of {} replicas end with a piece lost)",
            syndrome_count(runs),
            runs.len()
        ));
    }
    check(ok, notes.join("; "))
}

fn rare_piece(runs: &[Trajectory]) -> Result<String, String> {
    let mut bad = Vec::new();
    for (r, traj) in runs.iter().enumerate() {
        let holders = traj.presence_over(WINDOW.0, WINDOW.1).avg_holders;
        let (rare, &min) = holders.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let mut others: Vec<f64> = holders
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != rare)
            .map(|(_, &v)| v)
            .collect();
        others.sort_by(f64::total_cmp);
        let median = (others[others.len() / 2] + others[(others.len() - 1) / 2]) / 2.0;
        let below = holders.iter().filter(|&&v| v < 0.25 * median).count();
        let spread = others[others.len() - 1] / others[0];
        if !(below == 1 && min < 0.25 * median && spread <= 2.0) {
            bad.push(format!("replica {r}: {below} rare, spread {spread:.2}"));
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} replicas show one rare piece", runs.len())
        } else {
            bad.join("; ")
        },
    )
}

fn exactness() -> Result<String, String> {
    let p = ModelParams::new(2, 0.5, 1.0, 1.0).unwrap();
    let t = 10.0;
    let x0 = SwarmState::new(2).unwrap();
    let exact = uniformization_adaptive(&p, Policy::RandomUseful, &x0, t, DEFAULT_LEAK).map_err(|e| e.to_string())?;
    let n = 100_000;
    let keys = replicas::run(n, 4, |_, rng| {
        let cfg = SimConfig::new(p, t, 0).unwrap().with_sample_dt(t);
        state_key(simulate_with_rng(&cfg, rng).unwrap().final_state.as_ref().unwrap())
    });
    let mut counts: HashMap<StateKey, usize> = HashMap::new();
    for key in keys {
        *counts.entry(key).or_default() += 1;
    }
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (key, &c) in &counts {
        let q = exact.prob_key(key);
        covered += q;
        tv += (c as f64 / n as f64 - q).abs();
    }
    let total: f64 = exact.probs.iter().sum();
    tv = (tv + (total - covered)) / 2.0;
    check(
        tv <= 0.05 && exact.leak < 1e-6,
        format!("TV {tv:.4} ≤ 0.05, leak {:.1e} < 1e-6, cap {}", exact.leak, exact.cap),
    )
}

fn busy_periods() -> Result<String, String> {
    let mut misses = Vec::new();
    let mut seed = 500;
    for rho in [0.2, 0.5, 0.8] {
        for exponential in [true, false] {
            seed += 1;
            let m = busy_period_moments(rho, 1.0, if exponential { 2.0 } else { 1.0 }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<(f64, f64)> = if exponential {
                let s = Exp::new(1.0).unwrap();
                (0..100_000)
                    .map(|_| simulate_busy_period(rho, &s, &mut rng))
                    .map(|(n, l)| (n as f64, l))
                    .collect()
            } else {
                let s = Deterministic(1.0);
                (0..100_000)
                    .map(|_| simulate_busy_period(rho, &s, &mut rng))
                    .map(|(n, l)| (n as f64, l))
                    .collect()
            };
            let n: Vec<f64> = draws.iter().map(|d| d.0).collect();
            let l: Vec<f64> = draws.iter().map(|d| d.1).collect();
            let n2: Vec<f64> = n.iter().map(|v| v * v).collect();
            let l2: Vec<f64> = l.iter().map(|v| v * v).collect();
            let nl: Vec<f64> = draws.iter().map(|d| d.0 * d.1).collect();
            let label = if exponential { "exp" } else { "det" };
            for (name, xs, target) in [
                ("EN", &n, m.en),
                ("EN2", &n2, m.en2),
                ("EL", &l, m.el),
                ("EL2", &l2, m.el2),
                ("ENL", &nl, m.cov_nl + m.en * m.el),
            ] {
                let s = Summary::of(xs);
                if !s.agrees_with(target, 3.0) {
                    misses.push(format!(
                        "rho {rho} {label} {name}: {:.4} ± {:.4} vs {target:.4}",
                        s.mean, s.se
                    ));
                }
            }
        }
    }
    check(
        misses.is_empty(),
        if misses.is_empty() {
            "30 moments within 3 SE".into()
        } else {
            misses.join("; ")
        },
    )
}

struct Deterministic(f64);

impl Distribution<f64> for Deterministic {
    fn sample<R: rand::Rng + ?Sized>(&self, _: &mut R) -> f64 {
        self.0
    }
}

fn exceedance() -> Result<String, String> {
    const PATHS: usize = 10_000;
    const T: f64 = 1000.0;
    let mut notes = Vec::new();
    let mut ok = true;

    // M/GI/∞ with the young-peer service law (K = 3, mu = 1, mean 4).
    let service = young_peer_service(3, 1.0).unwrap();
    let m = 2.0 * 2.0;
    for (lambda, b, eps) in [(1.0, 12.0, 0.5), (0.5, 8.0, 0.25)] {
        let bound = mgi_infinity_bound(lambda, m, b, eps).unwrap();
        let hits = replicas::run(PATHS, 600 + b as u64, |_, rng| {
            mginfty_simulate(lambda, &service, T, rng).exceeds(b, eps)
        });
        let freq = hits.iter().filter(|&&h| h).count() as f64 / PATHS as f64;
        ok &= freq <= bound;
        notes.push(format!("M/GI/inf l={lambda} B={b}: {freq:.4} ≤ {bound:.4}"));
    }

    // Compound Poisson with Exp(1) and unit batches.
    let exp = Exp::new(1.0).unwrap();
    let unit = Deterministic(1.0);
    for (label, m2, b, eps) in [("exp", 2.0, 4.0, 1.5), ("exp", 2.0, 10.0, 1.2), ("unit", 1.0, 5.0, 1.2)] {
        let bound = 1.0 - compound_poisson_bound(1.0, 1.0, m2, b, eps).unwrap();
        let kingman = kingman_bound(1.0 - eps, m2, b).unwrap();
        let hits = replicas::run(PATHS, 700 + b as u64, |_, rng| {
            if label == "exp" {
                compound_poisson_exceeds(1.0, &exp, b, eps, T, rng)
            } else {
                compound_poisson_exceeds(1.0, &unit, b, eps, T, rng)
            }
        });
        let freq = hits.iter().filter(|&&h| h).count() as f64 / PATHS as f64;
        ok &= freq <= bound && (bound - kingman).abs() < 1e-12;
        notes.push(format!("CP {label} B={b}: {freq:.4} ≤ {bound:.4}"));
    }
    check(ok, notes.join("; "))
}

fn coding_boundary() -> Result<String, String> {
    let run = |lambda: f64, seed: u64| {
        let p = ModelParams::new(3, lambda, 1.0, 1.0).unwrap();
        replicas::run(REPLICAS, seed, |_, rng| {
            let cfg = CodedConfig::new(p, 2, HORIZON, 0).unwrap();
            nc_simulate_with_rng(&cfg, rng).unwrap()
        })
    };
    let stable = run(0.4, 801);
    let avg = mean_of(&stable, |t| t.time_average_total(WINDOW.0, WINDOW.1).unwrap());
    let drift = mean_of(&stable, |t| t.slope_estimate(WINDOW.0, WINDOW.1).unwrap());
    let unstable = run(0.75, 802);
    let slope = mean_of(&unstable, |t| t.slope_estimate(WINDOW.0, WINDOW.1).unwrap());
    check(
        avg <= 100.0 && drift.abs() <= 0.05 && in_band(slope, (0.15, 0.35)),
        format!(
            "lambda 0.4: mean |x| {avg:.2} ≤ 100, |slope| {:.4} ≤ 0.05; lambda 0.75: slope {slope:.3} in [0.15, 0.35]",
            drift.abs()
        ),
    )
}

fn usefulness() -> Result<String, String> {
    let field = Field::new(2).unwrap();
    let spaces = all_subspaces(&field, 3);
    let pairs: Vec<(usize, usize)> = (0..spaces.len())
        .flat_map(|a| (0..spaces.len()).map(move |b| (a, b)))
        .collect();
    const DRAWS: usize = 100_000;
    let misses = replicas::run(pairs.len(), 900, |i, rng| {
        let (va, vb) = (&spaces[pairs[i].0], &spaces[pairs[i].1]);
        let p = useful_probability(&field, va, vb);
        let useful = (0..DRAWS)
            .filter(|_| !va.contains(&field, &vb.random_vector(&field, rng)))
            .count();
        let freq = useful as f64 / DRAWS as f64;
        let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
        ((freq - p).abs() > 3.0 * se).then(|| format!("dims ({}, {}): {freq:.4} vs {p:.4}", va.dim(), vb.dim()))
    });
    let misses: Vec<String> = misses.into_iter().flatten().collect();
    check(
        misses.is_empty(),
        if misses.is_empty() {
            format!("{} pairs within 3 SE", pairs.len())
        } else {
            misses.join("; ")
        },
    )
}

fn launch() -> Result<String, String> {
    let p = ModelParams::new(3, 1.4, 1.0, 1.0).unwrap();
    let c = instability_constants(&p).map_err(|e| e.to_string())?;
    let horizon = 1000.0;
    let runs = replicas::run(100, 909, |_, rng| {
        alt_system_simulate(&p, &c, horizon, horizon, rng).unwrap().flags
    });
    let share = runs.iter().filter(|f| f.launched()).count() as f64 / runs.len() as f64;
    check(
        share >= 0.6,
        format!("N_o {} B {}: launched in {share:.2} of 100 runs ≥ 0.6", c.n_o, c.b),
    )
}

fn drift_certificate() -> Result<String, String> {
    let p = ModelParams::new(3, 0.9, 1.0, 1.0).unwrap();
    let coeffs = lyapunov_coefficients(p.lambda, p.us, p.k).map_err(|e| e.to_string())?;
    coeffs.verify(p.lambda, p.us).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let cert = drift_region_check(&p, &coeffs, &default_eta_grid(), 1000, &mut rng).map_err(|e| e.to_string())?;
    for _ in 0..10_000 {
        let total = rand::Rng::random_range(&mut rng, 0..2000u64);
        let conc = rand::Rng::random_bool(&mut rng, 0.5).then_some(0.05);
        let x = sample_state(3, total, conc, &mut rng).unwrap();
        drift_qv(&x, &p, &coeffs).map_err(|e| e.to_string())?;
    }
    check(
        cert.checked >= 1000,
        format!(
            "eta {:.3e}, eps {:.3e}, L {:.3e}; {} states beyond L and 10^4 bound checks hold",
            cert.eta, cert.epsilon, cert.l, cert.checked
        ),
    )
}

fn reduced_chain() -> Result<String, String> {
    let (lambda, us, k) = (1.0, 1.0, 5usize);
    let hits = replicas::run(10_000, 1111, |_, rng| {
        mu_infinity_simulate(lambda, us, k, ReducedState { n: 1, k: 1 }, 1000.0, rng)
            .unwrap()
            .top_layer_hit(k)
    });
    if hits.iter().any(Option::is_none) {
        return Err("a replica never reached the top layer".into());
    }
    let times: Vec<f64> = hits.into_iter().flatten().collect();
    let s = Summary::of(&times);
    let limit = 1.0 / lambda + (k - 1) as f64 / us;
    let mu_o_3 = mu_o(1.0, 3).unwrap();
    check(
        s.mean <= limit + 3.0 * s.se && mu_o_3 == 7.0 / 6.0,
        format!("mean hit {:.3} ± {:.3} ≤ {limit}; mu_o(1, 3) = {mu_o_3}", s.mean, s.se),
    )
}

fn main() {
    let mut gate = Gate { failures: 0 };
    let t = Instant::now();
    gate.report(1, "stable band", t, stable_band());
    let t = Instant::now();
    let fast = swarm_runs(1.4, 103);
    gate.report(2, "unstable slope", t, unstable_slope(&fast));
    let t = Instant::now();
    gate.report(3, "rare-piece signature", t, rare_piece(&fast));
    drop(fast);
    let t = Instant::now();
    gate.report(4, "exactness oracle", t, exactness());
    let t = Instant::now();
    gate.report(5, "busy-period moments", t, busy_periods());
    let t = Instant::now();
    gate.report(6, "maximal bounds", t, exceedance());
    let t = Instant::now();
    gate.report(7, "coding boundary", t, coding_boundary());
    let t = Instant::now();
    gate.report(8, "usefulness formula", t, usefulness());
    let t = Instant::now();
    gate.report(9, "launch experiment", t, launch());
    let t = Instant::now();
    gate.report(10, "drift certificate", t, drift_certificate());
    let t = Instant::now();
    gate.report(11, "reduced chain", t, reduced_chain());
    println!("{} of 11 criteria passed", 11 - gate.failures);
    if gate.failures > 0 {
        std::process::exit(1);
    }
}
