//! `bounds` and `drift`: closed forms, key-value certificates and optional
//! Monte-Carlo checks.

use std::path::Path;

use clap::{Args, Subcommand};
use missing_piece::analysis::*;
use missing_piece::replicas::{self, Summary};
use missing_piece::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::Exit;

#[derive(Debug, Args)]
pub struct Common {
    /// Also run the Monte-Carlo oracle and compare.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo sample size for `--verify`.
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
}

#[derive(Debug, Subcommand)]
pub enum Bound {
    /// `P{sup X ≥ B}` for a process with negative drift.
    Kingman {
        #[arg(long, allow_hyphen_values = true)]
        drift: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        b: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Lower bound on `P{C_t < B + eps t for all t}` for compound Poisson `C`.
    Compound {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Maximal bound for M/GI/∞ occupancy with mean service `m`.
    Mginfty {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// M/GI/1 busy-period moments.
    Busy {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        ex: f64,
        #[arg(long)]
        ex2: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Critical contact rate of the `mu = ∞` limit.
    #[command(name = "mu_o")]
    MuO {
        #[arg(long)]
        lambda: f64,
        #[arg(long = "K")]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Constants of the instability construction (`lambda > Us`).
    Constants {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        us: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long = "K")]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Lyapunov coefficients (`lambda < Us`).
    Coeffs {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        us: f64,
        #[arg(long = "K")]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    us: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long = "K")]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

struct Deterministic(f64);

impl Distribution<f64> for Deterministic {
    fn sample<R: rand::Rng + ?Sized>(&self, _: &mut R) -> f64 {
        self.0
    }
}

/// A law with the given first two moments: Gamma, or a point mass.
enum TwoMoment {
    Point(f64),
    Gamma(Gamma<f64>),
}

impl Distribution<f64> for TwoMoment {
    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TwoMoment::Point(v) => *v,
            TwoMoment::Gamma(g) => g.sample(rng),
        }
    }
}

fn two_moment_law(m1: f64, m2: f64) -> anyhow::Result<TwoMoment> {
    let var = m2 - m1 * m1;
    if var <= 1e-12 * m1 * m1 {
        return Ok(TwoMoment::Point(m1));
    }
    let g = Gamma::new(m1 * m1 / var, var / m1).map_err(|e| Exit::validation(e.to_string()))?;
    Ok(TwoMoment::Gamma(g))
}

fn write_kv(out: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(format!("{name}.kv")), text)?;
    Ok(())
}

fn kv_line(k: &str, v: impl std::fmt::Display) -> String {
    format!("{k} = {v}\n")
}

/// Checks an empirical exceedance frequency against a bound, allowing
/// three binomial standard errors.
fn exceedance_verdict(hits: usize, n: usize, bound: f64) -> (String, bool) {
    let freq = hits as f64 / n as f64;
    let se = (bound.clamp(0.0, 1.0) * (1.0 - bound.clamp(0.0, 1.0)) / n as f64).sqrt();
    let ok = freq <= bound + 3.0 * se;
    (
        format!("empirical exceedance {freq} over {n} paths vs bound {bound}"),
        ok,
    )
}

fn moment_verdict(name: &str, xs: &[f64], target: f64) -> (String, bool) {
    let s = Summary::of(xs);
    let ok = s.agrees_with(target, 3.0);
    (format!("{name}: Monte Carlo {} ± {} vs {target}", s.mean, s.se), ok)
}

pub fn bounds(cmd: Bound, out: &Path) -> anyhow::Result<()> {
    let horizon = 1000.0;
    let (name, text, checks): (&str, String, Vec<(String, bool)>) = match cmd {
        Bound::Kingman {
            drift,
            sigma2,
            b,
            common,
        } => {
            let v = kingman_bound(drift, sigma2, b)?;
            let text = kv_line("drift", drift) + &kv_line("sigma2", sigma2) + &kv_line("B", b) + &kv_line("bound", v);
            let mut checks = Vec::new();
            if common.verify {
                // Unit jumps at rate sigma2 minus a line of slope sigma2 - drift.
                let hits = replicas::run(common.paths, common.seed, |_, rng| {
                    compound_poisson_exceeds(sigma2, &Deterministic(1.0), b, sigma2 - drift, horizon, rng)
                });
                checks.push(exceedance_verdict(hits.iter().filter(|&&h| h).count(), common.paths, v));
            }
            ("kingman", text, checks)
        }
        Bound::Compound {
            alpha,
            m1,
            m2,
            b,
            eps,
            common,
        } => {
            let v = compound_poisson_bound(alpha, m1, m2, b, eps)?;
            let text = [
                ("alpha", alpha),
                ("m1", m1),
                ("m2", m2),
                ("B", b),
                ("eps", eps),
                ("bound", v),
            ]
            .iter()
            .map(|(k, x)| kv_line(k, x))
            .collect();
            let mut checks = Vec::new();
            if common.verify {
                let law = two_moment_law(m1, m2)?;
                let hits = replicas::run(common.paths, common.seed, |_, rng| {
                    compound_poisson_exceeds(alpha, &law, b, eps, horizon, rng)
                });
                checks.push(exceedance_verdict(
                    hits.iter().filter(|&&h| h).count(),
                    common.paths,
                    1.0 - v,
                ));
            }
            ("compound", text, checks)
        }
        Bound::Mginfty {
            lambda,
            m,
            b,
            eps,
            common,
        } => {
            let v = mgi_infinity_bound(lambda, m, b, eps)?;
            let text = [("lambda", lambda), ("m", m), ("B", b), ("eps", eps), ("bound", v)]
                .iter()
                .map(|(k, x)| kv_line(k, x))
                .collect();
            let mut checks = Vec::new();
            if common.verify {
                let law = Exp::new(1.0 / m).map_err(|e| Exit::validation(e.to_string()))?;
                let hits = replicas::run(common.paths, common.seed, |_, rng| {
                    mginfty_simulate(lambda, &law, horizon, rng).exceeds(b, eps)
                });
                checks.push(exceedance_verdict(hits.iter().filter(|&&h| h).count(), common.paths, v));
            }
            ("mginfty", text, checks)
        }
        Bound::Busy {
            lambda,
            ex,
            ex2,
            common,
        } => {
            let m = busy_period_moments(lambda, ex, ex2)?;
            let mut checks = Vec::new();
            if common.verify {
                let law = two_moment_law(ex, ex2)?;
                let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
                let draws: Vec<(u64, f64)> = (0..common.paths)
                    .map(|_| simulate_busy_period(lambda, &law, &mut rng))
                    .collect();
                let n: Vec<f64> = draws.iter().map(|d| d.0 as f64).collect();
                let l: Vec<f64> = draws.iter().map(|d| d.1).collect();
                checks.push(moment_verdict("EN", &n, m.en));
                checks.push(moment_verdict("EL", &l, m.el));
                checks.push(moment_verdict(
                    "EN2",
                    &n.iter().map(|v| v * v).collect::<Vec<_>>(),
                    m.en2,
                ));
                checks.push(moment_verdict(
                    "EL2",
                    &l.iter().map(|v| v * v).collect::<Vec<_>>(),
                    m.el2,
                ));
            }
            ("busy", m.to_kv(), checks)
        }
        Bound::MuO { lambda, k, common } => {
            let v = mu_o(lambda, k)?;
            let mut checks = Vec::new();
            if common.verify {
                checks.push(("mu_o has no Monte-Carlo oracle; closed form only".into(), true));
            }
            (
                "mu_o",
                kv_line("lambda", lambda) + &kv_line("K", k) + &kv_line("mu_o", v),
                checks,
            )
        }
        Bound::Constants {
            lambda,
            us,
            mu,
            k,
            common,
        } => {
            let p = ModelParams::new(k, lambda, mu, us)?;
            let c = instability_constants(&p)?;
            let mut text = c.to_kv();
            let mut checks = Vec::new();
            for check in c.checks() {
                text += &format!("# {check}\n");
            }
            if common.verify {
                let runs = 100.min(common.paths);
                let flags = replicas::run(runs, common.seed, |_, rng| {
                    alt_system_simulate(&p, &c, horizon, horizon, rng).map(|r| r.flags.launched())
                });
                let ok = flags.into_iter().collect::<missing_piece::Result<Vec<bool>>>()?;
                let share = ok.iter().filter(|&&b| b).count() as f64 / runs as f64;
                checks.push((
                    format!("launched in {share} of {runs} alternative-system runs (target ≥ 0.6)"),
                    share >= 0.6,
                ));
            }
            ("constants", text, checks)
        }
        Bound::Coeffs { lambda, us, k, common } => {
            let c = lyapunov_coefficients(lambda, us, k)?;
            let mut checks = Vec::new();
            if common.verify {
                let res = c.verify(lambda, us);
                checks.push((
                    format!(
                        "coefficient conditions: {}",
                        res.as_ref().map_or_else(|e| e.to_string(), |_| "hold".into())
                    ),
                    res.is_ok(),
                ));
            }
            ("coeffs", c.to_kv(), checks)
        }
    };
    print!("{text}");
    write_kv(out, name, &text)?;
    let mut all = true;
    for (line, ok) in &checks {
        println!("verify: {line} [{}]", if *ok { "agree" } else { "DISAGREE" });
        all &= ok;
    }
    if !all {
        return Err(Exit::disagreement(format!("{name}: oracle disagrees with the closed form")).into());
    }
    Ok(())
}

pub fn drift(a: DriftArgs, out: &Path) -> anyhow::Result<()> {
    if a.lambda >= a.us {
        return Err(Exit::validation(format!(
            "lambda = {} ≥ Us = {}: the swarm is not positive recurrent, so no drift certificate exists",
            a.lambda, a.us
        ))
        .into());
    }
    let p = ModelParams::new(a.k, a.lambda, a.mu, a.us)?;
    let coeffs = lyapunov_coefficients(a.lambda, a.us, a.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let cert = drift_region_check(&p, &coeffs, &default_eta_grid(), a.samples, &mut rng)?;
    // Worst QV(x)/|x| over fresh states in [L, 10 L].
    let mut worst = f64::NEG_INFINITY;
    for j in 0..a.samples {
        let total = (cert.l * 10f64.powf(rand::Rng::random::<f64>(&mut rng))).ceil() as u64;
        let conc = (j % 2 == 0).then_some(cert.eta);
        let x = sample_state(a.k, total.max(1), conc, &mut rng)?;
        let d = drift_qv(&x, &p, &coeffs)?;
        worst = worst.max(d.exact / x.total() as f64);
    }
    let text = coeffs.to_kv() + &cert.to_kv() + &kv_line("worst_qv_ratio", worst);
    print!("{text}");
    write_kv(out, "drift", &text)?;
    if a.samples > 0 && worst > -cert.epsilon {
        return Err(Exit::disagreement(format!(
            "sampled QV(x)/|x| = {worst} exceeds -epsilon = {}",
            -cert.epsilon
        ))
        .into());
    }
    Ok(())
}
