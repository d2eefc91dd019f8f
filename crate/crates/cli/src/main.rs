//! `mpiece`: experiment runner and calculator for the seeded swarm model.
//!
//! Exit codes: 0 success, 2 validation failure, 3 resource cap,
//! 4 oracle disagreement under `--verify`, 1 anything else.

mod bounds;
mod manifest;
mod runner;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manifest::{Engine, Initial, Manifest, Params};
use missing_piece::Policy;

/// An error carrying its exit code.
#[derive(Debug)]
pub struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn disagreement(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use missing_piece::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Exit>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidParams(_) | E::Domain(_) | E::TooFewSamples { .. } | E::SearchFailed(_) => 2,
                E::PeerCap { .. } | E::TruncationLeak { .. } => 3,
                E::Contract(_) => 1,
            };
        }
    }
    1
}

#[derive(Debug, Parser)]
#[command(
    name = "mpiece",
    version,
    about = "Seeded peer-to-peer swarm: simulation and stability analysis"
)]
struct Cli {
    /// Output directory; overrides the manifest's `outputs`.
    #[arg(long, global = true, env = "MPIECE_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment manifest.
    Run {
        manifest: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Closed-form bounds and constants.
    Bounds {
        #[command(subcommand)]
        which: bounds::Bound,
    },
    /// Lyapunov drift certificate for `lambda < Us`.
    Drift(bounds::DriftArgs),
    /// Network-coded swarm.
    NcRun(Quick),
    /// Reduced chain of the `mu = ∞` limit.
    MuInf(Quick),
    /// Launch experiment on the alternative system.
    AltSystem(Quick),
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
}

impl Overrides {
    fn apply(&self, m: &mut Manifest) {
        if let Some(s) = self.seed {
            m.rng_seed = s;
        }
        if let Some(r) = self.replicas {
            m.replicas = r;
        }
        if let Some(h) = self.horizon {
            m.horizon = h;
        }
    }
}

/// Flag-driven run of one engine; `--manifest` supplies defaults.
#[derive(Debug, Args)]
struct Quick {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    us: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    sample_dt: Option<f64>,
    /// empty | one-club | one-club:<n> | reduced:<n>,<k>
    #[arg(long)]
    initial: Option<Initial>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Quick {
    fn manifest(&self, engine: Engine) -> anyhow::Result<Manifest> {
        let mut m = match &self.manifest {
            Some(path) => Manifest::load(path)?,
            None => Manifest {
                name: engine.to_string(),
                engine,
                policy: Policy::RandomUseful,
                replicas: 1,
                horizon: 100.0,
                sample_dt: 1.0,
                rng_seed: 1,
                initial: match engine {
                    Engine::AltSystem => Initial::OneClub(None),
                    Engine::MuInfinity => Initial::Reduced(missing_piece::analysis::ReducedState { n: 1, k: 1 }),
                    _ => Initial::Empty,
                },
                outputs: PathBuf::from("out").join(engine.to_string()),
                params: Params {
                    k: 3,
                    lambda: 1.0,
                    mu: 1.0,
                    us: 1.0,
                    q: (engine == Engine::Coded).then_some(2),
                },
            },
        };
        if m.engine != engine {
            return Err(Exit::validation(format!("engine: manifest says {}, command needs {engine}", m.engine)).into());
        }
        let p = &mut m.params;
        p.lambda = self.lambda.unwrap_or(p.lambda);
        p.us = self.us.unwrap_or(p.us);
        p.mu = self.mu.unwrap_or(p.mu);
        p.k = self.k.unwrap_or(p.k);
        p.q = self.q.or(p.q);
        m.sample_dt = self.sample_dt.unwrap_or(m.sample_dt);
        m.initial = self.initial.unwrap_or(m.initial);
        self.overrides.apply(&mut m);
        Ok(m)
    }
}

fn run_manifest(m: &Manifest, out: Option<PathBuf>) -> anyhow::Result<()> {
    let out = out.unwrap_or_else(|| m.outputs.clone());
    let report = runner::execute(m, &out)?;
    report.print();
    println!("outputs in {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let out = cli.out;
    let calc_out = || out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.cmd {
        Command::Run { manifest, overrides } => {
            let mut m = Manifest::load(&manifest)?;
            overrides.apply(&mut m);
            run_manifest(&m, out.clone())
        }
        Command::Bounds { which } => bounds::bounds(which, &calc_out()),
        Command::Drift(a) => bounds::drift(a, &calc_out()),
        Command::NcRun(q) => run_manifest(&q.manifest(Engine::Coded)?, out.clone()),
        Command::MuInf(q) => run_manifest(&q.manifest(Engine::MuInfinity)?, out.clone()),
        Command::AltSystem(q) => run_manifest(&q.manifest(Engine::AltSystem)?, out.clone()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
