//! Executes a manifest: replicas on independent streams, per-replica CSVs,
//! and an aggregated report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use missing_piece::analysis::{
    alt_system_simulate, instability_constants, mu_infinity_simulate, AltSystemRun, Certificate, ReducedState,
    ReducedTrajectory,
};
use missing_piece::coding::{nc_simulate_with_rng, CodedConfig};
use missing_piece::replicas::{self, Summary};
use missing_piece::sim::simulate_with_rng;
use missing_piece::{SimConfig, SwarmState, Trajectory};

use crate::manifest::{Engine, Initial, Manifest};

/// One report column; `aggregate` columns get mean and SE rows.
pub struct Column {
    pub name: &'static str,
    pub values: Vec<Option<f64>>,
    pub aggregate: bool,
}

impl Column {
    fn new(name: &'static str, aggregate: bool) -> Self {
        Self {
            name,
            values: Vec::new(),
            aggregate,
        }
    }

    pub fn summary(&self) -> Option<Summary> {
        let vals: Vec<f64> = self.values.iter().flatten().copied().collect();
        (self.aggregate && !vals.is_empty()).then(|| Summary::of(&vals))
    }
}

pub struct RunReport {
    pub name: String,
    pub engine: Engine,
    pub window: Option<(f64, f64)>,
    pub columns: Vec<Column>,
    pub notes: Vec<String>,
}

impl RunReport {
    fn replicas(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        let mut header = vec!["replica".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.to_string()));
        w.write_record(&header)?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in 0..self.replicas() {
            let mut row = vec![r.to_string()];
            row.extend(self.columns.iter().map(|c| cell(c.values[r])));
            w.write_record(&row)?;
        }
        let sums: Vec<Option<Summary>> = self.columns.iter().map(Column::summary).collect();
        for (label, pick) in [("mean", 0), ("se", 1)] {
            let mut row = vec![label.to_string()];
            row.extend(
                sums.iter()
                    .map(|s| cell(s.map(|s| if pick == 0 { s.mean } else { s.se }))),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn print(&self) {
        println!(
            "run {} ({} engine, {} replicas)",
            self.name,
            self.engine,
            self.replicas()
        );
        if let Some((t0, t1)) = self.window {
            println!("window [{t0}, {t1}]");
        }
        for c in &self.columns {
            if let Some(s) = c.summary() {
                println!("{:<18} mean {:>12.6} se {:>10.6}", c.name, s.mean, s.se);
            }
        }
        for n in &self.notes {
            println!("{n}");
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn emit(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs the manifest and writes everything under `out`.
pub fn execute(m: &Manifest, out: &Path) -> anyhow::Result<RunReport> {
    m.validate().map_err(crate::Exit::validation)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("manifest.toml"), m.to_toml())?;
    let report = match m.engine {
        Engine::Piece | Engine::Coded => swarm(m, out)?,
        Engine::MuInfinity => mu_infinity(m, out)?,
        Engine::AltSystem => alt_system(m, out)?,
    };
    report.write_csv(&out.join("report.csv"))?;
    Ok(report)
}

fn replica_dir(out: &Path, r: usize) -> anyhow::Result<std::path::PathBuf> {
    let dir = out.join(format!("replica_{r:03}"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// The replica's error, tagged with its index so resource caps name it.
fn tag<T>(r: usize, res: missing_piece::Result<T>) -> anyhow::Result<T> {
    res.map_err(|e| anyhow::Error::new(e).context(format!("replica {r}")))
}

fn swarm(m: &Manifest, out: &Path) -> anyhow::Result<RunReport> {
    let p = m.params.model()?;
    let initial = match m.initial {
        Initial::Empty => SwarmState::new(p.k)?,
        Initial::OneClub(n) => {
            let n = match n {
                Some(n) => n,
                None => instability_constants(&p)?.n_o,
            };
            SwarmState::one_club(p.k, 0, n)?
        }
        Initial::Reduced(_) => unreachable!("rejected by validation"),
    };
    let runs: Vec<missing_piece::Result<Trajectory>> = replicas::run(m.replicas, m.rng_seed, |_, rng| match m.engine {
        Engine::Coded => {
            let q = m.params.q.expect("validated");
            let cfg = CodedConfig::new(p, q, m.horizon, 0)?;
            nc_simulate_with_rng(
                &CodedConfig {
                    sample_dt: m.sample_dt,
                    ..cfg
                },
                rng,
            )
        }
        _ => {
            let cfg = SimConfig::new(p, m.horizon, 0)?
                .with_policy(m.policy)
                .with_initial(initial.clone())
                .with_sample_dt(m.sample_dt);
            simulate_with_rng(&cfg, rng)
        }
    });
    let window = (0.2 * m.horizon, m.horizon);
    let mut cols = [
        Column::new("time_avg_total", true),
        Column::new("slope", true),
        Column::new("rare_piece", false),
        Column::new("min_avg_holders", true),
        Column::new("max_avg_holders", true),
    ];
    for (r, run) in runs.into_iter().enumerate() {
        let traj = tag(r, run)?;
        let dir = replica_dir(out, r)?;
        emit(&dir.join("counts.csv"), |w| traj.write_counts_csv(w))?;
        emit(&dir.join("departures.csv"), |w| traj.write_departures_csv(w))?;
        cols[0]
            .values
            .push(Some(tag(r, traj.time_average_total(window.0, window.1))?));
        cols[1]
            .values
            .push(Some(tag(r, traj.slope_estimate(window.0, window.1))?));
        if m.engine == Engine::Piece {
            emit(&dir.join("presence.csv"), |w| traj.write_presence_csv(w))?;
            let holders = traj.presence_over(window.0, window.1).avg_holders;
            let (rare, min) = holders
                .iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("K ≥ 1");
            let max = holders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            cols[2].values.push(Some((rare + 1) as f64));
            cols[3].values.push(Some(min));
            cols[4].values.push(Some(max));
        } else {
            for c in &mut cols[2..] {
                c.values.push(None);
            }
        }
    }
    Ok(RunReport {
        name: m.name.clone(),
        engine: m.engine,
        window: Some(window),
        columns: cols.into_iter().collect(),
        notes: Vec::new(),
    })
}

fn write_reduced(path: &Path, tr: &ReducedTrajectory) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "n", "k"])?;
    w.write_record(["0".to_string(), tr.start.n.to_string(), tr.start.k.to_string()])?;
    for (t, s) in &tr.jumps {
        w.write_record([t.to_string(), s.n.to_string(), s.k.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn mu_infinity(m: &Manifest, out: &Path) -> anyhow::Result<RunReport> {
    let p = &m.params;
    let start = match m.initial {
        Initial::Reduced(s) => s,
        _ => ReducedState::EMPTY,
    };
    let runs = replicas::run(m.replicas, m.rng_seed, |_, rng| {
        mu_infinity_simulate(p.lambda, p.us, p.k, start, m.horizon, rng)
    });
    let mut cols = [
        Column::new("top_layer_hit", true),
        Column::new("final_n", true),
        Column::new("final_k", true),
    ];
    let mut missed = 0;
    for (r, run) in runs.into_iter().enumerate() {
        let tr = tag(r, run)?;
        write_reduced(&replica_dir(out, r)?.join("path.csv"), &tr)?;
        let hit = tr.top_layer_hit(p.k);
        missed += hit.is_none() as usize;
        let last = tr.state_at(m.horizon);
        cols[0].values.push(hit);
        cols[1].values.push(Some(last.n as f64));
        cols[2].values.push(Some(last.k as f64));
    }
    let bound = 1.0 / p.lambda + (p.k - 1) as f64 / p.us;
    Ok(RunReport {
        name: m.name.clone(),
        engine: m.engine,
        window: None,
        columns: cols.into_iter().collect(),
        notes: vec![
            format!("top-layer hitting-time reference 1/lambda + (K-1)/Us = {bound}"),
            format!("replicas that never reached the top layer: {missed}"),
        ],
    })
}

fn write_alt(path: &Path, run: &AltSystemRun) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "n", "y", "d", "z", "a"])?;
    for s in &run.samples {
        w.write_record([
            s.t.to_string(),
            s.n.to_string(),
            s.y.to_string(),
            s.d.to_string(),
            s.z.to_string(),
            s.a.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn alt_system(m: &Manifest, out: &Path) -> anyhow::Result<RunReport> {
    let p = m.params.model()?;
    let consts = instability_constants(&p)?;
    fs::write(out.join("constants.kv"), consts.to_kv())?;
    let runs = replicas::run(m.replicas, m.rng_seed, |_, rng| {
        alt_system_simulate(&p, &consts, m.horizon, m.sample_dt, rng)
    });
    let mut cols = [
        Column::new("launched", true),
        Column::new("all_four", true),
        Column::new("young_fraction", true),
        Column::new("population", true),
        Column::new("final_n", true),
        Column::new("final_y", true),
    ];
    let flag = |b: bool| Some(if b { 1.0 } else { 0.0 });
    for (r, run) in runs.into_iter().enumerate() {
        let run = tag(r, run)?;
        write_alt(&replica_dir(out, r)?.join("path.csv"), &run)?;
        let f = run.flags;
        for (c, v) in cols.iter_mut().zip([
            flag(f.launched()),
            flag(f.all_four()),
            flag(f.young_fraction),
            flag(f.population),
            Some(run.last.n as f64),
            Some(run.last.y as f64),
        ]) {
            c.values.push(v);
        }
    }
    let mut out_report = RunReport {
        name: m.name.clone(),
        engine: m.engine,
        window: None,
        columns: cols.into_iter().collect(),
        notes: vec![format!("N_o = {}, B = {}, xi = {}", consts.n_o, consts.b, consts.xi)],
    };
    if let Some(s) = out_report.columns[0].summary() {
        out_report
            .notes
            .push(format!("launched fraction {} (target ≥ 0.6)", s.mean));
    }
    Ok(out_report)
}
