//! File-to-file stages behind the `stabcs` subcommands.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{OutputMeta, RunConfig};
use crate::direct::benchmark_resonance;
use crate::error::{Error, Result};
use crate::expost::{extrapolate, stable_window, theta_sweep, write_trajectory_csv, Extrapolation};
use crate::model1d::{Parity, PotentialParams};
use crate::pipeline::{diabatize_graph, model_from_records, CrossingRecord};
use crate::stabgraph::{calibrate_x0, sweep, sweep_refined, StabilizationGraph};

pub const GRAPH_FILE: &str = "graph.csv";
pub const FULL_GRAPH_FILE: &str = "graph_full.csv";
pub const CROSSINGS_FILE: &str = "crossings.json";
pub const REFINE_FILE: &str = "refine_requests.json";
pub const REPORT_FILE: &str = "resonance.json";
pub const BENCHMARK_FILE: &str = "benchmark.json";
pub const BENCHMARK_TRAJECTORY_FILE: &str = "benchmark_trajectory.csv";

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub potential: PotentialParams,
    hash: String,
}

impl Context {
    /// Loads the configuration and fixes `x0`, calibrating it if requested.
    pub fn new(config: RunConfig, out: Option<PathBuf>) -> Result<Self> {
        let out = out
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let potential = match &config.calibration {
            Some(c) => {
                let x0 = calibrate_x0(c.target, c.bracket, &config.potential, &config.basis)?;
                log::info!("calibrated x0 = {x0}");
                PotentialParams { x0, ..config.potential }
            }
            None => config.potential,
        };
        let hash = config.hash();
        Ok(Self {
            config,
            out,
            potential,
            hash,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn meta(&self, command: &str, file: &Path) -> Result<()> {
        OutputMeta {
            command: command.to_string(),
            config_sha256: self.hash.clone(),
            x0: self.potential.x0,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
        .write_for(file)
    }

    fn write_json<T: Serialize>(&self, command: &str, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        self.meta(command, &path)?;
        Ok(path)
    }
}

/// Refined graph in the configured parity sector, plus the coarse all-parity
/// graph when `full_graph` is set.
pub fn cmd_stab(ctx: &Context) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let grid = cfg.eta.points();
    let (graph, crossings) = sweep_refined(
        &grid,
        &ctx.potential,
        &cfg.basis,
        cfg.window.center,
        cfg.window.half_width,
        &cfg.refinement,
    )?;
    log::info!("{} grid points, {} crossings", graph.len(), crossings.len());
    let path = ctx.path(GRAPH_FILE);
    graph.save_csv(&path)?;
    ctx.meta("stab", &path)?;
    let mut written = vec![path];
    if cfg.full_graph {
        let full = sweep(&grid, &ctx.potential, &cfg.basis.with_parity(Parity::All))?;
        let path = ctx.path(FULL_GRAPH_FILE);
        full.save_csv(&path)?;
        ctx.meta("stab", &path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_diabatize(ctx: &Context, graph_file: &Path) -> Result<Vec<CrossingRecord>> {
    let graph = StabilizationGraph::load_csv(graph_file)?;
    let out = diabatize_graph(&graph, &ctx.config.fit_settings())?;
    if !out.refine_at.is_empty() {
        log::warn!("{} crossings need a finer grid", out.refine_at.len());
        ctx.write_json("diabatize", REFINE_FILE, &out.refine_at)?;
    }
    ctx.write_json("diabatize", CROSSINGS_FILE, &out.records)?;
    Ok(out.records)
}

pub fn load_records(path: &Path) -> Result<Vec<CrossingRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedEnergy {
    pub delta_eta: f64,
    pub energy: Complex64,
    pub width: f64,
    pub window: (f64, f64),
    pub degree: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub energy: Complex64,
    pub width: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub channels: usize,
    pub expost: Vec<ExtrapolatedEnergy>,
    pub benchmark: Option<BenchmarkReport>,
    /// `|E_expost - E_direct|` for each `delta_eta`.
    pub difference: Vec<f64>,
}

fn trajectory_name(delta_eta: f64) -> String {
    format!("trajectory_deta_{delta_eta:+.3}.csv")
}

pub fn cmd_benchmark(ctx: &Context) -> Result<BenchmarkReport> {
    let b = ctx
        .config
        .benchmark
        .ok_or_else(|| Error::invalid("config has no `benchmark` section"))?;
    let traj = benchmark_resonance(
        &ctx.potential,
        &ctx.config.basis,
        &b.theta.points(),
        ctx.config.window.center,
        b.half_width,
    )?;
    let path = ctx.path(BENCHMARK_TRAJECTORY_FILE);
    let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_trajectory_csv(
        &mut f,
        traj.thetas.iter().zip(&traj.tracked).map(|(&t, &e)| (t, e, 1.0)),
    )
    .map_err(|e| Error::io(&path, e))?;
    ctx.meta("benchmark", &path)?;
    let report = BenchmarkReport {
        energy: traj.stationary_energy,
        width: -2.0 * traj.stationary_energy.im,
        theta: traj.stationary_theta,
    };
    ctx.write_json("benchmark", BENCHMARK_FILE, &report)?;
    Ok(report)
}

pub fn cmd_resonance(ctx: &Context, crossings_file: &Path) -> Result<ResonanceReport> {
    let cfg = &ctx.config;
    let records = load_records(crossings_file)?;
    let model = model_from_records(&records)?;
    let thetas = cfg.theta.points();
    let mut expost = Vec::new();
    for &de in &cfg.delta_etas {
        let traj = theta_sweep(&model, &thetas, de)?;
        let path = ctx.path(&trajectory_name(de));
        traj.save_csv(&path)?;
        ctx.meta("resonance", &path)?;
        let window = match cfg.extrapolation.window {
            Some(w) => w,
            None => stable_window(&traj).ok_or(Error::UnstableWindow {
                lo: thetas[0],
                hi: thetas[thetas.len() - 1],
                reason: "no stable run in the trajectory".into(),
            })?,
        };
        let Extrapolation {
            energy,
            window,
            degree,
            residual,
        } = extrapolate(&traj, window, cfg.extrapolation.degree)?;
        expost.push(ExtrapolatedEnergy {
            delta_eta: de,
            energy,
            width: -2.0 * energy.im,
            window,
            degree,
            residual,
        });
    }
    let benchmark = match cfg.benchmark {
        Some(_) => Some(cmd_benchmark(ctx)?),
        None => None,
    };
    let difference = benchmark
        .as_ref()
        .map(|b| expost.iter().map(|x| (x.energy - b.energy).norm()).collect())
        .unwrap_or_default();
    let report = ResonanceReport {
        channels: model.channels.len(),
        expost,
        benchmark,
        difference,
    };
    ctx.write_json("resonance", REPORT_FILE, &report)?;
    Ok(report)
}
