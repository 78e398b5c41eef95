//! Experiment drivers for comparing exact QMC master-equation annealing
//! with coherent Schrödinger evolution.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod reference;

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

pub use config::{BetaMode, ModelSpec, OneOrMany, RunConfig};
pub use error::{ExperimentError, Result};
pub use experiments::Context;

use experiments::WorkCount;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Heatmap,
    Timeseries,
    Kinks,
    Rules,
    Equilibrium,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Heatmap => "heatmap",
            Experiment::Timeseries => "timeseries",
            Experiment::Kinks => "kinks",
            Experiment::Rules => "rules",
            Experiment::Equilibrium => "equilibrium",
        }
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    outputs: &'a [PathBuf],
    rows: usize,
    work: WorkCount,
    reference_rk4_steps: u64,
    wall_clock_seconds: f64,
    threads: usize,
    config: &'a RunConfig,
}

/// Files written by one [`execute`] call; the first is the main table.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub metadata: PathBuf,
    pub rows: usize,
}

fn rk4_steps(config: &RunConfig) -> u64 {
    (config.tau_sd_reference / config.dt_sd - 1e-9).ceil() as u64
}

/// Validates `config`, runs `experiment`, and writes its CSV tables plus a
/// metadata sidecar into `config.output_dir`.
pub fn execute(experiment: Experiment, config: RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    let ctx = Context::new(config)?;
    let cfg = &ctx.config;
    let json = cfg.to_compact_json();
    let dir = cfg.output_dir.clone();
    let name = experiment.name();
    let main_path = dir.join(format!("{name}.csv"));
    let cache_dir = dir.join(".cache");
    let reference = || {
        reference::schrodinger_reference(
            &ctx.problem,
            &ctx.ground_states,
            cfg.tau_sd_reference,
            cfg.dt_sd,
            Some(&cache_dir),
        )
    };

    let mut outputs = vec![main_path.clone()];
    let mut reference_rk4_steps = 0;
    let (rows, work) = match experiment {
        Experiment::Heatmap => {
            let (rows, work) = experiments::run_heatmap(&ctx, &reference()?)?;
            reference_rk4_steps = rk4_steps(cfg);
            output::write_csv(&main_path, name, &json, &rows)?;
            (rows.len(), work)
        }
        Experiment::Timeseries => {
            let (rows, work) = experiments::run_timeseries(&ctx)?;
            output::write_csv(&main_path, name, &json, &rows)?;
            (rows.len(), work)
        }
        Experiment::Kinks => {
            let (rows, work) = experiments::run_kink_scaling(&ctx)?;
            output::write_csv(&main_path, name, &json, &rows)?;
            (rows.len(), work)
        }
        Experiment::Rules => {
            let (rows, summary, work) = experiments::run_rule_comparison(&ctx, &reference()?)?;
            reference_rk4_steps = rk4_steps(cfg);
            output::write_csv(&main_path, name, &json, &rows)?;
            let summary_path = dir.join("rules-argmin.csv");
            output::write_csv(&summary_path, name, &json, &summary)?;
            outputs.push(summary_path);
            (rows.len(), work)
        }
        Experiment::Equilibrium => {
            let (rows, sectors) = experiments::run_equilibrium(&ctx)?;
            output::write_csv(&main_path, name, &json, &rows)?;
            let sectors_path = dir.join("equilibrium-sectors.csv");
            output::write_csv(&sectors_path, name, &json, &sectors)?;
            outputs.push(sectors_path);
            (rows.len(), WorkCount::default())
        }
    };

    let metadata = output::sidecar_path(&main_path);
    output::write_json(
        &metadata,
        &Metadata {
            command: name,
            outputs: &outputs,
            rows,
            work,
            reference_rk4_steps,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            config: cfg,
        },
    )?;
    Ok(RunReport { outputs, metadata, rows })
}
