use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use trotter_bias::TransitionRule;
use trotter_bias_cli::config::{parse_int_sweep, parse_sweep};
use trotter_bias_cli::{execute, BetaMode, Experiment, ModelSpec, OneOrMany, RunConfig};

/// Exact QMC master-equation annealing versus coherent Schrödinger evolution.
#[derive(Parser)]
#[command(name = "trotter-bias", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// D(P_QMC, P_SD) over a (tau, M) grid.
    Heatmap(RunArgs),
    /// Ground-state and kink-sector probabilities against time at one (tau, M).
    Timeseries(RunArgs),
    /// Measured and equilibrium kink density at checkpoint s values.
    Kinks(RunArgs),
    /// D(P_QMC, P_SD) under both transition rules, with argmin tau per M.
    Rules(RunArgs),
    /// Exact equilibrium kink statistics by enumeration.
    Equilibrium(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `toy:N` or a problem JSON file.
    #[arg(long)]
    model: Option<String>,
    /// Trotter numbers, e.g. `6`, `2..8`, `2,4,8`.
    #[arg(long = "m")]
    trotter_m: Option<String>,
    /// Annealing times, e.g. `100`, `10..400:10`.
    #[arg(long)]
    tau: Option<String>,
    /// `metropolis` or `heatbath`.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    /// `equal-m` or `fixed:<value>`.
    #[arg(long)]
    beta: Option<String>,
    /// Annealing time of the Schrödinger reference.
    #[arg(long)]
    tau_sd: Option<f64>,
    #[arg(long)]
    dt_sd: Option<f64>,
    /// Recording cadence in operator steps.
    #[arg(long)]
    record_every: Option<usize>,
    /// `replica0` or `aligned`.
    #[arg(long)]
    readout: Option<String>,
    /// Checkpoint s values for kink statistics, e.g. `0.1,0.4,0.7,1`.
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(model) = &self.model {
            cfg.model = model.parse::<ModelSpec>()?;
        }
        if let Some(m) = &self.trotter_m {
            cfg.trotter_m = OneOrMany::Many(parse_int_sweep(m)?);
        }
        if let Some(tau) = &self.tau {
            cfg.tau = OneOrMany::Many(parse_sweep(tau)?);
        }
        if let Some(rule) = &self.rule {
            cfg.rule = rule.parse::<TransitionRule>()?;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(beta) = &self.beta {
            cfg.beta_mode = beta.parse::<BetaMode>()?;
        }
        if let Some(tau_sd) = self.tau_sd {
            cfg.tau_sd_reference = tau_sd;
        }
        if let Some(dt_sd) = self.dt_sd {
            cfg.dt_sd = dt_sd;
        }
        if let Some(every) = self.record_every {
            cfg.record_every = every;
        }
        if let Some(readout) = &self.readout {
            cfg.readout = serde_json::from_value(serde_json::Value::String(readout.to_ascii_lowercase()))
                .with_context(|| format!("unknown readout `{readout}`"))?;
        }
        if let Some(s) = &self.s {
            cfg.s_checkpoints = parse_sweep(s)?;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (experiment, args) = match &cli.command {
        Command::Heatmap(a) => (Experiment::Heatmap, a),
        Command::Timeseries(a) => (Experiment::Timeseries, a),
        Command::Kinks(a) => (Experiment::Kinks, a),
        Command::Rules(a) => (Experiment::Rules, a),
        Command::Equilibrium(a) => (Experiment::Equilibrium, a),
    };
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let config = args.resolve()?;
    let report = execute(experiment, config)?;
    for path in &report.outputs {
        println!("wrote {}", path.display());
    }
    println!("wrote {} ({} rows)", report.metadata.display(), report.rows);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
