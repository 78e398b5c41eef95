//! The five experiment drivers. Each returns typed rows in a fixed order;
//! sweeps fan out over rayon and are collected back in sweep order.

use rayon::prelude::*;
use serde::Serialize;
use trotter_bias::equilibrium::{equilibrium_summary, frozen_limit_summary};
use trotter_bias::observables::{expected_kinks, ground_state_marginal, kink_sector_probs, metric_d};
use trotter_bias::qmc::{propagate_with, RecordPolicy};
use trotter_bias::schrodinger::{evolve_recorded, ground_state_probabilities};
use trotter_bias::{
    EquilibriumSummary64, GroundStateDistribution64, GroundStates64, Problem64, Readout, ReplicaLayout, TransitionRule,
};

use crate::config::RunConfig;
use crate::error::{ExperimentError, Result};

/// A loaded problem with its configuration checked at every sweep point.
pub struct Context {
    pub config: RunConfig,
    pub problem: Problem64,
    pub ground_states: GroundStates64,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        let problem = config.model.load()?;
        config.validate(problem.n_spins())?;
        let ground_states = problem.ground_states()?;
        Ok(Self { config, problem, ground_states })
    }

    fn layout(&self, m: usize) -> Result<ReplicaLayout> {
        Ok(ReplicaLayout::new(self.problem.n_spins(), m)?)
    }

    fn single_tau(&self) -> Result<f64> {
        match self.config.tau_values().as_slice() {
            [tau] => Ok(*tau),
            other => Err(ExperimentError::Invalid(format!("this experiment takes one tau, got {}", other.len()))),
        }
    }

    fn single_m(&self) -> Result<usize> {
        match self.config.m_values().as_slice() {
            [m] => Ok(*m),
            other => Err(ExperimentError::Invalid(format!("this experiment takes one M, got {}", other.len()))),
        }
    }

    fn n_steps(&self, tau: f64, m: usize) -> Result<u64> {
        Ok(self.config.schedule(tau, m).n_steps()? as u64)
    }

    /// Final replica-space distribution of one annealing run.
    pub fn final_distribution(&self, tau: f64, m: usize, rule: TransitionRule) -> Result<Vec<f64>> {
        let schedule = self.config.schedule(tau, m);
        Ok(propagate_with(&self.problem, &schedule, rule, RecordPolicy::final_only(), |_| {})?)
    }

    pub fn readout(&self, probs: &[f64], m: usize, readout: Readout) -> Result<GroundStateDistribution64> {
        Ok(ground_state_marginal(probs, self.layout(m)?, &self.ground_states, readout)?)
    }
}

/// Work counters reported in the metadata sidecar.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WorkCount {
    pub runs: u64,
    pub operator_steps: u64,
}

impl WorkCount {
    fn add(self, other: WorkCount) -> WorkCount {
        WorkCount { runs: self.runs + other.runs, operator_steps: self.operator_steps + other.operator_steps }
    }
}

fn sum_work(items: impl IntoIterator<Item = WorkCount>) -> WorkCount {
    items.into_iter().fold(WorkCount::default(), WorkCount::add)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub tau: f64,
    pub m: usize,
    pub d_vs_sd: f64,
    pub d_vs_uniform: f64,
    pub gs_prob_total: f64,
}

fn sweep_points(ctx: &Context) -> Vec<(f64, usize)> {
    let taus = ctx.config.tau_values();
    ctx.config.m_values().into_iter().flat_map(|m| taus.iter().map(move |&tau| (tau, m))).collect()
}

/// `D(P_QMC, P_SD)` over the `(τ, M)` grid, with the configured rule.
pub fn run_heatmap(ctx: &Context, reference: &GroundStateDistribution64) -> Result<(Vec<HeatmapRow>, WorkCount)> {
    let uniform = GroundStateDistribution64::uniform(&ctx.ground_states);
    let results: Vec<(HeatmapRow, WorkCount)> = sweep_points(ctx)
        .into_par_iter()
        .map(|(tau, m)| {
            let probs = ctx.final_distribution(tau, m, ctx.config.rule)?;
            let qmc = ctx.readout(&probs, m, ctx.config.readout)?;
            let row = HeatmapRow {
                tau,
                m,
                d_vs_sd: metric_d(&qmc, reference)?,
                d_vs_uniform: metric_d(&qmc, &uniform)?,
                gs_prob_total: qmc.total(),
            };
            Ok((row, WorkCount { runs: 1, operator_steps: ctx.n_steps(tau, m)? }))
        })
        .collect::<Result<_>>()?;
    let work = sum_work(results.iter().map(|r| r.1));
    Ok((results.into_iter().map(|r| r.0).collect(), work))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeseriesRow {
    pub t: f64,
    pub source: String,
    pub quantity: String,
    pub label: usize,
    pub probability: f64,
}

fn readout_quantity(readout: Readout, configured: Readout) -> String {
    if readout == configured {
        "ground_state".into()
    } else {
        match readout {
            Readout::Replica0 => "ground_state_replica0".into(),
            Readout::Aligned => "ground_state_aligned".into(),
        }
    }
}

fn push_probs(rows: &mut Vec<TimeseriesRow>, t: f64, source: &str, quantity: &str, probs: &[f64]) {
    rows.extend(probs.iter().enumerate().map(|(label, &probability)| TimeseriesRow {
        t,
        source: source.into(),
        quantity: quantity.into(),
        label,
        probability,
    }));
}

fn qmc_timeseries(ctx: &Context, tau: f64, m: usize, rule: TransitionRule) -> Result<Vec<TimeseriesRow>> {
    let layout = ctx.layout(m)?;
    let schedule = ctx.config.schedule(tau, m);
    let configured = ctx.config.readout;
    let mut rows = Vec::new();
    let mut failure = None;
    propagate_with(&ctx.problem, &schedule, rule, RecordPolicy::every(ctx.config.record_every), |snap| {
        let mut record = || -> Result<()> {
            for readout in [configured, other_readout(configured)] {
                let gs = ground_state_marginal(snap.probs, layout, &ctx.ground_states, readout)?;
                push_probs(&mut rows, snap.time, rule.name(), &readout_quantity(readout, configured), &gs.probs);
            }
            push_probs(&mut rows, snap.time, rule.name(), "kink_sector", &kink_sector_probs(snap.probs, layout)?);
            Ok(())
        };
        if failure.is_none() {
            failure = record().err();
        }
    })?;
    failure.map_or(Ok(rows), Err)
}

fn other_readout(readout: Readout) -> Readout {
    match readout {
        Readout::Replica0 => Readout::Aligned,
        Readout::Aligned => Readout::Replica0,
    }
}

/// Ground-state probabilities against time for the coherent evolution and
/// both QMC rules at one `(τ, M)`, plus QMC kink-sector probabilities.
pub fn run_timeseries(ctx: &Context) -> Result<(Vec<TimeseriesRow>, WorkCount)> {
    let (tau, m) = (ctx.single_tau()?, ctx.single_m()?);
    let record_interval = ctx.config.record_every as f64 * ctx.config.dt;
    let sd_every = (record_interval / ctx.config.dt_sd).round();
    if sd_every < 1.0 || ((record_interval / ctx.config.dt_sd) - sd_every).abs() > 1e-6 {
        return Err(ExperimentError::Invalid(format!(
            "record interval {record_interval} is not a multiple of dt_sd = {}",
            ctx.config.dt_sd
        )));
    }

    let sd_rows =
        || -> Result<Vec<TimeseriesRow>> {
            let mut rows = Vec::new();
            let mut failure = None;
            evolve_recorded(&ctx.problem, tau, ctx.config.dt_sd, sd_every as usize, |snap| {
                match ground_state_probabilities(snap.state, &ctx.ground_states) {
                    Ok(p) => push_probs(&mut rows, snap.time, "schrodinger", "ground_state", &p),
                    Err(e) => failure = failure.take().or(Some(e)),
                }
            })?;
            failure.map_or(Ok(rows), |e| Err(e.into()))
        };

    let parts: Vec<Vec<TimeseriesRow>> = [None, Some(TransitionRule::Metropolis), Some(TransitionRule::HeatBath)]
        .into_par_iter()
        .map(|rule| match rule {
            None => sd_rows(),
            Some(rule) => qmc_timeseries(ctx, tau, m, rule),
        })
        .collect::<Result<_>>()?;
    let steps = ctx.n_steps(tau, m)?;
    Ok((parts.concat(), WorkCount { runs: 2, operator_steps: 2 * steps }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KinkRow {
    pub s: f64,
    pub m: usize,
    pub source: String,
    /// `E[K] / (N·M)`.
    pub expected_kinks_per_site: f64,
    /// `E[K] / N`.
    pub expected_kinks_per_spin: f64,
}

impl KinkRow {
    fn new(s: f64, m: usize, source: &str, per_site: f64) -> Self {
        Self {
            s,
            m,
            source: source.into(),
            expected_kinks_per_site: per_site,
            expected_kinks_per_spin: per_site * m as f64,
        }
    }
}

/// Equilibrium statistics at `s`; `s = 1` takes the frozen limit.
pub fn equilibrium_at(ctx: &Context, s: f64, m: usize) -> Result<EquilibriumSummary64> {
    if s >= 1.0 {
        Ok(frozen_limit_summary(ctx.problem.n_spins(), m))
    } else {
        Ok(equilibrium_summary(&ctx.problem, s, m, ctx.config.beta_mode.beta_for(m))?)
    }
}

/// Measured kink density per site at the steps nearest each checkpoint `s`.
pub fn measured_kink_density(ctx: &Context, tau: f64, m: usize, rule: TransitionRule) -> Result<Vec<(f64, f64)>> {
    let layout = ctx.layout(m)?;
    let schedule = ctx.config.schedule(tau, m);
    let n_steps = schedule.n_steps()?;
    let targets: Vec<usize> = ctx.config.s_checkpoints.iter().map(|&s| (s * n_steps as f64).round() as usize).collect();
    let nm = layout.n_sites() as f64;
    let mut found = vec![None; targets.len()];
    let mut failure = None;
    propagate_with(&ctx.problem, &schedule, rule, RecordPolicy::every(1), |snap| {
        for (slot, _) in found.iter_mut().zip(&targets).filter(|(_, &t)| t == snap.step) {
            match expected_kinks(snap.probs, layout) {
                Ok(k) => *slot = Some(k / nm),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(ctx
        .config
        .s_checkpoints
        .iter()
        .zip(found)
        .map(|(&s, k)| (s, k.expect("every checkpoint step recorded")))
        .collect())
}

/// Measured and equilibrium kink density for each `M` and checkpoint `s`.
pub fn run_kink_scaling(ctx: &Context) -> Result<(Vec<KinkRow>, WorkCount)> {
    let tau = ctx.single_tau()?;
    let per_m: Vec<(Vec<KinkRow>, WorkCount)> = ctx
        .config
        .m_values()
        .into_par_iter()
        .map(|m| {
            let measured = measured_kink_density(ctx, tau, m, ctx.config.rule)?;
            let mut rows = Vec::with_capacity(2 * measured.len());
            for (s, kinks) in measured {
                rows.push(KinkRow::new(s, m, "measured", kinks));
                rows.push(KinkRow::new(s, m, "equilibrium", equilibrium_at(ctx, s, m)?.expected_kinks_per_site));
            }
            Ok((rows, WorkCount { runs: 1, operator_steps: ctx.n_steps(tau, m)? }))
        })
        .collect::<Result<_>>()?;
    let work = sum_work(per_m.iter().map(|r| r.1));
    Ok((per_m.into_iter().flat_map(|r| r.0).collect(), work))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleRow {
    pub rule: String,
    pub tau: f64,
    pub m: usize,
    pub d_vs_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleArgmin {
    pub rule: String,
    pub m: usize,
    pub argmin_tau: f64,
    pub min_d_vs_sd: f64,
}

/// Smallest `D` per `(rule, M)`; ties resolve to the smaller `τ`.
pub fn rule_argmins(rows: &[RuleRow]) -> Vec<RuleArgmin> {
    let mut out: Vec<RuleArgmin> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|a| a.rule == row.rule && a.m == row.m) {
            Some(best) => {
                if row.d_vs_sd < best.min_d_vs_sd || (row.d_vs_sd == best.min_d_vs_sd && row.tau < best.argmin_tau) {
                    best.argmin_tau = row.tau;
                    best.min_d_vs_sd = row.d_vs_sd;
                }
            }
            None => {
                out.push(RuleArgmin { rule: row.rule.clone(), m: row.m, argmin_tau: row.tau, min_d_vs_sd: row.d_vs_sd })
            }
        }
    }
    out
}

/// `D(P_QMC, P_SD)` over the `(τ, M)` grid under both transition rules.
pub fn run_rule_comparison(
    ctx: &Context,
    reference: &GroundStateDistribution64,
) -> Result<(Vec<RuleRow>, Vec<RuleArgmin>, WorkCount)> {
    let points: Vec<(TransitionRule, f64, usize)> = TransitionRule::ALL
        .into_iter()
        .flat_map(|rule| sweep_points(ctx).into_iter().map(move |(tau, m)| (rule, tau, m)))
        .collect();
    let results: Vec<(RuleRow, WorkCount)> = points
        .into_par_iter()
        .map(|(rule, tau, m)| {
            let probs = ctx.final_distribution(tau, m, rule)?;
            let d = metric_d(&ctx.readout(&probs, m, ctx.config.readout)?, reference)?;
            let row = RuleRow { rule: rule.name().into(), tau, m, d_vs_sd: d };
            Ok((row, WorkCount { runs: 1, operator_steps: ctx.n_steps(tau, m)? }))
        })
        .collect::<Result<_>>()?;
    let work = sum_work(results.iter().map(|r| r.1));
    let rows: Vec<RuleRow> = results.into_iter().map(|r| r.0).collect();
    let summary = rule_argmins(&rows);
    Ok((rows, summary, work))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorRow {
    pub s: f64,
    pub m: usize,
    pub kinks: usize,
    pub probability: f64,
}

/// Exact equilibrium kink statistics at each checkpoint `s` and each `M`.
pub fn run_equilibrium(ctx: &Context) -> Result<(Vec<KinkRow>, Vec<SectorRow>)> {
    let points: Vec<(usize, f64)> =
        ctx.config.m_values().into_iter().flat_map(|m| ctx.config.s_checkpoints.iter().map(move |&s| (m, s))).collect();
    let summaries: Vec<EquilibriumSummary64> =
        points.into_par_iter().map(|(m, s)| equilibrium_at(ctx, s, m)).collect::<Result<_>>()?;
    let kinks =
        summaries.iter().map(|e| KinkRow::new(e.s, e.trotter_m, "equilibrium", e.expected_kinks_per_site)).collect();
    let sectors = summaries
        .iter()
        .flat_map(|e| {
            e.kink_sector_probs.iter().enumerate().map(|(kinks, &probability)| SectorRow {
                s: e.s,
                m: e.trotter_m,
                kinks,
                probability,
            })
        })
        .collect();
    Ok((kinks, sectors))
}
