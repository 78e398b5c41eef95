use std::io::{Read, Write};

use super::operator::{LocalFieldTable, StepOperator};
use super::{check_problem_layout, ReplicaLayout, TransitionRule};
use crate::error::{Error, Result};
use crate::model::ProblemIsing;
use crate::scalar::{ordered_sum, Real};
use crate::schedule::{check_dt_bound, ScheduleConfig, SchedulePoint};

/// State-space guard: at most `2^20` replica configurations.
pub const MAX_REPLICA_BITS: usize = 20;

/// Allowed `|Σ P - 1|` for `f64`; looser types get a machine-epsilon bound.
const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Which steps are reported: step 0, every `every`-th step, and the last.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordPolicy {
    pub every: usize,
}

impl RecordPolicy {
    pub fn every(every: usize) -> Self {
        Self { every: every.max(1) }
    }

    pub fn final_only() -> Self {
        Self { every: usize::MAX }
    }

    fn wants(&self, step: usize, n_steps: usize) -> bool {
        step == 0 || step == n_steps || step.is_multiple_of(self.every)
    }
}

impl Default for RecordPolicy {
    fn default() -> Self {
        Self::final_only()
    }
}

/// Distribution after `step` operator applications, i.e. at `t = step·Δt`.
pub struct Snapshot<'a, T> {
    pub step: usize,
    pub time: T,
    pub s: T,
    pub probs: &'a [T],
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordedDistribution<T> {
    pub step: usize,
    pub time: T,
    pub s: T,
    pub probs: Vec<T>,
}

pub fn uniform_distribution<T: Real>(layout: ReplicaLayout) -> Vec<T> {
    let n = layout.n_states();
    vec![T::one() / T::from_usize_lossy(n); n]
}

fn guard(layout: ReplicaLayout) -> Result<()> {
    if layout.n_sites() > MAX_REPLICA_BITS {
        return Err(Error::Capacity { what: "N*M", requested: layout.n_sites(), limit: MAX_REPLICA_BITS });
    }
    Ok(())
}

fn normalization_tolerance<T: Real>() -> T {
    T::lit(NORMALIZATION_TOLERANCE).max(T::epsilon() * T::lit(1e4))
}

fn check_distribution<T: Real>(probs: &[T], step: usize) -> Result<()> {
    let total = ordered_sum(probs);
    if !((total - T::one()).abs() <= normalization_tolerance::<T>()) {
        return Err(Error::Consistency(format!("probability mass {total} deviates from 1 after step {step}")));
    }
    if let Some(bad) = probs.iter().position(|&p| !(p >= T::zero())) {
        return Err(Error::Consistency(format!(
            "negative or NaN probability {} at configuration {bad} after step {step}",
            probs[bad]
        )));
    }
    Ok(())
}

/// Runs the annealing master equation from the uniform distribution and
/// streams recorded distributions to `observer`. Returns the final `P(τ)`.
///
/// Step `n` applies `L` evaluated at `s_n = n·Δt/τ`, so the singular point
/// `s = 1` never enters a transition.
pub fn propagate_with<T, F>(
    problem: &ProblemIsing<T>,
    schedule: &ScheduleConfig<T>,
    rule: TransitionRule,
    record: RecordPolicy,
    mut observer: F,
) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(Snapshot<'_, T>),
{
    let layout = ReplicaLayout::new(problem.n_spins(), schedule.trotter_m)?;
    guard(layout)?;
    schedule.validate(problem.n_spins())?;
    let n_steps = schedule.n_steps()?;
    let fields = LocalFieldTable::new(problem);

    let mut current = uniform_distribution::<T>(layout);
    let mut next = vec![T::zero(); current.len()];
    observer(Snapshot { step: 0, time: T::zero(), s: T::zero(), probs: &current });

    for step in 0..n_steps {
        let s = schedule.progress_at_step(step, n_steps);
        let point = schedule.point(s)?;
        point.require_regular()?;
        let op = StepOperator::from_table(&fields, layout, &point, rule, schedule.dt);
        op.apply(&current, &mut next);
        std::mem::swap(&mut current, &mut next);

        let done = step + 1;
        if record.wants(done, n_steps) {
            check_distribution(&current, done)?;
            let s_done = schedule.progress_at_step(done, n_steps);
            observer(Snapshot { step: done, time: s_done * schedule.tau, s: s_done, probs: &current });
        }
    }
    check_distribution(&current, n_steps)?;
    Ok(current)
}

/// Collects every recorded distribution. Memory grows with the number of
/// records; prefer [`propagate_with`] for long runs at large `N·M`.
pub fn propagate<T: Real>(
    problem: &ProblemIsing<T>,
    schedule: &ScheduleConfig<T>,
    rule: TransitionRule,
    record: RecordPolicy,
) -> Result<Vec<RecordedDistribution<T>>> {
    let mut out = Vec::new();
    propagate_with(problem, schedule, rule, record, |snap| {
        out.push(RecordedDistribution { step: snap.step, time: snap.time, s: snap.s, probs: snap.probs.to_vec() })
    })?;
    Ok(out)
}

/// Applies `L` frozen at `point` for `n_steps` steps, starting from
/// `initial` (uniform when `None`).
pub fn relax_at_fixed_point<T: Real>(
    problem: &ProblemIsing<T>,
    trotter_m: usize,
    point: &SchedulePoint<T>,
    rule: TransitionRule,
    dt: T,
    n_steps: usize,
    initial: Option<Vec<T>>,
) -> Result<Vec<T>> {
    let layout = ReplicaLayout::new(problem.n_spins(), trotter_m)?;
    guard(layout)?;
    check_problem_layout(problem, layout)?;
    point.require_regular()?;
    check_dt_bound(dt, layout.n_spins, trotter_m)?;
    let mut current = match initial {
        Some(p) if p.len() == layout.n_states() => p,
        Some(p) => return Err(Error::Dimension { expected: layout.n_states(), found: p.len() }),
        None => uniform_distribution(layout),
    };
    let op = StepOperator::from_table(&LocalFieldTable::new(problem), layout, point, rule, dt);
    let mut next = vec![T::zero(); current.len()];
    for _ in 0..n_steps {
        op.apply(&current, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    check_distribution(&current, n_steps)?;
    Ok(current)
}

/// Writes `P` as an 8-byte little-endian `N·M` header followed by `2^(N·M)`
/// little-endian `f64` values.
pub fn write_raw_distribution<T: Real, W: Write>(mut writer: W, n_sites: usize, probs: &[T]) -> Result<()> {
    let expected = 1usize.checked_shl(n_sites as u32).unwrap_or(0);
    if probs.len() != expected {
        return Err(Error::Dimension { expected, found: probs.len() });
    }
    writer.write_all(&(n_sites as u64).to_le_bytes())?;
    for &p in probs {
        writer.write_all(&p.to_f64_lossy().to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

/// Inverse of [`write_raw_distribution`]; returns `(N·M, P)`.
pub fn read_raw_distribution<R: Read>(mut reader: R) -> Result<(usize, Vec<f64>)> {
    let mut header = [0u8; 8];
    reader.read_exact(&mut header)?;
    let n_sites = u64::from_le_bytes(header) as usize;
    if n_sites > MAX_REPLICA_BITS {
        return Err(Error::Capacity { what: "N*M in raw dump", requested: n_sites, limit: MAX_REPLICA_BITS });
    }
    let mut probs = Vec::with_capacity(1 << n_sites);
    let mut buf = [0u8; 8];
    for _ in 0..1usize << n_sites {
        reader.read_exact(&mut buf)?;
        probs.push(f64::from_le_bytes(buf));
    }
    Ok((n_sites, probs))
}
