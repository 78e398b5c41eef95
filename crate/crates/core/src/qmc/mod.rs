//! Discrete-time path-integral QMC as an exact Markov chain.
//!
//! The effective classical system has `N·M` spins: `M` Trotter replicas of
//! the problem, coupled ferromagnetically along the (periodic) Trotter axis.
//! All energies here are dimensionless `β·H_eff`:
//!
//! ```text
//! β·H_eff(σ) = (βs/M) Σ_k H0(σ_k) - βJ* Σ_{i,k} σ_{i,k} σ_{i,k+1}
//! ```
//!
//! Replica configurations are packed so that bit `i + N·k` holds spin
//! `(i, k)`; bit set means spin down, as for [`SpinConfig`].

mod operator;
mod propagate;

pub use operator::{build_step_operator, StepOperator, DENSE_ORACLE_MAX_BITS};
pub use propagate::{
    propagate, propagate_with, read_raw_distribution, relax_at_fixed_point, uniform_distribution,
    write_raw_distribution, RecordPolicy, RecordedDistribution, Snapshot, MAX_REPLICA_BITS,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemIsing, SpinConfig};
use crate::scalar::Real;
use crate::schedule::SchedulePoint;

/// Shape of the replica space: `N` spins times `M` Trotter slices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplicaLayout {
    pub n_spins: usize,
    pub trotter_m: usize,
}

impl ReplicaLayout {
    pub fn new(n_spins: usize, trotter_m: usize) -> Result<Self> {
        if n_spins == 0 || trotter_m == 0 {
            return Err(Error::Configuration("replica layout needs N >= 1 and M >= 1".into()));
        }
        if n_spins * trotter_m > 63 {
            return Err(Error::Capacity { what: "N*M", requested: n_spins * trotter_m, limit: 63 });
        }
        Ok(Self { n_spins, trotter_m })
    }

    /// `N·M`, the number of spins (and of single-flip neighbors).
    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_spins * self.trotter_m
    }

    pub fn n_states(&self) -> usize {
        1usize << self.n_sites()
    }

    #[inline]
    pub fn bit_index(&self, i: usize, k: usize) -> usize {
        i + self.n_spins * k
    }

    #[inline]
    pub(crate) fn pattern_mask(&self) -> u64 {
        (1u64 << self.n_spins) - 1
    }

    pub fn contains(&self, config: ReplicaConfig) -> bool {
        self.n_sites() >= 64 || config.0 >> self.n_sites() == 0
    }

    pub fn check(&self, config: ReplicaConfig) -> Result<()> {
        if self.contains(config) {
            Ok(())
        } else {
            Err(Error::Index(format!("replica configuration {:#x} exceeds {} sites", config.0, self.n_sites())))
        }
    }

    /// Configuration with every replica equal to `pattern`.
    pub fn aligned(&self, pattern: SpinConfig) -> ReplicaConfig {
        let mut bits = 0u64;
        for k in 0..self.trotter_m {
            bits |= pattern.bits() << (self.n_spins * k);
        }
        ReplicaConfig(bits)
    }
}

/// One configuration of the `N×M` effective classical system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReplicaConfig(pub u64);

impl ReplicaConfig {
    /// The `N`-spin pattern of Trotter slice `k`.
    #[inline]
    pub fn replica(self, k: usize, layout: ReplicaLayout) -> SpinConfig {
        SpinConfig((self.0 >> (layout.n_spins * k)) & layout.pattern_mask())
    }

    #[inline]
    pub fn spin(self, i: usize, k: usize, layout: ReplicaLayout) -> i8 {
        1 - 2 * ((self.0 >> layout.bit_index(i, k)) & 1) as i8
    }

    pub fn flipped(self, i: usize, k: usize, layout: ReplicaLayout) -> Self {
        ReplicaConfig(self.0 ^ (1 << layout.bit_index(i, k)))
    }

    pub fn is_aligned(self, layout: ReplicaLayout) -> bool {
        let first = self.replica(0, layout);
        (1..layout.trotter_m).all(|k| self.replica(k, layout) == first)
    }
}

/// Single-spin-flip acceptance rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionRule {
    Metropolis,
    #[serde(alias = "heat-bath", alias = "glauber")]
    HeatBath,
}

impl TransitionRule {
    pub const ALL: [TransitionRule; 2] = [TransitionRule::Metropolis, TransitionRule::HeatBath];

    pub fn name(self) -> &'static str {
        match self {
            TransitionRule::Metropolis => "metropolis",
            TransitionRule::HeatBath => "heatbath",
        }
    }

    /// Acceptance probability for a move raising `β·H_eff` by `beta_delta_e`.
    ///
    /// Metropolis: `min(1, e^{-x})`. Heat bath: `1/(1 + e^{x})`, evaluated
    /// as `e^{-x}/(1 + e^{-x})` for `x ≥ 0` so neither branch overflows.
    /// Infinite arguments resolve to their limits.
    #[inline]
    pub fn acceptance<T: Real>(self, beta_delta_e: T) -> T {
        let x = beta_delta_e;
        match self {
            TransitionRule::Metropolis => {
                if x <= T::zero() {
                    T::one()
                } else {
                    (-x).exp()
                }
            }
            TransitionRule::HeatBath => {
                if x >= T::zero() {
                    let e = (-x).exp();
                    e / (T::one() + e)
                } else {
                    T::one() / (T::one() + x.exp())
                }
            }
        }
    }
}

impl fmt::Display for TransitionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransitionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "metropolis" | "mp" => Ok(TransitionRule::Metropolis),
            "heatbath" | "heat-bath" | "hb" | "glauber" => Ok(TransitionRule::HeatBath),
            other => Err(Error::Configuration(format!("unknown transition rule `{other}`"))),
        }
    }
}

pub fn acceptance<T: Real>(rule: TransitionRule, beta_delta_e: T) -> T {
    rule.acceptance(beta_delta_e)
}

fn pm_one<T: Real>(spin: i8) -> T {
    if spin > 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// `β·H_eff(config)` by direct evaluation over all replicas and bonds.
pub fn effective_energy<T: Real>(
    problem: &ProblemIsing<T>,
    layout: ReplicaLayout,
    config: ReplicaConfig,
    point: &SchedulePoint<T>,
) -> Result<T> {
    point.require_regular()?;
    check_problem_layout(problem, layout)?;
    layout.check(config)?;
    let m = layout.trotter_m;
    let classical = (0..m).fold(T::zero(), |acc, k| acc + problem.energy_unchecked(config.replica(k, layout)));
    let mut bonds = T::zero();
    for k in 0..m {
        for i in 0..layout.n_spins {
            let a = config.spin(i, k, layout);
            let b = config.spin(i, (k + 1) % m, layout);
            bonds = bonds + pm_one::<T>(a * b);
        }
    }
    Ok(point.classical_scale * classical - point.beta_jstar * bonds)
}

/// `β·ΔE` for flipping spin `(i, k)`, from local fields only:
/// `2σ_{i,k}[(βs/M)(Σ_j J_ij σ_{j,k} + h_i) + βJ*(σ_{i,k-1} + σ_{i,k+1})]`.
pub fn flip_delta<T: Real>(
    problem: &ProblemIsing<T>,
    layout: ReplicaLayout,
    config: ReplicaConfig,
    site: (usize, usize),
    point: &SchedulePoint<T>,
) -> Result<T> {
    point.require_regular()?;
    check_problem_layout(problem, layout)?;
    layout.check(config)?;
    let (i, k) = site;
    if i >= layout.n_spins || k >= layout.trotter_m {
        return Err(Error::Index(format!(
            "site ({i}, {k}) outside {}x{} replica grid",
            layout.n_spins, layout.trotter_m
        )));
    }
    Ok(flip_delta_unchecked(problem, layout, config, i, k, point))
}

#[inline]
pub(crate) fn flip_delta_unchecked<T: Real>(
    problem: &ProblemIsing<T>,
    layout: ReplicaLayout,
    config: ReplicaConfig,
    i: usize,
    k: usize,
    point: &SchedulePoint<T>,
) -> T {
    let m = layout.trotter_m;
    let sigma = pm_one::<T>(config.spin(i, k, layout));
    let field = problem.local_field(config.replica(k, layout), i);
    let trotter =
        pm_one::<T>(config.spin(i, (k + m - 1) % m, layout)) + pm_one::<T>(config.spin(i, (k + 1) % m, layout));
    T::lit(2.0) * sigma * (point.classical_scale * field + point.beta_jstar * trotter)
}

pub(crate) fn check_problem_layout<T: Real>(problem: &ProblemIsing<T>, layout: ReplicaLayout) -> Result<()> {
    if problem.n_spins() != layout.n_spins {
        return Err(Error::Dimension { expected: problem.n_spins(), found: layout.n_spins });
    }
    Ok(())
}
