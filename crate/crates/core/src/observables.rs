//! Quantities compared between the two dynamics: ground-state readouts,
//! the ℓ1 metric `D`, and kink statistics of replica-space distributions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroundStateSet, SpinConfig};
use crate::qmc::{ReplicaConfig, ReplicaLayout};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionSource {
    Schrodinger,
    QmcMarginal,
    QmcAligned,
    Uniform,
}

impl fmt::Display for DistributionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistributionSource::Schrodinger => "schrodinger",
            DistributionSource::QmcMarginal => "qmc-marginal",
            DistributionSource::QmcAligned => "qmc-aligned",
            DistributionSource::Uniform => "uniform",
        })
    }
}

/// How a replica-space distribution is projected onto ground states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    /// Marginal of Trotter slice 0.
    #[default]
    Replica0,
    /// Only configurations with every slice equal to the ground state.
    Aligned,
}

impl Readout {
    pub fn source(self) -> DistributionSource {
        match self {
            Readout::Replica0 => DistributionSource::QmcMarginal,
            Readout::Aligned => DistributionSource::QmcAligned,
        }
    }
}

/// Probabilities of each degenerate ground state, in [`GroundStateSet`] order.
/// Not renormalized: mass outside the ground manifold is simply absent.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundStateDistribution<T> {
    pub labels: Vec<SpinConfig>,
    pub probs: Vec<T>,
    pub source: DistributionSource,
}

impl<T: Real> GroundStateDistribution<T> {
    pub fn new(gs: &GroundStateSet<T>, probs: Vec<T>, source: DistributionSource) -> Result<Self> {
        if probs.len() != gs.count() {
            return Err(Error::Dimension { expected: gs.count(), found: probs.len() });
        }
        Ok(Self { labels: gs.states.clone(), probs, source })
    }

    pub fn uniform(gs: &GroundStateSet<T>) -> Self {
        let p = T::one() / T::from_usize_lossy(gs.count().max(1));
        Self { labels: gs.states.clone(), probs: vec![p; gs.count()], source: DistributionSource::Uniform }
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    /// Labels permuted `s ↔ N_GS - 1 - s`.
    pub fn reversed(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.reverse();
        Self { labels: self.labels.clone(), probs, source: self.source }
    }
}

/// `D(p, q) = Σ_s |p(σ^s) - q(σ^s)|`.
pub fn metric_d<T: Real>(p: &GroundStateDistribution<T>, q: &GroundStateDistribution<T>) -> Result<T> {
    if p.labels != q.labels {
        return Err(Error::Comparison(format!(
            "ground-state labels differ ({} vs {} states)",
            p.labels.len(),
            q.labels.len()
        )));
    }
    Ok(p.probs.iter().zip(&q.probs).fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs()))
}

/// Number of mismatched Trotter bonds, wrap-around bond included.
pub fn kink_count(config: ReplicaConfig, layout: ReplicaLayout) -> usize {
    let m = layout.trotter_m;
    (0..m)
        .map(|k| (config.replica(k, layout).bits() ^ config.replica((k + 1) % m, layout).bits()).count_ones() as usize)
        .sum()
}

fn check_len<T>(p: &[T], layout: ReplicaLayout) -> Result<()> {
    if p.len() != layout.n_states() {
        return Err(Error::Dimension { expected: layout.n_states(), found: p.len() });
    }
    Ok(())
}

/// Probability mass per kink sector `K = 0 ..= N·M`.
pub fn kink_sector_probs<T: Real>(p: &[T], layout: ReplicaLayout) -> Result<Vec<T>> {
    check_len(p, layout)?;
    let mut sectors = vec![T::zero(); layout.n_sites() + 1];
    for (bits, &mass) in p.iter().enumerate() {
        let k = kink_count(ReplicaConfig(bits as u64), layout);
        sectors[k] = sectors[k] + mass;
    }
    Ok(sectors)
}

/// `E[K] = Σ_K K · P(K)`.
pub fn expected_kinks<T: Real>(p: &[T], layout: ReplicaLayout) -> Result<T> {
    let sectors = kink_sector_probs(p, layout)?;
    Ok(sectors.iter().enumerate().fold(T::zero(), |acc, (k, &w)| acc + T::from_usize_lossy(k) * w))
}

/// Probability that bond `(i, k)–(i, k+1)` is a kink.
pub fn bond_mismatch_probability<T: Real>(p: &[T], layout: ReplicaLayout, i: usize, k: usize) -> Result<T> {
    check_len(p, layout)?;
    if i >= layout.n_spins || k >= layout.trotter_m {
        return Err(Error::Index(format!("bond ({i}, {k}) outside replica grid")));
    }
    let a = layout.bit_index(i, k);
    let b = layout.bit_index(i, (k + 1) % layout.trotter_m);
    Ok(p.iter().enumerate().fold(
        T::zero(),
        |acc, (bits, &mass)| {
            if ((bits >> a) ^ (bits >> b)) & 1 == 1 {
                acc + mass
            } else {
                acc
            }
        },
    ))
}

/// Mismatch probability averaged over all `N·M` Trotter bonds.
pub fn mean_bond_mismatch<T: Real>(p: &[T], layout: ReplicaLayout) -> Result<T> {
    let mut total = T::zero();
    for k in 0..layout.trotter_m {
        for i in 0..layout.n_spins {
            total = total + bond_mismatch_probability(p, layout, i, k)?;
        }
    }
    Ok(total / T::from_usize_lossy(layout.n_sites()))
}

/// Projects a replica-space distribution onto the ground states.
pub fn ground_state_marginal<T: Real>(
    p: &[T],
    layout: ReplicaLayout,
    gs: &GroundStateSet<T>,
    readout: Readout,
) -> Result<GroundStateDistribution<T>> {
    check_len(p, layout)?;
    if gs.n_spins != layout.n_spins {
        return Err(Error::Dimension { expected: layout.n_spins, found: gs.n_spins });
    }
    let probs = match readout {
        Readout::Replica0 => {
            let mut by_pattern = vec![T::zero(); 1 << layout.n_spins];
            let mask = layout.pattern_mask() as usize;
            for (bits, &mass) in p.iter().enumerate() {
                let slot = &mut by_pattern[bits & mask];
                *slot = *slot + mass;
            }
            gs.states.iter().map(|g| by_pattern[g.bits() as usize]).collect()
        }
        Readout::Aligned => gs.states.iter().map(|&g| p[layout.aligned(g).0 as usize]).collect(),
    };
    GroundStateDistribution::new(gs, probs, readout.source())
}
