//! Exact Boltzmann statistics of the effective classical system by full
//! enumeration of all `2^(N·M)` replica configurations.
//!
//! Deliberately brute force: this is the oracle the master-equation
//! propagation is checked against, so it shares no code with the step
//! operator beyond `effective_energy`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ProblemIsing;
use crate::observables::{bond_mismatch_probability, kink_sector_probs, mean_bond_mismatch};
use crate::qmc::{effective_energy, ReplicaConfig, ReplicaLayout, MAX_REPLICA_BITS};
use crate::scalar::{log_sum_exp, Real};
use crate::schedule::SchedulePoint;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumSummary<T> {
    pub s: T,
    pub trotter_m: usize,
    pub log_z: T,
    /// `P(K)` for `K = 0 ..= N·M`.
    pub kink_sector_probs: Vec<T>,
    /// `E[K] / (N·M)`, which equals `q` by linearity.
    pub expected_kinks_per_site: T,
    /// `E[K] / N = M·q`; grows roughly linearly in `M`.
    pub expected_kinks_per_spin: T,
    /// `q(s, M)` measured on bond `(i=0, k=0)`.
    pub mismatch_prob_q: T,
    /// `q(s, M)` averaged over all bonds; equals `mismatch_prob_q` by
    /// translation invariance along the Trotter axis.
    pub mismatch_prob_q_mean: T,
}

fn log_weights<T: Real>(problem: &ProblemIsing<T>, layout: ReplicaLayout, point: &SchedulePoint<T>) -> Result<Vec<T>> {
    if layout.n_sites() > MAX_REPLICA_BITS {
        return Err(Error::Capacity { what: "N*M", requested: layout.n_sites(), limit: MAX_REPLICA_BITS });
    }
    point.require_regular()?;
    (0..layout.n_states() as u64)
        .into_par_iter()
        .map(|b| effective_energy(problem, layout, ReplicaConfig(b), point).map(|e| -e))
        .collect()
}

/// `P(σ) = exp(-β H_eff(σ)) / Z` and `ln Z`.
pub fn boltzmann_with_log_z<T: Real>(
    problem: &ProblemIsing<T>,
    point: &SchedulePoint<T>,
    trotter_m: usize,
) -> Result<(Vec<T>, T)> {
    let layout = ReplicaLayout::new(problem.n_spins(), trotter_m)?;
    let logw = log_weights(problem, layout, point)?;
    let log_z = log_sum_exp(&logw);
    Ok((logw.into_iter().map(|lw| (lw - log_z).exp()).collect(), log_z))
}

pub fn boltzmann_distribution<T: Real>(
    problem: &ProblemIsing<T>,
    point: &SchedulePoint<T>,
    trotter_m: usize,
) -> Result<Vec<T>> {
    boltzmann_with_log_z(problem, point, trotter_m).map(|(p, _)| p)
}

/// Kink statistics of the equilibrium distribution at progress `s`.
pub fn equilibrium_summary<T: Real>(
    problem: &ProblemIsing<T>,
    s: T,
    trotter_m: usize,
    beta: T,
) -> Result<EquilibriumSummary<T>> {
    let point = SchedulePoint::new(s, beta, trotter_m)?;
    let layout = ReplicaLayout::new(problem.n_spins(), trotter_m)?;
    let (p, log_z) = boltzmann_with_log_z(problem, &point, trotter_m)?;
    let sectors = kink_sector_probs(&p, layout)?;
    let nm = T::from_usize_lossy(layout.n_sites());
    let expected = sectors.iter().enumerate().fold(T::zero(), |acc, (k, &w)| acc + T::from_usize_lossy(k) * w);
    Ok(EquilibriumSummary {
        s,
        trotter_m,
        log_z,
        kink_sector_probs: sectors,
        expected_kinks_per_site: expected / nm,
        expected_kinks_per_spin: expected / T::from_usize_lossy(layout.n_spins),
        mismatch_prob_q: bond_mismatch_probability(&p, layout, 0, 0)?,
        mismatch_prob_q_mean: mean_bond_mismatch(&p, layout)?,
    })
}

/// Equilibrium summary at `s = 1`, where `tanh a = 0` puts all mass on `K = 0`.
pub fn frozen_limit_summary<T: Real>(n_spins: usize, trotter_m: usize) -> EquilibriumSummary<T> {
    let mut sectors = vec![T::zero(); n_spins * trotter_m + 1];
    sectors[0] = T::one();
    EquilibriumSummary {
        s: T::one(),
        trotter_m,
        log_z: T::infinity(),
        kink_sector_probs: sectors,
        expected_kinks_per_site: T::zero(),
        expected_kinks_per_spin: T::zero(),
        mismatch_prob_q: T::zero(),
        mismatch_prob_q_mean: T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinConfig;
    use crate::observables::kink_count;
    use crate::schedule::ScheduleConfig;

    fn toy2() -> ProblemIsing<f64> {
        ProblemIsing::toy_model(2).unwrap()
    }

    #[test]
    fn normalized_and_singular_rejected() {
        let point = ScheduleConfig::new(1.0, 3).point(0.4).unwrap();
        let p = boltzmann_distribution(&toy2(), &point, 3).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let end = ScheduleConfig::new(1.0, 3).point(1.0).unwrap();
        assert!(matches!(boltzmann_distribution(&toy2(), &end, 3), Err(Error::SingularSchedule)));
        assert!(matches!(equilibrium_summary(&toy2(), 1.0, 3, 3.0), Err(Error::SingularSchedule)));
    }

    #[test]
    fn s_zero_depends_only_on_kinks() {
        let layout = ReplicaLayout::new(2, 3).unwrap();
        let point = ScheduleConfig::new(1.0, 3).point(0.0).unwrap();
        let p = boltzmann_distribution(&toy2(), &point, 3).unwrap();
        let mut by_k: Vec<Option<f64>> = vec![None; 7];
        for (b, &x) in p.iter().enumerate() {
            let k = kink_count(ReplicaConfig(b as u64), layout);
            match by_k[k] {
                None => by_k[k] = Some(x),
                Some(y) => assert!((x - y).abs() < 1e-15),
            }
        }
    }

    #[test]
    fn free_spin_flip_symmetry() {
        let free = ProblemIsing::<f64>::new(1, [], []).unwrap();
        for m in 2..=6 {
            let layout = ReplicaLayout::new(1, m).unwrap();
            let point = ScheduleConfig::new(1.0, m).point(0.7).unwrap();
            let p = boltzmann_distribution(&free, &point, m).unwrap();
            let up = p[layout.aligned(SpinConfig(0)).0 as usize];
            let down = p[layout.aligned(SpinConfig(1)).0 as usize];
            assert!((up - down).abs() < 1e-15);
        }
    }

    #[test]
    fn kink_ratio_is_power_of_tanh() {
        // Two configurations of the free spin, one aligned and one with a
        // single flipped slice (2 kinks): ratio tanh(a)^2.
        let free = ProblemIsing::<f64>::new(1, [], []).unwrap();
        let layout = ReplicaLayout::new(1, 4).unwrap();
        let point = ScheduleConfig::new(1.0, 4).point(0.35).unwrap();
        let p = boltzmann_distribution(&free, &point, 4).unwrap();
        let ratio = p[layout.aligned(SpinConfig(0)).flipped(0, 1, layout).0 as usize] / p[0];
        assert!((ratio - point.transverse_weight.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn summary_consistency() {
        for m in 2..=5 {
            for &s in &[0.1, 0.5, 0.9] {
                let sum = equilibrium_summary(&toy2(), s, m, m as f64).unwrap();
                assert!((sum.kink_sector_probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!((sum.expected_kinks_per_site - sum.mismatch_prob_q).abs() < 1e-10);
                assert!((sum.mismatch_prob_q - sum.mismatch_prob_q_mean).abs() < 1e-10);
                assert!((sum.expected_kinks_per_spin - m as f64 * sum.mismatch_prob_q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mismatch_decreases_along_the_anneal() {
        for m in [2, 4, 6] {
            let qs: Vec<f64> = (0..10)
                .map(|j| equilibrium_summary(&toy2(), j as f64 * 0.1, m, m as f64).unwrap().mismatch_prob_q)
                .collect();
            assert!(qs.windows(2).all(|w| w[1] < w[0]), "M = {m}: {qs:?}");
        }
        let late = equilibrium_summary(&toy2(), 0.999, 4, 4.0).unwrap();
        assert!(late.kink_sector_probs[0] > 0.99);
    }

    #[test]
    fn frozen_limit() {
        let sum = frozen_limit_summary::<f64>(2, 3);
        assert_eq!(sum.kink_sector_probs, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(sum.expected_kinks_per_site, 0.0);
    }
}
