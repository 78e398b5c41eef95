use trotter_bias::equilibrium::boltzmann_distribution;
use trotter_bias::observables::{ground_state_marginal, kink_sector_probs};
use trotter_bias::qmc::{propagate_with, relax_at_fixed_point, RecordPolicy};
use trotter_bias::{Problem64, Readout, ReplicaConfig, ReplicaLayout, Schedule64, SpinConfig, TransitionRule};

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Flip every spin and reverse the site order within each replica.
fn mirror(config: ReplicaConfig, layout: ReplicaLayout) -> ReplicaConfig {
    let n = layout.n_spins;
    let mut bits = 0u64;
    for k in 0..layout.trotter_m {
        let replica = config.replica(k, layout);
        for i in 0..n {
            if replica.spin(i) > 0 {
                bits |= 1 << layout.bit_index(n - 1 - i, k);
            }
        }
    }
    ReplicaConfig(bits)
}

#[test]
fn frozen_dynamics_relaxes_to_boltzmann() {
    let problem = Problem64::toy_model(2).unwrap();
    let schedule = Schedule64::new(1.0, 3);
    for rule in TransitionRule::ALL {
        for s in [0.2, 0.5, 0.8] {
            let point = schedule.point(s).unwrap();
            let relaxed = relax_at_fixed_point(&problem, 3, &point, rule, 0.05, 100_000, None).unwrap();
            let target = boltzmann_distribution(&problem, &point, 3).unwrap();
            let tv = total_variation(&relaxed, &target);
            assert!(tv < 1e-8, "{rule} at s={s}: TV = {tv}");
        }
    }
}

#[test]
fn boltzmann_distribution_is_stationary() {
    let problem = Problem64::toy_model(3).unwrap();
    let point = Schedule64::new(1.0, 3).point(0.4).unwrap();
    let target = boltzmann_distribution(&problem, &point, 3).unwrap();
    for rule in TransitionRule::ALL {
        let after = relax_at_fixed_point(&problem, 3, &point, rule, 1.0 / 9.0, 5, Some(target.clone())).unwrap();
        assert!(total_variation(&after, &target) < 1e-14);
    }
}

#[test]
fn annealing_preserves_mirror_symmetry() {
    let problem = Problem64::toy_model(2).unwrap();
    let layout = ReplicaLayout::new(2, 4).unwrap();
    let gs = problem.ground_states().unwrap();
    for rule in TransitionRule::ALL {
        let p = propagate_with(&problem, &Schedule64::new(20.0, 4), rule, RecordPolicy::final_only(), |_| {}).unwrap();
        for b in 0..layout.n_states() as u64 {
            let m = mirror(ReplicaConfig(b), layout);
            assert!((p[b as usize] - p[m.0 as usize]).abs() < 1e-14);
        }
        for readout in [Readout::Replica0, Readout::Aligned] {
            let d = ground_state_marginal(&p, layout, &gs, readout).unwrap();
            assert!((d.probs[0] - d.probs[2]).abs() < 1e-12);
        }
    }
}

#[test]
fn slow_annealing_removes_kinks_and_concentrates_on_ground_states() {
    let problem = Problem64::toy_model(2).unwrap();
    let layout = ReplicaLayout::new(2, 4).unwrap();
    let gs = problem.ground_states().unwrap();
    let p = propagate_with(
        &problem,
        &Schedule64::new(100.0, 4),
        TransitionRule::Metropolis,
        RecordPolicy::final_only(),
        |_| {},
    )
    .unwrap();
    let sectors = kink_sector_probs(&p, layout).unwrap();
    assert!(sectors[0] > 0.9, "P(K=0) = {}", sectors[0]);
    let total = ground_state_marginal(&p, layout, &gs, Readout::Replica0).unwrap().total();
    assert!(total > 0.99);
    assert_eq!(gs.states, vec![SpinConfig(0), SpinConfig(2), SpinConfig(3)]);
}
