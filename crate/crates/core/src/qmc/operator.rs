use rayon::prelude::*;

use super::{check_problem_layout, ReplicaConfig, ReplicaLayout, TransitionRule};
use crate::error::{Error, Result};
use crate::model::{ProblemIsing, SpinConfig};
use crate::scalar::Real;
use crate::schedule::{check_dt_bound, SchedulePoint};

/// Dense materialization is only offered up to `N·M = 8` (a 256×256 matrix).
pub const DENSE_ORACLE_MAX_BITS: usize = 8;

/// Destination configurations handled per parallel task.
const CHUNK: usize = 1 << 12;

/// One step `P(t + Δt) = L(t) P(t)` of the discrete master equation.
///
/// `L` is column-stochastic with off-diagonal entries `w_{σ'→σ}·Δt` on the
/// `N·M` single-flip neighbors and diagonal `1 - Σ_σ' w_{σ→σ'}·Δt`. It is
/// never stored: a flip's `β·ΔE` depends only on the replica's spin pattern,
/// the site, and the two Trotter neighbours, so per step we tabulate
/// `(Δt·w_out, Δt·w_in)` for every such local environment and stream over
/// configurations.
#[derive(Clone, Debug)]
pub struct StepOperator<T> {
    layout: ReplicaLayout,
    // Indexed by ((pattern * N + i) * 4 + (prev_down << 1 | next_down)).
    table: Vec<(T, T)>,
}

/// Classical local field `Σ_j J_ij σ_j + h_i` for every `(pattern, i)`.
#[derive(Clone, Debug)]
pub(crate) struct LocalFieldTable<T> {
    n_spins: usize,
    fields: Vec<T>,
}

impl<T: Real> LocalFieldTable<T> {
    pub(crate) fn new(problem: &ProblemIsing<T>) -> Self {
        let n = problem.n_spins();
        let mut fields = Vec::with_capacity(n << n);
        for p in 0..1u64 << n {
            for i in 0..n {
                fields.push(problem.local_field(SpinConfig(p), i));
            }
        }
        Self { n_spins: n, fields }
    }
}

impl<T: Real> StepOperator<T> {
    pub(crate) fn from_table(
        fields: &LocalFieldTable<T>,
        layout: ReplicaLayout,
        point: &SchedulePoint<T>,
        rule: TransitionRule,
        dt: T,
    ) -> Self {
        let n = fields.n_spins;
        let two = T::lit(2.0);
        let mut table = Vec::with_capacity(fields.fields.len() * 4);
        for p in 0..1usize << n {
            for i in 0..n {
                let sigma = if (p >> i) & 1 == 0 { T::one() } else { -T::one() };
                let classical = point.classical_scale * fields.fields[p * n + i];
                for nb in 0..4usize {
                    let prev = if nb & 2 == 0 { T::one() } else { -T::one() };
                    let next = if nb & 1 == 0 { T::one() } else { -T::one() };
                    let x = two * sigma * (classical + point.beta_jstar * (prev + next));
                    table.push((dt * rule.acceptance(x), dt * rule.acceptance(-x)));
                }
            }
        }
        Self { layout, table }
    }

    pub fn layout(&self) -> ReplicaLayout {
        self.layout
    }

    #[inline]
    fn visit_neighbors<F: FnMut(usize, T, T)>(&self, sigma: usize, mut f: F) {
        let n = self.layout.n_spins;
        let m = self.layout.trotter_m;
        let mask = (1usize << n) - 1;
        let pattern = |k: usize| (sigma >> (n * k)) & mask;
        let mut prev = pattern(m - 1);
        let mut cur = pattern(0);
        for k in 0..m {
            let next = pattern((k + 1) % m);
            let base = cur * n;
            for i in 0..n {
                let nb = (((prev >> i) & 1) << 1) | ((next >> i) & 1);
                let (w_out, w_in) = self.table[((base + i) << 2) | nb];
                f(1usize << (n * k + i), w_out, w_in);
            }
            prev = cur;
            cur = next;
        }
    }

    /// `dst = L · src`.
    ///
    /// Each destination entry is a gather over its own neighbors in a fixed
    /// order, so the result does not depend on the worker count.
    pub fn apply(&self, src: &[T], dst: &mut [T]) {
        let n_states = self.layout.n_states();
        assert_eq!(src.len(), n_states, "source length");
        assert_eq!(dst.len(), n_states, "destination length");
        dst.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let offset = c * CHUNK;
            for (j, slot) in chunk.iter_mut().enumerate() {
                let sigma = offset + j;
                let mut leave = T::zero();
                let mut inflow = T::zero();
                self.visit_neighbors(sigma, |bit, w_out, w_in| {
                    leave = leave + w_out;
                    inflow = inflow + w_in * src[sigma ^ bit];
                });
                *slot = src[sigma] * stay(leave) + inflow;
            }
        });
    }

    /// Nonzero entries of column `from`: `(to, L_{to,from})`, diagonal first.
    pub fn column(&self, from: ReplicaConfig) -> Vec<(ReplicaConfig, T)> {
        let sigma = from.0 as usize;
        let mut out = Vec::with_capacity(self.layout.n_sites() + 1);
        let mut leave = T::zero();
        self.visit_neighbors(sigma, |bit, w_out, _| {
            leave = leave + w_out;
            out.push((ReplicaConfig((sigma ^ bit) as u64), w_out));
        });
        out.insert(0, (from, stay(leave)));
        out
    }

    /// Row-major dense `L`, for `N·M ≤ DENSE_ORACLE_MAX_BITS`.
    pub fn to_dense(&self) -> Result<Vec<Vec<T>>> {
        let bits = self.layout.n_sites();
        if bits > DENSE_ORACLE_MAX_BITS {
            return Err(Error::Capacity {
                what: "N*M for dense operator",
                requested: bits,
                limit: DENSE_ORACLE_MAX_BITS,
            });
        }
        let dim = self.layout.n_states();
        let mut dense = vec![vec![T::zero(); dim]; dim];
        for from in 0..dim as u64 {
            for (to, value) in self.column(ReplicaConfig(from)) {
                dense[to.0 as usize][from as usize] = value;
            }
        }
        Ok(dense)
    }
}

/// Diagonal `1 - Σ w·Δt`. At `Δt = 1/(N·M)` with every move accepted the
/// sum can round a few ulps above 1; clamp so entries stay nonnegative.
#[inline]
fn stay<T: Real>(leave: T) -> T {
    (T::one() - leave).max(T::zero())
}

/// Builds `L(t)` at schedule point `point`.
///
/// Fails if `Δt > 1/(N·M)` or the point is the singular `s = 1` limit.
pub fn build_step_operator<T: Real>(
    problem: &ProblemIsing<T>,
    layout: ReplicaLayout,
    point: &SchedulePoint<T>,
    rule: TransitionRule,
    dt: T,
) -> Result<StepOperator<T>> {
    check_problem_layout(problem, layout)?;
    point.require_regular()?;
    check_dt_bound(dt, layout.n_spins, layout.trotter_m)?;
    Ok(StepOperator::from_table(&LocalFieldTable::new(problem), layout, point, rule, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc::{effective_energy, ReplicaLayout};
    use crate::schedule::ScheduleConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy2() -> ProblemIsing<f64> {
        ProblemIsing::toy_model(2).unwrap()
    }

    // Dense L assembled from full energy recomputation, independent of the
    // tabulated local environments.
    fn dense_oracle(
        problem: &ProblemIsing<f64>,
        layout: ReplicaLayout,
        point: &SchedulePoint<f64>,
        rule: TransitionRule,
        dt: f64,
    ) -> Vec<Vec<f64>> {
        let dim = layout.n_states();
        let energy = |b: usize| effective_energy(problem, layout, ReplicaConfig(b as u64), point).unwrap();
        let mut l = vec![vec![0.0; dim]; dim];
        for from in 0..dim {
            let mut leave = 0.0;
            for bit in 0..layout.n_sites() {
                let to = from ^ (1 << bit);
                let w = rule.acceptance(energy(to) - energy(from));
                l[to][from] = w * dt;
                leave += w * dt;
            }
            l[from][from] = 1.0 - leave;
        }
        l
    }

    #[test]
    fn matrix_free_matches_dense_oracle_on_basis_vectors() {
        let p = toy2();
        let layout = ReplicaLayout::new(2, 2).unwrap();
        for rule in TransitionRule::ALL {
            for &s in &[0.0, 0.4, 0.95] {
                let point = ScheduleConfig::new(10.0, 2).point(s).unwrap();
                let op = build_step_operator(&p, layout, &point, rule, 0.05).unwrap();
                let oracle = dense_oracle(&p, layout, &point, rule, 0.05);
                let dense = op.to_dense().unwrap();
                for e in 0..16 {
                    let mut basis = vec![0.0; 16];
                    basis[e] = 1.0;
                    let mut out = vec![0.0; 16];
                    op.apply(&basis, &mut out);
                    for r in 0..16 {
                        assert!((out[r] - oracle[r][e]).abs() < 1e-14, "rule {rule} s {s} ({r},{e})");
                        assert!((dense[r][e] - oracle[r][e]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn columns_are_stochastic() {
        let p = ProblemIsing::<f64>::new(3, [(0, 1, 1.0), (1, 2, -2.0)], [(1, 0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..=4 {
            let layout = ReplicaLayout::new(3, m).unwrap();
            for _ in 0..20 {
                let s: f64 = rng.gen_range(0.0..0.999);
                let rule = TransitionRule::ALL[rng.gen_range(0..2)];
                let point = ScheduleConfig::new(10.0, m).point(s).unwrap();
                let dt = 1.0 / (3 * m) as f64;
                let op = build_step_operator(&p, layout, &point, rule, dt).unwrap();
                for _ in 0..50 {
                    let col = op.column(ReplicaConfig(rng.gen_range(0..layout.n_states() as u64)));
                    assert_eq!(col.len(), 3 * m + 1);
                    let sum: f64 = col.iter().map(|c| c.1).sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                    assert!(col.iter().all(|c| (0.0..=1.0).contains(&c.1)));
                    assert!(col[0].1 >= 1.0 - (3 * m) as f64 * dt - 1e-15);
                }
            }
        }
    }

    #[test]
    fn dt_bound_and_singular_point_rejected() {
        let p = toy2();
        let layout = ReplicaLayout::new(2, 8).unwrap();
        let point = ScheduleConfig::new(10.0, 8).point(0.5).unwrap();
        assert!(matches!(
            build_step_operator(&p, layout, &point, TransitionRule::Metropolis, 0.07),
            Err(Error::Configuration(_))
        ));
        let end = ScheduleConfig::new(10.0, 8).point(1.0).unwrap();
        assert!(matches!(
            build_step_operator(&p, layout, &end, TransitionRule::Metropolis, 0.05),
            Err(Error::SingularSchedule)
        ));
        let op = build_step_operator(&p, layout, &point, TransitionRule::Metropolis, 0.05).unwrap();
        assert!(matches!(op.to_dense(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn metropolis_moves_at_least_as_much_as_heat_bath() {
        let p = toy2();
        let layout = ReplicaLayout::new(2, 3).unwrap();
        let point = ScheduleConfig::new(10.0, 3).point(0.6).unwrap();
        let mp = build_step_operator(&p, layout, &point, TransitionRule::Metropolis, 0.05).unwrap();
        let hb = build_step_operator(&p, layout, &point, TransitionRule::HeatBath, 0.05).unwrap();
        for from in 0..layout.n_states() as u64 {
            let (a, b) = (mp.column(ReplicaConfig(from)), hb.column(ReplicaConfig(from)));
            for (x, y) in a.iter().zip(&b).skip(1) {
                assert_eq!(x.0, y.0);
                assert!(x.1 >= y.1 && x.1 <= 2.0 * y.1);
            }
        }
    }
}
