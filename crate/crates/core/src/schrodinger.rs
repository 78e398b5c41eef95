//! Coherent reference dynamics: `i dΨ/dt = H(t) Ψ` with
//! `H(t) = (t/τ) H0 - (1 - t/τ) Σ_i σ^x_i`, integrated by fixed-step RK4
//! from the equal superposition.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{GroundStateSet, ProblemIsing, SpinConfig};
use crate::scalar::Real;

/// Largest `N` for a dense state vector.
pub const MAX_STATE_SPINS: usize = 20;

pub const DEFAULT_DT_SD: f64 = 1e-3;

/// Maximum tolerated `| ‖Ψ‖² - 1 |`.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState<T> {
    pub amplitudes: Vec<Complex<T>>,
}

impl<T: Real> QuantumState<T> {
    pub fn n_spins(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn probability(&self, config: SpinConfig) -> T {
        self.amplitudes[config.bits() as usize].norm_sqr()
    }

    pub fn basis(n_spins: usize, config: SpinConfig) -> Result<Self> {
        guard(n_spins)?;
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n_spins];
        let idx = config.bits() as usize;
        if idx >= amplitudes.len() {
            return Err(Error::Configuration(format!("basis state {idx} out of range")));
        }
        amplitudes[idx] = Complex::new(T::one(), T::zero());
        Ok(Self { amplitudes })
    }
}

fn guard(n_spins: usize) -> Result<()> {
    if n_spins > MAX_STATE_SPINS {
        return Err(Error::Capacity { what: "n_spins for state vector", requested: n_spins, limit: MAX_STATE_SPINS });
    }
    Ok(())
}

/// The equal superposition `2^{-N/2} Σ_x |x⟩`, ground state of the driver.
pub fn initial_state<T: Real>(n_spins: usize) -> Result<QuantumState<T>> {
    guard(n_spins)?;
    let dim = 1usize << n_spins;
    let amp = T::one() / T::from_usize_lossy(dim).sqrt();
    Ok(QuantumState { amplitudes: vec![Complex::new(amp, T::zero()); dim] })
}

/// Annealing Hamiltonian applied matrix-free: diagonal `H0` energies are
/// precomputed, the driver is `N` bit-flip accumulations per row.
#[derive(Clone, Debug)]
pub struct AnnealingHamiltonian<T> {
    n_spins: usize,
    diagonal: Vec<T>,
}

impl<T: Real> AnnealingHamiltonian<T> {
    pub fn new(problem: &ProblemIsing<T>) -> Result<Self> {
        let n = problem.n_spins();
        guard(n)?;
        let diagonal = (0..1u64 << n).map(|b| problem.energy_unchecked(SpinConfig(b))).collect();
        Ok(Self { n_spins: n, diagonal })
    }

    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    /// `out = H(s) ψ`.
    pub fn apply(&self, s: T, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        let driver = T::one() - s;
        for (x, slot) in out.iter_mut().enumerate() {
            let mut flips = Complex::new(T::zero(), T::zero());
            for i in 0..self.n_spins {
                flips = flips + psi[x ^ (1 << i)];
            }
            *slot = psi[x] * (s * self.diagonal[x]) - flips * driver;
        }
    }

    /// `H(s)` as a dense real-symmetric matrix, row-major.
    pub fn to_dense(&self, s: T) -> Vec<Vec<T>> {
        let dim = self.dimension();
        let mut h = vec![vec![T::zero(); dim]; dim];
        for (x, row) in h.iter_mut().enumerate() {
            row[x] = s * self.diagonal[x];
            for i in 0..self.n_spins {
                row[x ^ (1 << i)] = -(T::one() - s);
            }
        }
        h
    }
}

/// Snapshot handed to [`evolve_recorded`] observers.
pub struct StateSnapshot<'a, T> {
    pub step: usize,
    pub time: T,
    pub s: T,
    pub state: &'a QuantumState<T>,
}

fn rk4_step<T: Real>(
    h: &AnnealingHamiltonian<T>,
    psi: &mut [Complex<T>],
    s0: T,
    s_mid: T,
    s1: T,
    dt: T,
    scratch: &mut [Vec<Complex<T>>; 5],
) {
    let [k1, k2, k3, k4, tmp] = scratch;
    let minus_i = Complex::new(T::zero(), -T::one());
    let half = T::lit(0.5);

    h.apply(s0, psi, k1);
    k1.iter_mut().for_each(|k| *k = *k * minus_i);
    for ((t, p), k) in tmp.iter_mut().zip(psi.iter()).zip(k1.iter()) {
        *t = *p + *k * (dt * half);
    }
    h.apply(s_mid, tmp, k2);
    k2.iter_mut().for_each(|k| *k = *k * minus_i);
    for ((t, p), k) in tmp.iter_mut().zip(psi.iter()).zip(k2.iter()) {
        *t = *p + *k * (dt * half);
    }
    h.apply(s_mid, tmp, k3);
    k3.iter_mut().for_each(|k| *k = *k * minus_i);
    for ((t, p), k) in tmp.iter_mut().zip(psi.iter()).zip(k3.iter()) {
        *t = *p + *k * dt;
    }
    h.apply(s1, tmp, k4);
    k4.iter_mut().for_each(|k| *k = *k * minus_i);

    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    for (x, p) in psi.iter_mut().enumerate() {
        *p = *p + (k1[x] + k2[x] * two + k3[x] * two + k4[x]) * sixth;
    }
}

/// Integrates from `t = 0` to `t = τ`, calling `observer` at `t = 0`, every
/// `record_every` steps, and at the final step.
///
/// The step count is `ceil(τ / dt_sd)` with the step shrunk to land on `τ`.
pub fn evolve_recorded<T, F>(
    problem: &ProblemIsing<T>,
    tau: T,
    dt_sd: T,
    record_every: usize,
    mut observer: F,
) -> Result<QuantumState<T>>
where
    T: Real,
    F: FnMut(StateSnapshot<'_, T>),
{
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(Error::Configuration(format!("tau must be positive, got {tau}")));
    }
    if !(dt_sd > T::zero()) {
        return Err(Error::Configuration(format!("dt_sd must be positive, got {dt_sd}")));
    }
    let record_every = record_every.max(1);
    let hamiltonian = AnnealingHamiltonian::new(problem)?;
    let mut state = initial_state::<T>(problem.n_spins())?;

    let ratio = (tau / dt_sd).to_f64_lossy();
    let n_steps = ((ratio - 1e-9).ceil() as usize).max(1);
    let n_t = T::from_usize_lossy(n_steps);
    let dt = tau / n_t;

    let dim = hamiltonian.dimension();
    let zero = Complex::new(T::zero(), T::zero());
    let mut scratch: [Vec<Complex<T>>; 5] = std::array::from_fn(|_| vec![zero; dim]);
    let tol = T::lit(NORM_DRIFT_TOLERANCE);

    let check = |state: &QuantumState<T>, time: T| -> Result<()> {
        let drift = (state.norm_sqr() - T::one()).abs();
        if drift > tol {
            Err(Error::IntegrationAccuracy { drift: drift.to_f64_lossy(), time: time.to_f64_lossy() })
        } else {
            Ok(())
        }
    };

    observer(StateSnapshot { step: 0, time: T::zero(), s: T::zero(), state: &state });
    let two = T::lit(2.0);
    for step in 0..n_steps {
        let s0 = T::from_usize_lossy(step) / n_t;
        let s1 = T::from_usize_lossy(step + 1) / n_t;
        let s_mid = (T::from_usize_lossy(2 * step + 1)) / (two * n_t);
        rk4_step(&hamiltonian, &mut state.amplitudes, s0, s_mid, s1, dt, &mut scratch);
        let done = step + 1;
        if done % record_every == 0 || done == n_steps {
            let time = tau * s1;
            check(&state, time)?;
            observer(StateSnapshot { step: done, time, s: s1, state: &state });
        }
    }
    check(&state, tau)?;
    Ok(state)
}

/// `Ψ(τ)` under the annealing Hamiltonian.
pub fn evolve<T: Real>(problem: &ProblemIsing<T>, tau: T, dt_sd: T) -> Result<QuantumState<T>> {
    evolve_recorded(problem, tau, dt_sd, usize::MAX, |_| {})
}

/// `|⟨σ^g|Ψ⟩|²` for each ground state, in set order.
pub fn ground_state_probabilities<T: Real>(state: &QuantumState<T>, gs: &GroundStateSet<T>) -> Result<Vec<T>> {
    let expected = 1usize << gs.n_spins;
    if state.amplitudes.len() != expected {
        return Err(Error::Dimension { expected, found: state.amplitudes.len() });
    }
    Ok(gs.states.iter().map(|&g| state.probability(g)).collect())
}
