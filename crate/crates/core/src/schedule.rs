//! Linear annealing schedule `s = t/τ` and the derived Trotter-coupling
//! parameters shared by the Schrödinger and master-equation dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_DT: f64 = 0.05;

/// Steps per annealing run must be integral to within this tolerance.
const STEP_COUNT_TOLERANCE: f64 = 1e-9;

/// Schedule of one master-equation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig<T> {
    pub tau: T,
    pub trotter_m: usize,
    pub beta: T,
    pub dt: T,
}

impl<T: Real> ScheduleConfig<T> {
    /// `β = M` and `Δt = 0.05`.
    pub fn new(tau: T, trotter_m: usize) -> Self {
        Self { tau, trotter_m, beta: T::from_usize_lossy(trotter_m), dt: T::lit(DEFAULT_DT) }
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn beta_overridden(&self) -> bool {
        self.beta != T::from_usize_lossy(self.trotter_m)
    }

    /// Checks every scalar constraint for a system of `n_spins` spins,
    /// including the single-flip bound `Δt ≤ 1/(N·M)`.
    pub fn validate(&self, n_spins: usize) -> Result<()> {
        if self.trotter_m < 2 {
            return Err(Error::Configuration(format!("Trotter number must be at least 2, got {}", self.trotter_m)));
        }
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return Err(Error::Configuration(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.beta > T::zero() && self.beta.is_finite()) {
            return Err(Error::Configuration(format!("beta must be positive, got {}", self.beta)));
        }
        check_dt_bound(self.dt, n_spins, self.trotter_m)?;
        self.n_steps().map(|_| ())
    }

    /// Number of operator applications `τ/Δt`.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) {
            return Err(Error::Configuration(format!("dt must be positive, got {}", self.dt)));
        }
        let ratio = (self.tau / self.dt).to_f64_lossy();
        let rounded = ratio.round();
        if (ratio - rounded).abs() > STEP_COUNT_TOLERANCE * rounded.max(1.0) || rounded < 1.0 {
            return Err(Error::Configuration(format!("tau/dt = {ratio} is not a positive integer number of steps")));
        }
        Ok(rounded as usize)
    }

    /// Schedule progress at the start of step `n`: `s_n = n·Δt/τ`.
    pub fn progress_at_step(&self, step: usize, n_steps: usize) -> T {
        T::from_usize_lossy(step) / T::from_usize_lossy(n_steps)
    }

    pub fn point(&self, s: T) -> Result<SchedulePoint<T>> {
        SchedulePoint::new(s, self.beta, self.trotter_m)
    }
}

pub fn check_dt_bound<T: Real>(dt: T, n_spins: usize, trotter_m: usize) -> Result<()> {
    let nm = n_spins * trotter_m;
    let bound = T::one() / T::from_usize_lossy(nm);
    // dt == 1/(NM) exactly must pass despite rounding in the division.
    if !(dt > T::zero()) || dt > bound * (T::one() + T::epsilon() * T::lit(4.0)) {
        return Err(Error::Configuration(format!("dt = {dt} violates the single-flip bound dt <= 1/(N*M) = 1/{nm}")));
    }
    Ok(())
}

/// Dimensionless schedule parameters at a given progress `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint<T> {
    pub s: T,
    /// `a = (β/M)(1 - s)`.
    pub a: T,
    /// `βJ* = ½ ln coth a`; `+∞` at `s = 1`.
    pub beta_jstar: T,
    /// `tanh a = exp(-2βJ*)`, the Boltzmann factor per kink.
    pub transverse_weight: T,
    /// `βs/M`, the prefactor of each replica's classical energy in `β·H_eff`.
    pub classical_scale: T,
}

impl<T: Real> SchedulePoint<T> {
    pub fn new(s: T, beta: T, trotter_m: usize) -> Result<Self> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(Error::Domain(format!("schedule progress s = {s} outside [0, 1]")));
        }
        if trotter_m == 0 {
            return Err(Error::Configuration("Trotter number must be positive".into()));
        }
        let m = T::from_usize_lossy(trotter_m);
        let a = beta / m * (T::one() - s);
        let transverse_weight = a.tanh();
        // -½ ln tanh a is the stable form of ½ ln coth a; it also yields +∞ at a = 0.
        let beta_jstar = -T::lit(0.5) * transverse_weight.ln();
        Ok(Self { s, a, beta_jstar, transverse_weight, classical_scale: beta * s / m })
    }

    /// True at the `s = 1` limit point where `βJ*` is infinite.
    pub fn is_singular(&self) -> bool {
        !self.beta_jstar.is_finite()
    }

    pub(crate) fn require_regular(&self) -> Result<()> {
        if self.is_singular() {
            Err(Error::SingularSchedule)
        } else {
            Ok(())
        }
    }
}

pub fn schedule_point<T: Real>(config: &ScheduleConfig<T>, s: T) -> Result<SchedulePoint<T>> {
    config.point(s)
}
