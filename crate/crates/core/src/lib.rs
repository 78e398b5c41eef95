//! Exact simulation of discrete-time path-integral quantum Monte Carlo
//! against coherent transverse-field quantum annealing on small Ising
//! problems.
//!
//! Both sides are propagated without sampling noise: the Schrödinger
//! equation on the `2^N` state vector, and the QMC master equation on the
//! full `2^(N·M)` replica-space probability vector. Observables then compare
//! how each distributes probability over the degenerate ground states.
//!
//! Numerical types are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`, which every published tolerance assumes.

// `!(x > 0)` forms are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod model;
pub mod observables;
pub mod qmc;
pub mod scalar;
pub mod schedule;
pub mod schrodinger;

pub use error::{Error, Result};
pub use model::{GroundStateSet, ProblemIsing, SpinConfig};
pub use observables::{DistributionSource, GroundStateDistribution, Readout};
pub use qmc::{RecordPolicy, ReplicaConfig, ReplicaLayout, StepOperator, TransitionRule};
pub use scalar::Real;
pub use schedule::{ScheduleConfig, SchedulePoint};
pub use schrodinger::QuantumState;

pub type Problem64 = ProblemIsing<f64>;
pub type GroundStates64 = GroundStateSet<f64>;
pub type Schedule64 = ScheduleConfig<f64>;
pub type SchedulePoint64 = SchedulePoint<f64>;
pub type QuantumState64 = QuantumState<f64>;
pub type StepOperator64 = StepOperator<f64>;
pub type GroundStateDistribution64 = GroundStateDistribution<f64>;
pub type EquilibriumSummary64 = equilibrium::EquilibriumSummary<f64>;

pub type Problem32 = ProblemIsing<f32>;
pub type Schedule32 = ScheduleConfig<f32>;
pub type QuantumState32 = QuantumState<f32>;
