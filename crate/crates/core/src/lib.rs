//! Krotov's method for quantum optimal control.
//!
//! States evolve under `i ∂φ/∂t = H_eff φ` with `ħ = 1`. In Hilbert space
//! `H_eff` is the Hamiltonian; in Liouville space density matrices are
//! vectorized column-major and `H_eff = i L` for the Liouvillian `L`.

pub mod error;
pub mod functionals;
pub mod linalg;
pub mod objectives;
pub mod optimize;
pub mod propagation;
pub mod quantum;

pub use error::{KrotovError, Result};
pub use functionals::{flattop, flattop_shape, functional_by_name, Functional, JTre, JTss, UpdateShape};
pub use objectives::{ensemble_objectives, gate_objectives, weighted_objectives, Objective};
pub use optimize::{IterationInfo, KrotovOptimizer, OptResult, PulseOptions, StopReason};
pub use propagation::{
    propagate, ControlField, Direction, ExpmPropagator, OdeReferencePropagator, Propagator, TimeGrid,
};
pub use quantum::{Generator, Operator, QuantumState, Space};
