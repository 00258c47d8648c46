//! Simulation of a controlled-SWAP (Fredkin) gate on three atoms trapped in
//! three coupled cavities.
//!
//! Each atom has two ground levels `|0⟩, |1⟩` and an excited level `|e⟩`.
//! The outer atoms are driven on `|1⟩ ↔ |e⟩`, every atom couples `|0⟩ ↔ |e⟩`
//! to its own cavity, and neighbouring cavities exchange photons. With the
//! middle atom in `|1⟩` the drives swap `|011⟩` and `|110⟩`; otherwise the
//! register is left alone.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod model;
pub mod propagate;
pub mod pulses;
pub mod sparse;

pub use channel::{average_gate_fidelity, fredkin_ideal, reconstruct_channel, GateConfig, QuantumChannel, Scheme};
pub use error::{Error, Result};
pub use hilbert::{build_space, BasisLabel, DensityMatrix, HilbertSpace, Level, QubitMatrix, SparseOperator, StateVector};
pub use model::PhysParams;
pub use propagate::{evolve_density, evolve_state, population_series, DecayParams, EvolveOptions, Method, TimeDependentHamiltonian, Trajectory};
pub use pulses::{DriveSchedule, PulseShape};
