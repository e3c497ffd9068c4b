//! Simulator for quantum computers modeled as interacting spin-1/2
//! particles driven by static and sinusoidal fields.
//!
//! The time-dependent Schrödinger equation is solved with a second-order
//! symmetrized product formula ([`propagator`]). [`pulses`] holds the
//! instruction tables of an ideal and an NMR-like two-qubit machine and the
//! Grover search programs built from them; [`oracle`] provides dense
//! reference propagators and the ideal gate algebra used to validate both.

pub mod config;
pub mod error;
pub mod experiments;
pub mod gate;
pub mod model;
pub mod oracle;
pub mod output;
pub mod propagator;
pub mod pulses;
pub mod selftest;
pub mod state;

pub use error::{Result, SimError};
pub use gate::GateMatrix;
pub use model::{ElementaryOperation, FieldTerm, PulseSequence, RfClock, SpinModel, StepPlan};
pub use propagator::{Integrator, Sampling, StepOverride, Trajectory};
pub use state::{Axis, Observables, StateVector};
