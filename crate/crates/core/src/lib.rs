//! Pulse-level simulation toolkit for microwave-dressed Rydberg-ion
//! entangling gates.
//!
//! The crate is organized around four layers:
//!
//! - [`dynamics`]: labeled state spaces, normalized quantum states,
//!   time-dependent Hermitian Hamiltonians, and two independent
//!   Schrödinger integrators (an adaptive embedded Runge-Kutta pair and a
//!   fixed-step midpoint-exponential cross-check).
//! - [`pulses`]: every waveform the gate protocol uses — Gaussian STIRAP
//!   pulses, constant drives, DDP-optimized pump/Stokes pairs, TTL
//!   truncation windows, and the quartic-sine chirped detuning.
//! - [`models`]: the single-ion three- and four-level Hamiltonians, the
//!   adiabatic (bright/dark) basis transforms, the two-ion Rydberg
//!   exchange manifold, the full 16-dimensional two-qubit Hamiltonian,
//!   and the closed-form resonant propagator element.
//! - [`analysis`]: gate-level quantities (complete-population-return
//!   times, entangling phase, return fidelity, transfer infidelity), the
//!   drift-compensation law, and a deterministic parameter-sweep engine.
//!
//! All frequencies are stored internally as angular frequencies in
//! rad/ns; all times are in ns. [`units`] converts from the `f/2π` MHz
//! convention used in experiment configs.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod pulses;
pub mod units;

pub use error::CoreError;
pub use linalg::C64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
