//! Desk-scale simulator of a modular trapped-ion quantum computer whose
//! modules are interconnected by neutral-atom messenger qubits shuttled in
//! optical tweezers.
//!
//! The crate covers the full stack of that architecture study:
//!
//! - [`species`] — atomic data for candidate messenger atoms and qubit ions,
//!   with charge-exchange energetics classification;
//! - [`tweezer`] — Gaussian-beam dipole trap quantities and minimum-time
//!   coherent transport planning with AOD waveform emission;
//! - [`gates`] — budgets for the collisional and Rydberg atom-ion entangling
//!   gates;
//! - [`quantum`] — an exact state-vector / density-matrix engine that
//!   verifies the messenger entanglement-swapping protocol and propagates
//!   gate error into delivered-pair fidelity;
//! - [`topology`] — chip layout packing inside the tweezer lens field of
//!   view and distance queries;
//! - [`sim`] — deterministic discrete-event scheduling of entanglement
//!   requests with throughput/latency/fidelity metrics.
//!
//! All physical quantities are SI unless a field says otherwise; the one
//! deliberate exception is spectroscopic energies in cm⁻¹ inside the species
//! tables.

pub mod constants;
pub mod error;
pub mod gates;
pub mod quantum;
pub mod sim;
pub mod species;
pub mod topology;
pub mod tweezer;

pub use error::{Error, Result};
