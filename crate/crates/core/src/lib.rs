//! Phonon-mediated spin-spin gates in charged nanomechanical resonator arrays.
//!
//! The crate goes from an electric circuit layout to collective phonon
//! modes, Ising couplings, spin-echo filter functions, motional decoherence
//! integrals, gate fidelities and fidelity-optimal resonator frequencies.

pub mod constants;
pub mod device;
pub mod error;
pub mod layout;
pub mod modes;
pub mod pulses;
pub mod quadrature;
pub mod decoherence;
pub mod ising;
pub mod fidelity;
pub mod oracle;

pub use error::{Error, Result};
