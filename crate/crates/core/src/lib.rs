//! Energy-current simulation of Bell-pair quantum batteries.
//!
//! A battery cell is two qubits `B1, B2`; each cell discharges into one hub
//! qubit `A` through an XY exchange. The crate builds the Hamiltonians, the
//! energy-current operator `(1/i)[H0_hub, H_int]`, exact and time-dependent
//! propagation, the trapping / switch-gate protocols and the adiabatic
//! stable-discharge model.
//!
//! Units: `hbar = 1`; energies share the unit of `omega` and `J`.

pub mod error;
pub mod qalg;
pub mod model;
pub mod series;
pub mod dynamics;
pub mod protocols;
pub mod adiabatic;
pub mod acceptance;
pub mod cli;

pub use error::{QbatError, Result};
