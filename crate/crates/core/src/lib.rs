//! Simulation and characterization toolkit for a millimeter-scale antagonistic
//! (bimorph) shape-memory-alloy actuator and the surface-tension-supported
//! swimmer it drives.
//!
//! The crate is organized bottom-up:
//!
//! * [`drive`]: two-channel phase-shifted PWM excitation and electrical power.
//! * [`sma`]: lumped electro-thermo-mechanical model of one SMA wire group.
//! * [`mech`]: quasi-static mechanics and geometry of the bimorph.
//! * [`metrology`]: zero-phase FIR filtering, MADO/AMADO metrics, sweeps and
//!   calibration.
//! * [`swimmer`]: quasi-steady planar locomotion model.
//! * [`config`] and [`csvout`]: scenario files and CSV artifacts for the CLI.

pub mod config;
pub mod csvout;
pub mod drive;
pub mod error;
pub mod integrate;
pub mod mech;
pub mod metrology;
pub mod scenario;
pub mod sma;
pub mod swimmer;

pub use error::{Error, Result};
