//! Simulation of pre- and postselected photons in nested polarizing
//! interferometers: forward and backward evolving states, weak values, and
//! the weak trace a photon leaves on the mirrors it bounces off.

pub mod circuitfile;
pub mod engine;
pub mod error;
pub mod hilbert;
pub mod optics;
pub mod scenarios;
pub mod trace;
pub mod tsvf;

pub use error::{Error, Result};
