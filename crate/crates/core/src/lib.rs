//! Simulation and analysis toolkit for a resonantly phase-matched
//! four-wave-mixing Josephson traveling-wave parametric amplifier.

pub mod circuit;
pub mod error;
pub mod fwm;
pub mod network;
pub mod noise;
pub mod ode;
pub mod power;
pub mod reference;
pub mod scenario;

pub use error::{Error, Result};
