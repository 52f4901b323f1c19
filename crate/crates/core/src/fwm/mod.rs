//! Four-wave-mixing gain of the pumped line: phase mismatch, closed-form
//! undepleted gain, and coupled-mode integration.

mod analytic;
mod cme;
pub mod modes;
mod profile;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{line_impedance, UnitCellParams};
use crate::error::{Error, Result};
use crate::network::{bloch_wavenumber, DispersionPoint};

pub use analytic::{analytic_gain, analytic_signal_gain_cosh_form};
pub use cme::{
    integrate_cme, integrate_three_mode, CmeOptions, CmeOutput, MixingState, ThreeModeResult,
    IDLER, SIGNAL,
};
pub use profile::{
    gain_profile, phase_mismatch, resonator_stopband, Band, GainCurve, GainPoint, PhaseMismatch,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSettings {
    /// Hz.
    pub frequency: f64,
    /// dBm at the device input.
    pub input_power: f64,
}

impl PumpSettings {
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }
}

/// A uniform line: the cell repeated `n_cells` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub cell: UnitCellParams,
    pub n_cells: usize,
}

impl LineParams {
    pub fn new(cell: UnitCellParams, n_cells: usize) -> Self {
        Self { cell, n_cells }
    }

    pub fn z_line(&self) -> f64 {
        line_impedance(&self.cell)
    }

    pub fn dispersion(&self, omega: f64) -> Result<DispersionPoint> {
        bloch_wavenumber(&self.cell, omega)
    }
}

/// Wavenumbers with Im(k) above this are treated as inside the stopband.
pub const STOPBAND_IM_K: f64 = 1e-6;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Peak current of a wave carrying `power_w` on a line of impedance `z_line`.
pub fn current_amplitude(power_w: f64, z_line: f64) -> f64 {
    (2.0 * power_w / z_line).sqrt()
}

/// `I_p = √(2P/Z)` for the pump power in dBm.
pub fn pump_current_amplitude(pump: &PumpSettings, z_line: f64) -> Result<f64> {
    if !(z_line > 0.0) {
        return Err(Error::domain(format!("z_line must be > 0, got {z_line}")));
    }
    Ok(current_amplitude(dbm_to_watts(pump.input_power), z_line))
}
