//! Three-mode coupled-mode integration along the line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::modes::{Depletion, MixingSystem, Mode, PUMP};
use super::{dbm_to_watts, pump_current_amplitude, LineParams, PumpSettings};
use crate::circuit::CONSTANTS;
use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};

type C64 = Complex64;

pub const SIGNAL: [i32; 3] = [0, 1, 0];
pub const IDLER: [i32; 3] = [2, -1, 0];

/// Mode amplitudes at position `x` (cells); `|a|²` is photon flux in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingState {
    pub a_p: C64,
    pub a_s: C64,
    pub a_i: C64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmeOptions {
    pub depletion: Depletion,
    /// Signal power at the device input, dBm.
    pub signal_power_dbm: f64,
    pub tol: Tolerance,
}

impl CmeOptions {
    /// Undepleted integration with the signal 60 dB below the pump.
    pub fn small_signal(pump: &PumpSettings) -> Self {
        Self {
            depletion: Depletion::Undepleted,
            signal_power_dbm: pump.input_power - 60.0,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmeOutput {
    pub input: MixingState,
    pub output: MixingState,
    /// Signal power gain.
    pub gain: f64,
    /// Idler output power over signal input power, photon-flux based.
    pub idler_gain: f64,
    /// Phase of the output signal envelope relative to the input, rad.
    pub phase: f64,
}

impl CmeOutput {
    pub fn gain_db(&self) -> f64 {
        10.0 * self.gain.log10()
    }
}

/// Integrates the pump/signal/idler system over `line.n_cells` cells.
///
/// Wavenumbers are the real parts of the Bloch wavenumbers at each mode's
/// frequency. The signal starts at `opts.signal_power_dbm`, the idler empty.
pub fn integrate_cme(
    line: &LineParams,
    pump: &PumpSettings,
    omega_s: f64,
    opts: &CmeOptions,
) -> Result<CmeOutput> {
    let omega_p = pump.omega();
    let omega_i = 2.0 * omega_p - omega_s;
    if !(omega_s > 0.0) || !(omega_i > 0.0) {
        return Err(Error::domain(format!(
            "signal {omega_s:.4e} rad/s leaves no positive idler for pump {omega_p:.4e} rad/s"
        )));
    }
    let k_p = line.dispersion(omega_p)?.k_per_cell.re;
    let k_s = line.dispersion(omega_s)?.k_per_cell.re;
    let k_i = line.dispersion(omega_i)?.k_per_cell.re;
    let i_p = pump_current_amplitude(pump, line.z_line())?;
    let r2 = (i_p / line.cell.junctions.critical_current).powi(2);

    let p_pump = dbm_to_watts(pump.input_power);
    let p_sig = dbm_to_watts(opts.signal_power_dbm);
    let hbar = CONSTANTS.reduced_planck;
    let n = line.n_cells as f64;

    if p_pump == 0.0 {
        // no pump: linear propagation, unit gain
        let a_s = C64::new((p_sig / (hbar * omega_s)).sqrt(), 0.0);
        let state = |x| MixingState {
            a_p: C64::new(0.0, 0.0),
            a_s,
            a_i: C64::new(0.0, 0.0),
            x,
        };
        return Ok(CmeOutput {
            input: state(0.0),
            output: state(n),
            gain: 1.0,
            idler_gain: 0.0,
            phase: 0.0,
        });
    }

    let modes = vec![
        Mode {
            combo: PUMP,
            omega: omega_p,
            k: k_p,
        },
        Mode {
            combo: SIGNAL,
            omega: omega_s,
            k: k_s,
        },
        Mode {
            combo: IDLER,
            omega: omega_i,
            k: k_i,
        },
    ];
    let sys = MixingSystem::new(modes, r2)?;
    let flux_p = p_pump / (hbar * omega_p);
    let flux_s = p_sig / (hbar * omega_s);
    let y0 = [
        C64::new(1.0, 0.0),
        C64::new((flux_s / flux_p).sqrt(), 0.0),
        C64::new(0.0, 0.0),
    ];
    let mut y = y0;
    sys.integrate(&mut y, n, opts.depletion, opts.tol)?;

    let scale = flux_p.sqrt();
    let to_state = |y: &[C64; 3], x| MixingState {
        a_p: y[0] * scale,
        a_s: y[1] * scale,
        a_i: y[2] * scale,
        x,
    };
    let (gain, idler_gain, phase) = if y0[1].norm() > 0.0 {
        (
            y[1].norm_sqr() / y0[1].norm_sqr(),
            y[2].norm_sqr() / y0[1].norm_sqr(),
            (y[1] / y0[1]).arg(),
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(CmeOutput {
        input: to_state(&y0, 0.0),
        output: to_state(&y, n),
        gain,
        idler_gain,
        phase,
    })
}

/// Outcome of [`integrate_three_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeModeResult {
    pub signal_gain: f64,
    pub idler_gain: f64,
    /// max over the trajectory of | |a_s|² − |a_i|² − 1 |.
    pub manley_rowe_drift: f64,
}

/// Undepleted-pump signal/idler equations in their reduced form,
/// `da_s/dx = iκ a_i* e^{iΔk x}`, `da_i/dx = iκ a_s* e^{iΔk x}`,
/// from `a_s = 1`, `a_i = 0`.
pub fn integrate_three_mode(
    kappa: f64,
    delta_k: f64,
    n_cells: f64,
    tol: Tolerance,
) -> Result<ThreeModeResult> {
    if !(n_cells >= 1.0) {
        return Err(Error::domain("n_cells must be >= 1"));
    }
    let rhs = |x: f64, s: &[f64], ds: &mut [f64]| {
        let a_s = C64::new(s[0], s[1]);
        let a_i = C64::new(s[2], s[3]);
        let e = C64::from_polar(1.0, delta_k * x);
        let j = C64::new(0.0, kappa);
        let d_s = j * a_i.conj() * e;
        let d_i = j * a_s.conj() * e;
        ds[0] = d_s.re;
        ds[1] = d_s.im;
        ds[2] = d_i.re;
        ds[3] = d_i.im;
    };
    // Integrate in segments to sample the Manley–Rowe invariant on the way.
    let segments = 16;
    let mut state = [1.0, 0.0, 0.0, 0.0];
    let mut drift: f64 = 0.0;
    for seg in 0..segments {
        let x0 = n_cells * seg as f64 / segments as f64;
        let x1 = n_cells * (seg + 1) as f64 / segments as f64;
        ode::integrate(|x, s, ds| rhs(x + x0, s, ds), 0.0, x1 - x0, &mut state, tol)?;
        let mr =
            state[0] * state[0] + state[1] * state[1] - state[2] * state[2] - state[3] * state[3];
        drift = drift.max((mr - 1.0).abs());
    }
    Ok(ThreeModeResult {
        signal_gain: state[0] * state[0] + state[1] * state[1],
        idler_gain: state[2] * state[2] + state[3] * state[3],
        manley_rowe_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fwm::analytic_gain;
    use crate::reference::{reference_cell, reference_pump, REFERENCE_CELL_COUNT};
    use std::f64::consts::PI;

    fn line() -> LineParams {
        LineParams::new(reference_cell(), REFERENCE_CELL_COUNT)
    }

    #[test]
    fn reduced_equations_match_closed_form() {
        for &(kappa, dk) in &[(0.01, 0.0), (0.01, 0.02), (0.01, 0.05), (0.004, 0.001)] {
            let r = integrate_three_mode(kappa, dk, 256.0, Tolerance::default()).unwrap();
            let (gs, gi) = analytic_gain(kappa, dk, 256.0).unwrap();
            assert!((r.signal_gain - gs).abs() < 1e-6 * gs, "{kappa} {dk}");
            assert!((r.idler_gain - gi).abs() < 1e-6 * gs);
            assert!(r.manley_rowe_drift < 1e-6);
        }
    }

    #[test]
    fn empty_signal_and_idler_stay_empty() {
        let pump = reference_pump();
        let opts = CmeOptions {
            signal_power_dbm: f64::NEG_INFINITY,
            ..CmeOptions::small_signal(&pump)
        };
        let out = integrate_cme(&line(), &pump, 2.0 * PI * 5e9, &opts).unwrap();
        assert_eq!(out.output.a_s, C64::new(0.0, 0.0));
        assert_eq!(out.output.a_i, C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_pump_is_transparent() {
        let pump = PumpSettings {
            input_power: f64::NEG_INFINITY,
            ..reference_pump()
        };
        let opts = CmeOptions {
            signal_power_dbm: -120.0,
            ..CmeOptions::small_signal(&reference_pump())
        };
        let out = integrate_cme(&line(), &pump, 2.0 * PI * 5e9, &opts).unwrap();
        assert_eq!(out.gain, 1.0);
    }

    #[test]
    fn idler_must_be_positive() {
        let pump = reference_pump();
        let r = integrate_cme(
            &line(),
            &pump,
            2.0 * pump.omega() + 1.0,
            &CmeOptions::small_signal(&pump),
        );
        assert!(r.is_err());
    }

    #[test]
    fn pump_photon_flux_normalization() {
        let pump = reference_pump();
        let out = integrate_cme(
            &line(),
            &pump,
            2.0 * PI * 5e9,
            &CmeOptions::small_signal(&pump),
        )
        .unwrap();
        let flux = dbm_to_watts(pump.input_power) / (CONSTANTS.reduced_planck * pump.omega());
        assert!((out.input.a_p.norm_sqr() / flux - 1.0).abs() < 1e-12);
        // undepleted: pump only rotates
        assert!((out.output.a_p.norm_sqr() / flux - 1.0).abs() < 1e-8);
    }
}
