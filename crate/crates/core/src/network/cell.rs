//! Unit-cell chain matrices, line cascades and the Bloch dispersion relation.
//!
//! The cell is a symmetric T-section: half the junction chain, the shunt
//! branch to ground, half the junction chain. The shunt branch is the ground
//! capacitance in parallel with the coupling capacitor feeding a parallel
//! L–C resonator to ground.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::abcd::{TwoPortABCD, C64, ONE};
use crate::circuit::{DeviceLine, UnitCellParams};
use crate::error::{Error, Result};

/// Relative distance to a pole below which an element is treated as singular.
const POLE_EPS: f64 = 1e-12;

/// Series impedance of the whole junction chain in one cell.
pub fn series_impedance(cell: &UnitCellParams, omega: f64) -> Result<C64> {
    let lj = cell.junction_inductance();
    let cj = cell.junctions.self_capacitance;
    let den = 1.0 - omega * omega * lj * cj;
    if den.abs() < POLE_EPS {
        return Err(Error::Singularity {
            element: "junction plasma resonance",
            pole_hz: cell.plasma_frequency(),
        });
    }
    let n = cell.junctions.count_per_cell as f64;
    Ok(C64::new(cell.series_resistance, n * omega * lj / den))
}

/// Shunt admittance: jωC_g plus the coupled resonator branch.
pub fn shunt_admittance(cell: &UnitCellParams, omega: f64) -> Result<C64> {
    let r = &cell.resonator;
    let y_ground = C64::new(0.0, omega * cell.c_ground);
    if r.c_coupling == 0.0 {
        return Ok(y_ground);
    }
    let y_cc = C64::new(0.0, omega * r.c_coupling);
    if r.l_res == 0.0 {
        // resonator shorted: the coupling capacitor goes straight to ground
        return Ok(y_ground + y_cc);
    }
    // Y_b = Y_cc·Y_lc / (Y_lc + Y_cc), Y_lc = jωC_r + 1/(jωL_r). Written this
    // way the bare LC resonance is a regular point (branch open) and the only
    // pole is the series resonance of C_c with the tank.
    let x = omega * omega * r.l_res * (r.c_res + r.c_coupling) - 1.0;
    if x.abs() < POLE_EPS {
        return Err(Error::Singularity {
            element: "resonator branch",
            pole_hz: r.pole_frequency().unwrap_or(omega / (2.0 * PI)),
        });
    }
    let y_lc = C64::new(0.0, omega * r.c_res - 1.0 / (omega * r.l_res));
    Ok(y_ground + y_cc * y_lc / (y_lc + y_cc))
}

pub fn cell_abcd(cell: &UnitCellParams, omega: f64) -> Result<TwoPortABCD> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!("omega must be > 0, got {omega}")));
    }
    let zh = series_impedance(cell, omega)? / 2.0;
    let y = shunt_admittance(cell, omega)?;
    let a = ONE + zh * y;
    Ok(TwoPortABCD {
        a,
        b: zh * (2.0 + zh * y),
        c: y,
        d: a,
    })
}

/// Ordered product of the cell matrices, input side first.
pub fn cascade(line: &DeviceLine, omega: f64) -> Result<TwoPortABCD> {
    if line.cells.is_empty() {
        return Err(Error::domain("cannot cascade an empty line"));
    }
    // Uniform lines are common; exponentiate instead of multiplying 256 times.
    let first = &line.cells[0];
    if line.cells.iter().all(|c| c == first) {
        let m = cell_abcd(first, omega).map_err(|e| in_cell(0, e))?;
        return Ok(m.pow(line.cells.len() as u32));
    }
    line.cells
        .iter()
        .enumerate()
        .try_fold(TwoPortABCD::IDENTITY, |acc, (i, cell)| {
            Ok(acc * cell_abcd(cell, omega).map_err(|e| in_cell(i, e))?)
        })
}

fn in_cell(index: usize, e: Error) -> Error {
    Error::InCell {
        index,
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub omega: f64,
    /// Radians per cell; Re ∈ [0, π], Im ≥ 0 (attenuation per cell).
    pub k_per_cell: C64,
}

impl DispersionPoint {
    pub fn is_evanescent(&self, tol: f64) -> bool {
        self.k_per_cell.im > tol
    }
}

/// Solves cos k = (A + D)/2 for the single-cell matrix.
///
/// Uses sin²(k/2) = −Z·Y/4, which stays accurate as k → 0.
pub fn bloch_wavenumber(cell: &UnitCellParams, omega: f64) -> Result<DispersionPoint> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!("omega must be > 0, got {omega}")));
    }
    let z = series_impedance(cell, omega)?;
    let y = shunt_admittance(cell, omega)?;
    let w = -(z * y) / 4.0;
    let mut k = 2.0 * w.sqrt().asin();
    if k.re < 0.0 {
        k = -k;
    }
    if k.im < 0.0 {
        k = k.conj();
    }
    // clamp round-off at the zone boundaries
    if k.re > PI {
        k.re = PI;
    }
    Ok(DispersionPoint {
        omega,
        k_per_cell: k,
    })
}

/// Image (Bloch) impedance √(B/C) of the symmetric cell, with Re ≥ 0.
pub fn bloch_impedance(cell: &UnitCellParams, omega: f64) -> Result<C64> {
    let m = cell_abcd(cell, omega)?;
    let z = (m.b / m.c).sqrt();
    Ok(if z.re < 0.0 { -z } else { z })
}
