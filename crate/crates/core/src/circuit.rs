//! Device parameters of the amplifier line and the conversions between
//! fabrication observables and circuit values.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 exact / recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub flux_quantum: f64,
    pub reduced_planck: f64,
    pub electron_charge: f64,
    pub boltzmann: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    flux_quantum: 2.067_833_848e-15,
    reduced_planck: 1.054_571_817e-34,
    electron_charge: 1.602_176_634e-19,
    boltzmann: 1.380_649e-23,
};

/// Aluminum thin-film superconducting gap, in eV.
pub const ALUMINUM_GAP_EV: f64 = 180e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionParams {
    /// Single-junction critical current, A.
    pub critical_current: f64,
    /// Single-junction capacitance, F.
    pub self_capacitance: f64,
    pub count_per_cell: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorParams {
    pub c_res: f64,
    pub l_res: f64,
    pub c_coupling: f64,
}

impl ResonatorParams {
    /// Bare LC frequency 1/(2π√(l_res·c_res)), `None` when either element vanishes.
    pub fn bare_frequency(&self) -> Option<f64> {
        (self.l_res > 0.0 && self.c_res > 0.0)
            .then(|| 1.0 / (2.0 * PI * (self.l_res * self.c_res).sqrt()))
    }

    /// Frequency at which the coupled branch shorts the line to ground,
    /// 1/(2π√(l_res·(c_res + c_coupling))). This is the phase-matching pole.
    pub fn pole_frequency(&self) -> Option<f64> {
        let c = self.c_res + self.c_coupling;
        (self.l_res > 0.0 && c > 0.0 && self.c_coupling > 0.0)
            .then(|| 1.0 / (2.0 * PI * (self.l_res * c).sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitCellParams {
    pub junctions: JunctionParams,
    pub resonator: ResonatorParams,
    pub c_ground: f64,
    /// Optional lumped series resistance per cell, Ω. Zero for the lossless model.
    #[serde(default)]
    pub series_resistance: f64,
}

impl UnitCellParams {
    pub fn validate(&self) -> Result<()> {
        let j = &self.junctions;
        let r = &self.resonator;
        if !(j.critical_current > 0.0) {
            return Err(Error::domain("critical_current must be > 0"));
        }
        if !(j.self_capacitance >= 0.0) {
            return Err(Error::domain("self_capacitance must be >= 0"));
        }
        if j.count_per_cell == 0 {
            return Err(Error::domain("count_per_cell must be >= 1"));
        }
        if !(r.c_res >= 0.0 && r.l_res >= 0.0 && r.c_coupling >= 0.0) {
            return Err(Error::domain("resonator elements must be >= 0"));
        }
        if !(self.c_ground > 0.0) {
            return Err(Error::domain("c_ground must be > 0"));
        }
        if !(self.series_resistance >= 0.0) {
            return Err(Error::domain("series_resistance must be >= 0"));
        }
        Ok(())
    }

    /// Single-junction Josephson inductance.
    pub fn junction_inductance(&self) -> f64 {
        CONSTANTS.flux_quantum / (2.0 * PI * self.junctions.critical_current)
    }

    /// Series inductance of the whole cell at low frequency.
    pub fn cell_inductance(&self) -> f64 {
        self.junctions.count_per_cell as f64 * self.junction_inductance()
    }

    /// Junction plasma frequency in Hz; infinite for vanishing self-capacitance.
    pub fn plasma_frequency(&self) -> f64 {
        let cj = self.junctions.self_capacitance;
        if cj > 0.0 {
            1.0 / (2.0 * PI * (self.junction_inductance() * cj).sqrt())
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceLine {
    pub cells: Vec<UnitCellParams>,
}

impl DeviceLine {
    pub fn uniform(cell: UnitCellParams, n_cells: usize) -> Self {
        Self {
            cells: vec![cell; n_cells],
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderTarget {
    ResonatorCRes,
    JunctionCriticalCurrent,
    CGround,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub sigma_rel: f64,
    pub target: DisorderTarget,
    pub seed: u64,
}

/// Upper bound on the relative disorder accepted anywhere in the toolkit.
pub const MAX_SIGMA_REL: f64 = 0.2;

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_rel >= 0.0 && self.sigma_rel < MAX_SIGMA_REL) {
            return Err(Error::domain(format!(
                "sigma_rel = {} outside [0, {MAX_SIGMA_REL})",
                self.sigma_rel
            )));
        }
        Ok(())
    }
}

/// L_J = Φ0 / (2π I_c).
pub fn josephson_inductance(critical_current: f64) -> Result<f64> {
    if !(critical_current > 0.0) {
        return Err(Error::domain(format!(
            "critical current must be positive, got {critical_current}"
        )));
    }
    Ok(CONSTANTS.flux_quantum / (2.0 * PI * critical_current))
}

/// Zero-temperature Ambegaokar–Baratoff relation I_c = πΔ / (2 e R_n), with
/// the gap given in eV.
pub fn ic_from_normal_resistance(r_n: f64, gap_energy_ev: f64) -> Result<f64> {
    if !(r_n > 0.0) || !(gap_energy_ev > 0.0) {
        return Err(Error::domain(format!(
            "normal resistance and gap must be positive, got R_n = {r_n}, Δ = {gap_energy_ev} eV"
        )));
    }
    // Δ[J] / e = Δ[eV], so the charge cancels.
    Ok(PI * gap_energy_ev / (2.0 * r_n))
}

/// Characteristic impedance √(L_cell / C_g) in the low-frequency limit with the
/// resonator detached.
pub fn line_impedance(cell: &UnitCellParams) -> f64 {
    (cell.cell_inductance() / cell.c_ground).sqrt()
}

const MAX_REJECTIONS: usize = 100;

/// Draws a line of `n_cells` cells whose `disorder.target` parameter is
/// `nominal·(1 + σ·z)` with independent standard normal `z` per cell.
pub fn sample_disordered_line(
    nominal: &UnitCellParams,
    n_cells: usize,
    disorder: &DisorderSpec,
) -> Result<DeviceLine> {
    if n_cells == 0 {
        return Err(Error::domain("n_cells must be >= 1"));
    }
    disorder.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(disorder.seed);
    let mut cells = Vec::with_capacity(n_cells);
    for index in 0..n_cells {
        let mut cell = *nominal;
        let slot = match disorder.target {
            DisorderTarget::ResonatorCRes => &mut cell.resonator.c_res,
            DisorderTarget::JunctionCriticalCurrent => &mut cell.junctions.critical_current,
            DisorderTarget::CGround => &mut cell.c_ground,
        };
        let base = *slot;
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let z: f64 = StandardNormal.sample(&mut rng);
            let value = base * (1.0 + disorder.sigma_rel * z);
            if value > 0.0 || base == 0.0 {
                accepted = Some(value);
                break;
            }
        }
        *slot = accepted.ok_or_else(|| {
            Error::domain(format!(
                "cell {index}: no positive sample after {MAX_REJECTIONS} draws"
            ))
        })?;
        cells.push(cell);
    }
    Ok(DeviceLine { cells })
}

/// Derives a child seed from a parent seed and a label, so that independent
/// consumers of one scenario seed never share a random stream.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}
