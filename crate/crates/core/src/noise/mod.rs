//! Added-noise dechaining, the standard quantum limit, SNR improvement,
//! and the qubit-based attenuation calibration.

mod io;
pub mod lm;
mod qubit;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    parse_noise_spectra, parse_qubit_dataset, read_noise_spectra, read_qubit_dataset, PsdUnits,
};
pub use qubit::{
    fit_qubit_dataset, synthesize_qubit_dataset, transmon_transmittance, QubitDataset,
    QubitFitOptions, QubitFitResult, QubitParams, QubitStdErr, DEFAULT_RABI_CONVENTION,
};

/// Noise power spectral densities with the pump on and off, in quanta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectra {
    pub freqs: Vec<f64>,
    pub psd_on: Vec<f64>,
    pub psd_off: Vec<f64>,
}

impl NoiseSpectra {
    pub fn new(freqs: Vec<f64>, psd_on: Vec<f64>, psd_off: Vec<f64>) -> Result<Self> {
        if psd_on.len() != freqs.len() || psd_off.len() != freqs.len() {
            return Err(Error::domain(format!(
                "spectra lengths differ: {} freqs, {} on, {} off",
                freqs.len(),
                psd_on.len(),
                psd_off.len()
            )));
        }
        Ok(Self {
            freqs,
            psd_on,
            psd_off,
        })
    }

    /// Indices where the pumped noise lies below the unpumped noise.
    pub fn inverted_points(&self) -> Vec<usize> {
        (0..self.freqs.len())
            .filter(|&i| self.psd_on[i] < self.psd_off[i])
            .collect()
    }
}

/// Gain of the chain after the amplifier and of the amplifier itself,
/// as power ratios on the spectra's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGains {
    pub g_sys: Vec<f64>,
    pub g_twpa: Vec<f64>,
}

fn check_gains(spectra: &NoiseSpectra, gains: &ChainGains) -> Result<()> {
    let n = spectra.freqs.len();
    if gains.g_sys.len() != n || gains.g_twpa.len() != n {
        return Err(Error::domain(format!(
            "gain vectors ({}, {}) do not match {n} spectrum points",
            gains.g_sys.len(),
            gains.g_twpa.len()
        )));
    }
    for i in 0..n {
        if !(gains.g_sys[i] > 0.0) || !(gains.g_twpa[i] > 0.0) {
            return Err(Error::domain(format!(
                "non-positive gain at {} Hz (g_sys {}, g_twpa {})",
                spectra.freqs[i], gains.g_sys[i], gains.g_twpa[i]
            )));
        }
    }
    Ok(())
}

/// `n_add = ((N_on − N_off)/G_sys + 1/2)/G_T − 1/2`.
pub fn added_noise_point(n_on: f64, n_off: f64, g_sys: f64, g_t: f64) -> Result<f64> {
    if !(g_sys > 0.0) || !(g_t > 0.0) {
        return Err(Error::domain("gains must be > 0"));
    }
    Ok(((n_on - n_off) / g_sys + 0.5) / g_t - 0.5)
}

/// Pumped noise implied by an amplifier adding `n_add` quanta; the inverse
/// of [`added_noise_point`].
pub fn psd_on_from_added_noise(n_add: f64, n_off: f64, g_sys: f64, g_t: f64) -> f64 {
    g_sys * (g_t * (n_add + 0.5) - 0.5) + n_off
}

pub fn added_noise(spectra: &NoiseSpectra, gains: &ChainGains) -> Result<Vec<f64>> {
    check_gains(spectra, gains)?;
    (0..spectra.freqs.len())
        .map(|i| {
            added_noise_point(
                spectra.psd_on[i],
                spectra.psd_off[i],
                gains.g_sys[i],
                gains.g_twpa[i],
            )
        })
        .collect()
}

/// `(G − 1)/(2G)`.
pub fn standard_quantum_limit(g: f64) -> Result<f64> {
    if !(g >= 1.0) {
        return Err(Error::domain(format!("gain must be >= 1, got {g}")));
    }
    if g.is_infinite() {
        return Ok(0.5);
    }
    Ok((g - 1.0) / (2.0 * g))
}

/// `10 log G_T − 10 log(N_on/N_off)`, dB.
pub fn snri(spectra: &NoiseSpectra, gains: &ChainGains) -> Result<Vec<f64>> {
    check_gains(spectra, gains)?;
    (0..spectra.freqs.len())
        .map(|i| {
            let off = spectra.psd_off[i];
            if !(off > 0.0) {
                return Err(Error::domain(format!(
                    "N_off must be > 0 at {} Hz",
                    spectra.freqs[i]
                )));
            }
            Ok(10.0 * gains.g_twpa[i].log10() - 10.0 * (spectra.psd_on[i] / off).log10())
        })
        .collect()
}

/// Affine attenuation model in (GHz, dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationModel {
    pub slope_db_per_ghz: f64,
    pub intercept_db: f64,
    pub rms_residual_db: f64,
}

impl AttenuationModel {
    pub fn at(&self, freq_hz: f64) -> f64 {
        self.intercept_db + self.slope_db_per_ghz * freq_hz * 1e-9
    }
}

/// Ordinary least squares line through `(freq_hz, attenuation_db)` points.
pub fn fit_attenuation_linear(points: &[(f64, f64)]) -> Result<AttenuationModel> {
    let n = points.len();
    let xs: Vec<f64> = points.iter().map(|p| p.0 * 1e-9).collect();
    let mean_x = xs.iter().sum::<f64>() / n.max(1) as f64;
    if n < 2 || xs.iter().all(|x| (x - mean_x).abs() == 0.0) {
        return Err(Error::domain("need at least two distinct frequencies"));
    }
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (p.1 - intercept - slope * x).powi(2))
        .sum();
    Ok(AttenuationModel {
        slope_db_per_ghz: slope,
        intercept_db: intercept,
        rms_residual_db: (ss / n as f64).sqrt(),
    })
}
