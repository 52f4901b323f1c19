//! Frequency sweeps of whole lines and the disorder-broadened stopband.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::abcd::SMatrix;
use super::cell::cascade;
use crate::circuit::DeviceLine;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub freq_hz: f64,
    /// `None` where the frequency hits an element pole.
    pub s: Option<SMatrix>,
}

/// Evenly spaced grid from `start` to `stop` inclusive (within half a step).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::domain("empty frequency grid"));
    }
    if let Some(i) = freqs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::domain(format!(
            "frequency grid not increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

pub fn transmission_spectrum(
    line: &DeviceLine,
    freqs: &[f64],
    z_ref: f64,
) -> Result<Vec<SpectrumPoint>> {
    check_grid(freqs)?;
    if !(z_ref > 0.0) {
        return Err(Error::Conversion(format!("z_ref must be > 0, got {z_ref}")));
    }
    Ok(freqs
        .par_iter()
        .map(|&f| SpectrumPoint {
            freq_hz: f,
            s: cascade(line, 2.0 * PI * f).and_then(|m| m.to_s(z_ref)).ok(),
        })
        .collect())
}

/// Ensemble-mean |s21|² per frequency; gaps in any member make the point a gap.
pub fn ensemble_transmission(
    lines: &[DeviceLine],
    freqs: &[f64],
    z_ref: f64,
) -> Result<Vec<Option<f64>>> {
    check_grid(freqs)?;
    if lines.is_empty() {
        return Err(Error::domain("empty ensemble"));
    }
    let per_line: Vec<Vec<SpectrumPoint>> = lines
        .par_iter()
        .map(|l| transmission_spectrum(l, freqs, z_ref))
        .collect::<Result<_>>()?;
    Ok((0..freqs.len())
        .map(|i| {
            let mut acc = 0.0;
            for spec in &per_line {
                acc += spec[i].s?.s21.norm_sqr();
            }
            Some(acc / lines.len() as f64)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stopband {
    pub width_hz: f64,
    pub lower_hz: f64,
    pub upper_hz: f64,
    pub center_hz: f64,
    pub min_transmission_db: f64,
    pub threshold_level_db: f64,
}

/// Width of the contiguous region around the transmission minimum where the
/// ensemble-mean power transmission is below `median + threshold_db`.
///
/// Edges are located by linear interpolation in dB between grid points.
/// Returns `Ok(None)` when no point falls below the threshold.
pub fn stopband_from_transmission(
    freqs: &[f64],
    transmission: &[Option<f64>],
    threshold_db: f64,
) -> Result<Option<Stopband>> {
    if !(threshold_db < 0.0) {
        return Err(Error::domain("threshold_db must be negative"));
    }
    if freqs.len() != transmission.len() {
        return Err(Error::domain("grid and transmission lengths differ"));
    }
    let db: Vec<Option<f64>> = transmission
        .iter()
        .map(|t| t.map(|p| 10.0 * p.max(1e-300).log10()))
        .collect();
    let mut sorted: Vec<f64> = db.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Ok(None);
    }
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let level = median + threshold_db;
    // gaps sit on poles, i.e. inside the stopband
    let val = |i: usize| db[i].unwrap_or(f64::NEG_INFINITY);
    let (imin, vmin) = (0..freqs.len())
        .map(|i| (i, val(i)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    if vmin >= level {
        return Ok(None);
    }
    let mut lo = imin;
    while lo > 0 && val(lo - 1) < level {
        lo -= 1;
    }
    let mut hi = imin;
    while hi + 1 < freqs.len() && val(hi + 1) < level {
        hi += 1;
    }
    let edge = |inside: usize, outside: usize| {
        let (vi, vo) = (val(inside), val(outside));
        if !vi.is_finite() {
            return freqs[inside];
        }
        let t = (level - vi) / (vo - vi);
        freqs[inside] + t * (freqs[outside] - freqs[inside])
    };
    let lower = if lo > 0 { edge(lo, lo - 1) } else { freqs[0] };
    let upper = if hi + 1 < freqs.len() {
        edge(hi, hi + 1)
    } else {
        freqs[freqs.len() - 1]
    };
    Ok(Some(Stopband {
        width_hz: upper - lower,
        lower_hz: lower,
        upper_hz: upper,
        center_hz: freqs[imin],
        min_transmission_db: vmin,
        threshold_level_db: level,
    }))
}

pub fn stopband_width(
    lines: &[DeviceLine],
    freqs: &[f64],
    threshold_db: f64,
    z_ref: f64,
) -> Result<Option<Stopband>> {
    let t = ensemble_transmission(lines, freqs, z_ref)?;
    stopband_from_transmission(freqs, &t, threshold_db)
}
