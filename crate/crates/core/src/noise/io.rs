//! CSV ingestion for noise spectra and qubit spectroscopy data.
//!
//! Lines starting with `!` are comments; the first non-comment line is the
//! header and must match the expected columns.

use std::path::Path;

use num_complex::Complex64;

use super::qubit::QubitDataset;
use super::NoiseSpectra;
use crate::circuit::CONSTANTS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdUnits {
    Quanta,
    WattsPerHz,
}

/// Numeric rows after the header, with their 1-based line numbers.
fn rows(text: &str, header: &[&str]) -> Result<(Vec<(usize, Vec<f64>)>, Vec<String>)> {
    let mut comments = Vec::new();
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('!') {
            comments.push(c.trim().to_string());
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            if fields != header {
                return Err(Error::parse(
                    line_no,
                    format!("expected header '{}', found '{line}'", header.join(",")),
                ));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(Error::parse(
                line_no,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let vals = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("not a number: '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push((line_no, vals));
    }
    if !seen_header {
        return Err(Error::parse(0, "missing header line"));
    }
    Ok((out, comments))
}

/// Parses `freq_hz,psd_on,psd_off`. A `! units=quanta` or `! units=w_per_hz`
/// comment selects the units (quanta if absent); W/Hz are converted with
/// `ħω` at each frequency.
pub fn parse_noise_spectra(text: &str) -> Result<NoiseSpectra> {
    let (rows, comments) = rows(text, &["freq_hz", "psd_on", "psd_off"])?;
    let mut units = PsdUnits::Quanta;
    for c in &comments {
        if let Some(u) = c.strip_prefix("units=") {
            units = match u.trim() {
                "quanta" => PsdUnits::Quanta,
                "w_per_hz" => PsdUnits::WattsPerHz,
                other => return Err(Error::parse(0, format!("unknown units '{other}'"))),
            };
        }
    }
    let mut freqs = Vec::with_capacity(rows.len());
    let mut on = Vec::with_capacity(rows.len());
    let mut off = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        if !(v[0] > 0.0) {
            return Err(Error::parse(line, "frequency must be > 0"));
        }
        let q = match units {
            PsdUnits::Quanta => 1.0,
            PsdUnits::WattsPerHz => {
                1.0 / (CONSTANTS.reduced_planck * 2.0 * std::f64::consts::PI * v[0])
            }
        };
        freqs.push(v[0]);
        on.push(v[1] * q);
        off.push(v[2] * q);
    }
    NoiseSpectra::new(freqs, on, off)
}

pub fn read_noise_spectra(path: &Path) -> Result<NoiseSpectra> {
    parse_noise_spectra(&std::fs::read_to_string(path)?)
}

/// Parses `freq_hz,power_dbm,t_re,t_im`. Rows may come in any order but
/// must form a complete frequency × power grid.
pub fn parse_qubit_dataset(text: &str) -> Result<QubitDataset> {
    let (rows, _) = rows(text, &["freq_hz", "power_dbm", "t_re", "t_im"])?;
    let mut freqs: Vec<f64> = rows.iter().map(|r| r.1[0]).collect();
    let mut powers: Vec<f64> = rows.iter().map(|r| r.1[1]).collect();
    for v in [&mut freqs, &mut powers] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let nf = freqs.len();
    let mut t = vec![None; nf * powers.len()];
    for (line, v) in &rows {
        let jf = freqs.binary_search_by(|x| x.total_cmp(&v[0])).unwrap();
        let ip = powers.binary_search_by(|x| x.total_cmp(&v[1])).unwrap();
        let slot = &mut t[ip * nf + jf];
        if slot.is_some() {
            return Err(Error::parse(*line, "duplicate (freq, power) sample"));
        }
        *slot = Some(Complex64::new(v[2], v[3]));
    }
    let t = t
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::domain("dataset is not a complete frequency x power grid"))?;
    QubitDataset::new(freqs, powers, t)
}

pub fn read_qubit_dataset(path: &Path) -> Result<QubitDataset> {
    parse_qubit_dataset(&std::fs::read_to_string(path)?)
}
