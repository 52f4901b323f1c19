//! Touchstone v1 two-port (.s2p) files, network cascades and grid resampling.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::abcd::{SMatrix, TwoPortABCD, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// Linear magnitude, angle in degrees.
    MA,
    /// Magnitude in dB (20·log10), angle in degrees.
    DB,
    /// Real and imaginary parts.
    RI,
}

impl DataFormat {
    fn decode(self, x: f64, y: f64) -> C64 {
        match self {
            DataFormat::RI => C64::new(x, y),
            DataFormat::MA => C64::from_polar(x, y.to_radians()),
            DataFormat::DB => C64::from_polar(10f64.powf(x / 20.0), y.to_radians()),
        }
    }

    fn encode(self, z: C64) -> (f64, f64) {
        match self {
            DataFormat::RI => (z.re, z.im),
            DataFormat::MA => (z.norm(), z.arg().to_degrees()),
            DataFormat::DB => (20.0 * z.norm().log10(), z.arg().to_degrees()),
        }
    }

    fn name(self) -> &'static str {
        match self {
            DataFormat::MA => "MA",
            DataFormat::DB => "DB",
            DataFormat::RI => "RI",
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MA" => Ok(DataFormat::MA),
            "DB" => Ok(DataFormat::DB),
            "RI" => Ok(DataFormat::RI),
            _ => Err(Error::Config(format!("unknown data format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn multiplier(self) -> f64 {
        match self {
            FrequencyUnit::Hz => 1.0,
            FrequencyUnit::KHz => 1e3,
            FrequencyUnit::MHz => 1e6,
            FrequencyUnit::GHz => 1e9,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HZ" => Some(FrequencyUnit::Hz),
            "KHZ" => Some(FrequencyUnit::KHz),
            "MHZ" => Some(FrequencyUnit::MHz),
            "GHZ" => Some(FrequencyUnit::GHz),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            FrequencyUnit::Hz => "Hz",
            FrequencyUnit::KHz => "kHz",
            FrequencyUnit::MHz => "MHz",
            FrequencyUnit::GHz => "GHz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchstoneNetwork {
    /// Hz, strictly increasing.
    pub frequencies: Vec<f64>,
    pub s_data: Vec<SMatrix>,
    pub format: DataFormat,
    pub unit: FrequencyUnit,
    pub z_ref: f64,
}

impl TouchstoneNetwork {
    /// Builds a network from computed data, written back as RI in Hz.
    pub fn from_data(frequencies: Vec<f64>, s_data: Vec<SMatrix>, z_ref: f64) -> Result<Self> {
        if frequencies.len() != s_data.len() {
            return Err(Error::domain(format!(
                "{} frequencies but {} S matrices",
                frequencies.len(),
                s_data.len()
            )));
        }
        if let Some(i) = frequencies.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::domain(format!(
                "frequencies not increasing at index {}",
                i + 1
            )));
        }
        if !(z_ref > 0.0) {
            return Err(Error::Conversion(format!("z_ref must be > 0, got {z_ref}")));
        }
        Ok(Self {
            frequencies,
            s_data,
            format: DataFormat::RI,
            unit: FrequencyUnit::Hz,
            z_ref,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

struct OptionLine {
    unit: FrequencyUnit,
    format: DataFormat,
    z_ref: f64,
}

/// `# [unit] [S] [format] [R z]` with tokens in any order; missing ones take
/// the v1 defaults GHz, MA, 50 Ω.
fn parse_option_line(body: &str, line: usize) -> Result<OptionLine> {
    let mut opt = OptionLine {
        unit: FrequencyUnit::GHz,
        format: DataFormat::MA,
        z_ref: 50.0,
    };
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        let upper = tok.to_ascii_uppercase();
        if let Some(u) = FrequencyUnit::parse(tok) {
            opt.unit = u;
        } else if let Ok(f) = tok.parse::<DataFormat>() {
            opt.format = f;
        } else if upper == "S" {
        } else if matches!(upper.as_str(), "Y" | "Z" | "H" | "G") {
            return Err(Error::parse(
                line,
                format!("only S parameters are supported, found {tok:?}"),
            ));
        } else if upper == "R" {
            let z = tokens
                .next()
                .ok_or_else(|| Error::parse(line, "option R needs a reference impedance"))?;
            opt.z_ref = z
                .parse::<f64>()
                .ok()
                .filter(|z| *z > 0.0 && z.is_finite())
                .ok_or_else(|| Error::parse(line, format!("bad reference impedance {z:?}")))?;
        } else {
            return Err(Error::parse(line, format!("unrecognized option {tok:?}")));
        }
    }
    Ok(opt)
}

/// Parses Touchstone v1 two-port text. Line numbers in errors are 1-based.
pub fn parse_touchstone(text: &str) -> Result<TouchstoneNetwork> {
    let mut opt: Option<OptionLine> = None;
    let mut frequencies = Vec::new();
    let mut s_data = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            return Err(Error::parse(
                line,
                "Touchstone v2 keywords are not supported",
            ));
        }
        if let Some(body) = content.strip_prefix('#') {
            // v1: only the first option line counts
            if opt.is_none() {
                opt = Some(parse_option_line(body, line)?);
            }
            continue;
        }
        let o = opt
            .as_ref()
            .ok_or_else(|| Error::parse(line, "data before the option line"))?;
        let nums = content
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("not a number: {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match nums.len() {
            9 => {}
            n if n < 9 => {
                return Err(Error::parse(
                    line,
                    format!("incomplete row: {n} numbers, expected 9"),
                ))
            }
            n => {
                return Err(Error::parse(
                    line,
                    format!("{n} numbers in row; only two-port data (9 per row) is supported"),
                ))
            }
        }
        let f = nums[0] * o.unit.multiplier();
        if !(f >= 0.0) {
            return Err(Error::parse(
                line,
                format!("negative frequency {}", nums[0]),
            ));
        }
        if let Some(&prev) = frequencies.last() {
            if !(f > prev) {
                return Err(Error::parse(
                    line,
                    format!("frequency {} not above the previous row", nums[0]),
                ));
            }
        }
        let c = |i: usize| o.format.decode(nums[1 + 2 * i], nums[2 + 2 * i]);
        frequencies.push(f);
        s_data.push(SMatrix {
            s11: c(0),
            s21: c(1),
            s12: c(2),
            s22: c(3),
            z_ref: o.z_ref,
        });
    }
    let o = opt.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing option line"))?;
    if frequencies.is_empty() {
        return Err(Error::parse(text.lines().count().max(1), "no data rows"));
    }
    Ok(TouchstoneNetwork {
        frequencies,
        s_data,
        format: o.format,
        unit: o.unit,
        z_ref: o.z_ref,
    })
}

/// Writes the network in its own unit and format. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn serialize_touchstone(net: &TouchstoneNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} S {} R {}",
        net.unit.name(),
        net.format.name(),
        net.z_ref
    );
    let _ = writeln!(out, "! freq S11 S21 S12 S22");
    let m = net.unit.multiplier();
    for (f, s) in net.frequencies.iter().zip(&net.s_data) {
        let _ = write!(out, "{:e}", f / m);
        for z in [s.s11, s.s21, s.s12, s.s22] {
            let (x, y) = net.format.encode(z);
            let _ = write!(out, " {x:e} {y:e}");
        }
        out.push('\n');
    }
    out
}

pub fn read_touchstone(path: &std::path::Path) -> Result<TouchstoneNetwork> {
    parse_touchstone(&std::fs::read_to_string(path)?)
}

fn check_same_grid(a: &[f64], b: &[f64]) -> Result<()> {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if x != y {
            return Err(Error::GridMismatch {
                index: i,
                left: *x,
                right: *y,
            });
        }
    }
    if a.len() != b.len() {
        let i = a.len().min(b.len());
        return Err(Error::GridMismatch {
            index: i,
            left: a.get(i).copied().unwrap_or(f64::NAN),
            right: b.get(i).copied().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Chains the networks input-side first. All must share the frequency grid
/// and reference impedance.
pub fn cascade_networks(nets: &[&TouchstoneNetwork]) -> Result<TouchstoneNetwork> {
    let first = nets
        .first()
        .ok_or_else(|| Error::domain("cascade of zero networks"))?;
    for n in &nets[1..] {
        check_same_grid(&first.frequencies, &n.frequencies)?;
        if n.z_ref != first.z_ref {
            return Err(Error::Conversion(format!(
                "reference impedances differ: {} vs {} ohm",
                first.z_ref, n.z_ref
            )));
        }
    }
    let s_data = (0..first.len())
        .map(|i| {
            let mut m = TwoPortABCD::IDENTITY;
            for n in nets {
                m = m * n.s_data[i].to_abcd()?;
            }
            m.to_s(first.z_ref)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TouchstoneNetwork {
        frequencies: first.frequencies.clone(),
        s_data,
        ..(*first).clone()
    })
}

/// Linear interpolation of real and imaginary parts onto `freqs`, which must
/// lie within the network's own grid.
pub fn resample(net: &TouchstoneNetwork, freqs: &[f64]) -> Result<TouchstoneNetwork> {
    let src = &net.frequencies;
    let (lo, hi) = match (src.first(), src.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::domain("cannot resample an empty network")),
    };
    if let Some(i) = freqs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::domain(format!(
            "target grid not increasing at index {}",
            i + 1
        )));
    }
    let lerp = |a: C64, b: C64, t: f64| a + (b - a) * t;
    let s_data = freqs
        .iter()
        .map(|&f| {
            if !(f >= lo && f <= hi) {
                return Err(Error::domain(format!(
                    "{f} Hz outside the data range [{lo}, {hi}] Hz"
                )));
            }
            let j = src.partition_point(|&x| x <= f);
            if j == src.len() {
                return Ok(net.s_data[src.len() - 1]);
            }
            let (f0, f1) = (src[j - 1], src[j]);
            let t = (f - f0) / (f1 - f0);
            let (a, b) = (net.s_data[j - 1], net.s_data[j]);
            Ok(SMatrix {
                s11: lerp(a.s11, b.s11, t),
                s12: lerp(a.s12, b.s12, t),
                s21: lerp(a.s21, b.s21, t),
                s22: lerp(a.s22, b.s22, t),
                z_ref: net.z_ref,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TouchstoneNetwork {
        frequencies: freqs.to_vec(),
        s_data,
        ..net.clone()
    })
}

pub const SPECTRUM_CSV_HEADER: &str =
    "freq_hz,s11_re,s11_im,s21_re,s21_im,s12_re,s12_im,s22_re,s22_im";

/// One CSV row per point, in the column order of [`SPECTRUM_CSV_HEADER`].
pub fn spectrum_csv_row(freq_hz: f64, s: &SMatrix) -> String {
    format!(
        "{freq_hz},{},{},{},{},{},{},{},{}",
        s.s11.re, s.s11.im, s.s21.re, s.s21.im, s.s12.re, s.s12.im, s.s22.re, s.s22.im
    )
}
