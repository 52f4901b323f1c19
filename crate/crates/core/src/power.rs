//! Saturation and distortion: pump sweeps, compression, phase distortion,
//! two-tone intermodulation and IP3.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::CONSTANTS;
use crate::error::{Error, Result};
use crate::fwm::modes::{Combo, Depletion, MixingSystem, Mode, C64, PUMP};
use crate::fwm::{
    dbm_to_watts, integrate_cme, pump_current_amplitude, watts_to_dbm, CmeOptions, LineParams,
    PumpSettings,
};
use crate::noise::{
    psd_on_from_added_noise, snri, standard_quantum_limit, ChainGains, NoiseSpectra,
};
use crate::ode::Tolerance;

/// Default system noise referred to the amplifier output, quanta.
pub const DEFAULT_SYSTEM_NOISE_QUANTA: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSweepPoint {
    pub pump_dbm: f64,
    pub gain_db: Option<f64>,
    pub snri_db: Option<f64>,
}

/// SNR improvement of a quantum-limited amplifier with gain `g` in front of
/// a chain with `n_sys` quanta of noise.
pub fn snri_quantum_limited(g: f64, n_sys: f64) -> Result<f64> {
    let n_add = standard_quantum_limit(g.max(1.0))?;
    let n_on = psd_on_from_added_noise(n_add, n_sys, 1.0, g);
    let spectra = NoiseSpectra::new(vec![1.0], vec![n_on], vec![n_sys])?;
    let gains = ChainGains {
        g_sys: vec![1.0],
        g_twpa: vec![g],
    };
    Ok(snri(&spectra, &gains)?[0])
}

/// Small-signal gain (depleted solver) and SNRi at `signal_hz` for each
/// pump power. The signal sits `signal_below_pump_db` under the weakest pump.
pub fn pump_sweep(
    line: &LineParams,
    pump_hz: f64,
    pump_dbm: &[f64],
    signal_hz: f64,
    signal_below_pump_db: f64,
    n_sys: f64,
) -> Result<Vec<PumpSweepPoint>> {
    if signal_below_pump_db < 40.0 {
        return Err(Error::domain(
            "signal must sit at least 40 dB below the pump",
        ));
    }
    let weakest = pump_dbm.iter().copied().fold(f64::INFINITY, f64::min);
    let p_sig = if weakest.is_finite() {
        weakest - signal_below_pump_db
    } else {
        -200.0
    };
    Ok(pump_dbm
        .par_iter()
        .map(|&p| {
            let pump = PumpSettings {
                frequency: pump_hz,
                input_power: p,
            };
            let opts = CmeOptions {
                depletion: Depletion::Depleted,
                signal_power_dbm: p_sig,
                tol: Tolerance::default(),
            };
            let gain_db = integrate_cme(line, &pump, 2.0 * PI * signal_hz, &opts)
                .ok()
                .map(|o| o.gain_db());
            let snri_db =
                gain_db.and_then(|g| snri_quantum_limited(10f64.powf(g / 10.0), n_sys).ok());
            PumpSweepPoint {
                pump_dbm: p,
                gain_db,
                snri_db,
            }
        })
        .collect())
}

/// Pump power maximizing `key` over computed points.
pub fn argmax_pump(
    points: &[PumpSweepPoint],
    key: impl Fn(&PumpSweepPoint) -> Option<f64>,
) -> Option<f64> {
    points
        .iter()
        .filter_map(|p| key(p).map(|v| (p.pump_dbm, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub pin_dbm: f64,
    pub gain_db: f64,
    /// Output phase relative to the lowest-power point, degrees.
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub signal_hz: f64,
    pub pump: PumpSettings,
    /// Ascending in input power.
    pub points: Vec<PowerPoint>,
}

/// Depleted-pump gain and phase against signal input power.
pub fn gain_vs_input_power(
    line: &LineParams,
    pump: &PumpSettings,
    signal_hz: f64,
    pin_dbm: &[f64],
) -> Result<PowerCurve> {
    let mut pins = pin_dbm.to_vec();
    pins.sort_by(f64::total_cmp);
    if pins.is_empty() {
        return Err(Error::domain("empty input-power grid"));
    }
    let raw = pins
        .par_iter()
        .map(|&p| {
            let opts = CmeOptions {
                depletion: Depletion::Depleted,
                signal_power_dbm: p,
                tol: Tolerance::default(),
            };
            integrate_cme(line, pump, 2.0 * PI * signal_hz, &opts)
                .map(|o| (p, o.gain_db(), o.phase))
        })
        .collect::<Result<Vec<_>>>()?;
    // unwrap along power, reference to the first point
    let mut points = Vec::with_capacity(raw.len());
    let phi0 = raw[0].2;
    let mut prev = phi0;
    let mut acc = 0.0;
    for &(p, g, phi) in &raw {
        let mut d = phi - prev;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        acc += d;
        prev = phi;
        points.push(PowerPoint {
            pin_dbm: p,
            gain_db: g,
            phase_deg: acc.to_degrees(),
        });
    }
    Ok(PowerCurve {
        signal_hz,
        pump: *pump,
        points,
    })
}

/// First input power where `value(p)` crosses `level` going from below to
/// at-or-above, linearly interpolated.
fn first_crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    for w in points.windows(2) {
        let ((p0, v0), (p1, v1)) = (w[0], w[1]);
        if v0 < level && v1 >= level {
            return Some(p0 + (level - v0) / (v1 - v0) * (p1 - p0));
        }
    }
    None
}

/// Input power where gain first falls 1 dB below the lowest-power gain.
/// `None` when the curve never compresses that far.
pub fn compression_point_1db(points: &[(f64, f64)]) -> Option<f64> {
    let g0 = points.first()?.1;
    let drop: Vec<(f64, f64)> = points.iter().map(|&(p, g)| (p, g0 - g)).collect();
    first_crossing(&drop, 1.0)
}

/// Input power where `|phase − phase(lowest power)|` first reaches
/// `threshold_deg`. `None` when it never does.
pub fn phase_distortion_point(points: &[(f64, f64)], threshold_deg: f64) -> Option<f64> {
    let phi0 = points.first()?.1;
    let pull: Vec<(f64, f64)> = points.iter().map(|&(p, f)| (p, (f - phi0).abs())).collect();
    first_crossing(&pull, threshold_deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub p_1db: Option<f64>,
    pub p_5deg: Option<f64>,
    pub small_signal_gain_db: f64,
}

impl PowerCurve {
    pub fn compression(&self) -> CompressionResult {
        let g: Vec<(f64, f64)> = self.points.iter().map(|p| (p.pin_dbm, p.gain_db)).collect();
        let ph: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.pin_dbm, p.phase_deg))
            .collect();
        CompressionResult {
            p_1db: compression_point_1db(&g),
            p_5deg: phase_distortion_point(&ph, 5.0),
            small_signal_gain_db: self.points.first().map_or(f64::NAN, |p| p.gain_db),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    pub frequency: f64,
    pub input_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneSet {
    pub tones: Vec<Tone>,
    pub pump: PumpSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImdProduct {
    /// Coefficients on (pump, tone 1, tone 2).
    pub combo: Combo,
    pub frequency: f64,
    /// `|m| + |n|` of the signal-side product `m·f1 + n·f2`.
    pub order: u32,
    /// Idler partner `2f_p − (m·f1 + n·f2)`.
    pub idler: bool,
    pub output_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImdSpectrum {
    pub pump_output_dbm: f64,
    pub products: Vec<ImdProduct>,
}

impl ImdSpectrum {
    pub fn get(&self, combo: Combo) -> Option<&ImdProduct> {
        self.products.iter().find(|p| p.combo == combo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImdOptions {
    pub max_order: u32,
    /// Include the idler partner of every signal-side product.
    pub idler_partners: bool,
    pub tol: Tolerance,
}

impl Default for ImdOptions {
    fn default() -> Self {
        Self {
            max_order: 3,
            idler_partners: true,
            tol: Tolerance {
                rtol: 1e-9,
                atol: 1e-18,
            },
        }
    }
}

/// Mode combos for two tones up to `max_order`: pump, `m·f1 + n·f2` with
/// `m + n = 1`, and (optionally) each one's idler.
pub fn imd_mode_set(max_order: u32, idler_partners: bool) -> Result<Vec<(Combo, u32, bool)>> {
    if !matches!(max_order, 1 | 3 | 5 | 7) {
        return Err(Error::Config(format!(
            "max_order must be one of 1, 3, 5, 7, got {max_order}"
        )));
    }
    let mut out = vec![(PUMP, 0, false)];
    for order in (1..=max_order).step_by(2) {
        let k = (order as i32 + 1) / 2;
        for (m, n) in [(k, 1 - k), (1 - k, k)] {
            out.push(([0, m, n], order, false));
            if idler_partners {
                out.push(([2, -m, -n], order, true));
            }
        }
    }
    Ok(out)
}

/// Integrates the pump, both tones and their mixing products along the line
/// and returns the output power of every non-pump mode.
pub fn two_tone_imd(line: &LineParams, tones: &ToneSet, opts: &ImdOptions) -> Result<ImdSpectrum> {
    let [t1, t2] = tones.tones[..] else {
        return Err(Error::domain(format!(
            "two tones required, got {}",
            tones.tones.len()
        )));
    };
    if t1.frequency == t2.frequency {
        return Err(Error::domain("tone frequencies must differ"));
    }
    let pump = tones.pump;
    let base = [
        pump.omega(),
        2.0 * PI * t1.frequency,
        2.0 * PI * t2.frequency,
    ];
    let set = imd_mode_set(opts.max_order, opts.idler_partners)?;
    let mut modes = Vec::with_capacity(set.len());
    let mut meta = Vec::with_capacity(set.len());
    for &(combo, order, idler) in &set {
        let w: f64 = (0..3).map(|i| combo[i] as f64 * base[i]).sum();
        if !(w > 0.0) {
            continue;
        }
        let k = line.dispersion(w)?.k_per_cell.re;
        modes.push(Mode { combo, omega: w, k });
        meta.push((order, idler));
    }
    let i_p = pump_current_amplitude(&pump, line.z_line())?;
    let r2 = (i_p / line.cell.junctions.critical_current).powi(2);
    let sys = MixingSystem::new(modes, r2)?;
    let hbar = CONSTANTS.reduced_planck;
    let flux_p = dbm_to_watts(pump.input_power) / (hbar * pump.omega());
    if !(flux_p > 0.0) {
        return Err(Error::domain("two-tone analysis needs a finite pump power"));
    }
    let mut y = vec![C64::new(0.0, 0.0); sys.modes().len()];
    for (i, m) in sys.modes().iter().enumerate() {
        let p_in = if m.combo == PUMP {
            y[i] = C64::new(1.0, 0.0);
            continue;
        } else if m.combo == [0, 1, 0] {
            t1.input_power
        } else if m.combo == [0, 0, 1] {
            t2.input_power
        } else {
            continue;
        };
        y[i] = C64::new((dbm_to_watts(p_in) / (hbar * m.omega) / flux_p).sqrt(), 0.0);
    }
    sys.integrate(&mut y, line.n_cells as f64, Depletion::Depleted, opts.tol)?;
    let products = sys
        .modes()
        .iter()
        .zip(&y)
        .zip(&meta)
        .filter(|((m, _), _)| m.combo != PUMP)
        .map(|((m, a), &(order, idler))| ImdProduct {
            combo: m.combo,
            frequency: m.omega / (2.0 * PI),
            order,
            idler,
            output_power_dbm: watts_to_dbm(a.norm_sqr() * flux_p * hbar * m.omega),
        })
        .collect();
    let ip = sys.pump_index();
    Ok(ImdSpectrum {
        pump_output_dbm: watts_to_dbm(y[ip].norm_sqr() * flux_p * hbar * pump.omega()),
        products,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImdSweepPoint {
    pub pin_dbm: f64,
    pub p_fund_dbm: f64,
    pub p_imd3_dbm: f64,
}

/// Equal-power two-tone sweep; reports tone 1 and the `2f1 − f2` product.
pub fn imd_sweep(
    line: &LineParams,
    pump: &PumpSettings,
    f1: f64,
    f2: f64,
    pin_dbm: &[f64],
    opts: &ImdOptions,
) -> Result<Vec<ImdSweepPoint>> {
    let mut pins = pin_dbm.to_vec();
    pins.sort_by(f64::total_cmp);
    pins.par_iter()
        .map(|&p| {
            let tones = ToneSet {
                tones: vec![
                    Tone {
                        frequency: f1,
                        input_power: p,
                    },
                    Tone {
                        frequency: f2,
                        input_power: p,
                    },
                ],
                pump: *pump,
            };
            let s = two_tone_imd(line, &tones, opts)?;
            let fund = s.get([0, 1, 0]).map(|x| x.output_power_dbm);
            let imd = s.get([0, 2, -1]).map(|x| x.output_power_dbm);
            match (fund, imd) {
                (Some(a), Some(b)) => Ok(ImdSweepPoint {
                    pin_dbm: p,
                    p_fund_dbm: a,
                    p_imd3_dbm: b,
                }),
                _ => Err(Error::domain(
                    "tone or IMD3 product has no positive frequency",
                )),
            }
        })
        .collect()
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Points of `curve` within the lowest decade (10 dB) of input power.
fn bottom_decade(curve: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut c = curve.to_vec();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = c.first().map_or(0.0, |p| p.0);
    c.into_iter().filter(|p| p.0 <= lo + 10.0 + 1e-9).collect()
}

/// Free-fit slope of `curve` over its lowest decade of input power.
pub fn small_signal_slope(curve: &[(f64, f64)]) -> Result<f64> {
    let pts = bottom_decade(curve);
    if pts.len() < 3 {
        return Err(Error::domain("fewer than 3 points in the lowest decade"));
    }
    Ok(line_fit(&pts).0)
}

/// Input-referred third-order intercept from `(pin, pout)` curves of the
/// fundamental and the IMD3 product.
///
/// On the lowest decade of input power, the free-fit slopes must be within
/// 20% of 1 and 3. Lines with those exact slopes are then fitted and
/// intersected.
pub fn ip3_from_two_tone(fund: &[(f64, f64)], imd3: &[(f64, f64)]) -> Result<f64> {
    let f = bottom_decade(fund);
    let d = bottom_decade(imd3);
    if f.len() < 3 || d.len() < 3 {
        return Err(Error::Fit {
            message: "regime not identified: fewer than 3 points in the lowest decade".into(),
            residual_rms: f64::NAN,
        });
    }
    let (s1, _) = line_fit(&f);
    let (s3, _) = line_fit(&d);
    if (s1 - 1.0).abs() > 0.2 || (s3 - 3.0).abs() > 0.6 {
        return Err(Error::Fit {
            message: format!("regime not identified: slopes {s1:.3} and {s3:.3} dB/dB"),
            residual_rms: f64::NAN,
        });
    }
    let b1 = f.iter().map(|p| p.1 - p.0).sum::<f64>() / f.len() as f64;
    let b3 = d.iter().map(|p| p.1 - 3.0 * p.0).sum::<f64>() / d.len() as f64;
    Ok((b1 - b3) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{reference_cell, reference_pump, REFERENCE_CELL_COUNT};

    fn line() -> LineParams {
        LineParams::new(reference_cell(), REFERENCE_CELL_COUNT)
    }

    #[test]
    fn synthetic_compression() {
        let g0 = 20.0;
        let pts: Vec<(f64, f64)> = (0..=60)
            .map(|i| {
                let p = -130.0 + i as f64;
                (p, g0 - (p + 100.0).max(0.0))
            })
            .collect();
        assert!((compression_point_1db(&pts).unwrap() + 99.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 5.0)).collect();
        assert_eq!(compression_point_1db(&flat), None);
    }

    #[test]
    fn synthetic_phase_point() {
        let pts: Vec<(f64, f64)> = (0..=60)
            .map(|i| {
                let p = -130.0 + i as f64;
                (p, 0.5 * (p + 110.0).max(0.0))
            })
            .collect();
        assert!((phase_distortion_point(&pts, 5.0).unwrap() + 100.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.0)).collect();
        assert_eq!(phase_distortion_point(&flat, 5.0), None);
    }

    #[test]
    fn ideal_ip3() {
        let pins: Vec<f64> = (0..20).map(|i| -140.0 + 2.0 * i as f64).collect();
        let g = 20.0;
        // y1 = P + g, y3 = 3P + b meeting at -90 dBm
        let b = -90.0 + g - 3.0 * -90.0;
        let f: Vec<(f64, f64)> = pins.iter().map(|&p| (p, p + g)).collect();
        let d: Vec<(f64, f64)> = pins.iter().map(|&p| (p, 3.0 * p + b)).collect();
        assert!((ip3_from_two_tone(&f, &d).unwrap() + 90.0).abs() < 1e-9);
        let shift = |c: &[(f64, f64)]| c.iter().map(|&(p, y)| (p + 7.0, y)).collect::<Vec<_>>();
        let moved = ip3_from_two_tone(&shift(&f), &shift(&d)).unwrap();
        assert!((moved + 83.0).abs() < 1e-9);
        // wrong slope
        let bad: Vec<(f64, f64)> = pins.iter().map(|&p| (p, 2.0 * p)).collect();
        assert!(ip3_from_two_tone(&f, &bad).is_err());
    }

    #[test]
    fn mode_sets() {
        assert_eq!(imd_mode_set(3, true).unwrap().len(), 9);
        assert_eq!(imd_mode_set(3, false).unwrap().len(), 5);
        assert_eq!(imd_mode_set(7, true).unwrap().len(), 17);
        assert!(imd_mode_set(4, true).is_err());
    }

    #[test]
    fn zero_pump_sweep_is_flat() {
        let pts = pump_sweep(&line(), 6.688e9, &[f64::NEG_INFINITY], 5e9, 60.0, 15.0).unwrap();
        assert_eq!(pts[0].gain_db, Some(0.0));
        assert_eq!(pts[0].snri_db, Some(0.0));
    }

    #[test]
    fn compression_ordering() {
        let c = gain_vs_input_power(&line(), &reference_pump(), 5e9, &[-130.0, -80.0]).unwrap();
        assert!(c.points[1].gain_db < c.points[0].gain_db);
    }

    #[test]
    fn five_mode_photon_bookkeeping() {
        let l = line();
        let pump = reference_pump();
        let tones = ToneSet {
            tones: vec![
                Tone {
                    frequency: 5.0e9,
                    input_power: -95.0,
                },
                Tone {
                    frequency: 5.005e9,
                    input_power: -95.0,
                },
            ],
            pump,
        };
        let set = imd_mode_set(1, true).unwrap();
        assert_eq!(set.len(), 5);
        let opts = ImdOptions {
            max_order: 1,
            ..ImdOptions::default()
        };
        let out = two_tone_imd(&l, &tones, &opts).unwrap();
        let hbar = CONSTANTS.reduced_planck;
        let flux = |dbm: f64, f: f64| dbm_to_watts(dbm) / (hbar * 2.0 * PI * f);
        let tones_in = flux(-95.0, 5.0e9) + flux(-95.0, 5.005e9);
        let pump_in = flux(pump.input_power, pump.frequency);
        let pump_out = flux(out.pump_output_dbm, pump.frequency);
        let side_out: f64 = out
            .products
            .iter()
            .map(|p| flux(p.output_power_dbm, p.frequency))
            .sum();
        // photon number and energy are both conserved
        let total_in = pump_in + tones_in;
        assert!(((pump_out + side_out) / total_in - 1.0).abs() < 1e-5);
        let e_in =
            pump_in * pump.frequency + flux(-95.0, 5.0e9) * 5.0e9 + flux(-95.0, 5.005e9) * 5.005e9;
        let e_out = pump_out * pump.frequency
            + out
                .products
                .iter()
                .map(|p| flux(p.output_power_dbm, p.frequency) * p.frequency)
                .sum::<f64>();
        assert!((e_out / e_in - 1.0).abs() < 1e-5);
        // every pair of signal-side and idler photons costs two pump photons
        let gained = side_out - tones_in;
        assert!(gained > 0.0);
        assert!(((pump_in - pump_out) / gained - 1.0).abs() < 1e-5);
    }

    #[test]
    fn symmetric_imd3() {
        let pump = reference_pump();
        let tones = ToneSet {
            tones: vec![
                Tone {
                    frequency: 4.9975e9,
                    input_power: -120.0,
                },
                Tone {
                    frequency: 5.0025e9,
                    input_power: -120.0,
                },
            ],
            pump,
        };
        let s = two_tone_imd(&line(), &tones, &ImdOptions::default()).unwrap();
        let lo = s.get([0, 2, -1]).unwrap().output_power_dbm;
        let hi = s.get([0, -1, 2]).unwrap().output_power_dbm;
        assert!((lo - hi).abs() < 0.1, "{lo} {hi}");
    }
}
