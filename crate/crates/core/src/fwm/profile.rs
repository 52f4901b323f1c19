//! Phase mismatch and small-signal gain across a signal grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cme::{integrate_cme, CmeOptions};
use super::{pump_current_amplitude, LineParams, PumpSettings, STOPBAND_IM_K};
use crate::circuit::UnitCellParams;
use crate::error::{Error, Result};
use crate::network::bloch_wavenumber;

/// Per-cell phase terms for one signal frequency, rad/cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMismatch {
    /// `k_s + k_i − 2k_p`
    pub linear: f64,
    /// `α_s + α_i − 2α_p`, cross-phase on signal and idler minus pump self-phase.
    pub kerr: f64,
    pub total: f64,
    /// Parametric coupling `√(k_s k_i)·r²/8`.
    pub coupling: f64,
    /// Larger of `Im k` at the signal and idler.
    pub max_im_k: f64,
}

/// Mismatch at signal `omega_s` for pump current amplitude `i_pump`.
///
/// With `r = i_pump/I_c`: `α_p = k_p r²/8`, `α_{s,i} = k_{s,i} r²/4`.
pub fn phase_mismatch(
    cell: &UnitCellParams,
    pump: &PumpSettings,
    omega_s: f64,
    i_pump: f64,
) -> Result<PhaseMismatch> {
    let omega_p = pump.omega();
    let omega_i = 2.0 * omega_p - omega_s;
    if !(omega_i > 0.0) || !(omega_s > 0.0) {
        return Err(Error::domain(format!(
            "idler frequency {:.6e} Hz is not positive",
            omega_i / (2.0 * PI)
        )));
    }
    let bp = bloch_wavenumber(cell, omega_p)?.k_per_cell;
    let bs = bloch_wavenumber(cell, omega_s)?.k_per_cell;
    let bi = bloch_wavenumber(cell, omega_i)?.k_per_cell;
    let (kp, ks, ki) = (bp.re, bs.re, bi.re);
    let r2 = (i_pump / cell.junctions.critical_current).powi(2);
    let alpha_p = kp * r2 / 8.0;
    let alpha_s = ks * r2 / 4.0;
    let alpha_i = ki * r2 / 4.0;
    let linear = ks + ki - 2.0 * kp;
    let kerr = alpha_s + alpha_i - 2.0 * alpha_p;
    Ok(PhaseMismatch {
        linear,
        kerr,
        total: linear + kerr,
        coupling: (ks * ki).sqrt() * r2 / 8.0,
        max_im_k: bs.im.max(bi.im),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub freq_hz: f64,
    /// `None` when the point could not be computed.
    pub gain_db: Option<f64>,
    pub phase: Option<f64>,
    pub delta_k: Option<f64>,
    /// Signal or idler inside a stopband.
    pub stopband: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurve {
    pub pump: PumpSettings,
    pub points: Vec<GainPoint>,
    /// Bloch stopband of the cell next to the resonator pole, if any.
    pub stopband: Option<Band>,
}

/// A frequency interval, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower_hz: f64,
    pub upper_hz: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.upper_hz - self.lower_hz
    }
}

impl GainCurve {
    pub fn freqs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.freq_hz).collect()
    }

    /// Window around the pump excluded from band metrics.
    ///
    /// Anchors are the grid points where the signal or the idler sits in the
    /// resonator stopband (the flagged points, plus the points nearest the
    /// stopband center and its mirror about the pump). Each anchor grows
    /// outward while the gain stays below `threshold_db`; the window is the
    /// hull of those runs, edges halfway to the first point above threshold.
    pub fn excluded_window(&self, threshold_db: f64) -> Option<Band> {
        let pts = &self.points;
        if pts.is_empty() {
            return None;
        }
        let nearest = |f: f64| -> Option<usize> {
            let (first, last) = (pts[0].freq_hz, pts[pts.len() - 1].freq_hz);
            if f < first.min(last) || f > first.max(last) {
                return None;
            }
            pts.iter()
                .enumerate()
                .min_by(|a, b| (a.1.freq_hz - f).abs().total_cmp(&(b.1.freq_hz - f).abs()))
                .map(|(i, _)| i)
        };
        let mut anchors: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].stopband).collect();
        if let Some(sb) = self.stopband {
            let c = 0.5 * (sb.lower_hz + sb.upper_hz);
            anchors.extend(nearest(c));
            anchors.extend(nearest(2.0 * self.pump.frequency - c));
        }
        let below = |p: &GainPoint| p.stopband || p.gain_db.is_none_or(|g| g < threshold_db);
        let mut lo_idx = usize::MAX;
        let mut hi_idx = 0;
        for &a in &anchors {
            let mut lo = a;
            while lo > 0 && below(&pts[lo - 1]) {
                lo -= 1;
            }
            let mut hi = a;
            while hi + 1 < pts.len() && below(&pts[hi + 1]) {
                hi += 1;
            }
            lo_idx = lo_idx.min(lo);
            hi_idx = hi_idx.max(hi);
        }
        if lo_idx == usize::MAX {
            return None;
        }
        let lower = if lo_idx > 0 {
            0.5 * (pts[lo_idx - 1].freq_hz + pts[lo_idx].freq_hz)
        } else {
            pts[lo_idx].freq_hz
        };
        let upper = if hi_idx + 1 < pts.len() {
            0.5 * (pts[hi_idx].freq_hz + pts[hi_idx + 1].freq_hz)
        } else {
            pts[hi_idx].freq_hz
        };
        Some(Band {
            lower_hz: lower,
            upper_hz: upper,
        })
    }

    /// Longest run of grid points with gain ≥ `threshold_db`, bridging the
    /// excluded window around the pump. The reported width does not count
    /// the window itself.
    pub fn contiguous_band_above(&self, threshold_db: f64) -> Option<(Band, f64)> {
        let window = self.excluded_window(threshold_db);
        let in_window = |f: f64| window.is_some_and(|w| f > w.lower_hz && f < w.upper_hz);
        let ok = |p: &GainPoint| {
            in_window(p.freq_hz) || (!p.stopband && p.gain_db.is_some_and(|g| g >= threshold_db))
        };
        let mut best: Option<(Band, f64)> = None;
        let mut i = 0;
        let pts = &self.points;
        while i < pts.len() {
            if !ok(&pts[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < pts.len() && ok(&pts[i + 1]) {
                i += 1;
            }
            let band = Band {
                lower_hz: pts[start].freq_hz,
                upper_hz: pts[i].freq_hz,
            };
            let mut width = band.width();
            if let Some(w) = window {
                let overlap =
                    (band.upper_hz.min(w.upper_hz) - band.lower_hz.max(w.lower_hz)).max(0.0);
                width -= overlap;
            }
            if best.is_none_or(|(_, bw)| width > bw) {
                best = Some((band, width));
            }
            i += 1;
        }
        best
    }
}

/// Undepleted small-signal gain at each frequency of `signal_hz`.
///
/// Points whose signal or idler has `Im k > 1e-6` are flagged but still
/// computed with `Re k`. Points that fail (pole, no idler, integration) are
/// left as gaps.
pub fn gain_profile(line: &LineParams, pump: &PumpSettings, signal_hz: &[f64]) -> GainCurve {
    let i_pump = pump_current_amplitude(pump, line.z_line()).unwrap_or(f64::NAN);
    let opts = CmeOptions::small_signal(pump);
    let points = signal_hz
        .par_iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            let gap = GainPoint {
                freq_hz: f,
                gain_db: None,
                phase: None,
                delta_k: None,
                stopband: false,
            };
            let Ok(pm) = phase_mismatch(&line.cell, pump, w, i_pump) else {
                return gap;
            };
            let stopband = pm.max_im_k > STOPBAND_IM_K;
            match integrate_cme(line, pump, w, &opts) {
                Ok(out) => GainPoint {
                    gain_db: Some(out.gain_db()),
                    phase: Some(out.phase),
                    delta_k: Some(pm.total),
                    stopband,
                    ..gap
                },
                Err(_) => GainPoint {
                    delta_k: Some(pm.total),
                    stopband,
                    ..gap
                },
            }
        })
        .collect();
    GainCurve {
        pump: *pump,
        points,
        stopband: resonator_stopband(&line.cell),
    }
}

/// Evanescent band of the cell around the resonator pole, edges where
/// `Im k` crosses the flag threshold.
pub fn resonator_stopband(cell: &UnitCellParams) -> Option<Band> {
    let pole = cell.resonator.pole_frequency()?;
    let evanescent = |f: f64| {
        bloch_wavenumber(cell, 2.0 * PI * f).is_ok_and(|d| d.k_per_cell.im > STOPBAND_IM_K)
    };
    // bisect between an evanescent point next to the pole and a far one
    let edge = |near: f64, far: f64| {
        if evanescent(far) {
            return far;
        }
        let (mut a, mut b) = (near, far);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if evanescent(mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let below = pole * (1.0 - 1e-9);
    let above = pole * (1.0 + 1e-9);
    let lower = if evanescent(below) {
        edge(below, 0.5 * pole)
    } else {
        pole
    };
    let upper = if evanescent(above) {
        edge(above, 1.5 * pole)
    } else {
        pole
    };
    (upper > lower).then_some(Band {
        lower_hz: lower,
        upper_hz: upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fwm::modes::Depletion;
    use crate::fwm::{analytic_gain, CmeOptions};
    use crate::reference::{reference_cell, reference_pump, REFERENCE_CELL_COUNT};

    fn line() -> LineParams {
        LineParams::new(reference_cell(), REFERENCE_CELL_COUNT)
    }

    #[test]
    fn undriven_mismatch_is_linear() {
        let c = reference_cell();
        let pump = reference_pump();
        let pm = phase_mismatch(&c, &pump, 2.0 * PI * 5e9, 0.0).unwrap();
        assert_eq!(pm.kerr, 0.0);
        assert_eq!(pm.total, pm.linear);
        let deg = phase_mismatch(&c, &pump, pump.omega(), 0.0).unwrap();
        assert_eq!(deg.total, 0.0);
    }

    #[test]
    fn linear_mismatch_changes_sign_across_stopband() {
        let c = reference_cell();
        let pump = reference_pump();
        let sb = resonator_stopband(&c).unwrap();
        let below = phase_mismatch(&c, &pump, 2.0 * PI * (sb.lower_hz - 20e6), 0.0).unwrap();
        let above = phase_mismatch(&c, &pump, 2.0 * PI * (sb.upper_hz + 20e6), 0.0).unwrap();
        assert!(below.linear * above.linear < 0.0, "{below:?} {above:?}");
    }

    #[test]
    fn no_positive_idler_is_an_error() {
        let pump = reference_pump();
        assert!(phase_mismatch(&reference_cell(), &pump, 2.0 * pump.omega(), 1e-6).is_err());
    }

    #[test]
    fn cme_matches_closed_form_at_reported_mismatch() {
        let l = line();
        let pump = reference_pump();
        let ip = crate::fwm::pump_current_amplitude(&pump, l.z_line()).unwrap();
        for f in [4e9, 5e9, 6.2e9, 8e9, 9.5e9] {
            let w = 2.0 * PI * f;
            let pm = phase_mismatch(&l.cell, &pump, w, ip).unwrap();
            let (gs, _) = analytic_gain(pm.coupling, pm.total, l.n_cells as f64).unwrap();
            let out = integrate_cme(&l, &pump, w, &CmeOptions::small_signal(&pump)).unwrap();
            assert!(
                (out.gain / gs - 1.0).abs() < 1e-4,
                "{f}: {} vs {gs}",
                out.gain
            );
        }
    }

    #[test]
    fn depleted_gain_below_undepleted() {
        let l = line();
        let pump = reference_pump();
        let w = 2.0 * PI * 5e9;
        let small = integrate_cme(&l, &pump, w, &CmeOptions::small_signal(&pump)).unwrap();
        let opts = CmeOptions {
            depletion: Depletion::Depleted,
            signal_power_dbm: pump.input_power - 20.0,
            ..CmeOptions::small_signal(&pump)
        };
        let big = integrate_cme(&l, &pump, w, &opts).unwrap();
        assert!(big.gain < small.gain);
        // two pump photons per signal/idler pair
        let d = |a: crate::fwm::cme::MixingState, b: crate::fwm::cme::MixingState| {
            (
                b.a_p.norm_sqr() - a.a_p.norm_sqr(),
                b.a_s.norm_sqr() - a.a_s.norm_sqr(),
                b.a_i.norm_sqr() - a.a_i.norm_sqr(),
            )
        };
        let (dp, ds, di) = d(big.input, big.output);
        assert!((dp + 2.0 * ds).abs() < 1e-6 * dp.abs(), "{dp} {ds}");
        assert!((ds - di).abs() < 1e-6 * ds.abs());
    }

    #[test]
    fn zero_pump_gives_zero_gain() {
        let pump = PumpSettings {
            input_power: f64::NEG_INFINITY,
            ..reference_pump()
        };
        let freqs: Vec<f64> = (0..9).map(|i| 3e9 + 1e9 * i as f64).collect();
        let curve = gain_profile(&line(), &pump, &freqs);
        for p in &curve.points {
            assert_eq!(p.gain_db, Some(0.0));
        }
    }

    #[test]
    fn signal_idler_symmetry() {
        let pump = reference_pump();
        let fs = [4.1e9, 5.3e9, 6.0e9];
        let fi: Vec<f64> = fs.iter().map(|f| 2.0 * pump.frequency - f).collect();
        let a = gain_profile(&line(), &pump, &fs);
        let b = gain_profile(&line(), &pump, &fi);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.gain_db.unwrap() - q.gain_db.unwrap()).abs() < 0.1);
        }
    }

    #[test]
    fn window_and_band_on_synthetic_curve() {
        let pump = reference_pump();
        let mk = |f: f64, g: f64| GainPoint {
            freq_hz: f,
            gain_db: Some(g),
            phase: Some(0.0),
            delta_k: Some(0.0),
            stopband: false,
        };
        // 15 dB from 3 to 10 GHz, with a 6.4-6.9 GHz hole
        let points: Vec<GainPoint> = (0..=100)
            .map(|i| {
                let f = 3e9 + 0.1e9 * i as f64;
                let g = if (6.35e9..6.95e9).contains(&f) || f > 10.05e9 {
                    2.0
                } else {
                    15.0
                };
                mk(f, g)
            })
            .collect();
        let curve = GainCurve {
            pump,
            points,
            stopband: Some(Band {
                lower_hz: 6.80e9,
                upper_hz: 6.81e9,
            }),
        };
        let w = curve.excluded_window(10.0).unwrap();
        assert!((w.lower_hz - 6.35e9).abs() < 1.0 && (w.upper_hz - 6.95e9).abs() < 1.0);
        let (band, width) = curve.contiguous_band_above(10.0).unwrap();
        assert_eq!(band.lower_hz, 3e9);
        assert!((band.upper_hz - 10e9).abs() < 1.0);
        assert!((width - (7e9 - 0.6e9)).abs() < 1.0);
    }
}
