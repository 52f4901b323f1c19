//! Saturation spectroscopy of a transmon coupled to the signal line, used to
//! calibrate the attenuation between the instrument and the qubit.
//!
//! Frequencies and rates in the public types are in Hz (rates are `Γ/2π`).
//! The drive strength follows `Ω² = c·Γ1·P_qubit/(ħω_q)` with `c` the
//! power-to-Rabi convention constant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use crate::circuit::CONSTANTS;
use crate::error::{Error, Result};
use crate::fwm::dbm_to_watts;

type C64 = Complex64;

/// Bidirectional-coupling convention, `Ω² = 4Γ1 P/(ħω)`.
pub const DEFAULT_RABI_CONVENTION: f64 = 4.0;

/// Two-level saturation lineshape seen in transmission (all arguments rad/s):
/// `1 − (Γ1/2Γ2)(1 − iδ/Γ2)/(1 + (δ/Γ2)² + Ω²/(Γ1Γ2))`.
pub fn transmon_transmittance(delta: f64, omega_rabi: f64, gamma1: f64, gamma2: f64) -> C64 {
    let x = delta / gamma2;
    let s = omega_rabi * omega_rabi / (gamma1 * gamma2);
    let den = 1.0 + x * x + s;
    C64::new(1.0, 0.0) - C64::new(1.0, -x) * (gamma1 / (2.0 * gamma2) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub freq_hz: f64,
    pub gamma1_hz: f64,
    pub gamma2_hz: f64,
    /// Power at the qubit = power at the instrument + this.
    pub attenuation_db: f64,
    /// Complex scale of the line transmission away from the qubit.
    pub background: C64,
    /// Electrical delay; the background carries `exp(−i2πfτ)`.
    pub delay_s: f64,
}

impl QubitParams {
    /// `Ω²` (rad²/s²) for instrument power `p_dbm`.
    pub fn rabi_squared(&self, p_dbm: f64, c: f64) -> f64 {
        let p_q = dbm_to_watts(p_dbm + self.attenuation_db);
        let wq = 2.0 * PI * self.freq_hz;
        c * 2.0 * PI * self.gamma1_hz * p_q / (CONSTANTS.reduced_planck * wq)
    }

    /// Measured transmission at probe frequency `f` and instrument power.
    pub fn transmission(&self, f: f64, p_dbm: f64, c: f64) -> C64 {
        let line = self.background * C64::from_polar(1.0, -2.0 * PI * f * self.delay_s);
        line * transmon_transmittance(
            2.0 * PI * (f - self.freq_hz),
            self.rabi_squared(p_dbm, c).sqrt(),
            2.0 * PI * self.gamma1_hz,
            2.0 * PI * self.gamma2_hz,
        )
    }
}

/// Complex transmission on a rectangular (power × frequency) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitDataset {
    pub probe_freqs: Vec<f64>,
    pub probe_powers: Vec<f64>,
    /// Row-major by power: `t[ip * probe_freqs.len() + jf]`.
    pub t: Vec<C64>,
}

impl QubitDataset {
    pub fn new(probe_freqs: Vec<f64>, probe_powers: Vec<f64>, t: Vec<C64>) -> Result<Self> {
        if t.len() != probe_freqs.len() * probe_powers.len() {
            return Err(Error::domain(format!(
                "{} samples do not fill a {} x {} grid",
                t.len(),
                probe_powers.len(),
                probe_freqs.len()
            )));
        }
        if probe_freqs.len() < 3 || probe_powers.is_empty() {
            return Err(Error::domain(
                "dataset needs >= 3 frequencies and >= 1 power",
            ));
        }
        if t.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::domain("non-finite transmission sample"));
        }
        Ok(Self {
            probe_freqs,
            probe_powers,
            t,
        })
    }

    pub fn at(&self, ip: usize, jf: usize) -> C64 {
        self.t[ip * self.probe_freqs.len() + jf]
    }

    pub fn power_span_db(&self) -> f64 {
        let (lo, hi) = self
            .probe_powers
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
                (a.min(p), b.max(p))
            });
        hi - lo
    }
}

/// Model samples with additive complex Gaussian noise of standard deviation
/// `noise_sigma` per quadrature.
pub fn synthesize_qubit_dataset(
    truth: &QubitParams,
    freqs: &[f64],
    powers_dbm: &[f64],
    c: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<QubitDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::with_capacity(freqs.len() * powers_dbm.len());
    for &p in powers_dbm {
        for &f in freqs {
            let mut v = truth.transmission(f, p, c);
            if noise_sigma > 0.0 {
                let nr: f64 = rng.sample(StandardNormal);
                let ni: f64 = rng.sample(StandardNormal);
                v += C64::new(nr, ni) * noise_sigma;
            }
            t.push(v);
        }
    }
    QubitDataset::new(freqs.to_vec(), powers_dbm.to_vec(), t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitFitOptions {
    pub rabi_convention: f64,
    /// Number of starting points, the first being the data-driven guess.
    pub starts: usize,
    pub seed: u64,
    pub lm: LmOptions,
}

impl Default for QubitFitOptions {
    fn default() -> Self {
        Self {
            rabi_convention: DEFAULT_RABI_CONVENTION,
            starts: 5,
            seed: 0,
            lm: LmOptions::default(),
        }
    }
}

/// One-sigma uncertainties of the physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitStdErr {
    pub freq_hz: f64,
    pub gamma1_hz: f64,
    pub gamma2_hz: f64,
    pub attenuation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitFitResult {
    pub params: QubitParams,
    pub std_err: Option<QubitStdErr>,
    pub residual_rms: f64,
    pub iterations: usize,
    /// Physically suspicious outcomes, e.g. `Γ2 < Γ1/2`.
    pub warnings: Vec<String>,
}

/// Internal coordinates: frequencies relative to the grid center in units of
/// the grid span, rates as logarithms, attenuation in units of 10 dB.
struct Frame {
    f_ref: f64,
    scale: f64,
}

impl Frame {
    fn to_params(&self, x: &[f64]) -> QubitParams {
        let delay = x[6] / self.scale;
        // background re-referenced from f_ref to f = 0
        let bg = C64::new(x[4], x[5]) * C64::from_polar(1.0, 2.0 * PI * self.f_ref * delay);
        QubitParams {
            freq_hz: self.f_ref + x[0] * self.scale,
            gamma1_hz: x[1].exp() * self.scale,
            gamma2_hz: x[2].exp() * self.scale,
            attenuation_db: 10.0 * x[3],
            background: bg,
            delay_s: delay,
        }
    }

    fn from_params(&self, p: &QubitParams) -> Vec<f64> {
        let bg = p.background * C64::from_polar(1.0, -2.0 * PI * self.f_ref * p.delay_s);
        vec![
            (p.freq_hz - self.f_ref) / self.scale,
            (p.gamma1_hz / self.scale).ln(),
            (p.gamma2_hz / self.scale).ln(),
            p.attenuation_db / 10.0,
            bg.re,
            bg.im,
            p.delay_s * self.scale,
        ]
    }
}

fn residuals(data: &QubitDataset, frame: &Frame, c: f64, x: &[f64], r: &mut [f64]) {
    let fq = frame.f_ref + x[0] * frame.scale;
    let g1 = 2.0 * PI * x[1].exp() * frame.scale;
    let g2 = 2.0 * PI * x[2].exp() * frame.scale;
    let bg = C64::new(x[4], x[5]);
    let hbar_w = CONSTANTS.reduced_planck * 2.0 * PI * fq;
    let nf = data.probe_freqs.len();
    for (ip, &p) in data.probe_powers.iter().enumerate() {
        let p_q = dbm_to_watts(p + 10.0 * x[3]);
        let rabi = (c * g1 * p_q / hbar_w).sqrt();
        for (jf, &f) in data.probe_freqs.iter().enumerate() {
            let u = (f - frame.f_ref) / frame.scale;
            let m = bg
                * C64::from_polar(1.0, -2.0 * PI * u * x[6])
                * transmon_transmittance(2.0 * PI * (f - fq), rabi, g1, g2);
            let d = m - data.at(ip, jf);
            let k = 2 * (ip * nf + jf);
            r[k] = d.re;
            r[k + 1] = d.im;
        }
    }
}

fn initial_guess(data: &QubitDataset, c: f64) -> QubitParams {
    let f = &data.probe_freqs;
    let nf = f.len();
    let (ip_lo, ip_hi) = {
        let mut idx: Vec<usize> = (0..data.probe_powers.len()).collect();
        idx.sort_by(|&a, &b| data.probe_powers[a].total_cmp(&data.probe_powers[b]));
        (idx[0], idx[idx.len() - 1])
    };
    // delay from the unwrapped phase of the most saturated trace
    let mut phase = Vec::with_capacity(nf);
    let mut prev = data.at(ip_hi, 0).arg();
    let mut acc = prev;
    for j in 0..nf {
        let a = data.at(ip_hi, j).arg();
        let mut d = a - prev;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        acc += if j == 0 { 0.0 } else { d };
        prev = a;
        phase.push(acc);
    }
    let mf = f.iter().sum::<f64>() / nf as f64;
    let mp = phase.iter().sum::<f64>() / nf as f64;
    let sxx: f64 = f.iter().map(|v| (v - mf).powi(2)).sum();
    let sxy: f64 = f.iter().zip(&phase).map(|(v, p)| (v - mf) * (p - mp)).sum();
    let delay = -(sxy / sxx) / (2.0 * PI);
    let unrotate = |j: usize| C64::from_polar(1.0, 2.0 * PI * f[j] * delay);
    let bg = (0..nf)
        .map(|j| data.at(ip_hi, j) * unrotate(j))
        .sum::<C64>()
        / nf as f64;

    // dip of the weakest trace
    let dip = |ip: usize| -> Vec<f64> {
        (0..nf)
            .map(|j| (C64::new(1.0, 0.0) - data.at(ip, j) * unrotate(j) / bg).norm())
            .collect()
    };
    let d_lo = dip(ip_lo);
    let (j_star, depth) =
        d_lo.iter().enumerate().fold(
            (0, 0.0),
            |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc },
        );
    let mut lo = j_star;
    while lo > 0 && d_lo[lo - 1] >= 0.5 * depth {
        lo -= 1;
    }
    let mut hi = j_star;
    while hi + 1 < nf && d_lo[hi + 1] >= 0.5 * depth {
        hi += 1;
    }
    let step = (f[nf - 1] - f[0]).abs() / (nf - 1) as f64;
    let width = ((f[hi] - f[lo]).abs()).max(step);
    let gamma2 = width / (2.0 * 3f64.sqrt());
    let depth = depth.clamp(0.05, 1.0);
    let gamma1 = 2.0 * gamma2 * depth;
    let fq = f[j_star];

    // saturation s = D0/D − 1 against instrument power
    let hbar_w = CONSTANTS.reduced_planck * 2.0 * PI * fq;
    let mut acc_db = Vec::new();
    for (ip, &p) in data.probe_powers.iter().enumerate() {
        let d = dip(ip)[j_star];
        if d <= 0.0 {
            continue;
        }
        let s = depth / d - 1.0;
        if (0.1..10.0).contains(&s) {
            // s = c·P_q/(ħω Γ2) with Γ2 in rad/s
            let p_q = s * hbar_w * 2.0 * PI * gamma2 / c;
            acc_db.push(10.0 * (p_q * 1e3).log10() - p);
        }
    }
    let attenuation_db = if acc_db.is_empty() {
        let p_mid = data.probe_powers.iter().sum::<f64>() / data.probe_powers.len() as f64;
        let p_sat = hbar_w * 2.0 * PI * gamma2 / c;
        10.0 * (p_sat * 1e3).log10() - p_mid
    } else {
        acc_db.iter().sum::<f64>() / acc_db.len() as f64
    };
    QubitParams {
        freq_hz: fq,
        gamma1_hz: gamma1,
        gamma2_hz: gamma2,
        attenuation_db,
        background: bg,
        delay_s: delay,
    }
}

/// Joint least-squares fit of the saturation lineshape over all powers.
pub fn fit_qubit_dataset(data: &QubitDataset, opts: &QubitFitOptions) -> Result<QubitFitResult> {
    let c = opts.rabi_convention;
    if !(c > 0.0) {
        return Err(Error::domain("rabi convention constant must be > 0"));
    }
    let f = &data.probe_freqs;
    let span = (f[f.len() - 1] - f[0]).abs();
    if !(span > 0.0) {
        return Err(Error::domain("probe frequency grid has zero span"));
    }
    let frame = Frame {
        f_ref: 0.5 * (f[0] + f[f.len() - 1]),
        scale: span,
    };
    let guess = initial_guess(data, c);
    let x0 = frame.from_params(&guess);
    let m = 2 * data.t.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<super::lm::LmResult> = None;
    let mut last_err = None;
    for k in 0..opts.starts.max(1) {
        let mut x = x0.clone();
        if k > 0 {
            // widths within a factor ~3, attenuation within ±6 dB
            let u: [f64; 3] = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            x[1] += 1.1 * u[0];
            x[2] += 1.1 * u[1];
            x[3] += 0.6 * u[2];
        }
        let res = levenberg_marquardt(
            |x: &[f64], r: &mut [f64]| residuals(data, &frame, c, x, r),
            &x,
            m,
            &opts.lm,
        );
        match res {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.cost < b.cost) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = best else {
        return Err(last_err.unwrap_or(Error::Fit {
            message: "no start converged".into(),
            residual_rms: f64::NAN,
        }));
    };
    let params = frame.to_params(&best.x);
    let std_err = best.std_errors().map(|s| QubitStdErr {
        freq_hz: s[0] * frame.scale,
        gamma1_hz: s[1] * params.gamma1_hz,
        gamma2_hz: s[2] * params.gamma2_hz,
        attenuation_db: 10.0 * s[3],
    });
    let mut warnings = Vec::new();
    if params.gamma2_hz < 0.5 * params.gamma1_hz {
        warnings.push(format!(
            "gamma2 {:.4e} Hz below gamma1/2 {:.4e} Hz",
            params.gamma2_hz,
            0.5 * params.gamma1_hz
        ));
    }
    if data.power_span_db() < 20.0 {
        warnings.push(format!(
            "power span {:.1} dB is below 20 dB; attenuation is weakly constrained",
            data.power_span_db()
        ));
    }
    if std_err.is_none() {
        warnings.push("singular normal matrix at the solution".into());
    }
    Ok(QubitFitResult {
        params,
        std_err,
        residual_rms: best.rms(),
        iterations: best.iterations,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> QubitParams {
        QubitParams {
            freq_hz: 5.4e9,
            gamma1_hz: 1.2e6,
            gamma2_hz: 0.7e6,
            attenuation_db: -70.0,
            background: C64::from_polar(0.8, 0.6),
            delay_s: 45e-9,
        }
    }

    fn grid(t: &QubitParams, c: f64) -> (Vec<f64>, Vec<f64>) {
        let freqs: Vec<f64> = (0..121)
            .map(|i| t.freq_hz + 0.3e6 + (i as f64 - 60.0) * 0.15e6)
            .collect();
        // center the 30 dB span on s = 1
        let p_sat_w = CONSTANTS.reduced_planck * 2.0 * PI * t.freq_hz * 2.0 * PI * t.gamma2_hz / c;
        let p_mid = 10.0 * (p_sat_w * 1e3).log10() - t.attenuation_db;
        let powers: Vec<f64> = (0..16).map(|i| p_mid - 15.0 + 2.0 * i as f64).collect();
        (freqs, powers)
    }

    #[test]
    fn lineshape_limits() {
        let g1 = 1.0;
        assert!(transmon_transmittance(0.0, 0.0, g1, 0.5).norm() < 1e-15);
        let t = transmon_transmittance(3.0, f64::INFINITY, g1, 0.5);
        assert_eq!(t, C64::new(1.0, 0.0));
        let t = transmon_transmittance(0.5, 0.0, g1, 0.5);
        assert!((t - C64::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn lineshape_is_passive() {
        for &g2r in &[0.5, 0.6, 1.0, 3.0] {
            for i in -40..=40 {
                for &om in &[0.0, 0.1, 0.5, 1.0, 5.0] {
                    let t = transmon_transmittance(i as f64 * 0.1, om, 1.0, g2r);
                    assert!(t.norm() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn noiseless_fit_is_exact() {
        let tr = truth();
        let c = DEFAULT_RABI_CONVENTION;
        let (f, p) = grid(&tr, c);
        let data = synthesize_qubit_dataset(&tr, &f, &p, c, 0.0, 1).unwrap();
        let fit = fit_qubit_dataset(&data, &QubitFitOptions::default()).unwrap();
        assert!(fit.residual_rms < 1e-10, "{}", fit.residual_rms);
        let q = fit.params;
        assert!((q.freq_hz / tr.freq_hz - 1.0).abs() < 1e-6);
        assert!((q.gamma1_hz / tr.gamma1_hz - 1.0).abs() < 1e-6);
        assert!((q.gamma2_hz / tr.gamma2_hz - 1.0).abs() < 1e-6);
        assert!((q.attenuation_db - tr.attenuation_db).abs() < 1e-6 * 70.0);
    }

    #[test]
    fn power_gauge() {
        let tr = truth();
        let c = DEFAULT_RABI_CONVENTION;
        let (f, p) = grid(&tr, c);
        let a = synthesize_qubit_dataset(&tr, &f, &p, c, 0.0, 1).unwrap();
        let shifted_truth = QubitParams {
            attenuation_db: tr.attenuation_db - 3.0,
            ..tr
        };
        let p3: Vec<f64> = p.iter().map(|v| v + 3.0).collect();
        let b = synthesize_qubit_dataset(&shifted_truth, &f, &p3, c, 0.0, 1).unwrap();
        let fa = fit_qubit_dataset(&a, &QubitFitOptions::default()).unwrap();
        let fb = fit_qubit_dataset(&b, &QubitFitOptions::default()).unwrap();
        assert!((fb.params.attenuation_db - fa.params.attenuation_db + 3.0).abs() < 1e-6);
        for (pa, pb) in p.iter().zip(&p3) {
            let (oa, ob) = (
                fa.params.rabi_squared(*pa, c),
                fb.params.rabi_squared(*pb, c),
            );
            assert!((oa / ob - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn noisy_fit_recovers_attenuation() {
        let tr = truth();
        let c = DEFAULT_RABI_CONVENTION;
        let (f, p) = grid(&tr, c);
        let data = synthesize_qubit_dataset(&tr, &f, &p, c, 0.01 * 0.8, 7).unwrap();
        let fit = fit_qubit_dataset(&data, &QubitFitOptions::default()).unwrap();
        assert!((fit.params.attenuation_db - tr.attenuation_db).abs() < 0.1);
        assert!((fit.params.gamma1_hz / tr.gamma1_hz - 1.0).abs() < 0.02);
        assert!((fit.params.gamma2_hz / tr.gamma2_hz - 1.0).abs() < 0.02);
        let se = fit.std_err.unwrap();
        assert!(se.attenuation_db > 0.0 && se.attenuation_db < 0.1);
    }

    #[test]
    fn ragged_dataset_rejected() {
        assert!(QubitDataset::new(
            vec![1.0, 2.0, 3.0],
            vec![0.0, 1.0],
            vec![C64::new(1.0, 0.0); 5]
        )
        .is_err());
    }
}
