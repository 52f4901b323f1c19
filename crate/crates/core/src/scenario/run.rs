//! Dispatch from a validated scenario to the analysis modules.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::config::{ScenarioConfig, SweepKind, Swept};
use super::output::{OutputTable, Provenance, RunOutput};
use crate::circuit::{sample_disordered_line, DeviceLine};
use crate::error::{Error, Result};
use crate::fwm::{gain_profile, resonator_stopband, LineParams, PumpSettings};
use crate::network::{
    bloch_impedance, bloch_wavenumber, ensemble_transmission, read_touchstone, resample,
    stopband_from_transmission, transmission_spectrum, SMatrix, SPECTRUM_CSV_HEADER,
};
use crate::noise::{
    added_noise, fit_attenuation_linear, fit_qubit_dataset, read_noise_spectra, read_qubit_dataset,
    snri, standard_quantum_limit, ChainGains, QubitFitOptions, DEFAULT_RABI_CONVENTION,
};
use crate::power::{
    argmax_pump, gain_vs_input_power, imd_sweep, ip3_from_two_tone, pump_sweep, small_signal_slope,
    ImdOptions, DEFAULT_SYSTEM_NOISE_QUANTA,
};

/// Distance from the stopband edges excluded from passband ripple.
const PASSBAND_MARGIN_HZ: f64 = 50e6;

/// Signal level below the weakest pump in a pump-power sweep.
const PUMP_SWEEP_SIGNAL_BELOW_DB: f64 = 60.0;

pub struct RunContext<'a> {
    /// Raw config text, hashed into the provenance lines.
    pub config_text: &'a str,
    /// Overrides the config seed when set.
    pub seed: Option<u64>,
    /// Relative input paths resolve against this directory.
    pub base_dir: &'a Path,
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn db(p: f64) -> f64 {
    10.0 * p.log10()
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn pump(cfg: &ScenarioConfig) -> Result<PumpSettings> {
    cfg.pump_settings()
        .ok_or_else(|| Error::Config("pump section required".into()))
}

fn ensemble(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<DeviceLine>> {
    let cell = cfg.cell();
    let n = cfg.device.cell_count as usize;
    (0..cfg.ensemble_size())
        .into_par_iter()
        .map(|i| sample_disordered_line(&cell, n, &cfg.disorder_spec(seed, i)))
        .collect()
}

pub fn run_scenario(cfg: &ScenarioConfig, ctx: &RunContext) -> Result<RunOutput> {
    let seed = ctx.seed.unwrap_or(cfg.seed);
    let (tables, summary) = match cfg.sweep.kind {
        SweepKind::Dispersion => dispersion(cfg)?,
        SweepKind::Sparams => sparams(cfg, seed, ctx.base_dir)?,
        SweepKind::StopbandMc => stopband_mc(cfg, seed)?,
        SweepKind::Gain => gain(cfg)?,
        SweepKind::Noise => noise(cfg, ctx.base_dir)?,
        SweepKind::Calibrate => calibrate(cfg, seed, ctx.base_dir)?,
        SweepKind::PowerSweep => power_sweep(cfg)?,
        SweepKind::Imd => imd(cfg)?,
    };
    Ok(RunOutput {
        provenance: Provenance::new(ctx.config_text, seed),
        tables,
        summary: json!({ "kind": cfg.sweep.kind.name(), "results": summary }),
    })
}

type Outcome = Result<(Vec<OutputTable>, serde_json::Value)>;

fn dispersion(cfg: &ScenarioConfig) -> Outcome {
    let cell = cfg.cell();
    let freqs = cfg.frequency_grid();
    let rows: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            let k = bloch_wavenumber(&cell, w).ok().map(|d| d.k_per_cell);
            let z = bloch_impedance(&cell, w).ok();
            vec![
                f,
                opt(k.map(|k| k.re)),
                opt(k.map(|k| k.im)),
                opt(z.map(|z| z.re)),
                opt(z.map(|z| z.im)),
            ]
        })
        .collect();
    let mut t = OutputTable::new(
        "dispersion.csv",
        &["freq_hz", "k_re", "k_im", "z_bloch_re", "z_bloch_im"],
    );
    t.rows = rows;
    let sb = resonator_stopband(&cell);
    Ok((
        vec![t],
        json!({ "stopband": sb, "pole_hz": cell.resonator.pole_frequency() }),
    ))
}

fn s_row(f: f64, s: Option<SMatrix>) -> Vec<f64> {
    match s {
        Some(s) => vec![
            f, s.s11.re, s.s11.im, s.s21.re, s.s21.im, s.s12.re, s.s12.im, s.s22.re, s.s22.im,
        ],
        None => {
            let mut r = vec![f64::NAN; 9];
            r[0] = f;
            r
        }
    }
}

fn spectrum_table(name: &str, freqs: &[f64], s: &[Option<SMatrix>]) -> OutputTable {
    let cols: Vec<&str> = SPECTRUM_CSV_HEADER.split(',').collect();
    let mut t = OutputTable::new(name, &cols);
    t.rows = freqs.iter().zip(s).map(|(&f, s)| s_row(f, *s)).collect();
    t
}

fn sparams(cfg: &ScenarioConfig, seed: u64, base: &Path) -> Outcome {
    let z_ref = cfg.z_ref();
    let freqs = cfg.frequency_grid();
    let line = ensemble(cfg, seed)?.swap_remove(0);
    let spec: Vec<Option<SMatrix>> = transmission_spectrum(&line, &freqs, z_ref)?
        .into_iter()
        .map(|p| p.s)
        .collect();
    let gaps = spec.iter().filter(|s| s.is_none()).count();
    let max_loss = spec
        .iter()
        .flatten()
        .map(|s| -s.transmission_db())
        .fold(0.0, f64::max);
    let mut tables = vec![spectrum_table("sparams.csv", &freqs, &spec)];
    let mut summary =
        json!({ "z_ref_ohm": z_ref, "gaps": gaps, "max_insertion_loss_db": max_loss });
    if let Some(p) = &cfg.io.package {
        let pkg = read_touchstone(&resolve(base, p))?;
        if pkg.z_ref != z_ref {
            return Err(Error::Conversion(format!(
                "package reference {} ohm differs from chain.z_ref_ohm {z_ref}",
                pkg.z_ref
            )));
        }
        let pkg = resample(&pkg, &freqs)?;
        let chained = spec
            .iter()
            .zip(&pkg.s_data)
            .map(|(s, p)| match s {
                Some(s) => Ok(Some((p.to_abcd()? * s.to_abcd()?).to_s(z_ref)?)),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        // ripple over the passband: stopband of the nominal cell plus a margin excluded
        let sb = resonator_stopband(&cfg.cell());
        let outside = |f: f64| {
            sb.is_none_or(|b| {
                f < b.lower_hz - PASSBAND_MARGIN_HZ || f > b.upper_hz + PASSBAND_MARGIN_HZ
            })
        };
        let ripple = |v: &[Option<SMatrix>]| {
            let m: Vec<f64> = freqs
                .iter()
                .zip(v)
                .filter(|(f, _)| outside(**f))
                .filter_map(|(_, s)| s.map(|s| s.s21.norm()))
                .collect();
            m.iter().copied().fold(f64::MIN, f64::max) - m.iter().copied().fold(f64::MAX, f64::min)
        };
        summary["passband_margin_hz"] = json!(PASSBAND_MARGIN_HZ);
        summary["s21_ripple_device"] = json!(ripple(&spec));
        summary["s21_ripple_packaged"] = json!(ripple(&chained));
        tables.push(spectrum_table("sparams_packaged.csv", &freqs, &chained));
    }
    Ok((tables, summary))
}

fn stopband_mc(cfg: &ScenarioConfig, seed: u64) -> Outcome {
    let freqs = cfg.frequency_grid();
    let lines = ensemble(cfg, seed)?;
    let t = ensemble_transmission(&lines, &freqs, cfg.z_ref())?;
    let threshold = cfg.sweep.threshold_db.unwrap_or(-3.0);
    let sb = stopband_from_transmission(&freqs, &t, threshold)?;
    let mut table = OutputTable::new("stopband.csv", &["freq_hz", "mean_s21_db"]);
    table.rows = freqs
        .iter()
        .zip(&t)
        .map(|(&f, p)| vec![f, opt(p.map(db))])
        .collect();
    Ok((
        vec![table],
        json!({ "ensemble": lines.len(), "threshold_db": threshold, "stopband": sb }),
    ))
}

fn gain(cfg: &ScenarioConfig) -> Outcome {
    let line = LineParams::new(cfg.cell(), cfg.device.cell_count as usize);
    let pump = pump(cfg)?;
    let curve = gain_profile(&line, &pump, &cfg.frequency_grid());
    let threshold = cfg.sweep.threshold_db.unwrap_or(10.0);
    let mut t = OutputTable::new(
        "gain.csv",
        &[
            "freq_hz",
            "gain_db",
            "phase_rad",
            "delta_k",
            "stopband_flag",
        ],
    );
    t.rows = curve
        .points
        .iter()
        .map(|p| {
            vec![
                p.freq_hz,
                opt(p.gain_db),
                opt(p.phase),
                opt(p.delta_k),
                if p.stopband { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    let window = curve.excluded_window(threshold);
    let band = curve.contiguous_band_above(threshold);
    let gains: Vec<f64> = curve.points.iter().filter_map(|p| p.gain_db).collect();
    let max = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        vec![t],
        json!({
            "threshold_db": threshold,
            "max_gain_db": max,
            "stopband": curve.stopband,
            "excluded_window": window,
            "band": band.map(|b| b.0),
            "band_width_excluding_window_hz": band.map(|b| b.1),
            "failed_points": curve.points.iter().filter(|p| p.gain_db.is_none()).count(),
        }),
    ))
}

fn noise(cfg: &ScenarioConfig, base: &Path) -> Outcome {
    let input = cfg.io.input.as_deref().expect("validated");
    let spectra = read_noise_spectra(&resolve(base, input))?;
    let n = spectra.freqs.len();
    let g_sys = 10f64.powf(cfg.chain.g_sys_db.expect("validated") / 10.0);
    let g_twpa = match cfg.chain.twpa_gain_db {
        Some(g) => vec![10f64.powf(g / 10.0); n],
        None => {
            let line = LineParams::new(cfg.cell(), cfg.device.cell_count as usize);
            let curve = gain_profile(&line, &pump(cfg)?, &spectra.freqs);
            curve
                .points
                .iter()
                .map(|p| {
                    p.gain_db.map(|g| 10f64.powf(g / 10.0)).ok_or_else(|| {
                        Error::domain(format!("no amplifier gain at {} Hz", p.freq_hz))
                    })
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    let gains = ChainGains {
        g_sys: vec![g_sys; n],
        g_twpa,
    };
    let n_add = added_noise(&spectra, &gains)?;
    let snri_db = snri(&spectra, &gains)?;
    let mut t = OutputTable::new(
        "noise.csv",
        &["freq_hz", "g_twpa_db", "n_add", "sql", "snri_db"],
    );
    for i in 0..n {
        t.push(vec![
            spectra.freqs[i],
            db(gains.g_twpa[i]),
            n_add[i],
            standard_quantum_limit(gains.g_twpa[i])?,
            snri_db[i],
        ]);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    Ok((
        vec![t],
        json!({
            "points": n,
            "mean_n_add": mean(&n_add),
            "min_n_add": n_add.iter().copied().fold(f64::INFINITY, f64::min),
            "mean_snri_db": mean(&snri_db),
            "inverted_points": spectra.inverted_points(),
        }),
    ))
}

fn calibrate(cfg: &ScenarioConfig, seed: u64, base: &Path) -> Outcome {
    let inputs = cfg.io.inputs.as_deref().expect("validated");
    let data = inputs
        .iter()
        .map(|p| read_qubit_dataset(&resolve(base, p)))
        .collect::<Result<Vec<_>>>()?;
    let fits = data
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let opts = QubitFitOptions {
                rabi_convention: cfg.sweep.rabi_convention.unwrap_or(DEFAULT_RABI_CONVENTION),
                starts: cfg.sweep.fit_starts.unwrap_or(5) as usize,
                seed: crate::circuit::derive_seed(seed, &format!("calibrate/{i}")),
                ..Default::default()
            };
            fit_qubit_dataset(d, &opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = OutputTable::new(
        "calibrate.csv",
        &[
            "qubit_freq_hz",
            "attenuation_db",
            "attenuation_err_db",
            "gamma1_hz",
            "gamma2_hz",
            "residual_rms",
        ],
    );
    for f in &fits {
        t.push(vec![
            f.params.freq_hz,
            f.params.attenuation_db,
            opt(f.std_err.map(|e| e.attenuation_db)),
            f.params.gamma1_hz,
            f.params.gamma2_hz,
            f.residual_rms,
        ]);
    }
    let points: Vec<(f64, f64)> = fits
        .iter()
        .map(|f| (f.params.freq_hz, f.params.attenuation_db))
        .collect();
    let model = if points.len() >= 2 {
        fit_attenuation_linear(&points).ok()
    } else {
        None
    };
    Ok((
        vec![t],
        json!({
            "fits": fits,
            "attenuation_model": model,
        }),
    ))
}

fn power_sweep(cfg: &ScenarioConfig) -> Outcome {
    let line = LineParams::new(cfg.cell(), cfg.device.cell_count as usize);
    let pump = pump(cfg)?;
    let signal_hz = cfg.sweep.signal_hz.expect("validated");
    let powers = cfg.power_grid();
    match cfg.sweep.swept.unwrap_or(Swept::Signal) {
        Swept::Signal => {
            let curve = gain_vs_input_power(&line, &pump, signal_hz, &powers)?;
            let mut t = OutputTable::new("power_sweep.csv", &["pin_dbm", "gain_db", "phase_deg"]);
            t.rows = curve
                .points
                .iter()
                .map(|p| vec![p.pin_dbm, p.gain_db, p.phase_deg])
                .collect();
            let pts: Vec<(f64, f64)> = curve
                .points
                .iter()
                .map(|p| (p.pin_dbm, p.phase_deg))
                .collect();
            let thr = cfg.sweep.phase_threshold_deg.unwrap_or(5.0);
            let c = curve.compression();
            Ok((
                vec![t],
                json!({
                    "signal_hz": signal_hz,
                    "small_signal_gain_db": c.small_signal_gain_db,
                    "p_1db_dbm": c.p_1db,
                    "phase_threshold_deg": thr,
                    "p_phase_dbm": crate::power::phase_distortion_point(&pts, thr),
                }),
            ))
        }
        Swept::Pump => {
            let n_sys = cfg
                .chain
                .system_noise_quanta
                .unwrap_or(DEFAULT_SYSTEM_NOISE_QUANTA);
            let pts = pump_sweep(
                &line,
                pump.frequency,
                &powers,
                signal_hz,
                PUMP_SWEEP_SIGNAL_BELOW_DB,
                n_sys,
            )?;
            let mut t = OutputTable::new("power_sweep.csv", &["pump_dbm", "gain_db", "snri_db"]);
            t.rows = pts
                .iter()
                .map(|p| vec![p.pump_dbm, opt(p.gain_db), opt(p.snri_db)])
                .collect();
            Ok((
                vec![t],
                json!({
                    "signal_hz": signal_hz,
                    "system_noise_quanta": n_sys,
                    "best_gain_pump_dbm": argmax_pump(&pts, |p| p.gain_db),
                    "best_snri_pump_dbm": argmax_pump(&pts, |p| p.snri_db),
                }),
            ))
        }
    }
}

fn imd(cfg: &ScenarioConfig) -> Outcome {
    let line = LineParams::new(cfg.cell(), cfg.device.cell_count as usize);
    let pump = pump(cfg)?;
    let s = &cfg.sweep;
    let opts = ImdOptions {
        max_order: s.max_order.unwrap_or(3) as u32,
        ..Default::default()
    };
    let (f1, f2) = (s.f1_hz.expect("validated"), s.f2_hz.expect("validated"));
    let pts = imd_sweep(&line, &pump, f1, f2, &cfg.power_grid(), &opts)?;
    let mut t = OutputTable::new("imd.csv", &["pin_dbm", "p_fund_dbm", "p_imd3_dbm"]);
    t.rows = pts
        .iter()
        .map(|p| vec![p.pin_dbm, p.p_fund_dbm, p.p_imd3_dbm])
        .collect();
    let fund: Vec<(f64, f64)> = pts.iter().map(|p| (p.pin_dbm, p.p_fund_dbm)).collect();
    let imd3: Vec<(f64, f64)> = pts.iter().map(|p| (p.pin_dbm, p.p_imd3_dbm)).collect();
    let ip3 = ip3_from_two_tone(&fund, &imd3);
    Ok((
        vec![t],
        json!({
            "f1_hz": f1,
            "f2_hz": f2,
            "max_order": opts.max_order,
            "fundamental_slope": small_signal_slope(&fund).ok(),
            "imd3_slope": small_signal_slope(&imd3).ok(),
            "ip3_dbm": ip3.as_ref().ok(),
            "ip3_error": ip3.as_ref().err().map(|e| e.to_string()),
        }),
    ))
}
