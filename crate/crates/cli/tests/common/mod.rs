#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn twpa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twpa"))
}

pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    twpa()
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

/// A small seeded Monte Carlo run, quick enough to repeat.
pub const SEEDED: &str = r#"
seed = 11

[device]
cell_count = 64
preset = "reference"

[disorder]
sigma_rel = 0.002
ensemble = 6

[sweep]
kind = "stopband_mc"
start_hz = 6.7e9
stop_hz = 6.95e9
step_hz = 2.5e6
"#;

const BASE: &str = r#"
[device]
cell_count = 16
preset = "reference"

[sweep]
kind = "dispersion"
start_hz = 1e9
stop_hz = 2e9
step_hz = 1e8
"#;

/// Each entry breaks one rule; the path is where the issue must be reported.
pub fn malformed_configs() -> Vec<(&'static str, String, &'static str)> {
    let swap = |from: &str, to: &str| {
        assert!(BASE.contains(from));
        BASE.replace(from, to)
    };
    vec![
        ("syntax error", swap("[sweep]", "[sweep"), ""),
        (
            "unknown top-level key",
            format!("colour = 1\n{BASE}"),
            "colour",
        ),
        (
            "typo in a sweep key",
            swap("stop_hz", "stpo_hz"),
            "sweep.stpo_hz",
        ),
        (
            "missing sweep kind",
            swap("kind = \"dispersion\"\n", ""),
            "sweep.kind",
        ),
        (
            "unknown sweep kind",
            swap("\"dispersion\"", "\"dispersal\""),
            "sweep.kind",
        ),
        (
            "negative cell count",
            swap("cell_count = 16", "cell_count = -4"),
            "device.cell_count",
        ),
        (
            "disorder out of range",
            format!("{BASE}\n[disorder]\nsigma_rel = 0.5\n"),
            "disorder.sigma_rel",
        ),
        (
            "gain without a pump",
            swap("\"dispersion\"", "\"gain\""),
            "pump",
        ),
        (
            "non-positive step",
            swap("step_hz = 1e8", "step_hz = 0.0"),
            "sweep.step_hz",
        ),
        (
            "string in a float slot",
            swap("start_hz = 1e9", "start_hz = \"1 GHz\""),
            "sweep.start_hz",
        ),
    ]
}

/// Rows of every CSV in `dir` with provenance lines removed, by file name.
pub fn csv_bodies(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let body: String = text
                .lines()
                .filter(|l| !l.starts_with('!'))
                .map(|l| format!("{l}\n"))
                .collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), body)
        })
        .collect();
    out.sort();
    out
}
