mod common;

use common::*;
use tempfile::tempdir;

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes)
        .unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(bytes)))
}

#[test]
fn same_seed_gives_identical_tables_for_any_worker_count() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("mc.toml");
    std::fs::write(&cfg, SEEDED).unwrap();
    let mut bodies = Vec::new();
    for workers in ["1", "4"] {
        for rep in 0..2 {
            let out = dir.path().join(format!("out_{workers}_{rep}"));
            let o = run_config(&cfg, &out, &["--workers", workers]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            bodies.push(csv_bodies(&out));
        }
    }
    assert!(!bodies[0].is_empty());
    for b in &bodies[1..] {
        assert_eq!(b, &bodies[0]);
    }
}

#[test]
fn seed_override_changes_results() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("mc.toml");
    std::fs::write(&cfg, SEEDED).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_config(&cfg, &a, &[]).status.success());
    assert!(run_config(&cfg, &b, &["--seed", "12"]).status.success());
    assert_ne!(csv_bodies(&a), csv_bodies(&b));
    let text = std::fs::read_to_string(b.join("stopband.csv")).unwrap();
    assert!(text.lines().any(|l| l == "! seed=12"));
}

#[test]
fn malformed_configs_exit_2_with_paths() {
    let dir = tempdir().unwrap();
    for (name, text, path) in malformed_configs() {
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, &text).unwrap();
        let out = dir.path().join("out");
        let o = run_config(&cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!out.exists(), "{name} wrote output");
        let doc = json(&o.stderr);
        assert_eq!(doc["status"], "validation_error", "{name}");
        let paths: Vec<&str> = doc["issues"]
            .as_array()
            .unwrap()
            .iter()
            .map(|i| i["path"].as_str().unwrap())
            .collect();
        assert!(paths.contains(&path), "{name}: {paths:?}");

        let v = twpa()
            .arg("validate")
            .arg("--config")
            .arg(&cfg)
            .output()
            .unwrap();
        assert_eq!(v.status.code(), Some(2), "{name}");
        assert_eq!(json(&v.stdout)["valid"], false);
    }
}

#[test]
fn several_problems_are_reported_together() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[device]\ncell_count = 0\npreset = \"reference\"\n[disorder]\nsigma_rel = 0.5\n\
         [sweep]\nkind = \"dispersion\"\nstart_hz = \"x\"\nstop_hz = 2e9\nstep_hz = 1e6\n",
    )
    .unwrap();
    let v = twpa()
        .arg("validate")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    let doc = json(&v.stdout);
    let issues = doc["issues"].as_array().unwrap();
    assert_eq!(issues.len(), 3, "{doc}");
}

#[test]
fn shipped_configs_validate() {
    let mut n = 0;
    for e in std::fs::read_dir(scenarios_dir()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let v = twpa()
                .arg("validate")
                .arg("--config")
                .arg(&p)
                .output()
                .unwrap();
            assert!(
                v.status.success(),
                "{}: {}",
                p.display(),
                String::from_utf8_lossy(&v.stdout)
            );
            n += 1;
        }
    }
    assert!(n >= 9);
}

#[test]
fn missing_files_exit_4() {
    let dir = tempdir().unwrap();
    let o = run_config(&dir.path().join("nope.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o.stderr)["status"], "io_error");

    let cfg = dir.path().join("cal.toml");
    std::fs::write(
        &cfg,
        "[device]\ncell_count = 256\npreset = \"reference\"\n\
         [sweep]\nkind = \"calibrate\"\n[io]\ninputs = [\"absent.csv\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
}

#[test]
fn computation_failure_exits_3_without_output() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("imd.toml");
    std::fs::write(
        &cfg,
        "[device]\ncell_count = 256\npreset = \"reference\"\n\
         [pump]\nfrequency_hz = 6.688e9\npower_dbm = -73\n\
         [sweep]\nkind = \"imd\"\nf1_hz = 1e9\nf2_hz = 3e9\n\
         power_start_dbm = -140\npower_stop_dbm = -130\npower_step_db = 5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run_config(&cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&o.stderr)["status"], "computation_error");
    assert!(!out.exists());
}

#[test]
fn zero_workers_is_rejected() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("mc.toml");
    std::fs::write(&cfg, SEEDED).unwrap();
    let o = run_config(&cfg, &dir.path().join("out"), &["--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn touchstone_convert_and_resample() {
    let dir = tempdir().unwrap();
    let src = scenarios_dir().join("data/package.s2p");
    let ri = dir.path().join("pkg_ri.s2p");
    let o = twpa()
        .args(["touchstone", "convert"])
        .arg(&src)
        .arg(&ri)
        .args(["--format", "ri", "--unit", "mhz"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = twpa_core::network::read_touchstone(&src).unwrap();
    let b = twpa_core::network::read_touchstone(&ri).unwrap();
    assert_eq!(b.format, twpa_core::network::DataFormat::RI);
    assert_eq!(b.unit, twpa_core::network::FrequencyUnit::MHz);
    for (x, y) in a.s_data.iter().zip(&b.s_data) {
        assert!((x.s21 - y.s21).norm() < 1e-12);
    }

    let rs = dir.path().join("pkg_rs.s2p");
    let o = twpa()
        .args(["touchstone", "resample"])
        .arg(&src)
        .arg(&rs)
        .args(["--start", "2e9", "--stop", "3e9", "--step", "1e8"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(twpa_core::network::read_touchstone(&rs).unwrap().len(), 11);

    let o = twpa()
        .args(["touchstone", "resample"])
        .arg(&src)
        .arg(dir.path().join("x.s2p"))
        .args(["--start", "20e9", "--stop", "30e9", "--step", "1e9"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));

    let o = twpa()
        .args(["touchstone", "convert"])
        .arg(dir.path().join("missing.s2p"))
        .arg(dir.path().join("y.s2p"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}
