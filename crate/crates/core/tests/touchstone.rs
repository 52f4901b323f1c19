use std::path::{Path, PathBuf};

use proptest::prelude::*;
use twpa_core::circuit::DeviceLine;
use twpa_core::fwm::resonator_stopband;
use twpa_core::network::*;
use twpa_core::reference::*;
use twpa_core::Error;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn polar(m: f64, deg: f64) -> C64 {
    C64::from_polar(m, deg.to_radians())
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[test]
fn ma_in_ghz() {
    let n = read_touchstone(&data("ma_ghz.s2p")).unwrap();
    assert_eq!(n.format, DataFormat::MA);
    assert_eq!(n.unit, FrequencyUnit::GHz);
    assert_eq!(n.frequencies, vec![1.0e9, 1.5e9, 2.0e9]);
    assert!(close(n.s_data[0].s11, polar(0.9, -10.0), 1e-15));
    // two-port column order is S11 S21 S12 S22
    assert!(close(n.s_data[1].s21, polar(0.6, 40.0), 1e-15));
    assert!(close(n.s_data[2].s22, polar(0.3, 20.0), 1e-15));
}

#[test]
fn db_in_mhz_lowercase_options() {
    let n = read_touchstone(&data("db_mhz.s2p")).unwrap();
    assert_eq!(n.unit, FrequencyUnit::MHz);
    assert_eq!(n.frequencies, vec![100e6, 200e6]);
    let s = n.s_data[0];
    assert!((s.s11.norm() - 0.5).abs() < 1e-4);
    assert!(close(s.s22, C64::new(-0.5, 0.0), 1e-4));
    assert!(close(s.s21, C64::new(0.0, -0.9), 1e-4));
    assert!((n.s_data[1].s11.norm() - 0.1).abs() < 1e-12);
}

#[test]
fn ri_in_khz_with_reference_impedance() {
    let n = read_touchstone(&data("ri_khz.s2p")).unwrap();
    assert_eq!(n.unit, FrequencyUnit::KHz);
    assert_eq!(n.z_ref, 75.0);
    assert_eq!(n.frequencies, vec![0.5e9, 1.0e9]);
    assert_eq!(n.s_data[0].s11, C64::new(0.1, 0.2));
    assert_eq!(n.s_data[1].s12, C64::new(0.8, -0.3));
    assert!(n.s_data.iter().all(|s| s.z_ref == 75.0));
}

#[test]
fn ri_in_hz_with_blank_lines_and_tabs() {
    let n = read_touchstone(&data("ri_hz.s2p")).unwrap();
    assert_eq!(n.unit, FrequencyUnit::Hz);
    assert_eq!(n.frequencies, vec![1e9, 2e9, 3e9]);
    assert_eq!(n.s_data[2].s21, C64::new(0.0, 1.0));
}

#[test]
fn malformed_files_report_line_numbers() {
    let cases = [
        ("bad_format.s2p", 1),
        ("missing_r.s2p", 2),
        ("nonmonotonic.s2p", 4),
        ("incomplete_row.s2p", 4),
        ("version2.s2p", 1),
        ("y_params.s2p", 1),
        ("too_many.s2p", 2),
        ("bad_number.s2p", 2),
        ("no_option.s2p", 1),
    ];
    for (file, want) in cases {
        match read_touchstone(&data(&format!("malformed/{file}"))) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, want, "{file}: {message}")
            }
            other => panic!("{file}: expected a parse error, got {other:?}"),
        }
    }
}

#[test]
fn golden_files_round_trip() {
    for f in [
        "ma_ghz.s2p",
        "db_mhz.s2p",
        "ri_khz.s2p",
        "ri_hz.s2p",
        "package.s2p",
    ] {
        let a = read_touchstone(&data(f)).unwrap();
        let b = parse_touchstone(&serialize_touchstone(&a)).unwrap();
        assert_eq!(a.format, b.format);
        assert_eq!(a.unit, b.unit);
        assert_eq!(a.z_ref, b.z_ref);
        for (x, y) in a.frequencies.iter().zip(&b.frequencies) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
        for (x, y) in a.s_data.iter().zip(&b.s_data) {
            for (p, q) in [
                (x.s11, y.s11),
                (x.s21, y.s21),
                (x.s12, y.s12),
                (x.s22, y.s22),
            ] {
                assert!(close(p, q, 1e-12), "{f}");
            }
        }
    }
}

#[test]
fn identity_is_neutral_in_cascades() {
    let a = read_touchstone(&data("ma_ghz.s2p")).unwrap();
    let id = TouchstoneNetwork::from_data(
        a.frequencies.clone(),
        vec![SMatrix::through(a.z_ref); a.len()],
        a.z_ref,
    )
    .unwrap();
    for c in [
        cascade_networks(&[&a, &id]).unwrap(),
        cascade_networks(&[&id, &a]).unwrap(),
    ] {
        for (x, y) in a.s_data.iter().zip(&c.s_data) {
            assert!(close(x.s11, y.s11, 1e-12));
            assert!(close(x.s21, y.s21, 1e-12));
            assert!(close(x.s12, y.s12, 1e-12));
            assert!(close(x.s22, y.s22, 1e-12));
        }
    }
}

#[test]
fn cascade_rejects_mismatched_grids_and_references() {
    let a = read_touchstone(&data("ma_ghz.s2p")).unwrap();
    let b = read_touchstone(&data("ri_hz.s2p")).unwrap();
    match cascade_networks(&[&a, &b]) {
        Err(Error::GridMismatch { index, left, right }) => {
            assert_eq!((index, left, right), (1, 1.5e9, 2e9));
        }
        other => panic!("{other:?}"),
    }
    let mut c = a.clone();
    c.z_ref = 75.0;
    assert!(cascade_networks(&[&a, &c]).is_err());
}

fn twpa_network(freqs: &[f64]) -> TouchstoneNetwork {
    let line = DeviceLine::uniform(reference_cell(), REFERENCE_CELL_COUNT);
    let s = transmission_spectrum(&line, freqs, 50.0)
        .unwrap()
        .into_iter()
        .map(|p| p.s.unwrap())
        .collect();
    TouchstoneNetwork::from_data(freqs.to_vec(), s, 50.0).unwrap()
}

#[test]
fn package_adds_ripple_to_the_device() {
    let sb = resonator_stopband(&reference_cell()).unwrap();
    let freqs: Vec<f64> = linear_grid(4e9, 8e9, 5e6)
        .into_iter()
        .filter(|&f| f < sb.lower_hz - 50e6 || f > sb.upper_hz + 50e6)
        .collect();
    let package = resample(&read_touchstone(&data("package.s2p")).unwrap(), &freqs).unwrap();
    let twpa = twpa_network(&freqs);
    let chain = cascade_networks(&[&package, &twpa, &package]).unwrap();
    let ripple = |n: &TouchstoneNetwork| {
        let m: Vec<f64> = n.s_data.iter().map(|s| s.s21.norm()).collect();
        m.iter().copied().fold(f64::MIN, f64::max) - m.iter().copied().fold(f64::MAX, f64::min)
    };
    assert!(
        ripple(&chain) > ripple(&twpa),
        "{} vs {}",
        ripple(&chain),
        ripple(&twpa)
    );
    for s in &chain.s_data {
        assert!((s.s12 - s.s21).norm() < 1e-9);
    }
}

#[test]
fn reciprocal_networks_cascade_to_a_reciprocal_network() {
    let freqs = linear_grid(4e9, 5e9, 100e6);
    let twpa = twpa_network(&freqs);
    let package = resample(&read_touchstone(&data("package.s2p")).unwrap(), &freqs).unwrap();
    let c = cascade_networks(&[&twpa, &package]).unwrap();
    for s in &c.s_data {
        assert!((s.s12 - s.s21).norm() < 1e-9);
    }
}

#[test]
fn spectrum_csv_columns() {
    let s = SMatrix {
        s11: C64::new(0.1, 0.2),
        s21: C64::new(0.3, 0.4),
        s12: C64::new(0.5, 0.6),
        s22: C64::new(0.7, 0.8),
        z_ref: 50.0,
    };
    assert_eq!(SPECTRUM_CSV_HEADER.split(',').count(), 9);
    assert_eq!(
        spectrum_csv_row(1e9, &s),
        "1000000000,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8"
    );
}

fn arb_matrix() -> impl Strategy<Value = SMatrix> {
    let c = || (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b));
    (c(), c(), c(), c()).prop_map(|(s11, s21, s12, s22)| SMatrix {
        s11,
        s21,
        s12,
        s22,
        z_ref: 50.0,
    })
}

fn arb_format() -> impl Strategy<Value = DataFormat> {
    prop_oneof![
        Just(DataFormat::MA),
        Just(DataFormat::DB),
        Just(DataFormat::RI)
    ]
}

fn arb_unit() -> impl Strategy<Value = FrequencyUnit> {
    prop_oneof![
        Just(FrequencyUnit::Hz),
        Just(FrequencyUnit::KHz),
        Just(FrequencyUnit::MHz),
        Just(FrequencyUnit::GHz)
    ]
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(
        steps in prop::collection::vec(1e3..1e9f64, 1..20),
        mats in prop::collection::vec(arb_matrix(), 20),
        format in arb_format(),
        unit in arb_unit(),
    ) {
        let mut f = 1e6;
        let frequencies: Vec<f64> = steps.iter().map(|d| { f += d; f }).collect();
        let mut net = TouchstoneNetwork::from_data(
            frequencies.clone(), mats[..frequencies.len()].to_vec(), 50.0).unwrap();
        net.format = format;
        net.unit = unit;
        let once = parse_touchstone(&serialize_touchstone(&net)).unwrap();
        let twice = parse_touchstone(&serialize_touchstone(&once)).unwrap();
        prop_assert_eq!(&once.frequencies, &twice.frequencies);
        for (x, y) in once.s_data.iter().zip(&twice.s_data) {
            prop_assert!(close(x.s11, y.s11, 1e-12) && close(x.s21, y.s21, 1e-12));
            prop_assert!(close(x.s12, y.s12, 1e-12) && close(x.s22, y.s22, 1e-12));
        }
        for (x, y) in net.s_data.iter().zip(&once.s_data) {
            prop_assert!(close(x.s21, y.s21, 1e-12));
        }
    }
}
