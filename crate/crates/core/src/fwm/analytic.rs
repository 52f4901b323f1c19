//! Closed-form undepleted-pump parametric gain.

use crate::error::{Error, Result};

/// sinh(√x)/√x and cosh(√x) for real x of either sign, continuous through 0.
fn sinhc_cosh(x: f64) -> (f64, f64) {
    if x.abs() < 1e-4 {
        let s = 1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0;
        let c = 1.0 + x / 2.0 + x * x / 24.0 + x * x * x / 720.0;
        (s, c)
    } else if x > 0.0 {
        let r = x.sqrt();
        (r.sinh() / r, r.cosh())
    } else {
        let r = (-x).sqrt();
        (r.sin() / r, r.cos())
    }
}

/// Signal and idler power gain after `n_cells` for coupling `kappa` and total
/// phase mismatch `delta_k`, both per cell.
///
/// With `g² = κ² − (Δk/2)²`: `G_i = (κ/g)² sinh²(gN)` and `G_s = 1 + G_i`,
/// which equals `cosh²(gN) + (Δk/2g)² sinh²(gN)`.
pub fn analytic_gain(kappa: f64, delta_k: f64, n_cells: f64) -> Result<(f64, f64)> {
    if !(n_cells >= 1.0) {
        return Err(Error::domain(format!(
            "n_cells must be >= 1, got {n_cells}"
        )));
    }
    let g2 = kappa * kappa - 0.25 * delta_k * delta_k;
    let (s, _) = sinhc_cosh(g2 * n_cells * n_cells);
    let g_i = (kappa * n_cells * s).powi(2);
    Ok((1.0 + g_i, g_i))
}

/// `G_s` by the cosh/sinh form, kept separate from [`analytic_gain`] so the
/// two algebraic routes can be compared.
pub fn analytic_signal_gain_cosh_form(kappa: f64, delta_k: f64, n_cells: f64) -> f64 {
    let g2 = kappa * kappa - 0.25 * delta_k * delta_k;
    let x = g2 * n_cells * n_cells;
    let (s, c) = sinhc_cosh(x);
    c * c + (0.5 * delta_k * n_cells * s).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_matched_gain_of_four() {
        // κN = arccosh(2): cosh² = 4, sinh² = 3
        let kn = 2f64.acosh();
        let (gs, gi) = analytic_gain(kn / 100.0, 0.0, 100.0).unwrap();
        assert!((gs - 4.0).abs() < 1e-12 && (gi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_coupling_no_gain() {
        for dk in [0.0, 0.01, 1.0] {
            let (gs, gi) = analytic_gain(0.0, dk, 256.0).unwrap();
            assert_eq!((gs, gi), (1.0, 0.0));
        }
    }

    #[test]
    fn continuous_across_ridge() {
        let (kappa, n) = (0.01, 256.0);
        let dk0 = 2.0 * kappa;
        let eps = 1e-10;
        let (a, _) = analytic_gain(kappa, dk0 * (1.0 - eps), n).unwrap();
        let (b, _) = analytic_gain(kappa, dk0 * (1.0 + eps), n).unwrap();
        let (c, _) = analytic_gain(kappa, dk0, n).unwrap();
        assert!((a - b).abs() < 1e-8 && (a - c).abs() < 1e-8);
        // g = 0 limit: 1 + (κN)²
        assert!((c - (1.0 + (kappa * n).powi(2))).abs() < 1e-9);
    }

    #[test]
    fn small_gain_limit() {
        let n = 100.0;
        let kappa = 1e-3 / n;
        let (gs, _) = analytic_gain(kappa, 0.0, n).unwrap();
        let rel = ((gs - 1.0) - (kappa * n).powi(2)).abs() / (kappa * n).powi(2);
        assert!(rel < 1e-3);
    }

    #[test]
    fn cosh_form_agrees() {
        for &(k, dk) in &[(0.01, 0.0), (0.01, 0.015), (0.01, 0.03), (0.005, 0.1)] {
            let (gs, _) = analytic_gain(k, dk, 256.0).unwrap();
            let alt = analytic_signal_gain_cosh_form(k, dk, 256.0);
            assert!((gs - alt).abs() < 1e-9 * gs);
        }
    }

    #[test]
    fn rejects_empty_line() {
        assert!(analytic_gain(0.01, 0.0, 0.0).is_err());
    }
}
