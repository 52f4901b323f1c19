//! Levenberg–Marquardt for real residual vectors, with a central-difference
//! Jacobian and Marquardt (diagonal) scaling of the damping term.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    /// Stop when the step is smaller than this relative to the parameters.
    pub xtol: f64,
    pub lambda0: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-14,
            xtol: 1e-13,
            lambda0: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub n_residuals: usize,
    pub iterations: usize,
    /// `(JᵀJ)⁻¹` at the solution, if it is invertible.
    pub jtj_inv: Option<DMatrix<f64>>,
}

impl LmResult {
    pub fn rms(&self) -> f64 {
        (self.cost / self.n_residuals as f64).sqrt()
    }

    /// Standard errors `√(s² diag (JᵀJ)⁻¹)` with `s² = cost/(m − n)`.
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        let inv = self.jtj_inv.as_ref()?;
        let dof = self.n_residuals.saturating_sub(self.x.len()).max(1) as f64;
        let s2 = self.cost / dof;
        Some(
            (0..self.x.len())
                .map(|i| (s2 * inv[(i, i)]).max(0.0).sqrt())
                .collect(),
        )
    }
}

fn jacobian<F>(f: &F, x: &[f64], m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1e-3);
        xp[j] = x[j] + h;
        f(&xp, &mut rp);
        xp[j] = x[j] - h;
        f(&xp, &mut rm);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes `Σ r_i(x)²` where `f(x, r)` fills the `m` residuals.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], m: usize, opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x0.len();
    if m < n {
        return Err(Error::Fit {
            message: format!("{m} residuals for {n} parameters"),
            residual_rms: f64::NAN,
        });
    }
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    f(&x, &mut r);
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::Fit {
            message: "non-finite residual at the starting point".into(),
            residual_rms: f64::NAN,
        });
    }
    let mut lambda = opts.lambda0;
    let mut trial = vec![0.0; m];
    let mut xt = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        let jac = jacobian(&f, &x, m);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            for i in 0..n {
                xt[i] = x[i] + step[i];
            }
            f(&xt, &mut trial);
            let c_new = sum_sq(&trial);
            if c_new.is_finite() && c_new <= cost {
                let small_step = step
                    .iter()
                    .zip(&x)
                    .all(|(s, xi)| s.abs() <= opts.xtol * (xi.abs() + opts.xtol));
                let small_gain = cost - c_new <= opts.ftol * cost;
                x.copy_from_slice(&xt);
                r.copy_from_slice(&trial);
                cost = c_new;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small_step || small_gain || cost == 0.0 {
                    return Ok(finish(&f, x, cost, m, iter));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary to working precision
            return Ok(finish(&f, x, cost, m, iter));
        }
    }
    Err(Error::Fit {
        message: format!("no convergence after {} iterations", opts.max_iter),
        residual_rms: (cost / m as f64).sqrt(),
    })
}

fn finish<F>(f: &F, x: Vec<f64>, cost: f64, m: usize, iterations: usize) -> LmResult
where
    F: Fn(&[f64], &mut [f64]),
{
    let jac = jacobian(f, &x, m);
    let jtj_inv = (jac.transpose() * &jac).try_inverse();
    LmResult {
        x,
        cost,
        n_residuals: m,
        iterations,
        jtj_inv,
    }
}
