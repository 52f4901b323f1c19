//! Two-port chain (ABCD) and scattering representations at a single frequency.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPortABCD {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl TwoPortABCD {
    pub const IDENTITY: Self = Self {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub fn series(z: C64) -> Self {
        Self {
            b: z,
            ..Self::IDENTITY
        }
    }

    pub fn shunt(y: C64) -> Self {
        Self {
            c: y,
            ..Self::IDENTITY
        }
    }

    pub fn determinant(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    /// Standard conversion to S-parameters at a real reference impedance.
    pub fn to_s(&self, z_ref: f64) -> Result<SMatrix> {
        if !(z_ref > 0.0) {
            return Err(Error::Conversion(format!("z_ref must be > 0, got {z_ref}")));
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let den = a + b / z_ref + c * z_ref + d;
        if den.norm() == 0.0 || !den.is_finite() {
            return Err(Error::Conversion("vanishing ABCD→S denominator".into()));
        }
        Ok(SMatrix {
            s11: (a + b / z_ref - c * z_ref - d) / den,
            s12: 2.0 * self.determinant() / den,
            s21: 2.0 / den,
            s22: (-a + b / z_ref - c * z_ref + d) / den,
            z_ref,
        })
    }
}

impl Mul for TwoPortABCD {
    type Output = Self;

    fn mul(self, r: Self) -> Self {
        Self {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMatrix {
    pub s11: C64,
    pub s12: C64,
    pub s21: C64,
    pub s22: C64,
    pub z_ref: f64,
}

impl SMatrix {
    pub fn through(z_ref: f64) -> Self {
        Self {
            s11: ZERO,
            s12: ONE,
            s21: ONE,
            s22: ZERO,
            z_ref,
        }
    }

    pub fn to_abcd(&self) -> Result<TwoPortABCD> {
        let (s11, s12, s21, s22) = (self.s11, self.s12, self.s21, self.s22);
        if s21.norm() == 0.0 {
            return Err(Error::Conversion(
                "s21 = 0 has no chain-matrix representation".into(),
            ));
        }
        let z = self.z_ref;
        let den = 2.0 * s21;
        Ok(TwoPortABCD {
            a: ((ONE + s11) * (ONE - s22) + s12 * s21) / den,
            b: z * ((ONE + s11) * (ONE + s22) - s12 * s21) / den,
            c: ((ONE - s11) * (ONE - s22) - s12 * s21) / (den * z),
            d: ((ONE - s11) * (ONE + s22) + s12 * s21) / den,
        })
    }

    /// |s21|² in dB.
    pub fn transmission_db(&self) -> f64 {
        10.0 * self.s21.norm_sqr().log10()
    }

    /// |s11|² + |s21|², unity for a lossless network.
    pub fn column_power(&self) -> f64 {
        self.s11.norm_sqr() + self.s21.norm_sqr()
    }
}

/// Free-function form of [`TwoPortABCD::to_s`].
pub fn abcd_to_s(m: &TwoPortABCD, z_ref: f64) -> Result<SMatrix> {
    m.to_s(z_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_through() {
        let s = TwoPortABCD::IDENTITY.to_s(50.0).unwrap();
        assert_eq!(s.s21, ONE);
        assert_eq!(s.s11, ZERO);
    }

    #[test]
    fn matched_series_impedance() {
        let s = TwoPortABCD::series(C64::new(50.0, 0.0)).to_s(50.0).unwrap();
        assert_relative_eq!(s.s11.re, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.s21.re, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(s.s11.im, 0.0);
        assert_eq!(s.s21.im, 0.0);
    }

    #[test]
    fn s_abcd_round_trip() {
        let m = TwoPortABCD::series(C64::new(3.0, 20.0)) * TwoPortABCD::shunt(C64::new(0.0, 0.01));
        let back = m.to_s(50.0).unwrap().to_abcd().unwrap();
        for (x, y) in [(m.a, back.a), (m.b, back.b), (m.c, back.c), (m.d, back.d)] {
            assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn bad_reference_rejected() {
        assert!(TwoPortABCD::IDENTITY.to_s(0.0).is_err());
        // A + B/Z + CZ + D = 0
        let m = TwoPortABCD {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: -ONE,
        };
        assert!(m.to_s(50.0).is_err());
    }

    #[test]
    fn power_matches_repeated_product() {
        let m = TwoPortABCD::series(C64::new(0.0, 5.0)) * TwoPortABCD::shunt(C64::new(0.0, 0.002));
        let mut p = TwoPortABCD::IDENTITY;
        for _ in 0..7 {
            p = p * m;
        }
        let q = m.pow(7);
        assert!((p.a - q.a).norm() < 1e-12 && (p.b - q.b).norm() < 1e-10);
    }
}
