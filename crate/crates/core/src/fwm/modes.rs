//! Coupled-mode equations for an arbitrary set of Kerr-coupled modes.
//!
//! Each mode's frequency is an integer combination of up to three base
//! frequencies (pump and two tones), so frequency matching between modes is
//! exact. Amplitudes `y_m` are normalized so that `|y_m|²` is photon flux in
//! units of the input pump flux, and the current on the line for mode `m` is
//! `I_m / I_c = r · √(k_m / k_p) · y_m` with `r = I_p / I_c`.
//!
//! The evolution is `dy_m/dx = i ∂H/∂y_m*` with `H ∝ ⟨S⁴⟩`, `S` the total
//! line current, keeping only the number-conserving (two in, two out) terms.
//! That single quartic form produces self- and cross-phase modulation and
//! every four-wave-mixing process in the set with consistent prefactors:
//! pump self-phase `k_p r²/8`, cross-phase on mode m `k_m r²/4`, degenerate
//! parametric coupling `√(k_s k_i) r²/8`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};

pub type C64 = Complex64;

/// Integer coefficients on (pump, tone 1, tone 2).
pub type Combo = [i32; 3];

pub const PUMP: Combo = [1, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub combo: Combo,
    /// rad/s
    pub omega: f64,
    /// Real part of the Bloch wavenumber, rad/cell.
    pub k: f64,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    target: usize,
    plus: [usize; 2],
    minus: usize,
    coeff: f64,
    dk: f64,
    pump_factors: u8,
}

/// Which couplings are retained when integrating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depletion {
    /// Pump keeps only its self-phase; every other mode keeps only terms
    /// linear in the weak modes (two pump factors).
    Undepleted,
    /// All terms.
    Depleted,
}

#[derive(Debug, Clone)]
pub struct MixingSystem {
    modes: Vec<Mode>,
    terms: Vec<Term>,
    pump: usize,
}

pub const MAX_MODES: usize = 25;

fn combo_add(a: Combo, b: Combo, c: Combo) -> Combo {
    [a[0] + b[0] - c[0], a[1] + b[1] - c[1], a[2] + b[2] - c[2]]
}

impl MixingSystem {
    /// `r2 = (I_p/I_c)²` for the input pump. The pump must be present
    /// exactly once with combo [`PUMP`].
    pub fn new(modes: Vec<Mode>, r2: f64) -> Result<Self> {
        if modes.len() > MAX_MODES {
            return Err(Error::Config(format!(
                "{} modes exceed the limit of {MAX_MODES}",
                modes.len()
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].iter().any(|o| o.combo == m.combo) {
                return Err(Error::Config(format!("duplicate mode {:?}", m.combo)));
            }
            // k = 0 (upper stopband) leaves a mode uncoupled; the pump needs k > 0
            let k_ok = if m.combo == PUMP {
                m.k > 0.0
            } else {
                m.k >= 0.0
            };
            if !(m.omega > 0.0) || !k_ok {
                return Err(Error::domain(format!(
                    "mode {:?} needs positive frequency and wavenumber",
                    m.combo
                )));
            }
        }
        let pump = modes
            .iter()
            .position(|m| m.combo == PUMP)
            .ok_or_else(|| Error::Config("mode set has no pump".into()))?;
        let kp = modes[pump].k;
        let w: Vec<f64> = modes.iter().map(|m| m.k.sqrt()).collect();
        let n = modes.len();
        let mut terms = Vec::new();
        for (t, mt) in modes.iter().enumerate() {
            for a in 0..n {
                for b in a..n {
                    for c in 0..n {
                        if combo_add(modes[a].combo, modes[b].combo, modes[c].combo) != mt.combo {
                            continue;
                        }
                        // ordered arrangements of the three factors in S³
                        let mult = if a == b { 3.0 } else { 6.0 };
                        let coeff = mult / 24.0 * w[t] * w[a] * w[b] * w[c] * r2 / kp;
                        let pump_factors = [a, b, c].iter().filter(|&&i| i == pump).count() as u8;
                        terms.push(Term {
                            target: t,
                            plus: [a, b],
                            minus: c,
                            coeff,
                            dk: modes[a].k + modes[b].k - modes[c].k - mt.k,
                            pump_factors,
                        });
                    }
                }
            }
        }
        Ok(Self { modes, terms, pump })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn pump_index(&self) -> usize {
        self.pump
    }

    pub fn index_of(&self, combo: Combo) -> Option<usize> {
        self.modes.iter().position(|m| m.combo == combo)
    }

    fn active(&self, t: &Term, depletion: Depletion) -> bool {
        match depletion {
            Depletion::Depleted => true,
            Depletion::Undepleted => {
                if t.target == self.pump {
                    t.pump_factors == 3
                } else {
                    t.pump_factors == 2
                }
            }
        }
    }

    pub fn derivative(&self, x: f64, y: &[C64], dy: &mut [C64], depletion: Depletion) {
        dy.iter_mut().for_each(|d| *d = C64::new(0.0, 0.0));
        for t in &self.terms {
            if !self.active(t, depletion) {
                continue;
            }
            let prod = y[t.plus[0]] * y[t.plus[1]] * y[t.minus].conj();
            let phase = C64::from_polar(1.0, t.dk * x);
            dy[t.target] += C64::new(0.0, t.coeff) * prod * phase;
        }
    }

    /// Integrates from cell 0 to `length` cells starting from `y`.
    pub fn integrate(
        &self,
        y: &mut [C64],
        length: f64,
        depletion: Depletion,
        tol: Tolerance,
    ) -> Result<ode::Stats> {
        let n = self.modes.len();
        assert_eq!(y.len(), n);
        let mut state: Vec<f64> = y.iter().flat_map(|c| [c.re, c.im]).collect();
        let stats = ode::integrate(
            |x, s, ds| {
                let mut yc = [C64::new(0.0, 0.0); MAX_MODES];
                let mut dc = [C64::new(0.0, 0.0); MAX_MODES];
                for (c, p) in yc.iter_mut().zip(s.chunks_exact(2)) {
                    *c = C64::new(p[0], p[1]);
                }
                self.derivative(x, &yc[..n], &mut dc[..n], depletion);
                for (i, d) in dc[..n].iter().enumerate() {
                    ds[2 * i] = d.re;
                    ds[2 * i + 1] = d.im;
                }
            },
            0.0,
            length,
            &mut state,
            tol,
        )?;
        for (i, c) in y.iter_mut().enumerate() {
            *c = C64::new(state[2 * i], state[2 * i + 1]);
        }
        Ok(stats)
    }

    /// Total photon flux Σ|y|².
    pub fn photon_number(&self, y: &[C64]) -> f64 {
        y.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Frequency-weighted flux Σ ω|y|² (rad/s · flux units).
    pub fn energy(&self, y: &[C64]) -> f64 {
        y.iter()
            .zip(&self.modes)
            .map(|(c, m)| m.omega * c.norm_sqr())
            .sum()
    }

    /// Number of retained coupling terms, for diagnostics.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn three(ks: f64, kp: f64, ki: f64) -> Vec<Mode> {
        let wp = 2.0 * PI * 6e9;
        let ws = 2.0 * PI * 5e9;
        vec![
            Mode {
                combo: PUMP,
                omega: wp,
                k: kp,
            },
            Mode {
                combo: [0, 1, 0],
                omega: ws,
                k: ks,
            },
            Mode {
                combo: [2, -1, 0],
                omega: 2.0 * wp - ws,
                k: ki,
            },
        ]
    }

    #[test]
    fn three_mode_term_structure() {
        let sys = MixingSystem::new(three(0.5, 0.6, 0.7), 0.1).unwrap();
        // pump: SPM, 2 XPM, 1 parametric back-conversion
        // signal: SPM, 2 XPM, parametric ; idler: same
        assert_eq!(sys.term_count(), 12);
    }

    #[test]
    fn pump_self_phase_rate() {
        let (kp, r2) = (0.6, 0.2);
        let sys = MixingSystem::new(three(0.5, kp, 0.7), r2).unwrap();
        let y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let mut dy = [C64::new(0.0, 0.0); 3];
        sys.derivative(0.0, &y, &mut dy, Depletion::Depleted);
        assert!((dy[0].im - kp * r2 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_oversized_or_pumpless_sets() {
        let modes: Vec<Mode> = (0..26)
            .map(|i| Mode {
                combo: [i, 0, 0],
                omega: 1.0,
                k: 1.0,
            })
            .collect();
        assert!(MixingSystem::new(modes, 0.1).is_err());
        let mut m = three(0.5, 0.6, 0.7);
        m.remove(0);
        assert!(MixingSystem::new(m, 0.1).is_err());
    }
}
