//! CODATA physical constants in SI units.

use serde::{Deserialize, Serialize};

/// Fixed physical constants. Not user-configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Bohr magneton (J/T).
    pub mu_b: f64,
    /// Electron spin g-factor.
    pub g_s: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
}

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const MU_B: f64 = 9.274_010_078_3e-24;
pub const G_S: f64 = 2.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Two pi, used for Hz to rad/s conversion.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_b: K_B,
        mu_b: MU_B,
        g_s: G_S,
        eps0: EPS0,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Bose occupation of a mode at angular frequency `omega` and temperature `t` (K).
pub fn bose_occupation(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * t);
    1.0 / x.exp_m1()
}

/// Temperature at which a mode at `omega` holds `n` thermal quanta.
pub fn temperature_for_occupation(omega: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    HBAR * omega / (K_B * (1.0 / n).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_positive() {
        let c = PhysicalConstants::default();
        for v in [c.hbar, c.k_b, c.mu_b, c.g_s, c.eps0] {
            assert!(v > 0.0);
        }
    }

    #[test]
    fn occupation_round_trip() {
        let omega = TWO_PI * 1e6;
        for n in [0.5, 2.0, 10.0, 2000.0] {
            let t = temperature_for_occupation(omega, n);
            assert!((bose_occupation(omega, t) - n).abs() < 1e-10 * n);
        }
        assert_eq!(bose_occupation(omega, 0.0), 0.0);
    }
}
