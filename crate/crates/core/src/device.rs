//! Device description to model scales: zero-point motion, spin-phonon and
//! electrostatic couplings, electrical Q and thermal rates.

use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, EPS0, TWO_PI};
use crate::error::{domain, Result};

/// Doubly clamped beam geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorGeometry {
    /// Length l (m).
    pub length: f64,
    /// Width w (m).
    pub width: f64,
    /// Thickness t (m).
    pub thickness: f64,
    /// Mass density (kg/m^3).
    pub mass_density: f64,
    /// Modal mass as a fraction of the beam mass, in (0, 1].
    pub effective_mass_factor: f64,
}

impl Default for ResonatorGeometry {
    fn default() -> Self {
        Self {
            length: 10e-6,
            width: 0.1e-6,
            thickness: 0.1e-6,
            mass_density: 2330.0,
            effective_mass_factor: 0.30,
        }
    }
}

impl ResonatorGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0 && self.thickness > 0.0) {
            return Err(domain("resonator dimensions must be positive"));
        }
        if !(self.mass_density > 0.0) {
            return Err(domain("mass density must be positive"));
        }
        if !(self.effective_mass_factor > 0.0 && self.effective_mass_factor <= 1.0) {
            return Err(domain("effective_mass_factor must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Effective vibrating mass (kg).
    pub fn mass(&self) -> f64 {
        self.effective_mass_factor * self.mass_density * self.length * self.width * self.thickness
    }
}

/// Wiring between resonators and the bias circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitGeometry {
    /// Mean electrode separation h (m).
    pub electrode_gap: f64,
    /// Wire length d (m).
    pub wire_length: f64,
    /// Resonator capacitance C (F).
    pub resonator_capacitance: f64,
    /// Wire capacitance C_w (F).
    pub wire_capacitance: f64,
    /// Bias voltage U (V).
    pub bias_voltage: f64,
    /// Wire resistance R (Ohm).
    pub wire_resistance: f64,
}

impl CircuitGeometry {
    /// Circuit with the default capacitances C = eps0 l and C_w = eps0 d.
    pub fn with_defaults(resonator_length: f64, electrode_gap: f64, wire_length: f64) -> Self {
        Self {
            electrode_gap,
            wire_length,
            resonator_capacitance: EPS0 * resonator_length,
            wire_capacitance: EPS0 * wire_length,
            bias_voltage: 1.0,
            wire_resistance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.electrode_gap > 0.0 && self.wire_length > 0.0) {
            return Err(domain("electrode gap and wire length must be positive"));
        }
        if !(self.resonator_capacitance > 0.0 && self.wire_capacitance > 0.0) {
            return Err(domain("capacitances must be positive"));
        }
        if !(self.bias_voltage >= 0.0) {
            return Err(domain("bias voltage must be non-negative"));
        }
        if !(self.wire_resistance >= 0.0) {
            return Err(domain("wire resistance must be non-negative"));
        }
        Ok(())
    }
}

impl Default for CircuitGeometry {
    fn default() -> Self {
        Self::with_defaults(10e-6, 0.1e-6, 100e-6)
    }
}

/// Magnetic tip gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticTip {
    /// Field gradient G_m (T/m).
    pub gradient: f64,
}

impl Default for MagneticTip {
    fn default() -> Self {
        Self { gradient: 1e7 }
    }
}

/// Environment of the mechanical modes and the spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnvironment {
    /// Support temperature (K).
    pub temperature: f64,
    /// Mechanical quality factor.
    pub mechanical_q: f64,
    /// Spin coherence time T2 (s).
    pub spin_t2: f64,
    /// Stretch exponent of the spin dephasing envelope.
    pub spin_alpha: f64,
    /// Pre-cooled initial occupation; `None` means thermal equilibrium.
    pub precooled_occupation: Option<f64>,
}

impl Default for ThermalEnvironment {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            mechanical_q: 1e6,
            spin_t2: 10e-3,
            spin_alpha: 3.0,
            precooled_occupation: None,
        }
    }
}

impl ThermalEnvironment {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(domain("temperature must be non-negative"));
        }
        if !(self.mechanical_q > 0.0) {
            return Err(domain("mechanical Q must be positive"));
        }
        if !(self.spin_t2 > 0.0) {
            return Err(domain("T2 must be positive"));
        }
        if !(self.spin_alpha >= 1.0) {
            return Err(domain("spin alpha must be >= 1"));
        }
        if let Some(n) = self.precooled_occupation {
            if !(n >= 0.0) {
                return Err(domain("pre-cooled occupation must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Electrical quality factor; `Infinite` when no current can flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QualityFactor {
    Finite(f64),
    Infinite,
}

impl QualityFactor {
    pub fn value(&self) -> f64 {
        match *self {
            QualityFactor::Finite(q) => q,
            QualityFactor::Infinite => f64::INFINITY,
        }
    }
}

/// Complete device description.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceParams {
    pub geometry: ResonatorGeometry,
    pub circuit: CircuitGeometry,
    pub tip: MagneticTip,
    pub environment: ThermalEnvironment,
    /// Bare resonator frequency omega_r (rad/s).
    pub omega_r: f64,
    /// Fold Q_el into the mechanical Q as 1/Q_tot = 1/Q + 1/Q_el.
    pub fold_electrical_q: bool,
}

/// Model scales derived from a [`DeviceParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub omega_r: f64,
    pub a0: f64,
    pub lambda: f64,
    pub g: f64,
    pub q_el: QualityFactor,
    pub n_th: f64,
    pub gamma_m: f64,
    pub eta: f64,
}

/// a0 = sqrt(hbar / (2 m omega_r)).
pub fn zero_point_motion(geometry: &ResonatorGeometry, omega_r: f64) -> Result<f64> {
    if !(omega_r > 0.0) {
        return Err(domain("omega_r must be positive"));
    }
    geometry.validate()?;
    let m = geometry.mass();
    Ok((PhysicalConstants::CODATA.hbar / (2.0 * m * omega_r)).sqrt())
}

/// lambda = g_s mu_B G_m a0 / hbar.
pub fn spin_phonon_coupling(tip: &MagneticTip, a0: f64) -> Result<f64> {
    if !(a0 > 0.0) {
        return Err(domain("a0 must be positive"));
    }
    if !(tip.gradient >= 0.0) {
        return Err(domain("magnetic gradient must be non-negative"));
    }
    let c = PhysicalConstants::CODATA;
    Ok(c.g_s * c.mu_b * tip.gradient * a0 / c.hbar)
}

/// g = C^2 C_w^2 U^2 / (hbar (2C + C_w)^3) * a0^2 / h^2.
pub fn electrostatic_coupling(circuit: &CircuitGeometry, a0: f64) -> Result<f64> {
    circuit.validate()?;
    if !(a0 > 0.0) {
        return Err(domain("a0 must be positive"));
    }
    let c = circuit.resonator_capacitance;
    let cw = circuit.wire_capacitance;
    let u = circuit.bias_voltage;
    let h = circuit.electrode_gap;
    let hbar = PhysicalConstants::CODATA.hbar;
    Ok(c * c * cw * cw * u * u / (hbar * (2.0 * c + cw).powi(3)) * (a0 * a0) / (h * h))
}

/// Q_el = omega_r m h^2 / (U^2 C^2 R); infinite when U or R vanish.
pub fn electrical_quality_factor(
    circuit: &CircuitGeometry,
    omega_r: f64,
    mass: f64,
) -> Result<QualityFactor> {
    circuit.validate()?;
    if !(omega_r > 0.0 && mass > 0.0) {
        return Err(domain("omega_r and mass must be positive"));
    }
    let u = circuit.bias_voltage;
    let r = circuit.wire_resistance;
    if u == 0.0 || r == 0.0 {
        return Ok(QualityFactor::Infinite);
    }
    let h = circuit.electrode_gap;
    let c = circuit.resonator_capacitance;
    Ok(QualityFactor::Finite(omega_r * mass * h * h / (u * u * c * c * r)))
}

/// (N_th, Gamma_m) = (k_B T / hbar omega_r, k_B T / hbar Q).
pub fn thermal_scales(env: &ThermalEnvironment, omega_r: f64) -> Result<(f64, f64)> {
    if !(omega_r > 0.0) {
        return Err(domain("omega_r must be positive"));
    }
    env.validate()?;
    let c = PhysicalConstants::CODATA;
    let kt = c.k_b * env.temperature;
    Ok((kt / (c.hbar * omega_r), kt / (c.hbar * env.mechanical_q)))
}

/// 1/Q_tot = 1/Q + 1/Q_el.
pub fn combined_q(q: f64, q_el: QualityFactor) -> f64 {
    match q_el {
        QualityFactor::Infinite => q,
        QualityFactor::Finite(qe) => 1.0 / (1.0 / q + 1.0 / qe),
    }
}

impl DeviceParams {
    /// The canonical device: 10 x 0.1 x 0.1 um silicon beam at 1 MHz, 100 mK.
    pub fn canonical() -> Self {
        Self {
            omega_r: TWO_PI * 1e6,
            ..Self::default()
        }
    }

    /// Mechanical Q used by the bath, optionally including ohmic wire losses.
    pub fn effective_q(&self) -> Result<f64> {
        let q = self.environment.mechanical_q;
        if !self.fold_electrical_q {
            return Ok(q);
        }
        let q_el = electrical_quality_factor(&self.circuit, self.omega_r, self.geometry.mass())?;
        Ok(combined_q(q, q_el))
    }

    pub fn derive(&self) -> Result<DerivedScales> {
        let a0 = zero_point_motion(&self.geometry, self.omega_r)?;
        let lambda = spin_phonon_coupling(&self.tip, a0)?;
        let g = electrostatic_coupling(&self.circuit, a0)?;
        let q_el = electrical_quality_factor(&self.circuit, self.omega_r, self.geometry.mass())?;
        let env = ThermalEnvironment {
            mechanical_q: self.effective_q()?,
            ..self.environment
        };
        let (n_th, gamma_m) = thermal_scales(&env, self.omega_r)?;
        Ok(DerivedScales {
            omega_r: self.omega_r,
            a0,
            lambda,
            g,
            q_el,
            n_th,
            gamma_m,
            eta: lambda / self.omega_r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn canonical_a0() {
        let a0 = zero_point_motion(&ResonatorGeometry::default(), TWO_PI * 1e6).unwrap();
        assert!(rel(a0, 3.5e-13) < 0.10, "a0 = {a0}");
        let full = ResonatorGeometry {
            effective_mass_factor: 1.0,
            ..Default::default()
        };
        let a0 = zero_point_motion(&full, TWO_PI * 1e6).unwrap();
        assert!(rel(a0, 1.9e-13) < 0.02, "a0 = {a0}");
    }

    #[test]
    fn a0_scales_with_mass() {
        let geo = ResonatorGeometry {
            effective_mass_factor: 0.2,
            ..Default::default()
        };
        let heavy = ResonatorGeometry {
            effective_mass_factor: 0.8,
            ..geo
        };
        let w = TWO_PI * 3e5;
        let a = zero_point_motion(&geo, w).unwrap();
        let b = zero_point_motion(&heavy, w).unwrap();
        assert!(rel(b, a / 2.0) < 1e-14);
    }

    #[test]
    fn lambda_values() {
        let tip = MagneticTip::default();
        let l = spin_phonon_coupling(&tip, 3.5e-13).unwrap();
        assert!(rel(l / TWO_PI, 98.5e3) < 0.01, "lambda/2pi = {}", l / TWO_PI);
        assert_eq!(spin_phonon_coupling(&MagneticTip { gradient: 0.0 }, 3.5e-13).unwrap(), 0.0);
        let l2 = spin_phonon_coupling(&tip, 7e-13).unwrap();
        assert!(rel(l2, 2.0 * l) < 1e-15);
        assert!(spin_phonon_coupling(&tip, 0.0).is_err());
    }

    #[test]
    fn electrostatic_values() {
        let mut circuit = CircuitGeometry::default();
        let g1 = electrostatic_coupling(&circuit, 3.5e-13).unwrap();
        assert!(rel(g1 / TWO_PI, 95e3) < 0.03, "g/2pi = {}", g1 / TWO_PI);
        circuit.bias_voltage = 10.0;
        let g10 = electrostatic_coupling(&circuit, 3.5e-13).unwrap();
        assert!(rel(g10, 100.0 * g1) < 1e-12);
        circuit.bias_voltage = 0.0;
        assert_eq!(electrostatic_coupling(&circuit, 3.5e-13).unwrap(), 0.0);
    }

    #[test]
    fn electrical_q() {
        let geo = ResonatorGeometry::default();
        let mut circuit = CircuitGeometry {
            bias_voltage: 10.0,
            wire_resistance: 0.5,
            ..Default::default()
        };
        let w = TWO_PI * 1e6;
        let q10 = electrical_quality_factor(&circuit, w, geo.mass()).unwrap().value();
        assert!(q10 >= 1e7, "Q_el = {q10}");
        circuit.bias_voltage = 1.0;
        let q1 = electrical_quality_factor(&circuit, w, geo.mass()).unwrap().value();
        assert!(rel(q1, 100.0 * q10) < 1e-12);
        circuit.bias_voltage = 0.0;
        assert_eq!(
            electrical_quality_factor(&circuit, w, geo.mass()).unwrap(),
            QualityFactor::Infinite
        );
        circuit.bias_voltage = 1.0;
        circuit.wire_resistance = 0.0;
        assert_eq!(
            electrical_quality_factor(&circuit, w, geo.mass()).unwrap(),
            QualityFactor::Infinite
        );
    }

    #[test]
    fn thermal_values() {
        let env = ThermalEnvironment::default();
        let (n, gamma) = thermal_scales(&env, TWO_PI * 1e6).unwrap();
        assert!(rel(gamma / TWO_PI, 2.08e3) < 0.01);
        assert!((1e3..=1e4).contains(&n));
        let cold = ThermalEnvironment {
            temperature: 0.0,
            ..env
        };
        assert_eq!(thermal_scales(&cold, TWO_PI * 1e6).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn derived_scales_consistent() {
        let d = DeviceParams::canonical();
        let s = d.derive().unwrap();
        let c = PhysicalConstants::CODATA;
        let m = d.geometry.mass();
        assert!(rel(s.a0, (c.hbar / (2.0 * m * s.omega_r)).sqrt()) < 1e-12);
        assert!(rel(s.eta, s.lambda / s.omega_r) < 1e-12);
        let kt = c.k_b * d.environment.temperature;
        assert!(rel(s.n_th, kt / (c.hbar * s.omega_r)) < 1e-12);
        assert!(rel(s.gamma_m, kt / (c.hbar * d.environment.mechanical_q)) < 1e-12);
    }

    #[test]
    fn folding_electrical_q() {
        let mut d = DeviceParams::canonical();
        d.circuit.bias_voltage = 10.0;
        d.circuit.wire_resistance = 0.5;
        let unfolded = d.derive().unwrap().gamma_m;
        d.fold_electrical_q = true;
        let folded = d.derive().unwrap().gamma_m;
        assert!(folded > unfolded);
        assert!(folded < unfolded * 1.2);
    }

    #[test]
    fn monotonicity() {
        let mut c = CircuitGeometry::default();
        let mut last = 0.0;
        for u in [0.5, 1.0, 2.0, 4.0] {
            c.bias_voltage = u;
            let g = electrostatic_coupling(&c, 3.5e-13).unwrap();
            assert!(g > last);
            last = g;
        }
        let mut last = f64::INFINITY;
        for h in [0.05e-6, 0.1e-6, 0.2e-6] {
            c.electrode_gap = h;
            let g = electrostatic_coupling(&c, 3.5e-13).unwrap();
            assert!(g < last);
            last = g;
        }
    }
}
