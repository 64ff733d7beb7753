//! Bath spectral densities, geometric phases and motional dephasing
//! coefficients of damped collective modes.
//!
//! For a mode at omega_n with coupling eta_n and switching function f:
//!
//! * Phi_n = (eta_n^2 / 2pi) int J_eff(w) K(w) dw, with K the time-ordered
//!   double integral of f f sin(w (s - s')).
//! * F_n = (eta_n^2 / pi) int J_eff(w) coth(hbar w / 2 k_B T) |A(w)|^2 dw,
//!   where |A|^2 = 4 |beta|^2 / w^2.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::{HBAR, K_B};
use crate::error::{domain, Error, Result};
use crate::layout::{build_coupling_matrix, Layout};
use crate::modes::{diagonalize, PhononSpectrum};
use crate::pulses::{EchoFamily, FilterKernel, PulseSequence};
use crate::quadrature::{geometric_window, integrate, uniform_points, QuadConfig};

/// Bath spectral density J(w).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    /// Clamping losses, J = w/Q.
    Ohmic { q: f64 },
    /// Frequency-independent J0 (rad/s), a proxy for 1/f electric noise.
    Constant { j0: f64 },
    Zero,
}

impl SpectralDensity {
    pub fn eval(&self, omega: f64) -> f64 {
        match *self {
            SpectralDensity::Ohmic { q } => omega / q,
            SpectralDensity::Constant { j0 } => j0,
            SpectralDensity::Zero => 0.0,
        }
    }

    /// Mode damping gamma_n = J(omega_n).
    pub fn damping(&self, omega_n: f64) -> f64 {
        self.eval(omega_n)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpectralDensity::Ohmic { q } if !(q > 0.0) => Err(domain("Q must be positive")),
            SpectralDensity::Constant { j0 } if !(j0 >= 0.0) => {
                Err(domain("J0 must be non-negative"))
            }
            _ => Ok(()),
        }
    }
}

/// Initial state of the collective modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialOccupation {
    Thermal,
    Precooled(f64),
}

/// Support temperature and initial mode occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathState {
    /// Kelvin.
    pub temperature: f64,
    pub initial: InitialOccupation,
}

impl BathState {
    pub fn thermal(temperature: f64) -> Self {
        Self {
            temperature,
            initial: InitialOccupation::Thermal,
        }
    }

    pub fn precooled(temperature: f64, n_i: f64) -> Self {
        Self {
            temperature,
            initial: InitialOccupation::Precooled(n_i),
        }
    }
}

/// Decoherence figures of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecoherence {
    pub phi: f64,
    pub f: f64,
    pub f_low: f64,
    pub gamma: f64,
}

/// Two-qubit gate figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSummary {
    /// (Phi_0 - Phi_1)/t_g (rad/s).
    pub m_eff: f64,
    /// (F_0 + F_1)/(2 t_g) (rad/s).
    pub gamma_eff: f64,
    pub r_xi: f64,
    pub tau_xi: f64,
}

/// Numerical settings shared by the decoherence integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralConfig {
    pub quad: QuadConfig,
    /// Lambda = cutoff_factor * max(omega_n, pulse rate).
    pub cutoff_factor: f64,
    /// Initial panels span at most this many oscillation periods 2 pi / t_g.
    pub periods_per_panel: f64,
    pub max_initial_panels: usize,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        Self {
            quad: QuadConfig::default(),
            cutoff_factor: 40.0,
            periods_per_panel: 2.0,
            max_initial_panels: 200_000,
        }
    }
}

/// J_eff = J w_n^4 / ((w_n^2 - w^2)^2 + w_n^2 J^2).
pub fn j_eff(j: &SpectralDensity, omega_n: f64, omega: f64) -> f64 {
    let jw = j.eval(omega);
    if jw == 0.0 {
        return 0.0;
    }
    let w2 = omega_n * omega_n;
    let d = w2 - omega * omega;
    jw * w2 * w2 / (d * d + w2 * jw * jw)
}

/// coth(hbar w / 2 k_B T), Laurent form 2 k_B T / hbar w when hbar w < 1e-6 k_B T.
pub fn coth_factor(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 1.0;
    }
    let kt = K_B * temperature;
    let e = HBAR * omega;
    if e < 1e-6 * kt {
        2.0 * kt / e
    } else {
        1.0 / (0.5 * e / kt).tanh()
    }
}

/// Bose occupation plus one half, (1/2) coth(hbar w / 2 k_B T).
pub fn half_coth(omega: f64, temperature: f64) -> f64 {
    0.5 * coth_factor(omega, temperature)
}

/// Highest characteristic frequency of the switching function.
pub(crate) fn pulse_rate(seq: &PulseSequence) -> f64 {
    let min_len = seq
        .intervals()
        .iter()
        .map(|iv| iv.len)
        .fold(f64::INFINITY, f64::min);
    2.0 * PI / min_len
}

fn breakpoints(
    j: &SpectralDensity,
    omega_n: f64,
    seq: &PulseSequence,
    kernel: &FilterKernel,
    upper: f64,
    cfg: &IntegralConfig,
) -> Vec<f64> {
    let gamma = j.damping(omega_n);
    let lambda_cut = cfg.cutoff_factor * omega_n.max(pulse_rate(seq));
    let upper = upper.min(lambda_cut);
    let step = cfg.periods_per_panel * 2.0 * PI / seq.t_g();
    let mut pts = uniform_points(0.0, upper, step, cfg.max_initial_panels);
    if omega_n < upper {
        let w = (50.0 * gamma).max(lambda_cut / 1e4);
        pts.extend(geometric_window(omega_n, gamma, w, 0.0, upper));
    }
    pts.extend(kernel.resonances(upper));
    pts
}

fn check_eta(eta_n: f64, omega_n: f64) -> Result<()> {
    if !(omega_n > 0.0) {
        return Err(domain("mode frequency must be positive"));
    }
    if !eta_n.is_finite() {
        return Err(domain("eta must be finite"));
    }
    Ok(())
}

/// Geometric phase Phi_n accumulated over the gate.
pub fn geometric_phase(
    omega_n: f64,
    j: &SpectralDensity,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    check_eta(eta_n, omega_n)?;
    j.validate()?;
    if eta_n == 0.0 || *j == SpectralDensity::Zero {
        return Ok(0.0);
    }
    let kernel = seq.kernel();
    let pts = breakpoints(j, omega_n, seq, &kernel, f64::INFINITY, cfg);
    let q = integrate(
        |w| j_eff(j, omega_n, w) * kernel.phase_kernel(w),
        &pts,
        &cfg.quad,
    )?;
    Ok(eta_n * eta_n / (2.0 * PI) * q.value)
}

fn infrared_guard(j: &SpectralDensity, kernel: &FilterKernel) -> Result<()> {
    if let SpectralDensity::Constant { j0 } = *j {
        let t = kernel.t_g();
        if j0 > 0.0 && kernel.amplitude_sq(0.0) > 1e-20 * t * t {
            return Err(domain(
                "constant spectral density with non-zero time-averaged switching function diverges at low frequency",
            ));
        }
    }
    Ok(())
}

fn dephasing_integral(
    omega_n: f64,
    j: &SpectralDensity,
    temperature: f64,
    seq: &PulseSequence,
    eta_n: f64,
    upper: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    check_eta(eta_n, omega_n)?;
    j.validate()?;
    if !(temperature >= 0.0) {
        return Err(domain("temperature must be non-negative"));
    }
    if eta_n == 0.0 || *j == SpectralDensity::Zero {
        return Ok(0.0);
    }
    let kernel = seq.kernel();
    infrared_guard(j, &kernel)?;
    let pts = breakpoints(j, omega_n, seq, &kernel, upper, cfg);
    let q = integrate(
        |w| j_eff(j, omega_n, w) * coth_factor(w, temperature) * kernel.amplitude_sq(w),
        &pts,
        &cfg.quad,
    )?;
    Ok(eta_n * eta_n / PI * q.value)
}

/// Equilibrium dephasing coefficient F_n.
pub fn f_n_equilibrium(
    omega_n: f64,
    j: &SpectralDensity,
    temperature: f64,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    dephasing_integral(omega_n, j, temperature, seq, eta_n, f64::INFINITY, cfg)
}

/// Low-frequency part F_n^l: the equilibrium integral restricted to [0, omega_n/2].
pub fn f_n_low_frequency(
    omega_n: f64,
    j: &SpectralDensity,
    temperature: f64,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    dephasing_integral(omega_n, j, temperature, seq, eta_n, 0.5 * omega_n, cfg)
}

/// Dephasing coefficient of a mode pre-cooled to occupation N_i.
///
/// The equilibrium F_n with the resonant occupation swapped from N_th^(n) to
/// N_i: F_n(T) + 4 eta_n^2 (N_i - N_th^(n)) |beta(w_n + i gamma_n/2)|^2.
/// For weak damping this reduces to
/// F_n^l + 4 eta_n^2 [(N_i + 1/2)|beta(w_n + i gamma_n/2)|^2
///   + Gamma_n sum_{p,p'} z_p z_p' cos(w_n (t_p - t_p')) min(t_p, t_p')],
/// but it also keeps the off-resonant noise between w_n/2 and w_n.
pub fn f_n_precooled(
    omega_n: f64,
    j: &SpectralDensity,
    bath: &BathState,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    let n_i = match bath.initial {
        InitialOccupation::Precooled(n) if n >= 0.0 => n,
        InitialOccupation::Precooled(_) => return Err(domain("N_i must be non-negative")),
        InitialOccupation::Thermal => return Err(domain("pre-cooled formula needs N_i")),
    };
    let f_eq = f_n_equilibrium(omega_n, j, bath.temperature, seq, eta_n, cfg)?;
    Ok(f_eq + occupation_shift(omega_n, j, bath.temperature, n_i, seq, eta_n))
}

/// 4 eta_n^2 (N_i - N_th^(n)) |beta(w_n + i gamma_n/2)|^2. Without damping the
/// equilibrium integral carries no resonant weight, so N_th^(n) is replaced by -1/2.
pub fn occupation_shift(
    omega_n: f64,
    j: &SpectralDensity,
    temperature: f64,
    n_i: f64,
    seq: &PulseSequence,
    eta_n: f64,
) -> f64 {
    let gamma = j.damping(omega_n);
    let n_ref = if gamma > 0.0 && *j != SpectralDensity::Zero {
        half_coth(omega_n, temperature) - 0.5
    } else {
        -0.5
    };
    let beta = seq.beta(Complex64::new(omega_n, 0.5 * gamma));
    4.0 * eta_n * eta_n * (n_i - n_ref) * beta.norm_sqr()
}

/// Phi_n, F_n, F_n^l and gamma_n for one mode.
pub fn mode_decoherence(
    omega_n: f64,
    j: &SpectralDensity,
    bath: &BathState,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<ModeDecoherence> {
    let phi = geometric_phase(omega_n, j, seq, eta_n, cfg)?;
    let f_low = f_n_low_frequency(omega_n, j, bath.temperature, seq, eta_n, cfg)?;
    let f = match bath.initial {
        InitialOccupation::Thermal => f_n_equilibrium(omega_n, j, bath.temperature, seq, eta_n, cfg)?,
        InitialOccupation::Precooled(_) => f_n_precooled(omega_n, j, bath, seq, eta_n, cfg)?,
    };
    Ok(ModeDecoherence {
        phi,
        f,
        f_low,
        gamma: j.damping(omega_n),
    })
}

/// M_eff, Gamma_eff, R(xi) and tau(xi) of a two-site register.
pub fn gate_summary(
    spectrum: &PhononSpectrum,
    j: &SpectralDensity,
    bath: &BathState,
    seq: &PulseSequence,
    lambda: f64,
    gamma_m: f64,
    cfg: &IntegralConfig,
) -> Result<GateSummary> {
    if spectrum.n() != 2 {
        return Err(domain("R(xi) and tau(xi) are defined for two sites"));
    }
    if !(gamma_m > 0.0) {
        return Err(domain("Gamma_m must be positive for R(xi)"));
    }
    let modes: Vec<ModeDecoherence> = spectrum
        .omega
        .par_iter()
        .map(|&w| mode_decoherence(w, j, bath, seq, lambda / w, cfg))
        .collect::<Result<_>>()?;
    summarize(&modes, spectrum.omega_r, seq.t_g(), lambda, gamma_m)
}

fn summarize(
    modes: &[ModeDecoherence],
    omega_r: f64,
    t_g: f64,
    lambda: f64,
    gamma_m: f64,
) -> Result<GateSummary> {
    let m_eff = (modes[0].phi - modes[1].phi) / t_g;
    let gamma_eff = (modes[0].f + modes[1].f) / (2.0 * t_g);
    if !(m_eff.abs() > 1e-300) {
        return Err(Error::NoCoupling);
    }
    let r_xi = PI * omega_r * gamma_eff / (4.0 * m_eff.abs() * gamma_m);
    let gate_time = PI / (4.0 * m_eff.abs());
    Ok(GateSummary {
        m_eff,
        gamma_eff,
        r_xi,
        tau_xi: gate_time * lambda * lambda / omega_r,
    })
}

/// R(xi) = 3 pi (xi + 1/xi) / (2 (xi - 1)) without spin echo.
pub fn r_no_echo(xi: f64) -> f64 {
    3.0 * PI * (xi + 1.0 / xi) / (2.0 * (xi - 1.0))
}

/// tau(xi) = pi xi / (xi - 1) without spin echo.
pub fn tau_no_echo(xi: f64) -> f64 {
    PI * xi / (xi - 1.0)
}

/// Settings for R(xi), tau(xi) scans of a two-site register in units of omega_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioScan {
    pub q: f64,
    /// k_B T / hbar omega_r.
    pub n_th: f64,
    /// lambda / omega_r.
    pub eta: f64,
    /// Gate length in bare periods; xi * n_cycles should be an integer.
    pub n_cycles: usize,
    pub integrals: IntegralConfig,
}

impl Default for RatioScan {
    fn default() -> Self {
        Self {
            q: 1e6,
            n_th: 1e3,
            eta: 0.01,
            n_cycles: 100,
            integrals: IntegralConfig::default(),
        }
    }
}

/// Two-site layout whose upper mode sits at xi * omega_r.
pub fn two_site_for_ratio(xi: f64, omega_r: f64) -> Result<Layout> {
    if !(xi >= 1.0) {
        return Err(domain("xi must be >= 1"));
    }
    Ok(Layout::SingleWire {
        n: 2,
        g: (xi * xi - 1.0) * omega_r / 4.0,
    })
}

/// R(xi) and tau(xi) for a k-pulse family on a two-site register.
pub fn ratio_point(xi: f64, k: usize, scan: &RatioScan) -> Result<GateSummary> {
    let omega_r = 1.0;
    let layout = two_site_for_ratio(xi, omega_r)?;
    let spectrum = diagonalize(&build_coupling_matrix(&layout)?, omega_r)?;
    let temperature = scan.n_th * HBAR * omega_r / K_B;
    let j = SpectralDensity::Ohmic { q: scan.q };
    let seq = EchoFamily::new(k, scan.n_cycles, omega_r)?.sequence();
    let gamma_m = K_B * temperature / (HBAR * scan.q);
    let lambda = scan.eta * omega_r;
    gate_summary(
        &spectrum,
        &j,
        &BathState::thermal(temperature),
        &seq,
        lambda,
        gamma_m,
        &scan.integrals,
    )
}

/// R(xi), tau(xi) over a grid of xi values, evaluated in parallel.
pub fn ratio_curve(xis: &[f64], k: usize, scan: &RatioScan) -> Result<Vec<GateSummary>> {
    xis.par_iter().map(|&xi| ratio_point(xi, k, scan)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_eff_limits() {
        let j = SpectralDensity::Ohmic { q: 1e4 };
        let wn = 2.0;
        assert!((j_eff(&j, wn, wn) - 1e4 * wn).abs() < 1e-8 * 1e4 * wn);
        let w = 1e-3;
        assert!((j_eff(&j, wn, w) / j.eval(w) - 1.0).abs() < 1e-6);
        assert_eq!(j_eff(&SpectralDensity::Zero, wn, 1.0), 0.0);
    }

    #[test]
    fn coth_regimes() {
        assert_eq!(coth_factor(1.0, 0.0), 1.0);
        let t = 1.0;
        let w = 1e-9 * K_B * t / HBAR;
        assert!((coth_factor(w, t) - 2.0 * K_B * t / (HBAR * w)).abs() / coth_factor(w, t) < 1e-12);
        let w = 3.0 * K_B * t / HBAR;
        assert!((coth_factor(w, t) - 1.0 / (1.5f64).tanh()).abs() < 1e-14);
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let seq = PulseSequence::free(10.0).unwrap();
        let j = SpectralDensity::Ohmic { q: 1e3 };
        let cfg = IntegralConfig::default();
        assert_eq!(geometric_phase(1.0, &j, &seq, 0.0, &cfg).unwrap(), 0.0);
        assert_eq!(f_n_equilibrium(1.0, &j, 1.0, &seq, 0.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn bare_ising_phase() {
        let wn = 1.3;
        let t = 2.0 * PI * 20.0;
        let seq = PulseSequence::free(t).unwrap();
        let j = SpectralDensity::Ohmic { q: 1e8 };
        let eta = 0.1;
        let phi = geometric_phase(wn, &j, &seq, eta, &IntegralConfig::default()).unwrap();
        let want = eta * eta * wn * t / 4.0;
        assert!((phi / want - 1.0).abs() < 1e-3, "{phi} vs {want}");
    }

    #[test]
    fn constant_density_needs_echo() {
        let seq = PulseSequence::free(10.0).unwrap();
        let j = SpectralDensity::Constant { j0: 1e-3 };
        assert!(f_n_equilibrium(1.0, &j, 1.0, &seq, 0.1, &IntegralConfig::default()).is_err());
    }

    #[test]
    fn precooled_without_damping() {
        let wn = 1.0;
        let t = 7.3;
        let seq = PulseSequence::free(t).unwrap();
        let bath = BathState::precooled(0.0, 2.0);
        let eta = 0.1;
        let f = f_n_precooled(wn, &SpectralDensity::Zero, &bath, &seq, eta, &IntegralConfig::default())
            .unwrap();
        let want = 4.0 * eta * eta * 2.5 * (wn * t / 2.0).sin().powi(2);
        assert!((f - want).abs() < 1e-14);
    }

    #[test]
    fn no_echo_closed_forms() {
        assert!((r_no_echo(2.0) - 3.0 * PI * 2.5 / 2.0).abs() < 1e-12);
        assert!((tau_no_echo(2.0) - 2.0 * PI).abs() < 1e-12);
    }
}
