//! Brute-force cross-checks: truncated-Fock Lindblad evolution of one damped
//! mode under a spin-conditional force, and an independent Delta beta.
//!
//! Each spin branch s feels H_s = omega a^dag a + (lambda f(t) s / 2)(a + a^dag).
//! Evolution runs in the interaction picture of omega a^dag a, where the
//! rotating-wave dissipator gamma (N+1) D[a] + gamma N D[a^dag] is unchanged
//! and the drive becomes F_s(t)(a e^{-i w t} + a^dag e^{i w t}).
//! The spin coherence is carried by X = rho_{s s'}, evolved with H_s on the
//! left and H_s' on the right; its trace is the branch overlap.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::constants::temperature_for_occupation;
use crate::decoherence::{occupation_shift, pulse_rate, IntegralConfig, SpectralDensity};
use crate::error::{domain, Error, Result};
use crate::layout::{build_coupling_matrix, Layout};
use crate::pulses::PulseSequence;
use crate::quadrature::{geometric_window, integrate, uniform_points};

/// A single damped mode in a truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMode {
    /// Fock cutoff; `None` picks one from the expected occupation.
    pub dim: Option<usize>,
    /// rad/s.
    pub omega: f64,
    /// rad/s.
    pub gamma: f64,
    pub n_bath: f64,
    /// Initial thermal occupation.
    pub n0: f64,
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Steps per mode period; at least 200.
    pub steps_per_period: usize,
    pub tail_tolerance: f64,
    pub max_dim: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            steps_per_period: 200,
            tail_tolerance: 1e-8,
            max_dim: 1024,
        }
    }
}

/// Outcome of one conditional evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchEvolution {
    /// Tr rho_{s s'} at t_g.
    pub overlap: Complex64,
    /// Tr rho_{s s} at t_g.
    pub trace: f64,
    /// Smallest eigenvalue of rho_{s s} at t_g.
    pub min_eigenvalue: f64,
    /// Largest population in the top two Fock levels seen during the run.
    pub tail: f64,
    pub dim: usize,
    /// Final rho_{s s} (row-major, dim x dim).
    pub rho: Vec<Complex64>,
}

/// Oracle estimate of the dephasing coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub f_n: f64,
    pub evolution: BranchEvolution,
}

fn validate(mode: &TruncatedMode) -> Result<()> {
    if !(mode.omega > 0.0) {
        return Err(domain("mode frequency must be positive"));
    }
    if !(mode.gamma >= 0.0 && mode.n_bath >= 0.0 && mode.n0 >= 0.0) {
        return Err(domain("gamma and occupations must be non-negative"));
    }
    Ok(())
}

/// Largest |int_0^t f e^{i w s} ds| over interval ends, plus the largest excursion inside one interval.
fn displacement_bound(seq: &PulseSequence, omega: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut worst: f64 = 0.0;
    let mut longest: f64 = 0.0;
    for iv in seq.intervals() {
        let e = Complex64::new(0.0, omega * iv.start).exp();
        let seg = if omega * iv.len < 1e-8 {
            Complex64::new(iv.len, 0.0)
        } else {
            (Complex64::new(0.0, omega * iv.len).exp() - 1.0) / Complex64::new(0.0, omega)
        };
        acc += iv.sign * e * seg;
        worst = worst.max(acc.norm());
        longest = longest.max(iv.len);
    }
    worst + longest.min(2.0 / omega)
}

fn auto_dim(mode: &TruncatedMode, seq: &PulseSequence, lambda: f64) -> usize {
    let decay = (-mode.gamma * seq.t_g()).exp();
    let n_end = mode.n0 * decay + mode.n_bath * (1.0 - decay);
    let n = mode.n0.max(n_end);
    let alpha = 0.5 * lambda * displacement_bound(seq, mode.omega);
    (20.0 * (n + 0.5) + 6.0 * alpha * alpha + 10.0 * alpha).ceil() as usize + 20
}

fn thermal_state(dim: usize, n: f64) -> Vec<Complex64> {
    let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
    if n == 0.0 {
        rho[0] = Complex64::new(1.0, 0.0);
        return rho;
    }
    let q = n / (n + 1.0);
    let weights: Vec<f64> = (0..dim).map(|i| q.powi(i as i32)).collect();
    let z: f64 = weights.iter().sum();
    for (i, w) in weights.iter().enumerate() {
        rho[i * dim + i] = Complex64::new(w / z, 0.0);
    }
    rho
}

struct Lindblad {
    dim: usize,
    sq: Vec<f64>,
    down: f64,
    up: f64,
}

impl Lindblad {
    /// out = -i (H_l X - X H_r) + dissipator(X), with H = c a + c^* a^dag.
    fn deriv(&self, x: &[Complex64], cl: Complex64, cr: Complex64, out: &mut [Complex64]) {
        let d = self.dim;
        let sq = &self.sq;
        let mi = Complex64::new(0.0, -1.0);
        let (clc, crc) = (cl.conj(), cr.conj());
        for i in 0..d {
            for j in 0..d {
                let mut h = Complex64::new(0.0, 0.0);
                if i + 1 < d {
                    h += cl * sq[i + 1] * x[(i + 1) * d + j];
                }
                if i > 0 {
                    h += clc * sq[i] * x[(i - 1) * d + j];
                }
                if j > 0 {
                    h -= cr * sq[j] * x[i * d + j - 1];
                }
                if j + 1 < d {
                    h -= crc * sq[j + 1] * x[i * d + j + 1];
                }
                let xij = x[i * d + j];
                let mut diss = -0.5 * (self.down * (i + j) as f64 + self.up * (i + j + 2) as f64) * xij;
                if i + 1 < d && j + 1 < d {
                    diss += self.down * sq[i + 1] * sq[j + 1] * x[(i + 1) * d + j + 1];
                }
                if i > 0 && j > 0 {
                    diss += self.up * sq[i] * sq[j] * x[(i - 1) * d + j - 1];
                }
                out[i * d + j] = mi * h + diss;
            }
        }
    }
}

fn tail_population(rho: &[Complex64], dim: usize) -> f64 {
    (dim.saturating_sub(2)..dim).map(|i| rho[i * dim + i].re).sum()
}

fn run(
    mode: &TruncatedMode,
    seq: &PulseSequence,
    lambda: f64,
    s: (f64, f64),
    dim: usize,
    cfg: &OracleConfig,
) -> BranchEvolution {
    let lind = Lindblad {
        dim,
        sq: (0..=dim).map(|i| (i as f64).sqrt()).collect(),
        down: mode.gamma * (mode.n_bath + 1.0),
        up: mode.gamma * mode.n_bath,
    };
    let len = dim * dim;
    let init = thermal_state(dim, mode.n0);
    let mut rho = init.clone();
    let mut x = init;
    let h_max = 2.0 * PI / (cfg.steps_per_period.max(200) as f64 * mode.omega);
    let mut tail = tail_population(&rho, dim);
    let mut k = vec![vec![Complex64::new(0.0, 0.0); len]; 4];
    let mut stage = vec![Complex64::new(0.0, 0.0); len];
    let w = mode.omega;

    for iv in seq.intervals() {
        let force = 0.5 * lambda * iv.sign;
        let steps = (iv.len / h_max).ceil().max(1.0) as usize;
        let h = iv.len / steps as f64;
        for step in 0..steps {
            let t0 = iv.start + step as f64 * h;
            let coef = |t: f64, sv: f64| Complex64::from_polar(force * sv, -w * t);
            let times = [t0, t0 + 0.5 * h, t0 + 0.5 * h, t0 + h];
            for (state, pair) in [(&mut rho, (s.0, s.0)), (&mut x, s)] {
                for r in 0..4 {
                    let (cl, cr) = (coef(times[r], pair.0), coef(times[r], pair.1));
                    if r == 0 {
                        lind.deriv(state, cl, cr, &mut k[0]);
                    } else {
                        let scale = if r == 3 { h } else { 0.5 * h };
                        for (o, (a, b)) in stage.iter_mut().zip(state.iter().zip(&k[r - 1])) {
                            *o = a + scale * b;
                        }
                        lind.deriv(&stage, cl, cr, &mut k[r]);
                    }
                }
                for (idx, v) in state.iter_mut().enumerate() {
                    *v += h / 6.0 * (k[0][idx] + 2.0 * k[1][idx] + 2.0 * k[2][idx] + k[3][idx]);
                }
            }
            tail = tail.max(tail_population(&rho, dim));
        }
    }

    let overlap: Complex64 = (0..dim).map(|i| x[i * dim + i]).sum();
    let trace: f64 = (0..dim).map(|i| rho[i * dim + i].re).sum();
    let m = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (rho[i * dim + j] + rho[j * dim + i].conj()));
    let min_eigenvalue = SymmetricEigen::new(m).eigenvalues.min();
    BranchEvolution {
        overlap,
        trace,
        min_eigenvalue,
        tail,
        dim,
        rho,
    }
}

/// Evolve the branch pair (s, s') with coupling lambda_n over the sequence.
///
/// Without an explicit cutoff the dimension is chosen from the expected
/// occupation and doubled until the tail criterion holds.
pub fn evolve_conditional(
    mode: &TruncatedMode,
    s: (f64, f64),
    seq: &PulseSequence,
    lambda_n: f64,
    cfg: &OracleConfig,
) -> Result<BranchEvolution> {
    validate(mode)?;
    if !lambda_n.is_finite() {
        return Err(domain("lambda must be finite"));
    }
    let mut dim = mode.dim.unwrap_or_else(|| auto_dim(mode, seq, lambda_n));
    if dim < 2 {
        return Err(domain("Fock cutoff must be at least 2"));
    }
    loop {
        let out = run(mode, seq, lambda_n, s, dim, cfg);
        if out.tail < cfg.tail_tolerance {
            return Ok(out);
        }
        if mode.dim.is_some() || 2 * dim > cfg.max_dim {
            return Err(Error::Truncation {
                dim,
                tail: out.tail,
                suggested: 2 * dim,
            });
        }
        dim *= 2;
    }
}

/// F_n = -ln |overlap(+1, -1)| with lambda_n = eta_n omega_n.
pub fn oracle_f_n(
    mode: &TruncatedMode,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &OracleConfig,
) -> Result<OracleRun> {
    let evolution = evolve_conditional(mode, (1.0, -1.0), seq, eta_n * mode.omega, cfg)?;
    let m = evolution.overlap.norm();
    if !(m > 0.0) {
        return Err(domain("branch overlap vanished"));
    }
    Ok(OracleRun {
        f_n: -m.ln(),
        evolution,
    })
}

/// Undamped displaced-thermal overlap exp(-(N0 + 1/2) |lambda (s - s')/2|^2 |A(w)|^2).
pub fn analytic_overlap(mode: &TruncatedMode, seq: &PulseSequence, lambda_n: f64, s: (f64, f64)) -> f64 {
    let a_sq = seq.kernel().amplitude_sq(mode.omega);
    let d = 0.5 * lambda_n * (s.0 - s.1);
    (-(mode.n0 + 0.5) * d * d * a_sq).exp()
}

/// Force spectrum the rotating-wave dissipator represents, integrated against
/// the filter over [0, upper]:
/// (eta^2/pi) int w^2 (2N+1)/4 [L(v - w) + L(v + w)] |A(v)|^2 dv, L(x) = gamma/(x^2 + gamma^2/4).
pub fn rwa_spectral(
    mode: &TruncatedMode,
    seq: &PulseSequence,
    eta_n: f64,
    upper: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    validate(mode)?;
    let w = mode.omega;
    let g = mode.gamma;
    if g == 0.0 || eta_n == 0.0 {
        return Ok(0.0);
    }
    let kernel = seq.kernel();
    let lorentz = |x: f64| g / (x * x + 0.25 * g * g);
    let lambda_cut = cfg.cutoff_factor * w.max(pulse_rate(seq));
    let upper = upper.min(lambda_cut);
    let mut pts = uniform_points(0.0, upper, cfg.periods_per_panel * 2.0 * PI / seq.t_g(), cfg.max_initial_panels);
    pts.extend(kernel.resonances(upper));
    if w < upper {
        pts.extend(geometric_window(w, g, (50.0 * g).max(lambda_cut / 1e4), 0.0, upper));
    } else {
        pts.extend(geometric_window(upper, g, upper, 0.0, upper));
    }
    let q = integrate(
        |v| w * w * (2.0 * mode.n_bath + 1.0) / 4.0 * (lorentz(v - w) + lorentz(v + w)) * kernel.amplitude_sq(v),
        &pts,
        &cfg.quad,
    )?;
    Ok(eta_n * eta_n / PI * q.value)
}

/// Low-frequency window [0, w/2] of [`rwa_spectral`].
pub fn rwa_low_frequency(
    mode: &TruncatedMode,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    rwa_spectral(mode, seq, eta_n, 0.5 * mode.omega, cfg)
}

/// Analytic counterpart of the oracle: the pre-cooled formula evaluated with
/// the rotating-wave force spectrum in place of the ohmic one.
pub fn rwa_reference_f_n(
    mode: &TruncatedMode,
    seq: &PulseSequence,
    eta_n: f64,
    cfg: &IntegralConfig,
) -> Result<f64> {
    validate(mode)?;
    let j = if mode.gamma > 0.0 {
        SpectralDensity::Ohmic {
            q: mode.omega / mode.gamma,
        }
    } else {
        SpectralDensity::Zero
    };
    let temperature = temperature_for_occupation(mode.omega, mode.n_bath);
    let shift = occupation_shift(mode.omega, &j, temperature, mode.n0, seq, eta_n);
    Ok(rwa_spectral(mode, seq, eta_n, f64::INFINITY, cfg)? + shift)
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// beta(w) = -(1/2) sum over constant-sign intervals of sign (e^{i w b} - e^{i w a}).
fn interval_beta_sq(seq: &PulseSequence, omega: f64) -> f64 {
    let b: Complex64 = seq
        .intervals()
        .iter()
        .map(|iv| {
            let a = Complex64::from_polar(1.0, omega * iv.start);
            let e = Complex64::from_polar(1.0, omega * (iv.start + iv.len));
            -0.5 * iv.sign * (e - a)
        })
        .sum();
    b.norm_sqr()
}

/// Delta beta from explicitly diagonalized dynamical-matrix eigenvalues.
pub fn brute_force_delta_beta(layout: &Layout, omega_r: f64, seq: &PulseSequence) -> Result<f64> {
    if !(omega_r > 0.0) {
        return Err(domain("omega_r must be positive"));
    }
    let g = build_coupling_matrix(layout)?.g;
    let n = g.nrows();
    if n > 400 {
        return Err(domain("brute-force Delta beta is limited to 400 sites"));
    }
    let dynamical: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| 2.0 * omega_r * g[(i, j)] + if i == j { omega_r * omega_r } else { 0.0 })
                .collect()
        })
        .collect();
    let mut sum = 0.0;
    for w2 in jacobi_eigenvalues(dynamical) {
        if !(w2 > 0.0) {
            return Err(domain("unstable mode in brute-force diagonalization"));
        }
        let w = w2.sqrt();
        sum += (omega_r / w).powi(3) * interval_beta_sq(seq, w);
    }
    Ok((sum / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::EchoFamily;

    fn mode(gamma: f64, n_bath: f64, n0: f64) -> TruncatedMode {
        TruncatedMode {
            dim: None,
            omega: 1.0,
            gamma,
            n_bath,
            n0,
        }
    }

    #[test]
    fn zero_coupling_keeps_thermal_state() {
        let m = mode(0.01, 1.5, 1.5);
        let seq = PulseSequence::free(20.0).unwrap();
        let r = oracle_f_n(&m, &seq, 0.0, &OracleConfig::default()).unwrap();
        assert!(r.f_n.abs() < 1e-12);
        let init = thermal_state(r.evolution.dim, 1.5);
        let dev = init
            .iter()
            .zip(&r.evolution.rho)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn undamped_matches_displaced_thermal() {
        let m = mode(0.0, 0.0, 2.0);
        let seq = PulseSequence::free(7.0).unwrap();
        let lambda = 0.2;
        let r = evolve_conditional(&m, (1.0, -1.0), &seq, lambda, &OracleConfig::default()).unwrap();
        let want = analytic_overlap(&m, &seq, lambda, (1.0, -1.0));
        assert!((r.overlap.norm() - want).abs() < 1e-6, "{} vs {want}", r.overlap.norm());
        assert!((r.trace - 1.0).abs() < 1e-9);
        assert!(r.min_eigenvalue > -1e-8);
    }

    #[test]
    fn fixed_dimension_too_small() {
        let m = TruncatedMode {
            dim: Some(4),
            ..mode(0.0, 0.0, 3.0)
        };
        let seq = PulseSequence::free(3.0).unwrap();
        assert!(matches!(
            evolve_conditional(&m, (1.0, -1.0), &seq, 0.1, &OracleConfig::default()),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let ev = jacobi_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let mut ev = ev;
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn full_period_free_sequence_has_no_residual() {
        let layout = Layout::SingleWire { n: 1, g: 0.0 };
        let seq = EchoFamily::new(0, 3, 1.0).unwrap().sequence();
        assert!(brute_force_delta_beta(&layout, 1.0, &seq).unwrap() < 1e-14);
    }
}
