//! Gate fidelities, error budgets and the fidelity-optimal resonator frequency.

use rayon::prelude::*;

use crate::decoherence::{r_no_echo, tau_no_echo};
use crate::error::{domain, Error, Result};
use crate::ising::{spin, SpinState};
use crate::modes::PhononSpectrum;

/// Error budget of one two-qubit gate.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityBudget {
    /// 1 - sum of the terms, clamped to [0, 1].
    pub total: f64,
    pub term_pulse_error: f64,
    pub term_motional: f64,
    pub term_spin: f64,
    pub exact_f_n: Vec<f64>,
}

impl FidelityBudget {
    pub fn error_sum(&self) -> f64 {
        self.term_pulse_error + self.term_motional + self.term_spin
    }
}

/// Inputs of the approximate budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetInputs {
    /// lambda / omega_r.
    pub eta: f64,
    /// N_th, or N_i + 1/2 for pre-cooled modes.
    pub occupation: f64,
    pub delta_beta: f64,
    pub r_xi: f64,
    pub tau_xi: f64,
    /// rad/s.
    pub gamma_m: f64,
    /// rad/s.
    pub omega_r: f64,
    /// rad/s.
    pub lambda: f64,
    /// s.
    pub t2: f64,
    pub alpha: f64,
}

/// Result of a one-dimensional frequency optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub omega_r_opt: f64,
    pub f_opt: f64,
    /// (omega_r, F) in evaluation order.
    pub trace: Vec<(f64, f64)>,
    /// Optimum lies at an end of the search interval.
    pub at_boundary: bool,
}

/// (t_g / T2)^alpha.
pub fn spin_dephasing(t_g: f64, t2: f64, alpha: f64) -> Result<f64> {
    if !(t2 > 0.0) {
        return Err(domain("T2 must be positive"));
    }
    if !(t_g >= 0.0) {
        return Err(domain("gate time must be non-negative"));
    }
    Ok((t_g / t2).powf(alpha))
}

/// Overlap fidelity sum_{s,r} |c_s|^2 |c_r|^2 exp(-1/4 sum_n F_n (s_n - r_n)^2 - F_s d(s, r))
/// with s_n = sum_i c_ni s_i and d the Hamming distance.
pub fn exact_fidelity(
    psi0: &SpinState,
    f_n: &[f64],
    spectrum: &PhononSpectrum,
    f_s: f64,
) -> Result<f64> {
    let n = psi0.n_qubits();
    if spectrum.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: spectrum.n(),
        });
    }
    if f_n.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: f_n.len(),
        });
    }
    if f_n.iter().any(|f| !(*f >= 0.0)) || !(f_s >= 0.0) {
        return Err(domain("dephasing coefficients must be non-negative"));
    }
    let support: Vec<(usize, f64, Vec<f64>)> = psi0
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(idx, a)| {
            let s_n = (0..n)
                .map(|k| (0..n).map(|i| spectrum.coeffs[(k, i)] * spin(idx, i)).sum())
                .collect();
            (idx, a.norm_sqr(), s_n)
        })
        .collect();
    let mut total = 0.0;
    for (s_idx, ps, s_n) in &support {
        for (r_idx, pr, r_n) in &support {
            let motional: f64 = f_n
                .iter()
                .zip(s_n.iter().zip(r_n))
                .map(|(f, (a, b))| f * (a - b) * (a - b))
                .sum();
            let hamming = (s_idx ^ r_idx).count_ones() as f64;
            total += ps * pr * (-0.25 * motional - f_s * hamming).exp();
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// 1 - 4 eta^2 N Delta beta^2 - R Gamma_m/omega_r - (omega_r tau/(lambda^2 T2))^alpha.
pub fn approx_fidelity(inputs: &BudgetInputs, exact_f_n: Vec<f64>) -> Result<FidelityBudget> {
    let b = inputs;
    if !(b.omega_r > 0.0 && b.lambda > 0.0) {
        return Err(domain("omega_r and lambda must be positive"));
    }
    if !(b.gamma_m >= 0.0 && b.occupation >= 0.0 && b.r_xi >= 0.0 && b.tau_xi >= 0.0) {
        return Err(domain("budget inputs must be non-negative"));
    }
    let term_pulse_error = 4.0 * b.eta * b.eta * b.occupation * b.delta_beta * b.delta_beta;
    let term_motional = b.r_xi * b.gamma_m / b.omega_r;
    let term_spin = spin_dephasing(b.omega_r * b.tau_xi / (b.lambda * b.lambda), b.t2, b.alpha)?;
    let total = (1.0 - (term_pulse_error + term_motional + term_spin)).clamp(0.0, 1.0);
    Ok(FidelityBudget {
        total,
        term_pulse_error,
        term_motional,
        term_spin,
        exact_f_n,
    })
}

/// Golden-section maximization of `f` on [a, b].
fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64, trace: &mut Vec<(f64, f64)>) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    trace.push((c, fc));
    trace.push((d, fd));
    while (b - a).abs() > tol * (a.abs() + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            trace.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            trace.push((d, fd));
        }
    }
}

/// Maximize `fidelity(omega_r)` over [lo, hi]: logarithmic grid with
/// `points_per_decade` points, then golden-section refinement in log omega_r
/// around the best grid point.
pub fn optimize_omega_r(
    fidelity: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points_per_decade: usize,
) -> Result<OptimizationResult> {
    if !(lo > 0.0 && hi > lo) {
        return Err(domain("search interval must satisfy 0 < lo < hi"));
    }
    if points_per_decade < 2 {
        return Err(domain("need at least two grid points per decade"));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let m = ((hi / lo).log10() * points_per_decade as f64).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..=m)
        .map(|j| {
            if j == m {
                hi
            } else {
                (llo + (lhi - llo) * j as f64 / m as f64).exp()
            }
        })
        .collect();
    let mut trace: Vec<(f64, f64)> = grid.iter().map(|&w| (w, fidelity(w))).collect();
    let best = argmax(&trace);
    let a = grid[best.saturating_sub(1)].ln();
    let b = grid[(best + 1).min(m)].ln();
    let g = |x: f64| fidelity(x.exp());
    let mut refine = Vec::new();
    golden_max(&g, a, b, 1e-10, &mut refine);
    trace.extend(refine.into_iter().map(|(x, f)| (x.exp(), f)));
    let best = argmax(&trace);
    let (omega_r_opt, f_opt) = trace[best];
    let edge = 1e-6;
    let at_boundary = (omega_r_opt / lo).ln() <= edge || (hi / omega_r_opt).ln() <= edge;
    Ok(OptimizationResult {
        omega_r_opt,
        f_opt,
        trace,
        at_boundary,
    })
}

/// First index of the largest F (NaN ranks lowest).
fn argmax(trace: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, &(_, f)) in trace.iter().enumerate() {
        let fb = trace[best].1;
        if f > fb || (fb.is_nan() && !f.is_nan()) {
            best = i;
        }
    }
    best
}

/// Motional model used by the frequency optimization.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionalModel {
    /// R(xi), tau(xi) of a gate without echo pulses.
    NoEcho,
    /// Linear interpolation in xi of tabulated (xi, R, tau), ascending xi.
    Tabulated(Vec<(f64, f64, f64)>),
}

impl MotionalModel {
    /// (R, tau) at `xi`.
    pub fn eval(&self, xi: f64) -> Result<(f64, f64)> {
        match self {
            MotionalModel::NoEcho => {
                if !(xi > 1.0) {
                    return Err(domain("xi must exceed 1"));
                }
                Ok((r_no_echo(xi), tau_no_echo(xi)))
            }
            MotionalModel::Tabulated(rows) => {
                if rows.len() < 2 {
                    return Err(domain("table needs at least two rows"));
                }
                let (first, last) = (rows[0].0, rows[rows.len() - 1].0);
                if !(xi >= first && xi <= last) {
                    return Err(Error::Range(format!("xi = {xi} outside table [{first}, {last}]")));
                }
                let k = rows.partition_point(|r| r.0 <= xi).clamp(1, rows.len() - 1);
                let (x0, r0, t0) = rows[k - 1];
                let (x1, r1, t1) = rows[k];
                let w = if x1 > x0 { (xi - x0) / (x1 - x0) } else { 0.0 };
                Ok((r0 + w * (r1 - r0), t0 + w * (t1 - t0)))
            }
        }
    }
}

/// Fixed parameters of a two-qubit frequency optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Params {
    /// rad/s.
    pub lambda: f64,
    /// rad/s.
    pub g: f64,
    /// rad/s.
    pub gamma_m: f64,
    /// s.
    pub t2: f64,
    pub alpha: f64,
    /// rad/s.
    pub omega_lo: f64,
    /// rad/s.
    pub omega_hi: f64,
    pub points_per_decade: usize,
    pub model: MotionalModel,
}

impl Fig4Params {
    /// Search interval 1 kHz to 5 MHz, alpha = 3, no echo.
    pub fn new(lambda: f64, g: f64, gamma_m: f64, t2: f64) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            lambda,
            g,
            gamma_m,
            t2,
            alpha: 3.0,
            omega_lo: two_pi * 1e3,
            omega_hi: two_pi * 5e6,
            points_per_decade: 60,
            model: MotionalModel::NoEcho,
        }
    }
}

/// Two-site frequency ratio xi = sqrt(1 + 4 g/omega_r).
pub fn two_site_xi(g: f64, omega_r: f64) -> f64 {
    (1.0 + 4.0 * g / omega_r).sqrt()
}

/// Approximate two-qubit budget at resonator frequency `omega_r`; the pulse
/// error term is zero (commensurate timing).
pub fn two_qubit_budget(p: &Fig4Params, omega_r: f64) -> Result<FidelityBudget> {
    let xi = two_site_xi(p.g, omega_r);
    let (r_xi, tau_xi) = p.model.eval(xi)?;
    approx_fidelity(
        &BudgetInputs {
            eta: p.lambda / omega_r,
            occupation: 0.0,
            delta_beta: 0.0,
            r_xi,
            tau_xi,
            gamma_m: p.gamma_m,
            omega_r,
            lambda: p.lambda,
            t2: p.t2,
            alpha: p.alpha,
        },
        Vec::new(),
    )
}

/// Optimal omega_r and fidelity for one parameter set.
///
/// Frequencies where t_g Gamma_eff = R Gamma_m / omega_r >= 1 score zero.
pub fn fig4_point(p: &Fig4Params) -> Result<OptimizationResult> {
    if !(p.lambda > 0.0 && p.g > 0.0 && p.gamma_m >= 0.0 && p.t2 > 0.0) {
        return Err(domain("lambda, g, T2 must be positive and Gamma_m non-negative"));
    }
    let f = |w: f64| match two_qubit_budget(p, w) {
        Ok(b) if b.term_motional < 1.0 => b.total,
        _ => 0.0,
    };
    optimize_omega_r(f, p.omega_lo, p.omega_hi, p.points_per_decade)
}

/// One cell of a fidelity map.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Cell {
    pub gamma_m: f64,
    pub t2: f64,
    pub f_opt: f64,
    pub omega_r_opt: f64,
    pub at_boundary: bool,
    /// The optimum satisfies g >= omega_r.
    pub strong_coupling: bool,
}

/// Grid of Gamma_m x T2 values.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Grid {
    /// rad/s.
    pub gamma_m: Vec<f64>,
    /// s.
    pub t2: Vec<f64>,
}

/// `count` log-spaced values over [lo, hi].
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|j| (lo.ln() + (hi / lo).ln() * j as f64 / (count - 1) as f64).exp())
            .collect(),
    }
}

impl Fig4Grid {
    /// 40 x 40 cells over Gamma_m/2pi in [10 Hz, 100 kHz] and T2 in [10 us, 100 ms].
    pub fn standard() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            gamma_m: log_space(two_pi * 10.0, two_pi * 1e5, 40),
            t2: log_space(1e-5, 0.1, 40),
        }
    }
}

/// Optimize every cell; rows follow `grid.gamma_m`, columns `grid.t2`.
pub fn fig4_map(base: &Fig4Params, grid: &Fig4Grid) -> Result<Vec<Fig4Cell>> {
    if grid.gamma_m.iter().chain(&grid.t2).any(|v| !(*v > 0.0)) {
        return Err(domain("grid values must be positive"));
    }
    let cells: Vec<(f64, f64)> = grid
        .gamma_m
        .iter()
        .flat_map(|&gm| grid.t2.iter().map(move |&t2| (gm, t2)))
        .collect();
    cells
        .par_iter()
        .map(|&(gamma_m, t2)| {
            let p = Fig4Params {
                gamma_m,
                t2,
                ..base.clone()
            };
            let r = fig4_point(&p)?;
            Ok(Fig4Cell {
                gamma_m,
                t2,
                f_opt: r.f_opt,
                omega_r_opt: r.omega_r_opt,
                at_boundary: r.at_boundary,
                strong_coupling: p.g >= r.omega_r_opt,
            })
        })
        .collect()
}
