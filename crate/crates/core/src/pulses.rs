//! Spin-echo pulse sequences and their filter functions.
//!
//! A sequence of instantaneous pi pulses at interior times t_1 < ... < t_Np
//! inside (0, t_g) produces the switching function f(t) = +-1 on [0, t_g) and
//! zero outside. Its weights are z_0 = 1/2 at t = 0, z_p = (-1)^p at the
//! pulses, and z_end = -f(t_g^-)/2 at t_g, so f = 2 sum z_p theta(t - t_p).
//!
//! The filter amplitude is beta(w) = sum_p z_p e^{i w t_p}
//! = -(i w / 2) A(w) with A(w) = int_0^t_g f(t) e^{i w t} dt.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::layout::Layout;
use crate::modes::PhononSpectrum;

/// Block structure of an echo family: one reference period with `k`
/// equally spaced flips, repeated `count` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Repetition {
    pub period: f64,
    pub k: usize,
    pub count: usize,
}

/// Pulse sequence over one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    t_g: f64,
    times: Vec<f64>,
    repetition: Option<Repetition>,
}

/// Equidistant family: k pulses per reference period, n periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoFamily {
    pub k: usize,
    pub n_cycles: usize,
    pub reference_omega: f64,
}

/// A constant-sign piece of f(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub len: f64,
    pub sign: f64,
}

impl PulseSequence {
    /// Sequence with explicit interior pulse times.
    pub fn new(t_g: f64, times: Vec<f64>) -> Result<Self> {
        if !(t_g > 0.0 && t_g.is_finite()) {
            return Err(domain("gate time must be positive"));
        }
        for (i, &t) in times.iter().enumerate() {
            if !(t > 0.0 && t < t_g) {
                return Err(domain(format!(
                    "pulse time {t} must lie strictly inside (0, {t_g})"
                )));
            }
            if i > 0 && !(t > times[i - 1]) {
                return Err(domain("pulse times must be strictly increasing"));
            }
        }
        Ok(Self {
            t_g,
            times,
            repetition: None,
        })
    }

    /// Gate without spin echo.
    pub fn free(t_g: f64) -> Result<Self> {
        Self::new(t_g, Vec::new())
    }

    pub fn t_g(&self) -> f64 {
        self.t_g
    }

    /// Interior pulse times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_pulses(&self) -> usize {
        self.times.len()
    }

    pub fn repetition(&self) -> Option<Repetition> {
        self.repetition
    }

    /// Weight of the closing boundary term at t_g.
    fn z_end(&self) -> f64 {
        if self.times.len() % 2 == 0 {
            -0.5
        } else {
            0.5
        }
    }

    /// (t_p, z_p) including both boundary terms.
    pub fn weights(&self) -> Vec<(f64, f64)> {
        let mut w = Vec::with_capacity(self.times.len() + 2);
        w.push((0.0, 0.5));
        for (i, &t) in self.times.iter().enumerate() {
            w.push((t, if i % 2 == 0 { -1.0 } else { 1.0 }));
        }
        w.push((self.t_g, self.z_end()));
        w
    }

    /// f(t): +-1 on [0, t_g), 0 elsewhere.
    pub fn switching_function(&self, t: f64) -> f64 {
        if !(0.0..self.t_g).contains(&t) {
            return 0.0;
        }
        let flips = self.times.partition_point(|&tp| tp <= t);
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Constant-sign pieces of f over the whole gate.
    pub fn intervals(&self) -> Vec<Interval> {
        let mut out = Vec::with_capacity(self.times.len() + 1);
        let mut start = 0.0;
        let mut sign = 1.0;
        for &t in self.times.iter().chain(std::iter::once(&self.t_g)) {
            out.push(Interval {
                start,
                len: t - start,
                sign,
            });
            start = t;
            sign = -sign;
        }
        out
    }

    /// Direct weighted sum beta(w) = sum_p z_p e^{i w t_p}; accepts complex w.
    pub fn beta(&self, omega: Complex64) -> Complex64 {
        let i = Complex64::i();
        let mut acc = Complex64::new(0.5, 0.0);
        for (p, &t) in self.times.iter().enumerate() {
            let e = (i * omega * t).exp();
            if p % 2 == 0 {
                acc -= e;
            } else {
                acc += e;
            }
        }
        acc + self.z_end() * (i * omega * self.t_g).exp()
    }

    /// |beta(w)|^2 at real w.
    pub fn beta_sq(&self, omega: f64) -> f64 {
        self.beta(Complex64::new(omega, 0.0)).norm_sqr()
    }

    /// Builds the evaluator for A(w) and the phase kernel.
    pub fn kernel(&self) -> FilterKernel {
        FilterKernel::new(self)
    }

    /// sum_{p,p'} z_p z_p' cos(w (t_p - t_p')) min(t_p, t_p') over all weights.
    pub fn weighted_min_sum(&self, omega: f64) -> f64 {
        let w = self.weights();
        let mut diag = 0.0;
        let mut prefix = Complex64::new(0.0, 0.0);
        let mut cross = 0.0;
        for &(t, z) in &w {
            let e = Complex64::from_polar(1.0, omega * t);
            cross += (z * e * prefix).re;
            diag += z * z * t;
            prefix += z * t * e.conj();
        }
        diag + 2.0 * cross
    }

    /// t_g/w + (4/w^2) sum_{p>p'} z_p z_p' sin(w (t_p - t_p')) over all weights.
    /// Equal to the phase kernel; loses precision for w t_g << 1.
    pub fn phase_kernel_from_weights(&self, omega: f64) -> f64 {
        let mut prefix = Complex64::new(0.0, 0.0);
        let mut cross = 0.0;
        for (t, z) in self.weights() {
            let e = Complex64::from_polar(1.0, omega * t);
            cross += (z * e * prefix).im;
            prefix += z * e.conj();
        }
        self.t_g / omega + 4.0 / (omega * omega) * cross
    }
}

impl EchoFamily {
    pub fn new(k: usize, n_cycles: usize, reference_omega: f64) -> Result<Self> {
        if n_cycles == 0 {
            return Err(domain("n_cycles must be at least 1"));
        }
        if !(reference_omega > 0.0) {
            return Err(domain("reference frequency must be positive"));
        }
        Ok(Self {
            k,
            n_cycles,
            reference_omega,
        })
    }

    pub fn t_g(&self) -> f64 {
        2.0 * PI * self.n_cycles as f64 / self.reference_omega
    }

    /// Pulses at p 2pi/(k w_ref) for p = 1..nk-1; the nominal last pulse at
    /// t_g does not change f on [0, t_g) and is omitted.
    pub fn sequence(&self) -> PulseSequence {
        let t_g = self.t_g();
        let total = self.k * self.n_cycles;
        let step = 2.0 * PI / (self.k.max(1) as f64 * self.reference_omega);
        let times = (1..total).map(|p| p as f64 * step).collect();
        PulseSequence {
            t_g,
            times,
            repetition: Some(Repetition {
                period: 2.0 * PI / self.reference_omega,
                k: self.k,
                count: self.n_cycles,
            }),
        }
    }
}

/// Even-k closed form sin^2(n pi w/w_ref) tan^2(pi w/(k w_ref)).
pub fn closed_form_beta_sq(k: usize, n_cycles: usize, reference_omega: f64, omega: f64) -> f64 {
    let x = omega / reference_omega;
    let s = (n_cycles as f64 * PI * x).sin();
    if k == 0 {
        return s * s;
    }
    let t = (PI * x / k as f64).tan();
    s * s * t * t
}

/// int_0^L e^{i w s} ds.
fn segment_integral(omega: f64, len: f64) -> Complex64 {
    let y = 0.5 * omega * len;
    Complex64::from_polar(len * sinc(y), y)
}

fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// int_0^L ds int_0^s ds' sin(w (s - s')) = L^2 (x - sin x)/x^2, x = w L.
fn segment_kernel(omega: f64, len: f64) -> f64 {
    let x = omega * len;
    let h = if x.abs() < 0.1 {
        let x2 = x * x;
        x * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362_880.0)))
    } else {
        (x - x.sin()) / (x * x)
    };
    len * len * h
}

/// Evaluator for A(w) and the geometric-phase kernel at real frequencies.
///
/// Family sequences are summed block-wise in O(k); others in O(N_p).
#[derive(Debug, Clone)]
pub struct FilterKernel {
    block: Vec<Interval>,
    period: f64,
    count: usize,
    block_sign: f64,
    t_g: f64,
}

impl FilterKernel {
    pub fn new(seq: &PulseSequence) -> Self {
        match seq.repetition {
            Some(r) => {
                let pieces = r.k.max(1);
                let len = r.period / pieces as f64;
                let block = (0..pieces)
                    .map(|j| Interval {
                        start: j as f64 * len,
                        len,
                        sign: if j % 2 == 0 { 1.0 } else { -1.0 },
                    })
                    .collect();
                Self {
                    block,
                    period: r.period,
                    count: r.count,
                    block_sign: if r.k % 2 == 0 { 1.0 } else { -1.0 },
                    t_g: seq.t_g,
                }
            }
            None => Self {
                block: seq.intervals(),
                period: seq.t_g,
                count: 1,
                block_sign: 1.0,
                t_g: seq.t_g,
            },
        }
    }

    pub fn t_g(&self) -> f64 {
        self.t_g
    }

    /// Frequencies where the block series resonates (block phase = 2 pi j).
    pub fn resonances(&self, limit: f64) -> Vec<f64> {
        if self.count < 2 {
            return Vec::new();
        }
        let base = 2.0 * PI / self.period;
        let offset = if self.block_sign < 0.0 { 0.5 } else { 0.0 };
        let mut out = Vec::new();
        let mut j = 0usize;
        loop {
            let w = (j as f64 + offset) * base;
            if w > limit {
                break;
            }
            if w > 0.0 {
                out.push(w);
            }
            j += 1;
        }
        out
    }

    /// Block phase theta = w P (+ pi for sign-alternating blocks), reduced to (-pi, pi].
    fn reduced_phase(&self, omega: f64) -> f64 {
        let mut theta = omega * self.period;
        if self.block_sign < 0.0 {
            theta += PI;
        }
        theta - 2.0 * PI * (theta / (2.0 * PI)).round()
    }

    fn block_amplitude(&self, omega: f64) -> Complex64 {
        self.block
            .iter()
            .map(|iv| iv.sign * Complex64::from_polar(1.0, omega * iv.start) * segment_integral(omega, iv.len))
            .sum()
    }

    fn block_kernel(&self, omega: f64) -> f64 {
        let mut prefix = Complex64::new(0.0, 0.0);
        let mut k = 0.0;
        for iv in &self.block {
            let ia = iv.sign * Complex64::from_polar(1.0, omega * iv.start) * segment_integral(omega, iv.len);
            k += segment_kernel(omega, iv.len) + (ia * prefix.conj()).im;
            prefix += ia;
        }
        k
    }

    /// sum_{i<n} q^i with q = e^{i theta}.
    fn geometric(&self, theta: f64) -> Complex64 {
        let n = self.count as f64;
        let half = 0.5 * theta;
        let ratio = if half.sin().abs() < 1e-12 {
            n
        } else {
            (n * half).sin() / half.sin()
        };
        Complex64::from_polar(ratio, (n - 1.0) * half)
    }

    /// Im sum_{d=1}^{n-1} (n-d) q^d.
    fn weighted_geometric_im(&self, theta: f64) -> f64 {
        let n = self.count;
        if n < 2 {
            return 0.0;
        }
        if theta.abs() < 0.05 {
            return (1..n).map(|d| (n - d) as f64 * (d as f64 * theta).sin()).sum();
        }
        let s = (0.5 * theta).sin();
        (n as f64 * theta.sin() - (n as f64 * theta).sin()) / (4.0 * s * s)
    }

    /// A(w) = int_0^t_g f(t) e^{i w t} dt.
    pub fn amplitude(&self, omega: f64) -> Complex64 {
        let c = self.block_amplitude(omega);
        if self.count == 1 {
            return c;
        }
        c * self.geometric(self.reduced_phase(omega))
    }

    /// |A(w)|^2 = 4 |beta(w)|^2 / w^2, finite at w = 0.
    pub fn amplitude_sq(&self, omega: f64) -> f64 {
        self.amplitude(omega).norm_sqr()
    }

    /// beta(w) = -(i w/2) A(w).
    pub fn beta(&self, omega: f64) -> Complex64 {
        Complex64::new(0.0, -0.5 * omega) * self.amplitude(omega)
    }

    /// Phase kernel K(w) = int int_{s'<s} f(s) f(s') sin(w (s - s')).
    pub fn phase_kernel(&self, omega: f64) -> f64 {
        let kb = self.block_kernel(omega);
        if self.count == 1 {
            return kb;
        }
        let c = self.block_amplitude(omega);
        self.count as f64 * kb + c.norm_sqr() * self.weighted_geometric_im(self.reduced_phase(omega))
    }
}

/// Delta beta = sqrt((1/N) sum_n (w_r/w_n)^3 |beta(w_n)|^2).
pub fn delta_beta(spectrum: &PhononSpectrum, seq: &PulseSequence) -> f64 {
    let wr = spectrum.omega_r;
    let sum: f64 = spectrum
        .omega
        .iter()
        .map(|&w| (wr / w).powi(3) * seq.beta_sq(w))
        .sum();
    (sum / spectrum.n() as f64).sqrt()
}

/// Adjust the scalar coupling of a two-site or star layout so that
/// omega_0/omega_r = m/n.
pub fn commensurate_tune(n: usize, m: usize, omega_r: f64, layout: &Layout) -> Result<Layout> {
    if n == 0 || m < n {
        return Err(domain("commensurability needs m >= n >= 1"));
    }
    if !(omega_r > 0.0) {
        return Err(domain("omega_r must be positive"));
    }
    match layout {
        Layout::SingleWire { n: sites, .. } if *sites >= 2 => {}
        Layout::Chain { n: 2, .. } => {}
        _ => return Err(domain("commensurate tuning needs a two-site or single-wire layout")),
    }
    let target = m as f64 / n as f64;
    let ratio = |g: f64| -> Result<f64> {
        let l = layout.with_coupling(g)?;
        let s = crate::modes::diagonalize(&crate::layout::build_coupling_matrix(&l)?, omega_r)?;
        Ok(s.omega[0] / omega_r)
    };
    if m == n {
        return layout.with_coupling(0.0);
    }
    let g_max = 1e6 * omega_r;
    let mut hi = omega_r;
    while ratio(hi)? < target {
        hi *= 2.0;
        if hi > g_max {
            return Err(Error::Range(format!(
                "xi = {target} not reachable with g <= {g_max:e}"
            )));
        }
    }
    let mut lo = 0.0;
    // Bisect to floating-point resolution: beta(w_n) grows like n_cycles * |xi error|.
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ratio(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = if (ratio(lo)? - target).abs() < (ratio(hi)? - target).abs() { lo } else { hi };
    layout.with_coupling(best)
}
