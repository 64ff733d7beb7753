//! Phonon-mediated Ising couplings and the ideal entangling gate on small
//! spin registers.
//!
//! Basis index bit i set means qubit i is in |1>, i.e. s_i = -1; a clear
//! bit is |0> with s_i = +1.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::modes::{ModeCouplings, PhononSpectrum};
use crate::pulses::PulseSequence;

/// Largest register handled as a state vector.
pub const MAX_QUBITS: usize = 14;

/// M_ij = sum_n lambda_ni lambda_nj / (4 omega_n) for i != j, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingCouplings {
    pub m: DMatrix<f64>,
}

impl IsingCouplings {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// Coefficient of s_i s_j for i < j, J_ij = 2 M_ij.
    pub fn pair_coupling(&self, i: usize, j: usize) -> f64 {
        2.0 * self.m[(i, j)]
    }
}

/// Register state over the 2^N computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n: usize,
    amps: Vec<Complex64>,
}

/// Couplings, duration and pulse sequence of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GatePlan {
    pub couplings: IsingCouplings,
    pub t_g: f64,
    pub sequence: PulseSequence,
}

impl GatePlan {
    pub fn new(couplings: IsingCouplings, sequence: PulseSequence) -> Self {
        Self {
            t_g: sequence.t_g(),
            couplings,
            sequence,
        }
    }
}

/// s_i of basis state `index`.
pub fn spin(index: usize, i: usize) -> f64 {
    if index >> i & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SpinState {
    /// Normalized state from amplitudes; length must be 2^n with n <= MAX_QUBITS.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(domain("amplitude count must be a power of two"));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(domain(format!("state vectors are limited to {MAX_QUBITS} qubits")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(domain("state must have non-zero finite norm"));
        }
        Ok(Self {
            n,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Computational basis state.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_size(n)?;
        if index >= 1 << n {
            return Err(domain("basis index out of range"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Product state ((|0> + |1>)/sqrt 2)^N.
    pub fn product_plus(n: usize) -> Result<Self> {
        check_size(n)?;
        let a = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
        Ok(Self {
            n,
            amps: vec![a; 1 << n],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |<self|other>|^2.
    pub fn overlap(&self, other: &SpinState) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: other.n,
            });
        }
        let s: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s.norm_sqr())
    }

    /// Multiply each amplitude by exp(i phase(index)).
    pub fn apply_phases(&self, phase: impl Fn(usize) -> f64) -> SpinState {
        SpinState {
            n: self.n,
            amps: self
                .amps
                .iter()
                .enumerate()
                .map(|(idx, a)| a * Complex64::from_polar(1.0, phase(idx)))
                .collect(),
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(domain(format!("qubit count must lie in 1..={MAX_QUBITS}")));
    }
    Ok(())
}

/// Ising matrix from mode couplings.
pub fn ising_matrix(modes: &ModeCouplings, spectrum: &PhononSpectrum) -> Result<IsingCouplings> {
    let n = spectrum.n();
    if modes.lambda_ni.nrows() != n || modes.lambda_ni.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: modes.lambda_ni.nrows(),
        });
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v: f64 = (0..n)
                .map(|k| modes.lambda_ni[(k, i)] * modes.lambda_ni[(k, j)] / (4.0 * spectrum.omega[k]))
                .sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(IsingCouplings { m })
}

/// Gate time pi / (4 |J_ij|) for the pair (i, j).
pub fn gate_time(couplings: &IsingCouplings, i: usize, j: usize) -> Result<f64> {
    let n = couplings.n();
    if i >= n || j >= n || i == j {
        return Err(domain("gate time needs two distinct sites in range"));
    }
    let jij = couplings.pair_coupling(i, j).abs();
    if !(jij > 0.0) {
        return Err(Error::NoCoupling);
    }
    Ok(PI / (4.0 * jij))
}

/// Phase sum_{i != j} M_ij s_i s_j t of basis state `index`.
pub fn ising_phase(couplings: &IsingCouplings, index: usize, t: f64) -> f64 {
    let n = couplings.n();
    let mut acc = 0.0;
    for i in 0..n {
        let si = spin(index, i);
        for j in 0..i {
            acc += 2.0 * couplings.m[(i, j)] * si * spin(index, j);
        }
    }
    acc * t
}

/// Phase sum_n Phi_n s_n^2 with s_n = sum_i c_ni s_i.
pub fn mode_phase(spectrum: &PhononSpectrum, phi: &[f64], index: usize) -> f64 {
    let n = spectrum.n();
    phi.iter()
        .enumerate()
        .map(|(k, p)| {
            let sn: f64 = (0..n).map(|i| spectrum.coeffs[(k, i)] * spin(index, i)).sum();
            p * sn * sn
        })
        .sum()
}

/// Global phase sum_n Phi_n sum_i c_ni^2 from the s_i^2 = 1 self-terms.
pub fn self_term_phase(spectrum: &PhononSpectrum, phi: &[f64]) -> f64 {
    phi.iter()
        .enumerate()
        .map(|(k, p)| p * spectrum.coeffs.row(k).iter().map(|c| c * c).sum::<f64>())
        .sum()
}

/// Ideal gate on a state: pair-coupling form, or the mode form when
/// per-mode phases Phi_n (with their spectrum) are supplied.
pub fn apply_ideal_gate(
    state: &SpinState,
    plan: &GatePlan,
    phases: Option<(&PhononSpectrum, &[f64])>,
) -> Result<SpinState> {
    let n = plan.couplings.n();
    if state.n_qubits() != n {
        return Err(Error::Dimension {
            expected: n,
            found: state.n_qubits(),
        });
    }
    match phases {
        None => Ok(state.apply_phases(|idx| ising_phase(&plan.couplings, idx, plan.t_g))),
        Some((spectrum, phi)) => {
            if spectrum.n() != n || phi.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: phi.len(),
                });
            }
            Ok(state.apply_phases(|idx| mode_phase(spectrum, phi, idx)))
        }
    }
}

/// Collective-model phases M t (sum_i s_i)^2 / N, one per basis state.
pub fn collective_phase_pattern(n: usize, m: f64, t: f64) -> Result<Vec<f64>> {
    check_size(n)?;
    Ok((0..1usize << n)
        .map(|idx| {
            let total: f64 = (0..n).map(|i| spin(idx, i)).sum();
            m * t * total * total / n as f64
        })
        .collect())
}

/// Largest deviation between two phase patterns after removing the best
/// global offset (taken from basis state 0), wrapped to (-pi, pi].
pub fn phase_pattern_distance(a: &[f64], b: &[f64]) -> f64 {
    let offset = a[0] - b[0];
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y - offset).rem_euclid(2.0 * PI);
            if d > PI {
                2.0 * PI - d
            } else {
                d
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_coupling_matrix, Layout};
    use crate::modes::{diagonalize, frequency_ratio_xi, mode_couplings};

    fn couplings(layout: Layout, lambda: f64) -> (PhononSpectrum, IsingCouplings) {
        let s = diagonalize(&build_coupling_matrix(&layout).unwrap(), 1.0).unwrap();
        let mc = mode_couplings(&s, lambda).unwrap();
        let m = ising_matrix(&mc, &s).unwrap();
        (s, m)
    }

    #[test]
    fn two_site_pair_coupling() {
        let eta = 0.05;
        let (s, m) = couplings(Layout::SingleWire { n: 2, g: 0.3 }, eta);
        let xi = frequency_ratio_xi(&s).unwrap();
        let want = eta * eta * (1.0 / xi - 1.0) / 4.0;
        assert!((m.pair_coupling(0, 1) - want).abs() < 1e-14);
        assert_eq!(m.m[(0, 0)], 0.0);
    }

    #[test]
    fn uncoupled_is_zero() {
        let (_, m) = couplings(Layout::SingleWire { n: 3, g: 0.0 }, 0.1);
        assert_eq!(m.m.amax(), 0.0);
        assert!(matches!(gate_time(&m, 0, 1), Err(Error::NoCoupling)));
    }

    #[test]
    fn bell_state() {
        let (_, m) = couplings(Layout::SingleWire { n: 2, g: 0.5 }, 0.1);
        let t = gate_time(&m, 0, 1).unwrap();
        assert!((t * m.pair_coupling(0, 1).abs() - PI / 4.0).abs() < 1e-15);
        let seq = PulseSequence::free(t).unwrap();
        let out = apply_ideal_gate(&SpinState::product_plus(2).unwrap(), &GatePlan::new(m, seq), None)
            .unwrap();
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let target = SpinState::new(vec![one, i, i, one]).unwrap();
        assert!(1.0 - target.overlap(&out).unwrap() < 1e-12);
    }

    #[test]
    fn doubling_coupling_halves_time() {
        let (_, m) = couplings(Layout::SingleWire { n: 2, g: 0.5 }, 0.1);
        let doubled = IsingCouplings { m: &m.m * 2.0 };
        let ratio = gate_time(&m, 0, 1).unwrap() / gate_time(&doubled, 0, 1).unwrap();
        assert!((ratio - 2.0).abs() < 1e-14);
    }

    #[test]
    fn star_matches_collective_model() {
        let n = 3;
        let (_, m) = couplings(Layout::SingleWire { n, g: 0.4 }, 0.1);
        let t = 17.0;
        let pair: Vec<f64> = (0..1 << n).map(|idx| ising_phase(&m, idx, t)).collect();
        let collective = collective_phase_pattern(n, n as f64 * m.m[(0, 1)], t).unwrap();
        assert!(phase_pattern_distance(&pair, &collective) < 1e-12);
    }

    #[test]
    fn collective_all_up() {
        let p = collective_phase_pattern(4, 0.3, 2.0).unwrap();
        assert!((p[0] - 0.3 * 2.0 * 4.0).abs() < 1e-15);
        assert!(collective_phase_pattern(4, 0.3, 0.0).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mode_form_equals_pair_form() {
        let lambda = 0.1;
        let (s, m) = couplings(
            Layout::Chain {
                n: 4,
                g: 0.2,
                convention: crate::layout::ChainConvention::Physical,
            },
            lambda,
        );
        let t = 50.0;
        let phi: Vec<f64> = s.omega.iter().map(|w| lambda * lambda * t / (4.0 * w)).collect();
        let pair: Vec<f64> = (0..16).map(|idx| ising_phase(&m, idx, t)).collect();
        let modes: Vec<f64> = (0..16).map(|idx| mode_phase(&s, &phi, idx)).collect();
        assert!(phase_pattern_distance(&pair, &modes) < 1e-12);
        let shifted: Vec<f64> = pair.iter().map(|p| p + self_term_phase(&s, &phi)).collect();
        assert!(shifted.iter().zip(&modes).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn dimension_mismatch() {
        let (_, m) = couplings(Layout::SingleWire { n: 2, g: 0.5 }, 0.1);
        let seq = PulseSequence::free(1.0).unwrap();
        let plan = GatePlan::new(m, seq);
        assert!(apply_ideal_gate(&SpinState::product_plus(3).unwrap(), &plan, None).is_err());
    }
}
