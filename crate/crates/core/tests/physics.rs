use std::f64::consts::PI;

use num_complex::Complex64;

use phononbus_core::constants::temperature_for_occupation;
use phononbus_core::decoherence::{
    f_n_equilibrium, f_n_low_frequency, f_n_precooled, gate_summary, geometric_phase, j_eff,
    mode_decoherence, BathState, IntegralConfig, SpectralDensity,
};
use phononbus_core::fidelity::{exact_fidelity, spin_dephasing};
use phononbus_core::ising::SpinState;
use phononbus_core::layout::{build_coupling_matrix, Boundary, Layout};
use phononbus_core::modes::diagonalize;
use phononbus_core::oracle::{
    analytic_overlap, brute_force_delta_beta, evolve_conditional, oracle_f_n, rwa_reference_f_n,
    OracleConfig, TruncatedMode,
};
use phononbus_core::pulses::{delta_beta, EchoFamily, PulseSequence};

fn cfg() -> IntegralConfig {
    IntegralConfig::default()
}

#[test]
fn j_eff_at_resonance() {
    let j = SpectralDensity::Ohmic { q: 1e6 };
    assert!((j_eff(&j, 3.0, 3.0) / 3e6 - 1.0).abs() < 1e-9);
}

#[test]
fn isolated_mode_limit() {
    let omega_n = 1.0;
    let seq = PulseSequence::free(2.0 * PI * 10.3).unwrap();
    let eta = 0.1;
    for n_th in [10.0, 30.0] {
        let t = temperature_for_occupation(omega_n, n_th);
        for q in [1e8, 1e9] {
            let j = SpectralDensity::Ohmic { q };
            let f = f_n_equilibrium(omega_n, &j, t, &seq, eta, &cfg()).unwrap();
            let want = 4.0 * eta * eta * (n_th + 0.5) * seq.beta_sq(omega_n);
            assert!((f / want - 1.0).abs() < 0.02, "N={n_th} Q={q}: {f} vs {want}");
        }
    }
}

#[test]
fn low_frequency_part_without_echo() {
    let omega_n = 1.0;
    let q = 1e6;
    let n_th = 1e3;
    let t = temperature_for_occupation(1.0, n_th);
    let seq = PulseSequence::free(2.0 * PI * 100.0).unwrap();
    let eta = 0.1;
    let f_l = f_n_low_frequency(omega_n, &SpectralDensity::Ohmic { q }, t, &seq, eta, &cfg()).unwrap();
    let gamma_m = (n_th + 0.5) / q;
    let want = 2.0 * eta * eta * gamma_m * seq.t_g();
    assert!((f_l / want - 1.0).abs() < 0.02, "{f_l} vs {want}");
}

#[test]
fn one_over_f_echo_suppression() {
    let j = SpectralDensity::Constant { j0: 1e-4 };
    let omega_n = 1.0;
    let t = temperature_for_occupation(1.0, 100.0);
    let mut logs = Vec::new();
    for n in [10usize, 20, 40, 80] {
        let seq = EchoFamily::new(2, n, 1.0).unwrap().sequence();
        let kernel = seq.kernel();
        let small: Vec<f64> = [1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&w| j.eval(w) * kernel.amplitude_sq(w) * w * w / 4.0 / (w * w * w))
            .collect();
        assert!(small[2] < small[1] && small[1] < small[0] && small[2] < 1e-3);
        let f_l = f_n_low_frequency(omega_n, &j, t, &seq, 0.1, &cfg()).unwrap();
        logs.push(((seq.t_g()).ln(), f_l.ln()));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope < 1.0, "slope {slope}");
}

#[test]
fn precooled_limits() {
    let omega_n = 1.5;
    let seq = EchoFamily::new(2, 10, 1.0).unwrap().sequence();
    assert!(seq.beta_sq(omega_n) < 1e-24);
    let j = SpectralDensity::Ohmic { q: 1e5 };
    let eta = 0.1;
    // Commensurate gate without damping: nothing beyond the low-frequency part.
    let zero = SpectralDensity::Zero;
    let f = f_n_precooled(omega_n, &zero, &BathState::precooled(0.0, 3.0), &seq, eta, &cfg()).unwrap();
    assert!(f.abs() < 1e-20);
    // Weak damping: N_i enters only through |beta(w_n + i gamma/2)|^2 = O((gamma t_g)^2).
    let a = f_n_precooled(omega_n, &j, &BathState::precooled(0.0, 0.0), &seq, eta, &cfg()).unwrap();
    let b = f_n_precooled(omega_n, &j, &BathState::precooled(0.0, 5.0), &seq, eta, &cfg()).unwrap();
    assert!((a - b).abs() < 0.05 * a, "{a} vs {b}");
    // A pulse error adds 4 eta^2 (N_i + 1/2) |beta|^2 regardless of temperature.
    let off = EchoFamily::new(2, 10, 1.01).unwrap().sequence();
    let eps = off.beta_sq(omega_n);
    for t in [0.0, 1e-9] {
        let f = f_n_precooled(omega_n, &zero, &BathState::precooled(t, 0.0), &off, eta, &cfg()).unwrap();
        assert!((f - 2.0 * eta * eta * eps).abs() < 1e-14);
    }
}

#[test]
fn bare_phase_recovers_ising() {
    let seq = PulseSequence::free(2.0 * PI * 50.0).unwrap();
    let j = SpectralDensity::Ohmic { q: 1e8 };
    for omega_n in [1.0, 1.7] {
        let eta = 0.1 / omega_n;
        let phi = geometric_phase(omega_n, &j, &seq, eta, &cfg()).unwrap();
        let want = eta * eta * omega_n * seq.t_g() / 4.0;
        assert!((phi / want - 1.0).abs() < 1e-3);
    }
}

#[test]
fn no_coupling_reported() {
    let s = diagonalize(&build_coupling_matrix(&Layout::SingleWire { n: 2, g: 0.0 }).unwrap(), 1.0).unwrap();
    let seq = PulseSequence::free(10.0).unwrap();
    let r = gate_summary(
        &s,
        &SpectralDensity::Ohmic { q: 1e6 },
        &BathState::thermal(1e-9),
        &seq,
        0.01,
        1e-3,
        &cfg(),
    );
    assert!(r.is_err());
}

#[test]
fn approximate_and_exact_motional_error_agree() {
    // Two qubits, no echo, Q = 1e6, N_th = 1e3.
    let omega_r = 1.0;
    let q = 1e6;
    let n_th = 1e3;
    let t = temperature_for_occupation(omega_r, n_th);
    let gamma_m = 1.380649e-23 * t / (1.054571817e-34 * q);
    let lambda = 0.01;
    let j = SpectralDensity::Ohmic { q };
    for xi in [1.5f64, 2.0, 3.0] {
        let g = (xi * xi - 1.0) * omega_r / 4.0;
        let s = diagonalize(&build_coupling_matrix(&Layout::SingleWire { n: 2, g }).unwrap(), omega_r).unwrap();
        let probe = EchoFamily::new(0, 100, omega_r).unwrap().sequence();
        let summary = gate_summary(&s, &j, &BathState::thermal(t), &probe, lambda, gamma_m, &cfg()).unwrap();
        let approx_error = summary.r_xi * gamma_m / omega_r;
        // Evaluate F_n over the actual gate, t_g = pi / (4 |M_eff|).
        let gate = PulseSequence::free(PI / (4.0 * summary.m_eff.abs())).unwrap();
        let f_n: Vec<f64> = s
            .omega
            .iter()
            .map(|&w| mode_decoherence(w, &j, &BathState::thermal(t), &gate, lambda / w, &cfg()).unwrap().f)
            .collect();
        let exact = exact_fidelity(&SpinState::product_plus(2).unwrap(), &f_n, &s, 0.0).unwrap();
        let exact_error = 1.0 - exact;
        assert!(exact_error <= 0.05);
        assert!((exact_error / approx_error - 1.0).abs() < 0.3, "xi {xi}: {exact_error} vs {approx_error}");
    }
}

#[test]
fn spin_dephasing_enters_exact_fidelity() {
    let s = diagonalize(&build_coupling_matrix(&Layout::SingleWire { n: 2, g: 0.3 }).unwrap(), 1.0).unwrap();
    let fs = spin_dephasing(1e-3, 1e-2, 3.0).unwrap();
    let f = exact_fidelity(&SpinState::product_plus(2).unwrap(), &[0.0, 0.0], &s, fs).unwrap();
    assert!((f - (1.0 - fs)).abs() < fs * fs);
}

#[test]
fn oracle_undamped_overlap() {
    for (n0, lambda, t_g) in [(0.0, 0.3, 5.0), (2.0, 0.2, 11.0), (5.0, 0.1, 3.3)] {
        let mode = TruncatedMode {
            dim: None,
            omega: 1.0,
            gamma: 0.0,
            n_bath: 0.0,
            n0,
        };
        let seq = PulseSequence::new(t_g, vec![0.4 * t_g]).unwrap();
        let r = evolve_conditional(&mode, (1.0, -1.0), &seq, lambda, &OracleConfig::default()).unwrap();
        let want = analytic_overlap(&mode, &seq, lambda, (1.0, -1.0));
        assert!((r.overlap.norm() - want).abs() < 1e-6, "{} vs {want}", r.overlap.norm());
    }
}

#[test]
fn oracle_invariants_and_step_convergence() {
    let seq = EchoFamily::new(2, 6, 1.0).unwrap().sequence();
    let mode = TruncatedMode {
        dim: None,
        omega: 1.13,
        gamma: 0.02 / seq.t_g(),
        n_bath: 3.0,
        n0: 1.0,
    };
    let coarse = oracle_f_n(&mode, &seq, 0.15, &OracleConfig::default()).unwrap();
    let fine = oracle_f_n(
        &mode,
        &seq,
        0.15,
        &OracleConfig {
            steps_per_period: 400,
            ..OracleConfig::default()
        },
    )
    .unwrap();
    assert!((coarse.evolution.trace - 1.0).abs() < 1e-9);
    assert!(coarse.evolution.min_eigenvalue > -1e-8);
    assert!((coarse.f_n - fine.f_n).abs() < 1e-4 * fine.f_n);
    let reference = rwa_reference_f_n(&mode, &seq, 0.15, &cfg()).unwrap();
    assert!((coarse.f_n / reference - 1.0).abs() < 0.05);
}

#[test]
fn oracle_zero_coupling() {
    let mode = TruncatedMode {
        dim: None,
        omega: 1.0,
        gamma: 1e-3,
        n_bath: 2.0,
        n0: 2.0,
    };
    let seq = PulseSequence::free(30.0).unwrap();
    assert!(oracle_f_n(&mode, &seq, 0.0, &OracleConfig::default()).unwrap().f_n.abs() < 1e-12);
}

#[test]
fn brute_force_delta_beta_on_lattice() {
    let layout = Layout::Lattice2D {
        lx: 10,
        ly: 10,
        g: 0.15,
        boundary: Boundary::Open,
    };
    let s = diagonalize(&build_coupling_matrix(&layout).unwrap(), 1.0).unwrap();
    let seq = EchoFamily::new(4, 7, 2.0 * s.omega[0]).unwrap().sequence();
    let fast = delta_beta(&s, &seq);
    let slow = brute_force_delta_beta(&layout, 1.0, &seq).unwrap();
    assert!((fast - slow).abs() < 1e-10);
}

#[test]
fn beta_complex_argument_reduces_to_real() {
    let seq = EchoFamily::new(4, 3, 1.0).unwrap().sequence();
    let w = 1.37;
    let a = seq.beta(Complex64::new(w, 0.0)).norm_sqr();
    assert!((a - seq.beta_sq(w)).abs() < 1e-14);
}
