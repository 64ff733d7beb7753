//! Task execution: each task turns a scenario into named CSV tables.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use phononbus_core::constants::TWO_PI;
use phononbus_core::decoherence::{
    gate_summary, mode_decoherence, ratio_curve, BathState, IntegralConfig, ModeDecoherence, RatioScan,
    SpectralDensity,
};
use phononbus_core::device::DerivedScales;
use phononbus_core::fidelity::{
    approx_fidelity, exact_fidelity, fig4_map, fig4_point, log_space, spin_dephasing, two_qubit_budget, two_site_xi,
    BudgetInputs, Fig4Grid, Fig4Params,
};
use phononbus_core::ising::{gate_time, ising_matrix, SpinState, MAX_QUBITS};
use phononbus_core::layout::{build_coupling_matrix, Layout};
use phononbus_core::modes::{diagonalize, frequency_ratio_xi, mode_couplings, PhononSpectrum};
use phononbus_core::oracle::{analytic_overlap, oracle_f_n, rwa_reference_f_n, OracleConfig, TruncatedMode};
use phononbus_core::pulses::{delta_beta, EchoFamily, PulseSequence};
use phononbus_core::quadrature::QuadConfig;
use phononbus_core::Error as CoreError;

use crate::config::{Scenario, Task};
use crate::error::{CliError, Context};
use crate::output::{fmt_f64, write_table, RunManifest, Table};

/// Command-line overrides and locations.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub task: Option<Task>,
    pub out_dir: Option<PathBuf>,
    pub tolerance: Option<f64>,
    /// Directory relative paths in the scenario resolve against.
    pub base_dir: PathBuf,
}

/// Tables produced by a task, in emission order.
#[derive(Debug, Clone, Default)]
pub struct TaskOutput {
    pub tables: Vec<(String, Table)>,
    pub notes: Vec<String>,
}

impl TaskOutput {
    fn add(&mut self, name: &str, table: Table) {
        self.tables.push((format!("{name}.csv"), table));
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == file).map(|(_, t)| t)
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub task: Task,
    pub out_dir: PathBuf,
    pub output: TaskOutput,
    pub manifest: RunManifest,
}

pub fn resolve_task(s: &Scenario, opts: &RunOptions) -> Result<Task, CliError> {
    opts.task
        .or(s.task)
        .ok_or_else(|| CliError::Config("no task given: set `task` in the config or pass --task".into()))
}

pub fn integral_config(tolerance: Option<f64>) -> Result<IntegralConfig, CliError> {
    let mut cfg = IntegralConfig::default();
    if let Some(t) = tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!("--tolerance must lie in (0, 1), got {t}")));
        }
        cfg.quad = QuadConfig::with_rel_tol(t);
    }
    Ok(cfg)
}

/// Run the task, write its tables and the manifest.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let task = resolve_task(s, opts)?;
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| s.output.as_ref().map(|p| opts.base_dir.join(p)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let output = execute(s, task, opts)?;
    let mut artifacts = Vec::new();
    for (name, table) in &output.tables {
        artifacts.push(write_table(&out_dir, name, table)?);
    }
    let mut echo = s.clone();
    echo.task = Some(task);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        task: task.name().to_string(),
        config: serde_json::to_value(&echo).map_err(|e| CliError::Io(e.to_string()))?,
        tolerance: opts.tolerance,
        wall_time_s: started.elapsed().as_secs_f64(),
        artifacts,
    };
    manifest.write(&out_dir)?;
    Ok(RunReport {
        task,
        out_dir,
        output,
        manifest,
    })
}

/// Compute the task's tables without touching the filesystem (except
/// reading a custom coupling matrix).
pub fn execute(s: &Scenario, task: Task, opts: &RunOptions) -> Result<TaskOutput, CliError> {
    let cfg = integral_config(opts.tolerance)?;
    let base = opts.base_dir.as_path();
    match task {
        Task::DeviceParams => device_params(s),
        Task::Spectrum => spectrum(s, base),
        Task::Ising => ising(s, base),
        Task::Fidelity => fidelity(s, base, &cfg),
        Task::Fig3 => fig3(s, &cfg),
        Task::Fig4 => fig4(s),
        Task::LatticeDbeta => lattice(s),
        Task::Optimize => optimize(s),
        Task::Oracle => oracle(s, &cfg),
        Task::Validate => Ok(validate(s, base, &cfg)),
    }
}

fn quantity_table() -> Table {
    Table::new(&["quantity", "value"])
}

fn put(t: &mut Table, name: &str, v: f64) {
    t.push(vec![name.to_string(), fmt_f64(v)]);
}

fn derived(s: &Scenario, task: Task) -> Result<DerivedScales, CliError> {
    let dev = s.require_device(task)?;
    let params = dev.to_params(s.bath.as_ref())?;
    params.geometry.validate().at("device")?;
    params.circuit.validate().at("device")?;
    params.environment.validate().at("bath")?;
    params.derive().at("device")
}

fn build_spectrum(s: &Scenario, task: Task, base: &Path) -> Result<(DerivedScales, Layout, PhononSpectrum), CliError> {
    let d = derived(s, task)?;
    let layout = s.require_layout(task)?.to_layout(Some(d.g), base)?;
    let g = build_coupling_matrix(&layout).at("layout")?;
    let spectrum = diagonalize(&g, d.omega_r).at("layout")?;
    Ok((d, layout, spectrum))
}

fn device_params(s: &Scenario) -> Result<TaskOutput, CliError> {
    let d = derived(s, Task::DeviceParams)?;
    let mut t = Table::new(&["quantity", "value", "unit"]);
    let mut row = |name: &str, v: f64, unit: &str| t.push(vec![name.into(), fmt_f64(v), unit.into()]);
    row("omega_r", d.omega_r, "rad/s");
    row("omega_r_hz", d.omega_r / TWO_PI, "Hz");
    row("a0", d.a0, "m");
    row("lambda", d.lambda, "rad/s");
    row("lambda_hz", d.lambda / TWO_PI, "Hz");
    row("g", d.g, "rad/s");
    row("g_hz", d.g / TWO_PI, "Hz");
    row("q_el", d.q_el.value(), "1");
    row("n_th", d.n_th, "1");
    row("gamma_m", d.gamma_m, "rad/s");
    row("gamma_m_hz", d.gamma_m / TWO_PI, "Hz");
    row("eta", d.eta, "1");
    let mut out = TaskOutput::default();
    out.add("device_params", t);
    Ok(out)
}

fn spectrum(s: &Scenario, base: &Path) -> Result<TaskOutput, CliError> {
    let (_, _, sp) = build_spectrum(s, Task::Spectrum, base)?;
    let mut freqs = Table::new(&["n", "omega_rad_s", "omega_hz", "omega_over_omega_r"]);
    for (n, &w) in sp.omega.iter().enumerate() {
        freqs.push(vec![n.to_string(), fmt_f64(w), fmt_f64(w / TWO_PI), fmt_f64(w / sp.omega_r)]);
    }
    let mut shapes = Table::new(&["n", "site", "c"]);
    for n in 0..sp.n() {
        for i in 0..sp.n() {
            shapes.push(vec![n.to_string(), i.to_string(), fmt_f64(sp.coeffs[(n, i)])]);
        }
    }
    let mut out = TaskOutput::default();
    if let Ok(xi) = frequency_ratio_xi(&sp) {
        out.notes.push(format!("xi = {}", fmt_f64(xi)));
    }
    out.add("spectrum", freqs);
    out.add("mode_shapes", shapes);
    Ok(out)
}

fn ising(s: &Scenario, base: &Path) -> Result<TaskOutput, CliError> {
    let (d, _, sp) = build_spectrum(s, Task::Ising, base)?;
    let couplings = ising_matrix(&mode_couplings(&sp, d.lambda).at("device")?, &sp).at("layout")?;
    let n = couplings.n();
    let mut t = Table::new(&["i", "j", "m_rad_s", "j_rad_s", "j_hz", "gate_time_s"]);
    for i in 0..n {
        for j in 0..n {
            let m = couplings.m[(i, j)];
            let jij = if i == j { 0.0 } else { couplings.pair_coupling(i, j) };
            let tg = match gate_time(&couplings, i, j) {
                Ok(v) => fmt_f64(v),
                Err(_) => String::new(),
            };
            t.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(m),
                fmt_f64(jij),
                fmt_f64(jij / TWO_PI),
                tg,
            ]);
        }
    }
    let mut out = TaskOutput::default();
    out.add("ising", t);
    Ok(out)
}

fn bath_inputs(s: &Scenario, task: Task) -> Result<(SpectralDensity, BathState), CliError> {
    let b = s.require_bath(task)?;
    Ok((b.spectral_density()?, b.state()?))
}

fn per_mode(
    sp: &PhononSpectrum,
    j: &SpectralDensity,
    bath: &BathState,
    seq: &PulseSequence,
    lambda: f64,
    cfg: &IntegralConfig,
) -> Result<Vec<ModeDecoherence>, CliError> {
    sp.omega
        .par_iter()
        .map(|&w| mode_decoherence(w, j, bath, seq, lambda / w, cfg))
        .collect::<Result<Vec<_>, CoreError>>()
        .at("bath")
}

fn fidelity(s: &Scenario, base: &Path, cfg: &IntegralConfig) -> Result<TaskOutput, CliError> {
    let task = Task::Fidelity;
    let (d, _, sp) = build_spectrum(s, task, base)?;
    let seq = s.require_pulses(task)?.to_sequence(d.omega_r)?;
    let (j, bath) = bath_inputs(s, task)?;
    let env = s.require_device(task)?.to_params(s.bath.as_ref())?.environment;
    let modes = per_mode(&sp, &j, &bath, &seq, d.lambda, cfg)?;

    let mut mt = Table::new(&["n", "omega_rad_s", "eta", "phi", "f", "f_low", "gamma_rad_s", "beta_sq"]);
    for (n, (m, &w)) in modes.iter().zip(&sp.omega).enumerate() {
        let mut row = vec![n.to_string()];
        row.extend([w, d.lambda / w, m.phi, m.f, m.f_low, m.gamma, seq.beta_sq(w)].map(fmt_f64));
        mt.push(row);
    }

    let mut out = TaskOutput::default();
    let mut st = quantity_table();
    let f_s = spin_dephasing(seq.t_g(), env.spin_t2, env.spin_alpha).at("bath.t2_ms")?;
    let dbeta = delta_beta(&sp, &seq);
    put(&mut st, "n_sites", sp.n() as f64);
    put(&mut st, "t_g_s", seq.t_g());
    put(&mut st, "delta_beta", dbeta);
    put(&mut st, "f_spin", f_s);
    if sp.n() <= MAX_QUBITS {
        let f_n: Vec<f64> = modes.iter().map(|m| m.f).collect();
        let psi = SpinState::product_plus(sp.n()).at("layout")?;
        put(&mut st, "exact_fidelity", exact_fidelity(&psi, &f_n, &sp, f_s).at("bath")?);
    } else {
        out.notes.push(format!("exact fidelity skipped: more than {MAX_QUBITS} sites"));
    }
    if sp.n() == 2 {
        match gate_summary(&sp, &j, &bath, &seq, d.lambda, d.gamma_m, cfg) {
            Ok(g) => {
                put(&mut st, "m_eff_rad_s", g.m_eff);
                put(&mut st, "gamma_eff_rad_s", g.gamma_eff);
                put(&mut st, "r_xi", g.r_xi);
                put(&mut st, "tau_xi", g.tau_xi);
                put(&mut st, "gate_time_s", std::f64::consts::PI / (4.0 * g.m_eff.abs()));
                let occupation = match bath.initial {
                    phononbus_core::decoherence::InitialOccupation::Thermal => d.n_th,
                    phononbus_core::decoherence::InitialOccupation::Precooled(n_i) => n_i + 0.5,
                };
                let budget = approx_fidelity(
                    &BudgetInputs {
                        eta: d.eta,
                        occupation,
                        delta_beta: dbeta,
                        r_xi: g.r_xi,
                        tau_xi: g.tau_xi,
                        gamma_m: d.gamma_m,
                        omega_r: d.omega_r,
                        lambda: d.lambda,
                        t2: env.spin_t2,
                        alpha: env.spin_alpha,
                    },
                    Vec::new(),
                )
                .at("bath")?;
                put(&mut st, "approx_fidelity", budget.total);
                put(&mut st, "term_pulse_error", budget.term_pulse_error);
                put(&mut st, "term_motional", budget.term_motional);
                put(&mut st, "term_spin", budget.term_spin);
            }
            Err(e) => out.notes.push(format!("gate summary unavailable: {e}")),
        }
    }
    out.add("modes", mt);
    out.add("fidelity", st);
    Ok(out)
}

/// xi_min, xi_min + step, ... up to xi_max (inclusive within rounding).
pub fn xi_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|j| ((lo + j as f64 * step) * 1e12).round() / 1e12).collect()
}

fn fig3(s: &Scenario, cfg: &IntegralConfig) -> Result<TaskOutput, CliError> {
    let f = s.fig3.clone().unwrap_or_default();
    if !(f.xi_min > 1.0 && f.xi_max >= f.xi_min && f.xi_step > 0.0) {
        return Err(CliError::Config("fig3 needs 1 < xi_min <= xi_max and xi_step > 0".into()));
    }
    let scan = RatioScan {
        q: f.q,
        n_th: f.n_th,
        eta: f.eta,
        n_cycles: f.n_cycles,
        integrals: *cfg,
    };
    let xis = xi_grid(f.xi_min, f.xi_max, f.xi_step);
    let mut t = Table::new(&["xi", "k", "R", "tau"]);
    for &k in &f.k {
        let curve = ratio_curve(&xis, k, &scan).at("fig3")?;
        for (xi, g) in xis.iter().zip(curve) {
            t.push(vec![fmt_f64(*xi), k.to_string(), fmt_f64(g.r_xi), fmt_f64(g.tau_xi)]);
        }
    }
    let mut out = TaskOutput::default();
    out.add("fig3", t);
    Ok(out)
}

fn fig4(s: &Scenario) -> Result<TaskOutput, CliError> {
    let f = s.fig4.as_ref().ok_or_else(|| CliError::Config("missing [fig4] section required by task `fig4`".into()))?;
    let mut base = Fig4Params::new(TWO_PI * f.lambda_hz, TWO_PI * f.g_hz, 0.0, 1.0);
    base.alpha = f.alpha;
    base.omega_lo = TWO_PI * f.omega_min_hz;
    base.omega_hi = TWO_PI * f.omega_max_hz;
    base.points_per_decade = f.points_per_decade;
    let grid = Fig4Grid {
        gamma_m: log_space(TWO_PI * f.gamma_m_min_hz, TWO_PI * f.gamma_m_max_hz, f.gamma_m_cells),
        t2: log_space(f.t2_min_ms * 1e-3, f.t2_max_ms * 1e-3, f.t2_cells),
    };
    let cells = fig4_map(&base, &grid).at("fig4")?;
    let mut t = Table::new(&["gamma_m_hz", "t2_ms", "f_opt", "omega_r_opt_hz", "at_boundary", "strong_coupling"]);
    for c in cells {
        t.push(vec![
            fmt_f64(c.gamma_m / TWO_PI),
            fmt_f64(c.t2 * 1e3),
            fmt_f64(c.f_opt),
            fmt_f64(c.omega_r_opt / TWO_PI),
            c.at_boundary.to_string(),
            c.strong_coupling.to_string(),
        ]);
    }
    let mut out = TaskOutput::default();
    out.add("fig4", t);
    Ok(out)
}

fn optimize(s: &Scenario) -> Result<TaskOutput, CliError> {
    let o = s
        .optimize
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [optimize] section required by task `optimize`".into()))?;
    let mut p = Fig4Params::new(TWO_PI * o.lambda_hz, TWO_PI * o.g_hz, TWO_PI * o.gamma_m_hz, o.t2_ms * 1e-3);
    p.alpha = o.alpha;
    p.omega_lo = TWO_PI * o.omega_min_hz;
    p.omega_hi = TWO_PI * o.omega_max_hz;
    p.points_per_decade = o.points_per_decade;
    let r = fig4_point(&p).at("optimize")?;
    let mut trace = Table::new(&["omega_r_hz", "fidelity"]);
    for (w, f) in &r.trace {
        trace.push_f64(&[w / TWO_PI, *f]);
    }
    let b = two_qubit_budget(&p, r.omega_r_opt).at("optimize")?;
    let mut st = quantity_table();
    put(&mut st, "omega_r_opt_hz", r.omega_r_opt / TWO_PI);
    put(&mut st, "f_opt", r.f_opt);
    put(&mut st, "at_boundary", if r.at_boundary { 1.0 } else { 0.0 });
    put(&mut st, "xi", two_site_xi(p.g, r.omega_r_opt));
    put(&mut st, "term_motional", b.term_motional);
    put(&mut st, "term_spin", b.term_spin);
    let mut out = TaskOutput::default();
    out.add("optimum", st);
    out.add("optimize_trace", trace);
    Ok(out)
}

fn lattice(s: &Scenario) -> Result<TaskOutput, CliError> {
    let l = s.lattice.clone().unwrap_or_default();
    if !(l.omega_max_over_reference > 0.0) {
        return Err(CliError::Config("lattice.omega_max_over_reference must be positive".into()));
    }
    let layout = Layout::Lattice2D {
        lx: l.lx,
        ly: l.ly,
        g: l.g_over_omega_r,
        boundary: l.boundary,
    };
    let sp = diagonalize(&build_coupling_matrix(&layout).at("lattice")?, 1.0).at("lattice")?;
    let reference = sp.omega[0] / l.omega_max_over_reference;
    let mut t = Table::new(&["n_cycles", "t_g_periods", "delta_beta", "delta_beta_sq"]);
    for &n in &l.n_cycles {
        let seq = EchoFamily::new(l.k, n, reference).at("lattice.n_cycles")?.sequence();
        let db = delta_beta(&sp, &seq);
        t.push(vec![n.to_string(), fmt_f64(seq.t_g() / TWO_PI), fmt_f64(db), fmt_f64(db * db)]);
    }
    let mut out = TaskOutput::default();
    out.add("lattice_dbeta", t);
    Ok(out)
}

fn oracle(s: &Scenario, cfg: &IntegralConfig) -> Result<TaskOutput, CliError> {
    let o = s.oracle.clone().unwrap_or_default();
    let seq = s.require_pulses(Task::Oracle)?.to_sequence(1.0)?;
    let mode = TruncatedMode {
        dim: o.dim,
        omega: o.omega_over_omega_r,
        gamma: o.gamma_t_g / seq.t_g(),
        n_bath: o.n_bath,
        n0: o.n0,
    };
    let ocfg = OracleConfig {
        steps_per_period: o.steps_per_period,
        ..OracleConfig::default()
    };
    let run = oracle_f_n(&mode, &seq, o.eta, &ocfg).at("oracle")?;
    let reference = rwa_reference_f_n(&mode, &seq, o.eta, cfg).at("oracle")?;
    let mut t = quantity_table();
    put(&mut t, "f_oracle", run.f_n);
    put(&mut t, "f_reference", reference);
    put(&mut t, "relative_difference", if reference != 0.0 { run.f_n / reference - 1.0 } else { 0.0 });
    put(&mut t, "trace", run.evolution.trace);
    put(&mut t, "min_eigenvalue", run.evolution.min_eigenvalue);
    put(&mut t, "tail_population", run.evolution.tail);
    put(&mut t, "fock_dim", run.evolution.dim as f64);
    if mode.gamma == 0.0 {
        let want = analytic_overlap(&mode, &seq, o.eta * mode.omega, (1.0, -1.0));
        put(&mut t, "analytic_overlap", want);
    }
    let mut out = TaskOutput::default();
    out.add("oracle", t);
    Ok(out)
}

fn validate(s: &Scenario, base: &Path, cfg: &IntegralConfig) -> TaskOutput {
    let mut t = Table::new(&["check", "status", "detail"]);
    let mut row = |check: &str, status: &str, detail: String| t.push(vec![check.into(), status.into(), detail]);

    if let Some(task) = s.task.filter(|t| *t != Task::Validate) {
        let needs: &[(&str, bool)] = match task {
            Task::DeviceParams => &[("device", s.device.is_some())],
            Task::Spectrum | Task::Ising => &[("device", s.device.is_some()), ("layout", s.layout.is_some())],
            Task::Fidelity => &[
                ("device", s.device.is_some()),
                ("layout", s.layout.is_some()),
                ("pulses", s.pulses.is_some()),
                ("bath", s.bath.is_some()),
            ],
            Task::Fig4 => &[("fig4", s.fig4.is_some())],
            Task::Optimize => &[("optimize", s.optimize.is_some())],
            Task::Oracle => &[("pulses", s.pulses.is_some())],
            _ => &[],
        };
        for (section, present) in needs {
            if !present {
                row("sections", "error", format!("missing [{section}] section required by task `{}`", task.name()));
            }
        }
    }

    let derived = s.device.as_ref().map(|dev| {
        dev.to_params(s.bath.as_ref())
            .and_then(|p| p.derive().at("device"))
    });
    let d = match derived {
        Some(Ok(d)) => {
            row("eta", "info", fmt_f64(d.eta));
            row("n_th", "info", fmt_f64(d.n_th));
            let status = if (1e2..=1e5).contains(&d.n_th) { "ok" } else { "warning" };
            row("n_th_magnitude", status, format!("log10 N_th = {:.2}", d.n_th.log10()));
            row("g_hz", "info", fmt_f64(d.g / TWO_PI));
            row("lambda_hz", "info", fmt_f64(d.lambda / TWO_PI));
            row("gamma_m_hz", "info", fmt_f64(d.gamma_m / TWO_PI));
            Some(d)
        }
        Some(Err(e)) => {
            row("device", "error", e.to_string());
            None
        }
        None => None,
    };

    let omega_r = d.as_ref().map(|d| d.omega_r).unwrap_or(1.0);
    let spectrum = s.layout.as_ref().map(|l| {
        l.to_layout(d.as_ref().map(|d| d.g), base)
            .and_then(|layout| build_coupling_matrix(&layout).at("layout"))
            .and_then(|g| diagonalize(&g, omega_r).at("layout"))
    });
    let sp = match spectrum {
        Some(Ok(sp)) => {
            row("stability", "ok", format!("{} modes, none buckled", sp.n()));
            if let Ok(xi) = frequency_ratio_xi(&sp) {
                row("xi", "info", fmt_f64(xi));
            }
            Some(sp)
        }
        Some(Err(e)) => {
            let status = if e.to_string().contains("buckled") { "buckling" } else { "error" };
            row("stability", status, e.to_string());
            None
        }
        None => None,
    };

    if let (Some(d), Some(sp), Some(p), Some(b)) = (d.as_ref(), sp.as_ref(), s.pulses.as_ref(), s.bath.as_ref()) {
        let check = p.to_sequence(d.omega_r).and_then(|seq| {
            let j = b.spectral_density()?;
            let bath = b.state()?;
            per_mode(sp, &j, &bath, &seq, d.lambda, cfg)
        });
        match check {
            Ok(modes) => {
                let worst = modes.iter().map(|m| 0.5 * m.f).fold(0.0, f64::max);
                let status = if worst < 1.0 { "ok" } else { "warning" };
                row("t_g_gamma_eff", status, fmt_f64(worst));
            }
            Err(e) => row("t_g_gamma_eff", "error", e.to_string()),
        }
    }

    let mut out = TaskOutput::default();
    out.add("report", t);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_grid_is_exact_decimal() {
        let g = xi_grid(1.02, 3.0, 0.01);
        assert_eq!(g.len(), 199);
        assert_eq!(g[5], 1.07);
        assert_eq!(*g.last().unwrap(), 3.0);
    }
}
