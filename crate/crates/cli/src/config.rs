//! Scenario files: strict TOML with unit-suffixed keys, converted to SI and
//! angular frequencies at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phononbus_core::constants::{EPS0, TWO_PI};
use phononbus_core::decoherence::{BathState, SpectralDensity};
use phononbus_core::device::{CircuitGeometry, DeviceParams, MagneticTip, ResonatorGeometry, ThermalEnvironment};
use phononbus_core::layout::{switch_factor_from_voltage, Boundary, ChainConvention, Layout};
use phononbus_core::pulses::{EchoFamily, PulseSequence};

use crate::error::CliError;

/// Tasks a scenario can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Task {
    DeviceParams,
    Spectrum,
    Ising,
    Fidelity,
    Fig3,
    Fig4,
    LatticeDbeta,
    Optimize,
    Oracle,
    Validate,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::DeviceParams => "device-params",
            Task::Spectrum => "spectrum",
            Task::Ising => "ising",
            Task::Fidelity => "fidelity",
            Task::Fig3 => "fig3",
            Task::Fig4 => "fig4",
            Task::LatticeDbeta => "lattice-dbeta",
            Task::Optimize => "optimize",
            Task::Oracle => "oracle",
            Task::Validate => "validate",
        }
    }
}

/// Whole scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Option<Task>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub device: Option<DeviceSection>,
    pub layout: Option<LayoutSection>,
    pub pulses: Option<PulsesSection>,
    pub bath: Option<BathSection>,
    pub fig3: Option<Fig3Section>,
    pub fig4: Option<Fig4Section>,
    pub optimize: Option<OptimizeSection>,
    pub lattice: Option<LatticeSection>,
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub omega_r_hz: f64,
    #[serde(default = "d_length")]
    pub length_um: f64,
    #[serde(default = "d_cross")]
    pub width_um: f64,
    #[serde(default = "d_cross")]
    pub thickness_um: f64,
    #[serde(default = "d_density")]
    pub mass_density: f64,
    #[serde(default = "d_mass_factor")]
    pub effective_mass_factor: f64,
    #[serde(default = "d_cross")]
    pub electrode_gap_um: f64,
    #[serde(default = "d_wire")]
    pub wire_length_um: f64,
    pub resonator_capacitance_f: Option<f64>,
    pub wire_capacitance_f: Option<f64>,
    #[serde(default = "d_one")]
    pub bias_voltage_v: f64,
    #[serde(default)]
    pub wire_resistance_ohm: f64,
    #[serde(default = "d_gradient")]
    pub gradient_t_per_m: f64,
    #[serde(default)]
    pub fold_electrical_q: bool,
}

fn d_length() -> f64 {
    10.0
}
fn d_cross() -> f64 {
    0.1
}
fn d_density() -> f64 {
    2330.0
}
fn d_mass_factor() -> f64 {
    0.30
}
fn d_wire() -> f64 {
    100.0
}
fn d_one() -> f64 {
    1.0
}
fn d_gradient() -> f64 {
    1e7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayoutSection {
    Chain {
        n: usize,
        g_hz: Option<f64>,
        #[serde(default = "d_convention")]
        convention: ChainConvention,
    },
    SingleWire {
        n: usize,
        g_hz: Option<f64>,
    },
    TwoRegister {
        n1: usize,
        n2: usize,
        g_hz: Option<f64>,
        switch: Option<f64>,
        control_voltage_v: Option<f64>,
    },
    #[serde(rename = "lattice2d")]
    Lattice2D {
        lx: usize,
        ly: usize,
        g_hz: Option<f64>,
        #[serde(default)]
        boundary: Boundary,
    },
    Custom {
        /// CSV of G in rad/s, one row per line; relative to the scenario file.
        matrix_csv: PathBuf,
    },
}

fn d_convention() -> ChainConvention {
    ChainConvention::Physical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsesSection {
    #[serde(default)]
    pub k: usize,
    pub n_cycles: Option<usize>,
    /// Explicit pulse times in units of 2 pi / omega_r.
    pub times: Option<Vec<f64>>,
    /// Gate time in units of 2 pi / omega_r, with `times`.
    pub t_g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    Ohmic,
    Constant,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub kind: BathKind,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    #[serde(rename = "J0_hz")]
    pub j0_hz: Option<f64>,
    pub temperature_mk: f64,
    pub precooled_n: Option<f64>,
    pub t2_ms: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Section {
    #[serde(default = "d_xi_min")]
    pub xi_min: f64,
    #[serde(default = "d_xi_max")]
    pub xi_max: f64,
    #[serde(default = "d_xi_step")]
    pub xi_step: f64,
    #[serde(default = "d_ks")]
    pub k: Vec<usize>,
    #[serde(rename = "Q", default = "d_q")]
    pub q: f64,
    #[serde(default = "d_nth")]
    pub n_th: f64,
    #[serde(default = "d_eta")]
    pub eta: f64,
    #[serde(default = "d_cycles")]
    pub n_cycles: usize,
}

fn d_xi_min() -> f64 {
    1.02
}
fn d_xi_max() -> f64 {
    3.0
}
fn d_xi_step() -> f64 {
    0.01
}
fn d_ks() -> Vec<usize> {
    vec![0, 1, 4, 6]
}
fn d_q() -> f64 {
    1e6
}
fn d_nth() -> f64 {
    1e3
}
fn d_eta() -> f64 {
    0.01
}
fn d_cycles() -> usize {
    100
}

impl Default for Fig3Section {
    fn default() -> Self {
        Self {
            xi_min: d_xi_min(),
            xi_max: d_xi_max(),
            xi_step: d_xi_step(),
            k: d_ks(),
            q: d_q(),
            n_th: d_nth(),
            eta: d_eta(),
            n_cycles: d_cycles(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4Section {
    pub lambda_hz: f64,
    pub g_hz: f64,
    #[serde(default = "d_gm_min")]
    pub gamma_m_min_hz: f64,
    #[serde(default = "d_gm_max")]
    pub gamma_m_max_hz: f64,
    #[serde(default = "d_cells")]
    pub gamma_m_cells: usize,
    #[serde(default = "d_t2_min")]
    pub t2_min_ms: f64,
    #[serde(default = "d_t2_max")]
    pub t2_max_ms: f64,
    #[serde(default = "d_cells")]
    pub t2_cells: usize,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_omega_min")]
    pub omega_min_hz: f64,
    #[serde(default = "d_omega_max")]
    pub omega_max_hz: f64,
    #[serde(default = "d_ppd")]
    pub points_per_decade: usize,
}

fn d_gm_min() -> f64 {
    10.0
}
fn d_gm_max() -> f64 {
    1e5
}
fn d_cells() -> usize {
    40
}
fn d_t2_min() -> f64 {
    1e-2
}
fn d_t2_max() -> f64 {
    100.0
}
fn d_alpha() -> f64 {
    3.0
}
fn d_omega_min() -> f64 {
    1e3
}
fn d_omega_max() -> f64 {
    5e6
}
fn d_ppd() -> usize {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub lambda_hz: f64,
    pub g_hz: f64,
    pub gamma_m_hz: f64,
    pub t2_ms: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_omega_min")]
    pub omega_min_hz: f64,
    #[serde(default = "d_omega_max")]
    pub omega_max_hz: f64,
    #[serde(default = "d_ppd")]
    pub points_per_decade: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "d_side")]
    pub lx: usize,
    #[serde(default = "d_side")]
    pub ly: usize,
    #[serde(default = "d_g_ratio")]
    pub g_over_omega_r: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "d_lattice_k")]
    pub k: usize,
    #[serde(default = "d_lattice_cycles")]
    pub n_cycles: Vec<usize>,
    #[serde(default = "d_half")]
    pub omega_max_over_reference: f64,
}

fn d_side() -> usize {
    20
}
fn d_g_ratio() -> f64 {
    0.2
}
fn d_lattice_k() -> usize {
    4
}
fn d_lattice_cycles() -> Vec<usize> {
    vec![10, 20, 40]
}
fn d_half() -> f64 {
    0.5
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            lx: d_side(),
            ly: d_side(),
            g_over_omega_r: d_g_ratio(),
            boundary: Boundary::Open,
            k: d_lattice_k(),
            n_cycles: d_lattice_cycles(),
            omega_max_over_reference: d_half(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Mode frequency in units of omega_r.
    #[serde(default = "d_one")]
    pub omega_over_omega_r: f64,
    /// Damping times gate time.
    #[serde(default = "d_gamma_tg")]
    pub gamma_t_g: f64,
    #[serde(default = "d_n_bath")]
    pub n_bath: f64,
    #[serde(default)]
    pub n0: f64,
    #[serde(default = "d_oracle_eta")]
    pub eta: f64,
    pub dim: Option<usize>,
    #[serde(default = "d_steps")]
    pub steps_per_period: usize,
}

fn d_gamma_tg() -> f64 {
    0.01
}
fn d_n_bath() -> f64 {
    2.0
}
fn d_oracle_eta() -> f64 {
    0.1
}
fn d_steps() -> usize {
    200
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            omega_over_omega_r: 1.0,
            gamma_t_g: d_gamma_tg(),
            n_bath: d_n_bath(),
            n0: 0.0,
            eta: d_oracle_eta(),
            dim: None,
            steps_per_period: d_steps(),
        }
    }
}

/// Parse a scenario from TOML text.
pub fn parse(text: &str) -> Result<Scenario, CliError> {
    toml::from_str(text)
        .map_err(|e| CliError::Config(format!("{}{}", e.message().trim(), span_hint(text, e.span()))))
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) if r.start <= text.len() => {
            let line = text[..r.start].matches('\n').count() + 1;
            let snippet = text[r.start..r.end.min(text.len())].trim();
            format!(" (line {line}: `{snippet}`)")
        }
        _ => String::new(),
    }
}

/// Read and parse a scenario file.
pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn missing(section: &str, task: Task) -> CliError {
    CliError::Config(format!("missing [{section}] section required by task `{}`", task.name()))
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{key} must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn require_device(&self, task: Task) -> Result<&DeviceSection, CliError> {
        self.device.as_ref().ok_or_else(|| missing("device", task))
    }

    pub fn require_layout(&self, task: Task) -> Result<&LayoutSection, CliError> {
        self.layout.as_ref().ok_or_else(|| missing("layout", task))
    }

    pub fn require_pulses(&self, task: Task) -> Result<&PulsesSection, CliError> {
        self.pulses.as_ref().ok_or_else(|| missing("pulses", task))
    }

    pub fn require_bath(&self, task: Task) -> Result<&BathSection, CliError> {
        self.bath.as_ref().ok_or_else(|| missing("bath", task))
    }
}

impl DeviceSection {
    /// Device parameters; the bath section, when present, sets the environment.
    pub fn to_params(&self, bath: Option<&BathSection>) -> Result<DeviceParams, CliError> {
        let um = 1e-6;
        let length = positive("device.length_um", self.length_um)? * um;
        let wire = positive("device.wire_length_um", self.wire_length_um)? * um;
        let mut environment = ThermalEnvironment::default();
        if let Some(b) = bath {
            environment.temperature = b.temperature_mk * 1e-3;
            if let Some(q) = b.q {
                environment.mechanical_q = q;
            }
            if let Some(t2) = b.t2_ms {
                environment.spin_t2 = t2 * 1e-3;
            }
            if let Some(a) = b.alpha {
                environment.spin_alpha = a;
            }
            environment.precooled_occupation = b.precooled_n;
        }
        Ok(DeviceParams {
            geometry: ResonatorGeometry {
                length,
                width: self.width_um * um,
                thickness: self.thickness_um * um,
                mass_density: self.mass_density,
                effective_mass_factor: self.effective_mass_factor,
            },
            circuit: CircuitGeometry {
                electrode_gap: self.electrode_gap_um * um,
                wire_length: wire,
                resonator_capacitance: self.resonator_capacitance_f.unwrap_or(EPS0 * length),
                wire_capacitance: self.wire_capacitance_f.unwrap_or(EPS0 * wire),
                bias_voltage: self.bias_voltage_v,
                wire_resistance: self.wire_resistance_ohm,
            },
            tip: MagneticTip {
                gradient: self.gradient_t_per_m,
            },
            environment,
            omega_r: TWO_PI * positive("device.omega_r_hz", self.omega_r_hz)?,
            fold_electrical_q: self.fold_electrical_q,
        })
    }
}

impl LayoutSection {
    /// Resolve into a layout; `default_g` (rad/s) fills in a missing `g_hz`.
    pub fn to_layout(&self, default_g: Option<f64>, base_dir: &Path) -> Result<Layout, CliError> {
        let g = |g_hz: &Option<f64>| -> Result<f64, CliError> {
            match (g_hz, default_g) {
                (Some(v), _) => Ok(TWO_PI * v),
                (None, Some(g)) => Ok(g),
                (None, None) => Err(CliError::Config(
                    "layout.g_hz is required when no [device] section provides g".into(),
                )),
            }
        };
        Ok(match self {
            LayoutSection::Chain { n, g_hz, convention } => Layout::Chain {
                n: *n,
                g: g(g_hz)?,
                convention: *convention,
            },
            LayoutSection::SingleWire { n, g_hz } => Layout::SingleWire { n: *n, g: g(g_hz)? },
            LayoutSection::TwoRegister {
                n1,
                n2,
                g_hz,
                switch,
                control_voltage_v,
            } => {
                let switch = match (switch, control_voltage_v) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Config(
                            "layout.switch and layout.control_voltage_v are mutually exclusive".into(),
                        ))
                    }
                    (Some(s), None) => *s,
                    (None, Some(u_c)) => switch_factor_from_voltage(*u_c, 1.0)
                        .map_err(|e| CliError::physics("layout.control_voltage_v", e))?,
                    (None, None) => 1.0,
                };
                Layout::TwoRegister {
                    n1: *n1,
                    n2: *n2,
                    g: g(g_hz)?,
                    switch,
                }
            }
            LayoutSection::Lattice2D { lx, ly, g_hz, boundary } => Layout::Lattice2D {
                lx: *lx,
                ly: *ly,
                g: g(g_hz)?,
                boundary: *boundary,
            },
            LayoutSection::Custom { matrix_csv } => Layout::Custom {
                matrix: crate::output::read_matrix_csv(&base_dir.join(matrix_csv))?,
            },
        })
    }
}

impl PulsesSection {
    pub fn to_sequence(&self, omega_r: f64) -> Result<PulseSequence, CliError> {
        let period = TWO_PI / omega_r;
        match (&self.times, self.n_cycles) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "pulses.times and pulses.n_cycles are mutually exclusive".into(),
            )),
            (Some(times), None) => {
                let t_g = self
                    .t_g
                    .ok_or_else(|| CliError::Config("pulses.t_g is required with pulses.times".into()))?;
                PulseSequence::new(t_g * period, times.iter().map(|t| t * period).collect())
                    .map_err(|e| CliError::physics("pulses.times", e))
            }
            (None, Some(n)) => {
                if self.t_g.is_some() {
                    return Err(CliError::Config("pulses.t_g only applies to explicit times".into()));
                }
                EchoFamily::new(self.k, n, omega_r)
                    .map(|f| f.sequence())
                    .map_err(|e| CliError::physics("pulses.n_cycles", e))
            }
            (None, None) => Err(CliError::Config(
                "pulses needs either n_cycles or times".into(),
            )),
        }
    }
}

impl BathSection {
    pub fn spectral_density(&self) -> Result<SpectralDensity, CliError> {
        match self.kind {
            BathKind::Ohmic => Ok(SpectralDensity::Ohmic {
                q: positive("bath.Q", self.q.ok_or_else(|| CliError::Config("bath.Q is required for kind = \"ohmic\"".into()))?)?,
            }),
            BathKind::Constant => Ok(SpectralDensity::Constant {
                j0: TWO_PI
                    * self
                        .j0_hz
                        .ok_or_else(|| CliError::Config("bath.J0_hz is required for kind = \"constant\"".into()))?,
            }),
            BathKind::Zero => Ok(SpectralDensity::Zero),
        }
    }

    pub fn state(&self) -> Result<BathState, CliError> {
        if !(self.temperature_mk >= 0.0) {
            return Err(CliError::Config("bath.temperature_mk must be non-negative".into()));
        }
        let t = self.temperature_mk * 1e-3;
        Ok(match self.precooled_n {
            Some(n) => BathState::precooled(t, n),
            None => BathState::thermal(t),
        })
    }
}
