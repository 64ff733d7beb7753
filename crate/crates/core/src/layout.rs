//! Electrostatic coupling matrices from circuit layouts.
//!
//! Every wire contributes the rank-one form (g_w/2)(sum of terminal
//! displacements)^2, so it adds g_w to G_ij for all terminal pairs,
//! diagonal included.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A wire joining two or more resonators.
#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub terminals: Vec<usize>,
    /// Coupling strength (rad/s).
    pub strength: f64,
}

/// Diagonal convention for chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainConvention {
    /// Sum of nearest-neighbour wires: end sites carry g, inner sites 2g.
    Physical,
    /// Uniform diagonal 2g on every site.
    UniformDiagonal,
}

/// Boundary condition for 2D lattices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Declarative circuit layout.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Chain {
        n: usize,
        g: f64,
        convention: ChainConvention,
    },
    /// All resonators on one wire, g_ij = g/(N-1).
    SingleWire { n: usize, g: f64 },
    /// Two single-wire registers joined by a coupler between the last site
    /// of the first register and the first site of the second, scaled by `switch`.
    TwoRegister {
        n1: usize,
        n2: usize,
        g: f64,
        switch: f64,
    },
    Lattice2D {
        lx: usize,
        ly: usize,
        g: f64,
        boundary: Boundary,
    },
    Custom { matrix: DMatrix<f64> },
}

/// Symmetric coupling form G in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub g: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            g: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn add_wire(&mut self, wire: &Wire) -> Result<()> {
        let n = self.n();
        validate_wire(wire, n)?;
        for &i in &wire.terminals {
            for &j in &wire.terminals {
                self.g[(i, j)] += wire.strength;
            }
        }
        Ok(())
    }

    /// Largest |G_ij - G_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.g.amax().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in 0..i {
                worst = worst.max((self.g[(i, j)] - self.g[(j, i)]).abs());
            }
        }
        worst / scale
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.g.clone()).eigenvalues.min()
    }

    /// Positive semidefinite up to `rel_tol` of the largest entry.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue() >= -rel_tol * self.g.amax()
    }
}

fn validate_wire(wire: &Wire, n: usize) -> Result<()> {
    if wire.terminals.len() < 2 {
        return Err(domain("a wire needs at least two terminals"));
    }
    if !(wire.strength >= 0.0) {
        return Err(domain("wire strength must be non-negative"));
    }
    for (k, &i) in wire.terminals.iter().enumerate() {
        if i >= n {
            return Err(domain(format!("terminal {i} out of range for {n} resonators")));
        }
        if wire.terminals[..k].contains(&i) {
            return Err(domain(format!("terminal {i} listed twice")));
        }
    }
    Ok(())
}

/// Matrix of a single wire on an N-resonator array.
pub fn wire_quadratic_form(wire: &Wire, n: usize) -> Result<CouplingMatrix> {
    let mut m = CouplingMatrix::zeros(n);
    m.add_wire(wire)?;
    Ok(m)
}

/// s = (1 - U_c/U)^2, the fraction of inter-register coupling left at control voltage U_c.
pub fn switch_factor_from_voltage(u_c: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(domain("bias voltage U must be positive"));
    }
    if !(0.0..=u).contains(&u_c) {
        return Err(domain(format!("control voltage {u_c} outside [0, {u}]")));
    }
    let x = 1.0 - u_c / u;
    Ok(x * x)
}

impl Layout {
    pub fn n_sites(&self) -> usize {
        match self {
            Layout::Chain { n, .. } | Layout::SingleWire { n, .. } => *n,
            Layout::TwoRegister { n1, n2, .. } => n1 + n2,
            Layout::Lattice2D { lx, ly, .. } => lx * ly,
            Layout::Custom { matrix } => matrix.nrows(),
        }
    }

    /// Scalar coupling g, if the layout has one.
    pub fn coupling(&self) -> Option<f64> {
        match self {
            Layout::Chain { g, .. }
            | Layout::SingleWire { g, .. }
            | Layout::TwoRegister { g, .. }
            | Layout::Lattice2D { g, .. } => Some(*g),
            Layout::Custom { .. } => None,
        }
    }

    /// Same layout with a different scalar coupling.
    pub fn with_coupling(&self, new_g: f64) -> Result<Layout> {
        let mut out = self.clone();
        match &mut out {
            Layout::Chain { g, .. }
            | Layout::SingleWire { g, .. }
            | Layout::TwoRegister { g, .. }
            | Layout::Lattice2D { g, .. } => *g = new_g,
            Layout::Custom { .. } => {
                return Err(domain("custom layouts have no scalar coupling"));
            }
        }
        Ok(out)
    }

    /// The wires making up the layout; `None` for custom matrices.
    pub fn wires(&self) -> Option<Vec<Wire>> {
        let pair = |i: usize, j: usize, s: f64| Wire {
            terminals: vec![i, j],
            strength: s,
        };
        let star = |offset: usize, n: usize, g: f64| -> Option<Wire> {
            (n >= 2).then(|| Wire {
                terminals: (offset..offset + n).collect(),
                strength: g / (n - 1) as f64,
            })
        };
        let wires = match *self {
            Layout::Chain { n, g, .. } => (1..n).map(|i| pair(i - 1, i, g)).collect(),
            Layout::SingleWire { n, g } => star(0, n, g).into_iter().collect(),
            Layout::TwoRegister { n1, n2, g, switch } => {
                let mut w: Vec<Wire> = star(0, n1, g).into_iter().collect();
                w.extend(star(n1, n2, g));
                if n1 > 0 && n2 > 0 {
                    w.push(pair(n1 - 1, n1, switch * g));
                }
                w
            }
            Layout::Lattice2D { lx, ly, g, boundary } => {
                let idx = |x: usize, y: usize| y * lx + x;
                let mut w = Vec::new();
                for y in 0..ly {
                    for x in 0..lx {
                        if x + 1 < lx {
                            w.push(pair(idx(x, y), idx(x + 1, y), g));
                        } else if boundary == Boundary::Periodic && lx > 2 {
                            w.push(pair(idx(x, y), idx(0, y), g));
                        }
                        if y + 1 < ly {
                            w.push(pair(idx(x, y), idx(x, y + 1), g));
                        } else if boundary == Boundary::Periodic && ly > 2 {
                            w.push(pair(idx(x, y), idx(x, 0), g));
                        }
                    }
                }
                w
            }
            Layout::Custom { .. } => return None,
        };
        Some(wires)
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites() == 0 {
            return Err(domain("layout must contain at least one resonator"));
        }
        if let Some(g) = self.coupling() {
            if !(g >= 0.0) {
                return Err(domain("coupling g must be non-negative"));
            }
        }
        if let Layout::TwoRegister { switch, .. } = self {
            if !(0.0..=1.0).contains(switch) {
                return Err(domain("switch factor must lie in [0, 1]"));
            }
        }
        if let Layout::Custom { matrix } = self {
            if !matrix.is_square() {
                return Err(Error::Dimension {
                    expected: matrix.nrows(),
                    found: matrix.ncols(),
                });
            }
            if matrix.iter().any(|v| !v.is_finite()) {
                return Err(domain("custom matrix has non-finite entries"));
            }
            let m = CouplingMatrix { g: matrix.clone() };
            if m.asymmetry() > 1e-14 {
                return Err(domain("custom matrix is not symmetric"));
            }
        }
        Ok(())
    }
}

/// Assemble G for a layout.
pub fn build_coupling_matrix(layout: &Layout) -> Result<CouplingMatrix> {
    layout.validate()?;
    if let Layout::Custom { matrix } = layout {
        return Ok(CouplingMatrix { g: matrix.clone() });
    }
    let n = layout.n_sites();
    let mut m = CouplingMatrix::zeros(n);
    for wire in layout.wires().unwrap_or_default() {
        m.add_wire(&wire)?;
    }
    if let Layout::Chain {
        n,
        g,
        convention: ChainConvention::UniformDiagonal,
    } = *layout
    {
        if n >= 2 {
            for i in 0..n {
                m.g[(i, i)] = 2.0 * g;
            }
        }
    }
    Ok(m)
}
