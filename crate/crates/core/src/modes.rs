//! Collective phonon modes of a coupled resonator array.
//!
//! With position-position coupling the dynamical matrix is
//! omega_r^2 I + 2 omega_r G, so omega_n^2 = omega_r^2 + 2 omega_r mu_n for the
//! eigenvalues mu_n of G and the mode shapes are the eigenvectors of G.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::layout::CouplingMatrix;

/// Mode frequencies (descending) and orthonormal mode shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhononSpectrum {
    /// omega_n (rad/s), descending.
    pub omega: Vec<f64>,
    /// Row n holds c_{n,i}.
    pub coeffs: DMatrix<f64>,
    /// Bare resonator frequency (rad/s).
    pub omega_r: f64,
}

/// Per-mode spin couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCouplings {
    /// lambda_{n,i} = lambda c_{n,i} (rad/s).
    pub lambda_ni: DMatrix<f64>,
    /// eta_n = lambda / omega_n.
    pub eta: Vec<f64>,
    pub lambda: f64,
}

impl PhononSpectrum {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    /// omega_r^2 I + 2 omega_r G rebuilt from the modes.
    pub fn dynamical_matrix(&self) -> DMatrix<f64> {
        let w2 = DVector::from_iterator(self.n(), self.omega.iter().map(|w| w * w));
        self.coeffs.transpose() * DMatrix::from_diagonal(&w2) * &self.coeffs
    }
}

/// Diagonalize G into collective modes.
pub fn diagonalize(coupling: &CouplingMatrix, omega_r: f64) -> Result<PhononSpectrum> {
    if !(omega_r > 0.0) {
        return Err(domain("omega_r must be positive"));
    }
    let n = coupling.n();
    if n == 0 {
        return Err(domain("empty coupling matrix"));
    }
    let eig = SymmetricEigen::new(coupling.g.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mu: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let lowest = mu[n - 1];
    let lowest_sq = omega_r * omega_r + 2.0 * omega_r * lowest;
    if !(lowest_sq > 0.0) {
        return Err(Error::Buckled {
            eigenvalue: lowest,
            omega_sq: lowest_sq,
        });
    }

    let scale = coupling.g.amax().max(omega_r * 1e-300);
    let tol = 1e-9 * scale;
    let mut coeffs = DMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (mu[start] - mu[end]).abs() <= tol {
            end += 1;
        }
        let basis: Vec<DVector<f64>> = order[start..end]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        let vectors = if basis.len() == 1 {
            basis
        } else {
            canonical_basis(&basis)
        };
        for (row, v) in (start..end).zip(vectors) {
            let v = fix_sign(v);
            coeffs.row_mut(row).copy_from(&v.transpose());
        }
        start = end;
    }

    let omega = mu
        .iter()
        .map(|m| (omega_r * omega_r + 2.0 * omega_r * m).sqrt())
        .collect();
    Ok(PhononSpectrum {
        omega,
        coeffs,
        omega_r,
    })
}

/// Site-ordered Gram-Schmidt of the site unit vectors projected onto span(basis).
fn canonical_basis(basis: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let d = basis.len();
    let n = basis[0].len();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(d);
    for site in 0..n {
        if out.len() == d {
            break;
        }
        let mut v = DVector::zeros(n);
        for b in basis {
            v.axpy(b[site], b, 1.0);
        }
        for _ in 0..2 {
            for u in &out {
                let c = u.dot(&v);
                v.axpy(-c, u, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / norm);
        }
    }
    out
}

/// Make the largest-magnitude coefficient positive (first index wins ties).
fn fix_sign(v: DVector<f64>) -> DVector<f64> {
    let max = v.amax();
    let lead = v
        .iter()
        .find(|c| c.abs() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(0.0);
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// xi = omega_max / omega_min.
pub fn frequency_ratio_xi(spectrum: &PhononSpectrum) -> Result<f64> {
    if spectrum.n() < 2 {
        return Err(domain("frequency ratio needs at least two modes"));
    }
    let max = spectrum.omega.iter().copied().fold(f64::MIN, f64::max);
    let min = spectrum.omega.iter().copied().fold(f64::MAX, f64::min);
    Ok(max / min)
}

pub fn mode_couplings(spectrum: &PhononSpectrum, lambda: f64) -> Result<ModeCouplings> {
    if !(lambda >= 0.0) {
        return Err(domain("lambda must be non-negative"));
    }
    Ok(ModeCouplings {
        lambda_ni: &spectrum.coeffs * lambda,
        eta: spectrum.omega.iter().map(|w| lambda / w).collect(),
        lambda,
    })
}
