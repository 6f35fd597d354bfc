//! Band-limited fields concentrated on the truncated disk.
//!
//! On the discrete model the sharp band projection produces spectra whose
//! synthesis spills past `R_max`; the grid then barely sees them. For every
//! angular mode `m` we diagonalize the grid Gram matrix restricted to
//! `λ ≤ ω`, in coordinates `y_i = √μ_i G_m(λ_i)` that are orthonormal for
//! the Plancherel inner product. Eigenvalues are concentration ratios
//! (grid energy over Plancherel energy). Keeping the eigenvectors above a
//! threshold gives a subspace of `PW_ω` that the grid represents faithfully.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hft::{Hft, SpectralField};

/// Default concentration threshold.
pub const DEFAULT_CONCENTRATION: f64 = 0.9;

pub struct ConcentratedSpace {
    pub omega: f64,
    pub threshold: f64,
    /// λ rows with `λ_i ≤ ω`.
    rows: Vec<usize>,
    sqrt_mu: Vec<f64>,
    /// per `|m|`, kept eigenvectors as columns
    bases: Vec<DMatrix<Complex64>>,
    /// per `|m|`, all eigenvalues, descending
    pub eigenvalues: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationSummary {
    pub omega: f64,
    pub threshold: f64,
    pub dimension: usize,
    pub band_dimension: usize,
    pub min_kept: f64,
}

impl ConcentratedSpace {
    pub fn new(hft: &Hft, omega: f64, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Domain(format!("concentration threshold must lie in (0, 1), got {threshold}")));
        }
        if !(omega > 0.0) || omega > hft.sgrid.lambda_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("band limit {omega} outside (0, Λ_max]")));
        }
        let rows: Vec<usize> = (0..hft.sgrid.n_lambda()).filter(|&i| hft.sgrid.lambdas[i] <= omega).collect();
        if rows.is_empty() {
            return Err(Error::Degenerate(format!("no spectral nodes below {omega}")));
        }
        let sqrt_mu: Vec<f64> = rows.iter().map(|&i| hft.sgrid.row_measure(i).sqrt()).collect();
        let n = rows.len();
        let n_r = hft.grid.n_r;
        let mut bases = Vec::with_capacity(hft.m_max + 1);
        let mut eigenvalues = Vec::with_capacity(hft.m_max + 1);
        for m in 0..=hft.m_max {
            // C[k, a] = √(2π W_k) √μ_a conj κ_m(λ_a, r_k); Gram = C^* C
            let c = DMatrix::from_fn(n_r, n, |k, a| {
                let w = (2.0 * PI * hft.grid.radial_weights[k]).sqrt();
                hft.kernel_row(rows[a], k)[m].conj() * (w * sqrt_mu[a])
            });
            let gram = c.adjoint() * &c;
            let eig = gram.symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let kept: Vec<usize> = order.iter().copied().filter(|&a| eig.eigenvalues[a] >= threshold).collect();
            let mut basis = DMatrix::zeros(n, kept.len());
            for (col, &a) in kept.iter().enumerate() {
                basis.set_column(col, &eig.eigenvectors.column(a));
            }
            bases.push(basis);
            eigenvalues.push(order.iter().map(|&a| eig.eigenvalues[a]).collect());
        }
        Ok(ConcentratedSpace {
            omega,
            threshold,
            rows,
            sqrt_mu,
            bases,
            eigenvalues,
        })
    }

    /// Dimension of the kept space, counting `±m` separately.
    pub fn dimension(&self) -> usize {
        self.bases
            .iter()
            .enumerate()
            .map(|(m, b)| if m == 0 { b.ncols() } else { 2 * b.ncols() })
            .sum()
    }

    pub fn summary(&self) -> ConcentrationSummary {
        let min_kept = self
            .eigenvalues
            .iter()
            .flat_map(|e| e.iter().copied().filter(|&v| v >= self.threshold))
            .fold(f64::INFINITY, f64::min);
        ConcentrationSummary {
            omega: self.omega,
            threshold: self.threshold,
            dimension: self.dimension(),
            band_dimension: self.rows.len() * (2 * (self.bases.len() - 1) + 1),
            min_kept,
        }
    }

    /// Orthogonal projection in the angular-mode domain.
    pub fn project_modes(&self, hft: &Hft, modes: &[Complex64]) -> Vec<Complex64> {
        let width = hft.mode_width();
        let mm = hft.m_max as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); modes.len()];
        for m in -mm..=mm {
            let col = (m + mm) as usize;
            let basis = &self.bases[m.unsigned_abs() as usize];
            if basis.ncols() == 0 {
                continue;
            }
            let y = DVector::from_iterator(
                self.rows.len(),
                self.rows.iter().zip(&self.sqrt_mu).map(|(&i, s)| modes[i * width + col] * *s),
            );
            let p = basis * (basis.adjoint() * y);
            for (a, (&i, s)) in self.rows.iter().zip(&self.sqrt_mu).enumerate() {
                out[i * width + col] = p[a] / *s;
            }
        }
        out
    }

    pub fn project(&self, hft: &Hft, f: &SpectralField) -> SpectralField {
        hft.modes_to_spectrum(&self.project_modes(hft, &hft.spectrum_to_modes(f)))
    }
}
