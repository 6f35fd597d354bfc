//! Helgason-Fourier transform on the disk.
//!
//! With `s = 1/2 - iλ` and Poisson kernel `P(x,b)`, the transform is
//! `f̂(λ,b) = ∫ f(x) P(x,b)^s dμ(x)` and the inverse is
//! `f(x) = ∫∫ f̂(λ,b) P(x,b)^{1-s} p(λ) dλ db`, where `db` is normalized to mass 1
//! and `p(λ) = C λ tanh(πλ)`.
//!
//! Both directions are computed mode by mode in the angle. On the ring of
//! radius `r`, `P^s` depends only on `θ - b` and has Fourier coefficients
//! `κ_m(λ, r)`, which satisfy a three-term recurrence in `m`. The discrete
//! inverse is the exact adjoint of the discrete forward transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, SpatialGrid};
use crate::quadrature::{gauss_legendre, integrate};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `ρ` for the disk: half the sum of positive roots.
pub const RHO: f64 = 0.5;

/// Plancherel constant for the `db`-normalized convention.
pub const PLANCHEREL_CONSTANT: f64 = 1.0 / (2.0 * PI);

/// Horocycle bracket `A(p, b) = log P(p, b)`.
pub fn horocycle_bracket(p: Point, b: f64) -> f64 {
    let (c, s) = (b.cos(), b.sin());
    let d2 = (p.u - c).powi(2) + (p.v - s).powi(2);
    ((1.0 - p.norm_sqr()) / d2).ln()
}

/// `λ tanh(πλ)`, the unnormalized density.
pub fn density_shape(lambda: f64) -> f64 {
    lambda * (PI * lambda).tanh()
}

/// Plancherel density with the constant `1/(2π)`. The transform carries its
/// own calibrated constant in [`SpectralGrid`].
pub fn plancherel_density(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("λ must be nonnegative, got {lambda}")));
    }
    Ok(PLANCHEREL_CONSTANT * density_shape(lambda))
}

/// Eigenvalue of the Laplace-Beltrami operator on `e^{(iλ+ρ)A}`.
pub fn laplacian_symbol(lambda: f64) -> f64 {
    -(lambda * lambda + RHO * RHO)
}

/// Spherical function `φ_λ(r) = P_{-1/2+iλ}(cosh r)` from
/// `(√2/π) ∫_0^r cos(λt) / √(cosh r - cosh t) dt`.
///
/// The square-root singularity at `t = r` is removed with `t = r(1 - w²)`.
pub fn spherical_function(lambda: f64, r: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !(r >= 0.0) {
        return Err(Error::Domain(format!("spherical function needs λ, r ≥ 0, got ({lambda}, {r})")));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let n = 48 + (4.0 * lambda * r) as usize + (8.0 * r) as usize;
    let (w_nodes, w_weights) = gauss_legendre(n, 0.0, 1.0);
    let mut acc = 0.0;
    for (&w, &ww) in w_nodes.iter().zip(&w_weights) {
        let t = r * (1.0 - w * w);
        // cosh r - cosh t = 2 sinh((r+t)/2) sinh((r-t)/2), evaluated in logs
        // so that large r cannot overflow
        let a = 0.5 * (r + t);
        let d = 0.5 * r * w * w;
        let ln_sa = a + (-(-2.0 * a).exp()).ln_1p() - 2f64.ln();
        let ln_sd = d.sinh().ln();
        let ln_den = 0.5 * (2f64.ln() + ln_sa + ln_sd);
        // dt = 2 r w dw; the w cancels against √sinh(d) ~ w near 0
        let jac = 2.0 * r * w;
        acc += ww * (lambda * t).cos() * (jac.ln() - ln_den).exp();
    }
    Ok(std::f64::consts::SQRT_2 / PI * acc)
}

/// `K_{iλ}(x) = ∫_0^∞ e^{-x cosh t} cos(λt) dt` for `x > 0`.
pub fn bessel_k_imag(lambda: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("K_iλ(x) needs x > 0, got ({lambda}, {x})")));
    }
    // integrand below e^{-745} past t_max
    let t_max = (745.0 / x).max(1.0).acosh() + 1.0;
    let n = 400 + (2.0 * lambda.abs() * t_max) as usize;
    Ok(integrate(n, 0.0, t_max, |t| (-x * t.cosh()).exp() * (lambda * t).cos()))
}

/// Spectrum of the radial field `e^{-p cosh r}`:
/// `2π ∫ e^{-p cosh r} φ_λ(r) sinh r dr = 2 √(2π/p) K_{iλ}(p)`.
pub fn exp_cosh_spectrum(p: f64, lambda: f64) -> Result<f64> {
    Ok(2.0 * (2.0 * PI / p).sqrt() * bessel_k_imag(lambda, p)?)
}

/// Angular Fourier coefficients `κ_m`, `m = 0..=m_max`, of
/// `α ↦ (cosh r - sinh r cos α)^{-s}` with `s = 1/2 - iλ`.
///
/// The coefficients are the minimal solution of
/// `(m+1-s) κ_{m+1} = 2m coth(r) κ_m - (m-1+s) κ_{m-1}`, found by backward
/// recurrence from well past the turning point `m ≈ λ sinh r`, and scaled so
/// that `Σ_m κ_m = e^{rs}` (the value at `α = 0`).
pub fn kernel_modes(lambda: f64, r: f64, m_max: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; m_max + 1];
    if r == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let s = Complex64::new(0.5, -lambda);
    let rho = (0.5 * r).tanh();
    let decay = -rho.ln();
    let start = m_max + (1.3 * lambda * r.sinh()).ceil() as usize + (21.0 / decay).ceil() as usize + 16;
    let coth = 1.0 / r.tanh();

    let mut next = ZERO; // κ_{m+1}
    let mut cur = Complex64::new(1.0, 0.0); // κ_m
    let mut total = ZERO; // Σ_{k≥m+1} 2κ_k
    for m in (1..=start).rev() {
        if m <= m_max {
            out[m] = cur;
        }
        total += 2.0 * cur;
        let prev = (2.0 * m as f64 * coth * cur - (m as f64 + 1.0 - s) * next) / (m as f64 - 1.0 + s);
        next = cur;
        cur = prev;
        let mag = cur.norm_sqr();
        if mag > 1e200 {
            let k = 1.0 / mag.sqrt();
            cur *= k;
            next *= k;
            total *= k;
            for v in out.iter_mut() {
                *v *= k;
            }
        }
    }
    out[0] = cur;
    total += cur;
    let target = (s * r).exp();
    let scale = target / total;
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub lambda_max: f64,
    pub lambdas: Vec<f64>,
    pub lambda_weights: Vec<f64>,
    pub n_b: usize,
    /// Constant `C` in `p(λ) = C λ tanh(πλ)`.
    pub constant: f64,
    /// `p(λ)` at each node.
    pub density: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(lambda_max: f64, n_lambda: usize, n_b: usize) -> Result<Self> {
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::Domain(format!("Λ_max must be positive, got {lambda_max}")));
        }
        if n_lambda < 2 || n_b < 4 {
            return Err(Error::Domain(format!("spectral grid too small: n_λ={n_lambda}, n_b={n_b}")));
        }
        let (lambdas, lambda_weights) = gauss_legendre(n_lambda, 0.0, lambda_max);
        let mut g = SpectralGrid {
            lambda_max,
            lambdas,
            lambda_weights,
            n_b,
            constant: PLANCHEREL_CONSTANT,
            density: Vec::new(),
        };
        g.set_constant(PLANCHEREL_CONSTANT);
        Ok(g)
    }

    pub fn set_constant(&mut self, c: f64) {
        self.constant = c;
        self.density = self.lambdas.iter().map(|&l| c * density_shape(l)).collect();
    }

    pub fn n_lambda(&self) -> usize {
        self.lambdas.len()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len() * self.n_b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn boundary_angle(&self, q: usize) -> f64 {
        2.0 * PI * q as f64 / self.n_b as f64
    }

    /// Measure `p(λ) w_λ` of row `i` (boundary weight `1/n_b` not included).
    pub fn row_measure(&self, i: usize) -> f64 {
        self.density[i] * self.lambda_weights[i]
    }
}

/// Complex samples on the spatial grid, node order of [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub values: Vec<Complex64>,
}

/// Complex values on the `(λ, b)` nodes, row-major in `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub n_b: usize,
    pub values: Vec<Complex64>,
}

impl SpatialField {
    pub fn zeros(grid: &SpatialGrid) -> Self {
        SpatialField {
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        SpatialField {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn from_fn<F: Fn(Point) -> f64>(grid: &SpatialGrid, f: F) -> Self {
        SpatialField {
            values: grid.nodes.iter().map(|&p| Complex64::new(f(p), 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn inner(&self, other: &SpatialField, grid: &SpatialGrid) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&grid.weights)
            .map(|((a, b), w)| a * b.conj() * w)
            .sum()
    }

    pub fn norm_sqr(&self, grid: &SpatialGrid) -> f64 {
        self.values
            .iter()
            .zip(&grid.weights)
            .map(|(a, w)| a.norm_sqr() * w)
            .sum()
    }

    pub fn norm(&self, grid: &SpatialGrid) -> f64 {
        self.norm_sqr(grid).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> SpatialField {
        SpatialField {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self += c·other`.
    pub fn axpy(&mut self, c: Complex64, other: &SpatialField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &SpatialField) -> SpatialField {
        SpatialField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl SpectralField {
    pub fn zeros(sgrid: &SpectralGrid) -> Self {
        SpectralField {
            n_b: sgrid.n_b,
            values: vec![ZERO; sgrid.len()],
        }
    }

    pub fn get(&self, i: usize, q: usize) -> Complex64 {
        self.values[i * self.n_b + q]
    }

    pub fn inner(&self, other: &SpectralField, sgrid: &SpectralGrid) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..sgrid.n_lambda() {
            let row: Complex64 = (0..self.n_b)
                .map(|q| self.values[i * self.n_b + q] * other.values[i * self.n_b + q].conj())
                .sum();
            acc += row * sgrid.row_measure(i);
        }
        acc / self.n_b as f64
    }

    pub fn norm_sqr(&self, sgrid: &SpectralGrid) -> f64 {
        self.inner(self, sgrid).re
    }

    pub fn scale(&self, c: Complex64) -> SpectralField {
        SpectralField {
            n_b: self.n_b,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn axpy(&mut self, c: Complex64, other: &SpectralField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        SpectralField {
            n_b: self.n_b,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Multiply row `i` by `phi(λ_i)`.
    pub fn multiply<F: Fn(f64) -> Complex64>(&self, sgrid: &SpectralGrid, phi: F) -> SpectralField {
        let mut out = self.clone();
        for (i, &l) in sgrid.lambdas.iter().enumerate() {
            let c = phi(l);
            for v in &mut out.values[i * self.n_b..(i + 1) * self.n_b] {
                *v *= c;
            }
        }
        out
    }
}

/// `(Σ |F|² p(λ) w_λ w_b)^{1/2}`.
pub fn plancherel_norm(f: &SpectralField, sgrid: &SpectralGrid) -> f64 {
    f.norm_sqr(sgrid).max(0.0).sqrt()
}

/// Discretized Helgason-Fourier transform on a fixed pair of grids.
pub struct Hft {
    pub grid: SpatialGrid,
    pub sgrid: SpectralGrid,
    /// Highest angular mode carried, `min(n_θ, n_b)/2 - 1`.
    pub m_max: usize,
    /// `κ_m(λ_i, r_k)` at `[(i * n_r + k) * (m_max+1) + m]`.
    kernel: Vec<Complex64>,
    theta_fwd: Arc<dyn Fft<f64>>,
    theta_inv: Arc<dyn Fft<f64>>,
    b_fwd: Arc<dyn Fft<f64>>,
    b_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Hft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hft")
            .field("r_max", &self.grid.r_max)
            .field("n_r", &self.grid.n_r)
            .field("n_theta", &self.grid.n_theta)
            .field("lambda_max", &self.sgrid.lambda_max)
            .field("n_lambda", &self.sgrid.n_lambda())
            .field("n_b", &self.sgrid.n_b)
            .field("constant", &self.sgrid.constant)
            .finish()
    }
}

/// Radial test family `e^{-p cosh r}` used to pin the Plancherel constant.
pub const CALIBRATION_FAMILY: [f64; 3] = [1.0, 2.0, 4.0];

impl Hft {
    /// Build the transform with the Plancherel constant fixed at `1/(2π)`.
    pub fn new(grid: SpatialGrid, sgrid: SpectralGrid) -> Result<Self> {
        let m_max = grid.n_theta.min(sgrid.n_b) / 2 - 1;
        let n_r = grid.n_r;
        let mut kernel = vec![ZERO; sgrid.n_lambda() * n_r * (m_max + 1)];
        for (i, &l) in sgrid.lambdas.iter().enumerate() {
            for (k, &r) in grid.radii.iter().enumerate() {
                let modes = kernel_modes(l, r, m_max);
                let off = (i * n_r + k) * (m_max + 1);
                kernel[off..off + m_max + 1].copy_from_slice(&modes);
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Hft {
            theta_fwd: planner.plan_fft_forward(grid.n_theta),
            theta_inv: planner.plan_fft_inverse(grid.n_theta),
            b_fwd: planner.plan_fft_forward(sgrid.n_b),
            b_inv: planner.plan_fft_inverse(sgrid.n_b),
            grid,
            sgrid,
            m_max,
            kernel,
        })
    }

    /// Build the transform and fit the Plancherel constant by least squares
    /// over the radial family `e^{-p cosh r}`.
    pub fn calibrated(grid: SpatialGrid, sgrid: SpectralGrid) -> Result<Self> {
        let mut h = Self::new(grid, sgrid)?;
        let c = h.fit_plancherel_constant();
        h.sgrid.set_constant(c);
        Ok(h)
    }

    pub fn fit_plancherel_constant(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for &p in &CALIBRATION_FAMILY {
            let f = SpatialField::from_fn(&self.grid, |x| (-p * x.radius().cosh()).exp());
            let spatial = f.norm_sqr(&self.grid);
            let spec = self.forward(&f).norm_sqr(&self.sgrid) / self.sgrid.constant;
            num += spatial * spec;
            den += spec * spec;
        }
        num / den
    }

    #[inline]
    pub(crate) fn kernel_row(&self, i: usize, k: usize) -> &[Complex64] {
        let off = (i * self.grid.n_r + k) * (self.m_max + 1);
        &self.kernel[off..off + self.m_max + 1]
    }

    /// Angular modes of each ring, `[k * (2M+1) + (m + M)]`, and a flag per
    /// ring telling whether it is identically zero.
    fn ring_modes(&self, f: &SpatialField) -> (Vec<Complex64>, Vec<bool>) {
        let n_t = self.grid.n_theta;
        let mm = self.m_max as i64;
        let width = 2 * self.m_max + 1;
        let mut modes = vec![ZERO; self.grid.n_r * width];
        let mut active = vec![false; self.grid.n_r];
        let mut buf = vec![ZERO; n_t];
        for k in 0..self.grid.n_r {
            let ring = &f.values[k * n_t..(k + 1) * n_t];
            if ring.iter().all(|v| *v == ZERO) {
                continue;
            }
            active[k] = true;
            buf.copy_from_slice(ring);
            self.theta_fwd.process(&mut buf);
            for m in -mm..=mm {
                let idx = m.rem_euclid(n_t as i64) as usize;
                modes[k * width + (m + mm) as usize] = buf[idx] / n_t as f64;
            }
        }
        (modes, active)
    }

    /// Forward transform.
    pub fn forward(&self, f: &SpatialField) -> SpectralField {
        let (modes, active) = self.ring_modes(f);
        let spec_modes = self.forward_modes(&modes, &active);
        self.modes_to_boundary(&spec_modes)
    }

    fn forward_modes(&self, modes: &[Complex64], active: &[bool]) -> Vec<Complex64> {
        let mm = self.m_max;
        let width = 2 * mm + 1;
        let n_l = self.sgrid.n_lambda();
        let mut out = vec![ZERO; n_l * width];
        for i in 0..n_l {
            let acc = &mut out[i * width..(i + 1) * width];
            for k in 0..self.grid.n_r {
                if !active[k] {
                    continue;
                }
                let w = 2.0 * PI * self.grid.radial_weights[k];
                let kr = self.kernel_row(i, k);
                let fm = &modes[k * width..(k + 1) * width];
                for (j, a) in acc.iter_mut().enumerate() {
                    let m = (j as i64 - mm as i64).unsigned_abs() as usize;
                    *a += kr[m] * fm[j] * w;
                }
            }
        }
        out
    }

    fn modes_to_boundary(&self, spec_modes: &[Complex64]) -> SpectralField {
        let n_b = self.sgrid.n_b;
        let mm = self.m_max as i64;
        let width = 2 * self.m_max + 1;
        let mut out = SpectralField::zeros(&self.sgrid);
        let mut buf = vec![ZERO; n_b];
        for i in 0..self.sgrid.n_lambda() {
            buf.fill(ZERO);
            for m in -mm..=mm {
                buf[m.rem_euclid(n_b as i64) as usize] = spec_modes[i * width + (m + mm) as usize];
            }
            self.b_inv.process(&mut buf);
            out.values[i * n_b..(i + 1) * n_b].copy_from_slice(&buf);
        }
        out
    }

    fn boundary_to_modes(&self, f: &SpectralField) -> Vec<Complex64> {
        let n_b = self.sgrid.n_b;
        let mm = self.m_max as i64;
        let width = 2 * self.m_max + 1;
        let mut out = vec![ZERO; self.sgrid.n_lambda() * width];
        let mut buf = vec![ZERO; n_b];
        for i in 0..self.sgrid.n_lambda() {
            buf.copy_from_slice(&f.values[i * n_b..(i + 1) * n_b]);
            self.b_fwd.process(&mut buf);
            for m in -mm..=mm {
                out[i * width + (m + mm) as usize] = buf[m.rem_euclid(n_b as i64) as usize] / n_b as f64;
            }
        }
        out
    }

    /// Angular modes of the inverse transform on each ring.
    fn inverse_ring_modes(&self, spec_modes: &[Complex64], rings: &[usize]) -> Vec<Complex64> {
        let mm = self.m_max;
        let width = 2 * mm + 1;
        let mut out = vec![ZERO; rings.len() * width];
        for i in 0..self.sgrid.n_lambda() {
            let g = &spec_modes[i * width..(i + 1) * width];
            if g.iter().all(|v| *v == ZERO) {
                continue;
            }
            let meas = self.sgrid.row_measure(i);
            for (slot, &k) in rings.iter().enumerate() {
                let kr = self.kernel_row(i, k);
                let acc = &mut out[slot * width..(slot + 1) * width];
                for (j, a) in acc.iter_mut().enumerate() {
                    let m = (j as i64 - mm as i64).unsigned_abs() as usize;
                    *a += kr[m].conj() * g[j] * meas;
                }
            }
        }
        out
    }

    /// Inverse transform.
    pub fn inverse(&self, f: &SpectralField) -> SpatialField {
        let spec_modes = self.boundary_to_modes(f);
        let rings: Vec<usize> = (0..self.grid.n_r).collect();
        let ring_modes = self.inverse_ring_modes(&spec_modes, &rings);
        let n_t = self.grid.n_theta;
        let mm = self.m_max as i64;
        let width = 2 * self.m_max + 1;
        let mut out = SpatialField::zeros(&self.grid);
        let mut buf = vec![ZERO; n_t];
        for k in 0..self.grid.n_r {
            buf.fill(ZERO);
            for m in -mm..=mm {
                buf[m.rem_euclid(n_t as i64) as usize] = ring_modes[k * width + (m + mm) as usize];
            }
            self.theta_inv.process(&mut buf);
            out.values[k * n_t..(k + 1) * n_t].copy_from_slice(&buf);
        }
        out
    }

    /// Inverse transform together with the fraction of spectral energy in the
    /// top tenth of `[0, Λ_max]`.
    pub fn inverse_with_tail(&self, f: &SpectralField) -> (SpatialField, f64) {
        (self.inverse(f), self.tail_fraction(f, 0.9 * self.sgrid.lambda_max))
    }

    /// Share of spectral energy at `λ > cutoff`.
    pub fn tail_fraction(&self, f: &SpectralField, cutoff: f64) -> f64 {
        let total = f.norm_sqr(&self.sgrid);
        if total == 0.0 {
            return 0.0;
        }
        let tail = f.multiply(&self.sgrid, |l| Complex64::new(if l > cutoff { 1.0 } else { 0.0 }, 0.0));
        tail.norm_sqr(&self.sgrid) / total
    }

    /// Evaluate the inverse transform of `f` on circles of the given radii,
    /// each sampled at `n_angles` equally spaced angles. The radii need not be
    /// grid radii.
    pub fn evaluate_on_circles(&self, f: &SpectralField, radii: &[f64], n_angles: usize) -> Vec<Vec<Complex64>> {
        let spec_modes = self.boundary_to_modes(f);
        let mm = self.m_max;
        let width = 2 * mm + 1;
        let n_a = n_angles.max(width);
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(n_a);
        radii
            .iter()
            .map(|&r| {
                let mut acc = vec![ZERO; width];
                for (i, &l) in self.sgrid.lambdas.iter().enumerate() {
                    let g = &spec_modes[i * width..(i + 1) * width];
                    if g.iter().all(|v| *v == ZERO) {
                        continue;
                    }
                    let kr = kernel_modes(l, r, mm);
                    let meas = self.sgrid.row_measure(i);
                    for (j, a) in acc.iter_mut().enumerate() {
                        let m = (j as i64 - mm as i64).unsigned_abs() as usize;
                        *a += kr[m].conj() * g[j] * meas;
                    }
                }
                let mut buf = vec![ZERO; n_a];
                for (j, a) in acc.iter().enumerate() {
                    let m = j as i64 - mm as i64;
                    buf[m.rem_euclid(n_a as i64) as usize] = *a;
                }
                inv.process(&mut buf);
                if n_a != n_angles {
                    // resample onto the requested count
                    (0..n_angles)
                        .map(|t| {
                            let ang = 2.0 * PI * t as f64 / n_angles as f64;
                            acc.iter()
                                .enumerate()
                                .map(|(j, a)| a * Complex64::from_polar(1.0, (j as i64 - mm as i64) as f64 * ang))
                                .sum()
                        })
                        .collect()
                } else {
                    buf
                }
            })
            .collect()
    }

    /// Width of a row of angular modes, `2M + 1`.
    pub fn mode_width(&self) -> usize {
        2 * self.m_max + 1
    }

    /// Forward transform kept in the angular-mode domain,
    /// `[i * (2M+1) + (m + M)]`. Rings that vanish cost nothing.
    pub fn forward_to_modes(&self, f: &SpatialField) -> Vec<Complex64> {
        let (modes, active) = self.ring_modes(f);
        self.forward_modes(&modes, &active)
    }

    /// Angular modes of a boundary-sampled spectrum.
    pub fn spectrum_to_modes(&self, f: &SpectralField) -> Vec<Complex64> {
        self.boundary_to_modes(f)
    }

    /// Boundary samples from angular modes.
    pub fn modes_to_spectrum(&self, modes: &[Complex64]) -> SpectralField {
        self.modes_to_boundary(modes)
    }

    /// Forward transform of a field given by `(node, value)` pairs, in the
    /// angular-mode domain. Cheap when few nodes are involved.
    pub fn forward_sparse_modes(&self, entries: &[(usize, f64)]) -> Vec<Complex64> {
        let n_t = self.grid.n_theta;
        let mm = self.m_max as i64;
        let width = self.mode_width();
        let dth = 2.0 * PI / n_t as f64;
        // per touched ring, angular modes times the radial weight
        let mut rings: Vec<(usize, Vec<Complex64>)> = Vec::new();
        for &(node, v) in entries {
            let k = node / n_t;
            let l = node % n_t;
            let pos = match rings.iter().position(|(rk, _)| *rk == k) {
                Some(p) => p,
                None => {
                    rings.push((k, vec![ZERO; width]));
                    rings.len() - 1
                }
            };
            let scale = v / n_t as f64 * 2.0 * PI * self.grid.radial_weights[k];
            let theta = l as f64 * dth;
            let step = Complex64::from_polar(1.0, -theta);
            let mut e = Complex64::from_polar(scale, mm as f64 * theta);
            for a in rings[pos].1.iter_mut() {
                *a += e;
                e *= step;
            }
        }
        let n_l = self.sgrid.n_lambda();
        let mut out = vec![ZERO; n_l * width];
        for i in 0..n_l {
            let acc = &mut out[i * width..(i + 1) * width];
            for (k, fm) in &rings {
                let kr = self.kernel_row(i, *k);
                for (j, a) in acc.iter_mut().enumerate() {
                    let m = (j as i64 - mm).unsigned_abs() as usize;
                    *a += kr[m] * fm[j];
                }
            }
        }
        out
    }

    /// Spectral inner product of two mode arrays; equals
    /// [`SpectralField::inner`] of the corresponding spectra.
    pub fn modes_inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let width = self.mode_width();
        let mut acc = ZERO;
        for i in 0..self.sgrid.n_lambda() {
            let row: Complex64 = a[i * width..(i + 1) * width]
                .iter()
                .zip(&b[i * width..(i + 1) * width])
                .map(|(x, y)| x * y.conj())
                .sum();
            acc += row * self.sgrid.row_measure(i);
        }
        acc
    }

    /// `Σ_m |G_m(λ_i)|²` per spectral row.
    pub fn mode_row_energy(&self, modes: &[Complex64]) -> Vec<f64> {
        let width = self.mode_width();
        (0..self.sgrid.n_lambda())
            .map(|i| modes[i * width..(i + 1) * width].iter().map(|v| v.norm_sqr()).sum())
            .collect()
    }

    /// Write the spectrum as CSV rows `λ, b, re, im`.
    pub fn write_spectrum_csv<W: std::io::Write>(&self, f: &SpectralField, mut w: W) -> Result<()> {
        writeln!(w, "lambda,b,re,im")?;
        for (i, &l) in self.sgrid.lambdas.iter().enumerate() {
            for q in 0..self.sgrid.n_b {
                let v = f.get(i, q);
                writeln!(w, "{l:.12e},{:.12e},{:.12e},{:.12e}", self.sgrid.boundary_angle(q), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

pub fn forward_hft(f: &SpatialField, hft: &Hft) -> SpectralField {
    hft.forward(f)
}

pub fn inverse_hft(f: &SpectralField, hft: &Hft) -> SpatialField {
    hft.inverse(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::FftPlanner;

    /// Brute-force coefficients by a long FFT of the sampled kernel.
    fn modes_by_fft(lambda: f64, r: f64, m_max: usize, len: usize) -> Vec<Complex64> {
        let s = Complex64::new(0.5, -lambda);
        let mut buf: Vec<Complex64> = (0..len)
            .map(|l| {
                let a = 2.0 * PI * l as f64 / len as f64;
                let den = (-r).exp() + 2.0 * r.sinh() * (0.5 * a).sin().powi(2);
                (-s * den.ln()).exp()
            })
            .collect();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        buf[..=m_max].iter().map(|v| v / len as f64).collect()
    }

    #[test]
    fn kernel_modes_match_fft() {
        for &(l, r) in &[(0.0, 0.3), (0.7, 1.0), (4.0, 2.5), (16.0, 4.0), (9.0, 6.0), (1.0, 7.0)] {
            let a = kernel_modes(l, r, 40);
            let b = modes_by_fft(l, r, 40, 1 << 20);
            let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for m in 0..=40 {
                assert!((a[m] - b[m]).norm() < 1e-11 * scale.max(1.0), "λ={l} r={r} m={m}: {} vs {}", a[m], b[m]);
            }
        }
    }

    #[test]
    fn kernel_modes_parseval_and_spherical() {
        // Σ|κ_m|² = (1/2π)∫P dα = 1, and κ_0 = φ_λ(r)
        for &(l, r) in &[(0.5, 0.5), (3.0, 2.0), (10.0, 3.0)] {
            let big = 4000;
            let k = kernel_modes(l, r, big);
            let energy: f64 = k[0].norm_sqr() + 2.0 * k[1..].iter().map(|v| v.norm_sqr()).sum::<f64>();
            assert!((energy - 1.0).abs() < 1e-10, "{energy}");
            let phi = spherical_function(l, r).unwrap();
            assert!((k[0].re - phi).abs() < 1e-10 && k[0].im.abs() < 1e-10, "{} vs {phi}", k[0]);
        }
    }

    #[test]
    fn spherical_function_examples() {
        assert_eq!(spherical_function(3.0, 0.0).unwrap(), 1.0);
        // λ = 0, r = 1: boundary average of P^{1/2}
        let n = 4096;
        let r: f64 = 1.0;
        let avg: f64 = (0..n)
            .map(|l| {
                let a = 2.0 * PI * l as f64 / n as f64;
                (r.cosh() - r.sinh() * a.cos()).powf(-0.5)
            })
            .sum::<f64>()
            / n as f64;
        assert!((spherical_function(0.0, 1.0).unwrap() - avg).abs() < 1e-8);
        assert!(spherical_function(-1.0, 1.0).is_err());
        // φ_0(r) ≍ (1+r)e^{-r/2}
        for r in 1..=10 {
            let r = r as f64;
            let ratio = spherical_function(0.0, r).unwrap() / ((1.0 + r) * (-0.5 * r).exp());
            assert!(ratio > 0.3 && ratio < 1.5, "r={r} ratio={ratio}");
        }
        // no overflow far out
        let far = spherical_function(0.0, 800.0).unwrap();
        assert!(far.is_finite() && far >= 0.0);
    }

    #[test]
    fn horocycle_examples() {
        for q in 0..8 {
            assert!(horocycle_bracket(Point::ORIGIN, q as f64).abs() < 1e-15);
        }
        let v = horocycle_bracket(Point { u: 0.5, v: 0.0 }, 0.0);
        assert!((v - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn density_and_symbol() {
        assert_eq!(plancherel_density(0.0).unwrap(), 0.0);
        let a = plancherel_density(40.0).unwrap() / 40.0;
        let b = plancherel_density(80.0).unwrap() / 80.0;
        assert!((a - b).abs() < 1e-14);
        assert!(plancherel_density(-0.1).is_err());
        assert_eq!(laplacian_symbol(0.0), -0.25);
        assert!(laplacian_symbol(2.0) < laplacian_symbol(1.0));
    }

    fn small() -> Hft {
        let g = SpatialGrid::new(4.0, 48, 32).unwrap();
        let s = SpectralGrid::new(10.0, 64, 32).unwrap();
        Hft::new(g, s).unwrap()
    }

    #[test]
    fn adjointness_is_exact() {
        let h = small();
        let f = SpatialField {
            values: (0..h.grid.len())
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
                .collect(),
        };
        let g = SpectralField {
            n_b: h.sgrid.n_b,
            values: (0..h.sgrid.len())
                .map(|i| Complex64::new((i as f64 * 0.23).cos(), (i as f64 * 0.71).sin()))
                .collect(),
        };
        let a = h.forward(&f).inner(&g, &h.sgrid);
        let b = f.inner(&h.inverse(&g), &h.grid);
        assert!((a - b).norm() < 1e-11 * a.norm().max(1.0), "{a} {b}");
    }

    #[test]
    fn bessel_oracle() {
        // K_0(1), K_0(2) and K_{i}(1) from tables
        assert!((bessel_k_imag(0.0, 1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-14);
        assert!((bessel_k_imag(0.0, 2.0).unwrap() - 0.113_893_872_749_533_4).abs() < 1e-14);
        assert!(bessel_k_imag(1.0, 0.0).is_err());
        let h = small();
        for p in [1.0, 2.0, 4.0] {
            let f = SpatialField::from_fn(&h.grid, |x| (-p * x.radius().cosh()).exp());
            let ff = h.forward(&f);
            let peak = exp_cosh_spectrum(p, 0.0).unwrap();
            for (i, &l) in h.sgrid.lambdas.iter().enumerate() {
                let o = exp_cosh_spectrum(p, l).unwrap();
                assert!((ff.get(i, 0) - o).norm() < 1e-8 * peak, "p={p} λ={l}");
            }
        }
    }

    #[test]
    fn radial_input_has_flat_spectrum() {
        let h = small();
        let f = SpatialField::from_fn(&h.grid, |x| (-2.0 * x.radius().cosh()).exp());
        let ff = h.forward(&f);
        for i in 0..h.sgrid.n_lambda() {
            let v0 = ff.get(i, 0);
            for q in 1..h.sgrid.n_b {
                assert!((ff.get(i, q) - v0).norm() <= 1e-8 * v0.norm() + 1e-300);
            }
        }
    }

    #[test]
    fn evaluate_on_grid_circles_matches_inverse() {
        let h = small();
        let f = SpatialField::from_fn(&h.grid, |x| (-(x.u - 0.2).powi(2) * 9.0 - x.v * x.v * 4.0).exp());
        let spec = h.forward(&f);
        let back = h.inverse(&spec);
        let k = 10;
        let r = h.grid.radii[k];
        let vals = h.evaluate_on_circles(&spec, &[r], h.grid.n_theta);
        for (l, &a) in vals[0].iter().enumerate() {
            let b = back.values[k * h.grid.n_theta + l];
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn sparse_forward_matches_dense() {
        let h = small();
        let n_t = h.grid.n_theta;
        let entries = vec![(3 * n_t + 5, 0.7), (3 * n_t + 6, -1.2), (10 * n_t + 1, 2.0)];
        let mut f = SpatialField::zeros(&h.grid);
        for &(x, v) in &entries {
            f.values[x] = Complex64::new(v, 0.0);
        }
        let dense = h.forward_to_modes(&f);
        let sparse = h.forward_sparse_modes(&entries);
        let scale = dense.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in dense.iter().zip(&sparse) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
        // mode-domain pairing agrees with the boundary-sampled one
        let g = h.forward(&SpatialField::from_fn(&h.grid, |p| (-2.0 * p.radius().cosh()).exp() * (1.0 + p.u)));
        let spec = h.modes_to_spectrum(&sparse);
        let direct = spec.inner(&g, &h.sgrid);
        let via_modes = h.modes_inner(&sparse, &h.spectrum_to_modes(&g));
        assert!((direct - via_modes).norm() < 1e-12 * direct.norm().max(1e-300));
        let e: f64 = h.mode_row_energy(&sparse).iter().enumerate().map(|(i, e)| e * h.sgrid.row_measure(i)).sum();
        assert!((e - spec.norm_sqr(&h.sgrid)).abs() < 1e-12 * e);
    }
}
