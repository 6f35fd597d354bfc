//! Functions of the Laplacian, Paley-Wiener projections and the classical
//! inequalities for band-limited functions.
//!
//! A band-limited field is carried as a [`PwField`]: its spectrum together
//! with its grid samples. Multipliers act on the spectrum, so compositions of
//! multipliers are exact and never pay for a second spatial quadrature.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::hft::{Hft, SpatialField, SpectralField, RHO};

/// A function `Φ(λ)` of the spectral parameter with a declared support.
#[derive(Clone)]
pub struct Multiplier {
    profile: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    pub support: (f64, f64),
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Multiplier[{}, {}]", self.support.0, self.support.1)
    }
}

impl Multiplier {
    pub fn new<F: Fn(f64) -> Complex64 + Send + Sync + 'static>(support: (f64, f64), f: F) -> Self {
        Multiplier {
            profile: Arc::new(f),
            support,
        }
    }

    pub fn real<F: Fn(f64) -> f64 + Send + Sync + 'static>(support: (f64, f64), f: F) -> Self {
        Self::new(support, move |l| Complex64::new(f(l), 0.0))
    }

    /// Evaluate, forcing zero outside the declared support.
    pub fn eval(&self, lambda: f64) -> Complex64 {
        if lambda < self.support.0 || lambda > self.support.1 {
            Complex64::new(0.0, 0.0)
        } else {
            (self.profile)(lambda)
        }
    }

    pub fn identity(lambda_max: f64) -> Self {
        Self::real((0.0, lambda_max), |_| 1.0)
    }

    /// Indicator of `[0, ω]`.
    pub fn indicator(omega: f64) -> Self {
        Self::real((0.0, omega), |_| 1.0)
    }

    /// `F_j` from a filter bank.
    pub fn filter(bank: FilterBank, j: usize) -> Self {
        Self::real(bank.band(j), move |l| bank.f(j, l))
    }

    /// `(-Δ)^s`, symbol `(λ² + 1/4)^s`.
    pub fn laplacian_power(s: f64, lambda_max: f64) -> Self {
        Self::real((0.0, lambda_max), move |l| (l * l + RHO * RHO).powf(s))
    }

    /// `Δ`, symbol `-(λ² + 1/4)`.
    pub fn laplacian(lambda_max: f64) -> Self {
        Self::real((0.0, lambda_max), |l| -(l * l + RHO * RHO))
    }

    /// `e^{itΔ}`, symbol `e^{-it(λ²+1/4)}`.
    pub fn schrodinger(t: f64, lambda_max: f64) -> Self {
        Self::new((0.0, lambda_max), move |l| Complex64::from_polar(1.0, -t * (l * l + RHO * RHO)))
    }

    fn check(&self, hft: &Hft) -> Result<()> {
        let lm = hft.sgrid.lambda_max;
        if self.support.0 < 0.0 || self.support.1 > lm * (1.0 + 1e-12) {
            return Err(Error::MultiplierSupport {
                lo: self.support.0,
                hi: self.support.1,
                lambda_max: lm,
            });
        }
        Ok(())
    }

    fn apply_spectrum(&self, hft: &Hft, f: &SpectralField) -> SpectralField {
        f.multiply(&hft.sgrid, |l| self.eval(l))
    }
}

/// A band-limited field: exact spectrum plus grid samples.
#[derive(Debug, Clone)]
pub struct PwField {
    pub spectrum: SpectralField,
    pub samples: SpatialField,
}

impl PwField {
    pub fn synthesize(hft: &Hft, spectrum: SpectralField) -> Self {
        let samples = hft.inverse(&spectrum);
        PwField { spectrum, samples }
    }

    pub fn zeros(hft: &Hft) -> Self {
        PwField {
            spectrum: SpectralField::zeros(&hft.sgrid),
            samples: SpatialField::zeros(&hft.grid),
        }
    }

    /// Plancherel norm.
    pub fn norm(&self, hft: &Hft) -> f64 {
        self.spectrum.norm_sqr(&hft.sgrid).max(0.0).sqrt()
    }

    /// `Φ(Δ)` applied on the spectral side.
    pub fn apply(&self, hft: &Hft, phi: &Multiplier) -> Result<PwField> {
        phi.check(hft)?;
        Ok(Self::synthesize(hft, phi.apply_spectrum(hft, &self.spectrum)))
    }

    pub fn scale(&self, c: Complex64) -> PwField {
        PwField {
            spectrum: self.spectrum.scale(c),
            samples: self.samples.scale(c),
        }
    }

    pub fn axpy(&mut self, c: Complex64, other: &PwField) {
        self.spectrum.axpy(c, &other.spectrum);
        self.samples.axpy(c, &other.samples);
    }

    /// Highest `λ` carrying nonzero spectrum.
    pub fn band_limit(&self, hft: &Hft) -> f64 {
        let n_b = self.spectrum.n_b;
        hft.sgrid
            .lambdas
            .iter()
            .enumerate()
            .filter(|(i, _)| self.spectrum.values[i * n_b..(i + 1) * n_b].iter().any(|v| v.norm_sqr() > 0.0))
            .map(|(_, &l)| l)
            .fold(0.0, f64::max)
    }
}

/// Anything whose Helgason-Fourier transform can be produced.
pub trait Spectrum {
    fn spectrum<'a>(&'a self, hft: &Hft) -> Cow<'a, SpectralField>;
}

impl Spectrum for SpatialField {
    fn spectrum<'a>(&'a self, hft: &Hft) -> Cow<'a, SpectralField> {
        Cow::Owned(hft.forward(self))
    }
}

impl Spectrum for PwField {
    fn spectrum<'a>(&'a self, _: &Hft) -> Cow<'a, SpectralField> {
        Cow::Borrowed(&self.spectrum)
    }
}

impl Spectrum for SpectralField {
    fn spectrum<'a>(&'a self, _: &Hft) -> Cow<'a, SpectralField> {
        Cow::Borrowed(self)
    }
}

/// `Φ(Δ)f = inverse(Φ · forward(f))`.
pub fn apply_multiplier<S: Spectrum + ?Sized>(hft: &Hft, phi: &Multiplier, f: &S) -> Result<PwField> {
    phi.check(hft)?;
    let spec = f.spectrum(hft);
    Ok(PwField::synthesize(hft, phi.apply_spectrum(hft, &spec)))
}

fn check_omega(hft: &Hft, omega: f64) -> Result<()> {
    if !(omega > 0.0) || omega > hft.sgrid.lambda_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "ω must lie in (0, Λ_max = {}], got {omega}",
            hft.sgrid.lambda_max
        )));
    }
    Ok(())
}

/// Orthogonal projection onto `PW_ω` (sharp cutoff at `λ = ω`).
pub fn project_pw<S: Spectrum + ?Sized>(hft: &Hft, omega: f64, f: &S) -> Result<PwField> {
    check_omega(hft, omega)?;
    apply_multiplier(hft, &Multiplier::indicator(omega), f)
}

pub(crate) fn norm_with<S: Spectrum + ?Sized, F: Fn(f64) -> f64>(hft: &Hft, f: &S, weight: F) -> f64 {
    let spec = f.spectrum(hft);
    let n_b = spec.n_b;
    let mut acc = 0.0;
    for (i, &l) in hft.sgrid.lambdas.iter().enumerate() {
        let w = weight(l);
        if w == 0.0 {
            continue;
        }
        let row: f64 = spec.values[i * n_b..(i + 1) * n_b].iter().map(|v| v.norm_sqr()).sum();
        acc += w * w * row * hft.sgrid.row_measure(i);
    }
    (acc / n_b as f64).sqrt()
}

/// Plancherel norm of the spectrum.
pub fn l2_norm<S: Spectrum + ?Sized>(hft: &Hft, f: &S) -> f64 {
    norm_with(hft, f, |_| 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    pub omega: f64,
    pub s: f64,
    pub ratio: f64,
    /// Spectral energy share above `ω` (zero for genuine `PW_ω` input).
    pub leakage: f64,
}

/// `‖(-Δ)^s f‖ / ((ω² + 1/4)^s ‖f‖)`.
pub fn bernstein_check<S: Spectrum + ?Sized>(hft: &Hft, omega: f64, f: &S, s: f64) -> Result<BernsteinReport> {
    check_omega(hft, omega)?;
    let spec = f.spectrum(hft);
    let base = l2_norm(hft, spec.as_ref());
    if base == 0.0 {
        return Err(Error::Degenerate("Bernstein check needs a nonzero field".into()));
    }
    let top = norm_with(hft, spec.as_ref(), |l| (l * l + RHO * RHO).powf(s));
    let above = norm_with(hft, spec.as_ref(), |l| if l > omega { 1.0 } else { 0.0 });
    Ok(BernsteinReport {
        omega,
        s,
        ratio: top / ((omega * omega + RHO * RHO).powf(s) * base),
        leakage: (above / base).powi(2),
    })
}

/// Coefficients and shifts of the truncated Riesz interpolation series
/// `Σ_{k=-K+1}^{K} (σ/π²)(-1)^{k-1}(k-1/2)^{-2} e^{i(π/σ)(k-1/2)Δ}`.
pub fn riesz_terms(sigma: f64, k_terms: usize) -> Vec<(f64, f64)> {
    let k = k_terms as i64;
    (-k + 1..=k)
        .map(|kk| {
            let h = kk as f64 - 0.5;
            let sign = if (kk - 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            (sigma / (PI * PI) * sign / (h * h), PI / sigma * h)
        })
        .collect()
}

/// Scalar series at a point `μ` of the spectrum of `Δ`.
pub fn riesz_scalar(sigma: f64, k_terms: usize, mu: f64) -> Complex64 {
    riesz_terms(sigma, k_terms)
        .iter()
        .map(|&(c, t)| c * Complex64::from_polar(1.0, t * mu))
        .sum()
}

/// `(2σ/π²) Σ_{k>K} (k-1/2)^{-2}`, the absolute bound on the scalar remainder.
pub fn riesz_tail_bound(sigma: f64, k_terms: usize) -> f64 {
    // Σ_{k≥1} (k-1/2)^{-2} = π²/2
    let head: f64 = (1..=k_terms).map(|k| (k as f64 - 0.5).powi(-2)).sum();
    let acc = 0.5 * PI * PI - head;
    2.0 * sigma / (PI * PI) * acc
}

#[derive(Debug, Clone, Serialize)]
pub struct RieszReport {
    pub omega: f64,
    pub k_terms: usize,
    /// `‖iΔf - R_K f‖ / ‖Δf‖`.
    pub residual: f64,
    /// Scalar remainder bound divided by `min |μ|` over the field's spectrum.
    pub tail_bound: f64,
}

/// Check `iΔf = (σ/π²) Σ (-1)^{k-1}(k-1/2)^{-2} e^{i(π/σ)(k-1/2)Δ} f` with the
/// series cut to `k ∈ [-K+1, K]` and every term realized as a unitary multiplier.
pub fn riesz_identity_check<S: Spectrum + ?Sized>(hft: &Hft, omega: f64, f: &S, k_terms: usize) -> Result<RieszReport> {
    check_omega(hft, omega)?;
    if k_terms < 4 {
        return Err(Error::Domain(format!("Riesz series needs at least 4 terms, got {k_terms}")));
    }
    let sigma = omega * omega + RHO * RHO;
    let spec = f.spectrum(hft);
    let lm = hft.sgrid.lambda_max;
    let lap = Multiplier::laplacian(lm).apply_spectrum(hft, &spec);
    let mut series = SpectralField::zeros(&hft.sgrid);
    for (c, t) in riesz_terms(sigma, k_terms) {
        let term = Multiplier::schrodinger(t, lm).apply_spectrum(hft, &spec);
        series.axpy(Complex64::new(c, 0.0), &term);
    }
    let target = lap.scale(Complex64::new(0.0, 1.0));
    let denom = l2_norm(hft, &lap);
    let residual = if denom == 0.0 {
        0.0
    } else {
        l2_norm(hft, &target.sub(&series)) / denom
    };
    // smallest |μ| where the field lives
    let n_b = spec.n_b;
    let mu_min = hft
        .sgrid
        .lambdas
        .iter()
        .enumerate()
        .filter(|(i, _)| spec.values[i * n_b..(i + 1) * n_b].iter().any(|v| v.norm_sqr() > 0.0))
        .map(|(_, &l)| l * l + RHO * RHO)
        .fold(f64::INFINITY, f64::min);
    let tail_bound = if mu_min.is_finite() {
        riesz_tail_bound(sigma, k_terms) / mu_min
    } else {
        0.0
    };
    Ok(RieszReport {
        omega,
        k_terms,
        residual,
        tail_bound,
    })
}

/// `E(f, ω) = ‖f - P_ω f‖`, the distance from `f` to `PW_ω`.
pub fn best_approximation<S: Spectrum + ?Sized>(hft: &Hft, omega: f64, f: &S) -> f64 {
    norm_with(hft, f, |l| if l > omega { 1.0 } else { 0.0 })
}

/// `‖(λ² + 1/4)^{s/2} f̂‖`.
pub fn sobolev_norm<S: Spectrum + ?Sized>(hft: &Hft, f: &S, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("Sobolev order must be nonnegative, got {s}")));
    }
    Ok(norm_with(hft, f, |l| (l * l + RHO * RHO).powf(0.5 * s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpatialGrid;
    use crate::hft::SpectralGrid;
    use std::sync::OnceLock;

    fn hft() -> &'static Hft {
        static H: OnceLock<Hft> = OnceLock::new();
        H.get_or_init(|| {
            let g = SpatialGrid::new(5.0, 64, 32).unwrap();
            let s = SpectralGrid::new(8.0, 64, 32).unwrap();
            Hft::new(g, s).unwrap()
        })
    }

    /// Spectrum with a Gaussian envelope around `c`, a few angular modes,
    /// cut at `omega`.
    fn field(h: &Hft, c: f64, sig: f64, omega: f64) -> PwField {
        let mut spec = SpectralField::zeros(&h.sgrid);
        for (i, &l) in h.sgrid.lambdas.iter().enumerate() {
            if l > omega {
                continue;
            }
            let e = (-(l - c).powi(2) / (2.0 * sig * sig)).exp();
            for q in 0..h.sgrid.n_b {
                let b = h.sgrid.boundary_angle(q);
                spec.values[i * h.sgrid.n_b + q] = e * Complex64::new(1.0 + 0.5 * b.cos(), 0.3 * (2.0 * b).sin());
            }
        }
        PwField::synthesize(h, spec)
    }

    #[test]
    fn projections_compose() {
        let h = hft();
        let f = field(h, 3.0, 1.5, 8.0);
        let p2 = project_pw(h, 2.0, &f).unwrap();
        let p2p2 = project_pw(h, 2.0, &p2).unwrap();
        assert!(l2_norm(h, &p2p2.spectrum.sub(&p2.spectrum)) <= 1e-10 * l2_norm(h, &p2));
        let p4p2 = project_pw(h, 4.0, &p2).unwrap();
        let p2p4 = project_pw(h, 2.0, &project_pw(h, 4.0, &f).unwrap()).unwrap();
        assert!(l2_norm(h, &p4p2.spectrum.sub(&p2.spectrum)) <= 1e-10 * l2_norm(h, &p2));
        assert!(l2_norm(h, &p2p4.spectrum.sub(&p2.spectrum)) <= 1e-10 * l2_norm(h, &p2));
        assert!(project_pw(h, 0.0, &f).is_err());
        assert!(project_pw(h, 9.0, &f).is_err());
    }

    #[test]
    fn projection_of_bandlimited_is_identity() {
        let h = hft();
        let f = field(h, 2.0, 0.5, 3.0);
        let p = project_pw(h, 3.0, &f).unwrap();
        let d = p.samples.sub(&f.samples).norm(&h.grid);
        assert!(d <= 1e-10 * f.samples.norm(&h.grid));
        assert!(best_approximation(h, 3.0, &f) <= 1e-10 * f.norm(h));
    }

    #[test]
    fn tiny_omega_kills_field() {
        let h = hft();
        let f = field(h, 2.0, 1.0, 8.0);
        let p = project_pw(h, 1e-3, &f).unwrap();
        assert!(p.norm(h) < 1e-6 * f.norm(h));
    }

    #[test]
    fn best_approximation_nonincreasing() {
        let h = hft();
        let f = field(h, 3.0, 1.5, 8.0);
        let mut prev = f64::INFINITY;
        for i in 1..=32 {
            let e = best_approximation(h, i as f64 * 0.25, &f);
            assert!(e <= prev);
            prev = e;
        }
        assert_eq!(best_approximation(h, 8.0, &f), 0.0);
    }

    #[test]
    fn multiplier_support_checked() {
        let h = hft();
        let f = field(h, 2.0, 1.0, 8.0);
        assert!(apply_multiplier(h, &Multiplier::identity(9.0), &f).is_err());
        assert!(apply_multiplier(h, &Multiplier::identity(8.0), &f).is_ok());
    }

    #[test]
    fn self_adjoint_on_grid_fields() {
        let h = hft();
        let a = SpatialField::from_fn(&h.grid, |x| (-(x.u - 0.3).powi(2) * 8.0 - x.v * x.v * 8.0).exp());
        let b = SpatialField::from_fn(&h.grid, |x| (-(x.u + 0.1).powi(2) * 5.0 - (x.v - 0.2).powi(2) * 9.0).exp());
        let phi = Multiplier::real((0.0, 6.0), |l| (-l * 0.3).exp());
        let pa = apply_multiplier(h, &phi, &a).unwrap();
        let pb = apply_multiplier(h, &phi, &b).unwrap();
        let lhs = pa.samples.inner(&b, &h.grid);
        let rhs = a.inner(&pb.samples, &h.grid);
        assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm());
    }

    #[test]
    fn unitarity() {
        let h = hft();
        let f = field(h, 3.0, 1.0, 8.0);
        for &t in &[0.1, 1.0, 7.5] {
            let u = f.apply(h, &Multiplier::schrodinger(t, 8.0)).unwrap();
            assert!((u.norm(h) / f.norm(h) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bernstein_examples() {
        let h = hft();
        // single λ row well below ω
        let i0 = 20;
        let l0 = h.sgrid.lambdas[i0];
        let mut spec = SpectralField::zeros(&h.sgrid);
        for q in 0..h.sgrid.n_b {
            spec.values[i0 * h.sgrid.n_b + q] = Complex64::new(1.0, q as f64 * 0.1);
        }
        let f = PwField::synthesize(h, spec);
        let rep = bernstein_check(h, 6.0, &f, 1.0).unwrap();
        let expect = (l0 * l0 + 0.25) / (36.0 + 0.25);
        assert!((rep.ratio - expect).abs() < 1e-12);
        // saturation at ω = λ0
        let rep = bernstein_check(h, l0, &f, 1.5).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
        assert!(bernstein_check(h, 4.0, &PwField::zeros(h), 1.0).is_err());
    }

    #[test]
    fn riesz_scalar_converges() {
        let sigma = 16.25;
        for &mu in &[-0.25, -3.0, -10.0, -16.25] {
            for &k in &[8, 16, 32, 64, 256] {
                let err = (riesz_scalar(sigma, k, mu) - Complex64::new(0.0, mu)).norm();
                assert!(err <= riesz_tail_bound(sigma, k) * (1.0 + 1e-9));
            }
        }
        // at μ = -σ the remainder equals the bound
        let err = (riesz_scalar(sigma, 16, -sigma) - Complex64::new(0.0, -sigma)).norm();
        assert!((err / riesz_tail_bound(sigma, 16) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn riesz_operator_matches_scalar() {
        let h = hft();
        let i0 = 30;
        let l0 = h.sgrid.lambdas[i0];
        let mut spec = SpectralField::zeros(&h.sgrid);
        for q in 0..h.sgrid.n_b {
            spec.values[i0 * h.sgrid.n_b + q] = Complex64::new((q as f64).cos(), 1.0);
        }
        let f = PwField::synthesize(h, spec);
        let omega = 7.0;
        let sigma = omega * omega + 0.25;
        let mu = -(l0 * l0 + 0.25);
        for &k in &[8, 16, 32, 64] {
            let rep = riesz_identity_check(h, omega, &f, k).unwrap();
            let scalar = (riesz_scalar(sigma, k, mu) - Complex64::new(0.0, mu)).norm() / mu.abs();
            assert!((rep.residual - scalar).abs() < 1e-10);
        }
        assert!(riesz_identity_check(h, omega, &f, 3).is_err());
        let z = riesz_identity_check(h, omega, &PwField::zeros(h), 8).unwrap();
        assert_eq!(z.residual, 0.0);
    }

    #[test]
    fn sobolev_examples() {
        let h = hft();
        let f = field(h, 4.0, 0.7, 8.0);
        assert!((sobolev_norm(h, &f, 0.0).unwrap() / f.norm(h) - 1.0).abs() < 1e-14);
        let mut prev = 0.0;
        for i in 0..6 {
            let v = sobolev_norm(h, &f, i as f64 * 0.5).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!(sobolev_norm(h, &f, -1.0).is_err());
    }
}
