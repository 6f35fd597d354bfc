//! Besov norms `B^α_{2,q}` computed three ways: best approximation by
//! band-limited fields, dyadic Littlewood-Paley pieces, and frame
//! coefficients. Equivalence constants are not known in closed form, so the
//! report measures them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::frames::{CoefficientSet, Frame};
use crate::hft::Hft;
use crate::spectral::{best_approximation, norm_with, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Infinity,
}

impl Exponent {
    /// `ℓ^q` norm of nonnegative terms.
    pub fn sum(self, terms: &[f64]) -> f64 {
        match self {
            Exponent::One => terms.iter().sum(),
            Exponent::Two => terms.iter().map(|t| t * t).sum::<f64>().sqrt(),
            Exponent::Infinity => terms.iter().cloned().fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Exponent::One),
            "2" => Ok(Exponent::Two),
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => Err(Error::Config(format!("q must be 1, 2 or inf, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Exponent::One => "1",
            Exponent::Two => "2",
            Exponent::Infinity => "inf",
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BesovParams {
    pub alpha: f64,
    pub q: Exponent,
    pub j_max: usize,
}

impl BesovParams {
    /// `α = 0` is accepted as the degenerate `L_2` case.
    pub fn new(alpha: f64, q: Exponent, j_max: usize) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("smoothness α must be finite and nonnegative, got {alpha}")));
        }
        if j_max < 1 {
            return Err(Error::Domain("J_max must be at least 1".into()));
        }
        Ok(BesovParams { alpha, q, j_max })
    }

    fn weight(&self, j: usize) -> f64 {
        2f64.powf(j as f64 * self.alpha)
    }
}

/// `‖f‖ + ‖(2^{kα} E(f, 2^k))_{k≤J}‖_{ℓ^q}`.
pub fn besov_norm_bestapprox<S: Spectrum + ?Sized>(hft: &Hft, f: &S, p: &BesovParams) -> f64 {
    let spec = f.spectrum(hft);
    let terms: Vec<f64> = (0..=p.j_max)
        .map(|k| p.weight(k) * best_approximation(hft, 2f64.powi(k as i32), spec.as_ref()))
        .collect();
    norm_with(hft, spec.as_ref(), |_| 1.0) + p.q.sum(&terms)
}

/// `‖F_j(Δ) f‖` for `j ≤ J`.
pub fn band_norms<S: Spectrum + ?Sized>(hft: &Hft, f: &S, bank: &FilterBank, j_max: usize) -> Vec<f64> {
    let spec = f.spectrum(hft);
    (0..=j_max).map(|j| norm_with(hft, spec.as_ref(), |l| bank.f(j, l))).collect()
}

/// `‖(2^{jα} ‖F_j(Δ) f‖)_{j≤J}‖_{ℓ^q}`.
pub fn besov_norm_lp<S: Spectrum + ?Sized>(hft: &Hft, f: &S, p: &BesovParams, bank: &FilterBank) -> Result<f64> {
    if bank.j_max < p.j_max {
        return Err(Error::Domain(format!("filter bank stops at J = {}, norm needs {}", bank.j_max, p.j_max)));
    }
    let terms: Vec<f64> = band_norms(hft, f, bank, p.j_max)
        .into_iter()
        .enumerate()
        .map(|(j, n)| p.weight(j) * n)
        .collect();
    Ok(p.q.sum(&terms))
}

/// `‖(2^{jα} (Σ_{ν,k} |c_{ν;j,k}|²)^{1/2})_{j≤J}‖_{ℓ^q}`.
pub fn besov_norm_frame(c: &CoefficientSet, p: &BesovParams) -> Result<f64> {
    if c.bands.len() < p.j_max + 1 {
        return Err(Error::Domain(format!(
            "coefficients cover {} bands, norm needs {}",
            c.bands.len(),
            p.j_max + 1
        )));
    }
    let terms: Vec<f64> = (0..=p.j_max).map(|j| p.weight(j) * c.band_energy(j).sqrt()).collect();
    Ok(p.q.sum(&terms))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceRow {
    pub field: String,
    pub l2: f64,
    pub bestapprox: f64,
    pub lp: f64,
    pub frame: f64,
    /// `bestapprox/lp`, `bestapprox/frame`, `lp/frame`.
    pub ratios: [f64; 3],
    /// Plancherel mass above `2^J`, relative.
    pub tail_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub params: BesovParams,
    pub rows: Vec<EquivalenceRow>,
    /// Smallest `C` with every ratio in `[1/C, C]`.
    pub c_empirical: f64,
    /// Per ratio family, `(min, max)`.
    pub ranges: [(f64, f64); 3],
    pub pass: bool,
}

pub const RATIO_NAMES: [&str; 3] = ["bestapprox/lp", "bestapprox/frame", "lp/frame"];

pub fn equivalence_report<S: Spectrum>(
    hft: &Hft,
    fields: &[(String, S)],
    p: &BesovParams,
    frame: &Frame,
) -> Result<EquivalenceReport> {
    if fields.is_empty() {
        return Err(Error::Domain("equivalence report needs at least one field".into()));
    }
    if frame.params.j_max < p.j_max {
        return Err(Error::Domain(format!("frame stops at J = {}, norms need {}", frame.params.j_max, p.j_max)));
    }
    let top = 2f64.powi(p.j_max as i32);
    let mut rows = Vec::with_capacity(fields.len());
    for (name, f) in fields {
        let spec = f.spectrum(hft);
        let l2 = norm_with(hft, spec.as_ref(), |_| 1.0);
        let ba = besov_norm_bestapprox(hft, spec.as_ref(), p);
        let lp = besov_norm_lp(hft, spec.as_ref(), p, &frame.bank)?;
        let c = frame.analyze(hft, spec.as_ref(), name);
        let fr = besov_norm_frame(&c, p)?;
        let tail = best_approximation(hft, top, spec.as_ref());
        rows.push(EquivalenceRow {
            field: name.clone(),
            l2,
            bestapprox: ba,
            lp,
            frame: fr,
            ratios: [ba / lp, ba / fr, lp / fr],
            tail_mass: if l2 > 0.0 { tail / l2 } else { 0.0 },
        });
    }
    let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    for r in &rows {
        for (rg, &v) in ranges.iter_mut().zip(&r.ratios) {
            rg.0 = rg.0.min(v);
            rg.1 = rg.1.max(v);
        }
    }
    let finite = rows.iter().all(|r| r.ratios.iter().all(|v| v.is_finite() && *v > 0.0));
    let c_empirical = if finite {
        ranges.iter().map(|&(lo, hi)| hi.max(1.0 / lo)).fold(1.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(EquivalenceReport {
        params: *p,
        rows,
        c_empirical,
        ranges,
        pass: finite,
    })
}

impl EquivalenceReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "field,l2,bestapprox,lp,frame,bestapprox_over_lp,bestapprox_over_frame,lp_over_frame,tail_mass")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
                r.field, r.l2, r.bestapprox, r.lp, r.frame, r.ratios[0], r.ratios[1], r.ratios[2], r.tail_mass
            )?;
        }
        Ok(())
    }
}

/// Relative change of the empirical constant between two grids.
pub fn constant_drift(coarse: &EquivalenceReport, fine: &EquivalenceReport) -> f64 {
    (fine.c_empirical - coarse.c_empirical).abs() / coarse.c_empirical
}
