//! Average-sampling functionals, the atoms `Θ_{ν;j,k} = F_j(Δ) θ_{ν;j,k}`,
//! analysis and synthesis, frame-bound probes, the frame algorithm and decay
//! profiles.
//!
//! The `θ` are kept sparse on the grid; `Θ` is never stored. Coefficients are
//! `⟨F_j(Δ)f, θ⟩` (grid quadrature against the band-filtered field), or the
//! same number computed on the spectral side as `⟨F_j f̂, θ̂⟩`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::concentration::ConcentratedSpace;
use crate::error::{Error, Result};
use crate::fields::random_pw_fields;
use crate::filters::FilterBank;
use crate::geometry::SpatialGrid;
use crate::hft::{spherical_function, Hft, SpatialField, SpectralField};
use crate::lattice::{build_cover, build_lattice, build_weights, Cover, Lattice, PartitionOfUnity, Weights};
use crate::spectral::{PwField, Spectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Atoms whose `θ` norm is below this fraction of the largest one are dropped.
pub const ATOM_CULL_THRESHOLD: f64 = 1e-10;

/// Allowed relative change of a decay profile under `R_max` doubling.
pub const TRUNCATION_TOL: f64 = 0.05;
/// Slack on the frame interval `[1-δ, 1+δ]`.
pub const FRAME_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FrameIndex {
    pub j: usize,
    pub nu: usize,
    pub k: usize,
}

/// `r_j = a0 δ^{1/2} (ω_j² + ‖ρ‖²)^{-1/2}` with `ω_j = 2^{j+1}`, `‖ρ‖ = 1/2`.
pub fn rate_radius(j: usize, delta: f64, a0: f64) -> f64 {
    let w = 2f64.powi(j as i32 + 1);
    a0 * delta.sqrt() / (w * w + 0.25).sqrt()
}

/// `Ψ_k(F) = |U_k|_ψ^{-1} ∫_{U_k} F ψ_k`.
pub fn psi_functional(k: usize, f: &SpatialField, grid: &SpatialGrid, cov: &Cover, wts: &Weights) -> Result<Complex64> {
    let m = *wts
        .weighted_measures
        .get(k)
        .ok_or_else(|| Error::Domain(format!("cell {k} out of range")))?;
    if !(m > 0.0) {
        return Err(Error::Degenerate(format!("cell {k} has zero weighted measure")));
    }
    let s: Complex64 = cov.cells[k].iter().map(|&x| f.values[x] * (wts.psi[x] * grid.weights[x])).sum();
    Ok(s / m)
}

/// `𝒜_k(F) = √|U_k| Ψ_k(F)`.
pub fn sample_functional(k: usize, f: &SpatialField, grid: &SpatialGrid, cov: &Cover, wts: &Weights) -> Result<Complex64> {
    Ok(psi_functional(k, f, grid, cov, wts)? * cov.cell_measures[k].sqrt())
}

/// Sparse `θ_{ν,k} = (√|U_k| / |U_k|_ψ) ψ_k √φ_ν` as `(node, value)` pairs.
///
/// The square root of the partition of unity is used so that the squares sum
/// to one, which is what makes the family nearly Parseval rather than merely a
/// frame. An empty overlap gives an empty list.
pub fn build_theta(nu: usize, k: usize, pu: &PartitionOfUnity, cov: &Cover, wts: &Weights) -> Vec<(usize, f64)> {
    let scale = cov.cell_measures[k].sqrt() / wts.weighted_measures[k];
    cov.cells[k]
        .iter()
        .filter_map(|&x| {
            let phi = pu.phi(nu, x);
            let v = scale * wts.psi[x] * phi.sqrt();
            (v > 0.0).then_some((x, v))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameParams {
    pub delta: f64,
    pub a0: f64,
    pub j_max: usize,
    pub lambda_pu: f64,
    pub seed: u64,
}

impl FrameParams {
    pub fn validate(&self, hft: &Hft) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::Config(format!("a0 must be positive, got {}", self.a0)));
        }
        if !(self.lambda_pu > 0.0) {
            return Err(Error::Config(format!("λ_pu must be positive, got {}", self.lambda_pu)));
        }
        let top = 2f64.powi(self.j_max as i32 + 1);
        if self.j_max < 1 || top > hft.sgrid.lambda_max * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "J_max = {} needs Λ_max ≥ 2^(J_max+1) = {top}, have {}",
                self.j_max, hft.sgrid.lambda_max
            )));
        }
        Ok(())
    }
}

/// Everything attached to one dyadic band.
#[derive(Debug, Clone)]
pub struct BandFrame {
    pub j: usize,
    pub radius: f64,
    pub lattice: Lattice,
    pub cover: Cover,
    pub weights: Weights,
    /// `(ν, k)` of every retained atom, sorted.
    pub atoms: Vec<(usize, usize)>,
    atom_ptr: Vec<usize>,
    entries: Vec<(usize, f64)>,
    /// Grid norms of the `θ`.
    pub theta_norms: Vec<f64>,
    pub culled: usize,
}

impl BandFrame {
    pub fn build(j: usize, params: &FrameParams, grid: &SpatialGrid, pu: &PartitionOfUnity) -> Result<Self> {
        let radius = rate_radius(j, params.delta, params.a0);
        let lattice = build_lattice(radius.min(grid.r_max), grid, params.seed.wrapping_add(j as u64))?;
        let cover = build_cover(&lattice, grid)?;
        let weights = build_weights(&cover, grid, params.delta, 0.25 * radius)?;

        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut lists: Vec<Vec<(usize, f64)>> = Vec::new();
        for (k, cell) in cover.cells.iter().enumerate() {
            let scale = cover.cell_measures[k].sqrt() / weights.weighted_measures[k];
            for &x in cell {
                let psi = weights.psi[x];
                if psi == 0.0 {
                    continue;
                }
                for &(nu, phi) in &pu.values[x] {
                    let id = *ids.entry((nu, k)).or_insert_with(|| {
                        lists.push(Vec::new());
                        lists.len() - 1
                    });
                    lists[id].push((x, scale * psi * phi.sqrt()));
                }
            }
        }
        let mut order: Vec<((usize, usize), usize)> = ids.into_iter().collect();
        order.sort();
        let norms: Vec<f64> = order
            .iter()
            .map(|&(_, id)| lists[id].iter().map(|&(x, v)| v * v * grid.weights[x]).sum::<f64>().sqrt())
            .collect();
        let biggest = norms.iter().cloned().fold(0.0, f64::max);
        let mut atoms = Vec::with_capacity(order.len());
        let mut atom_ptr = vec![0];
        let mut entries = Vec::new();
        let mut theta_norms = Vec::with_capacity(order.len());
        let mut culled = 0;
        for (&(key, id), &n) in order.iter().zip(&norms) {
            if n < ATOM_CULL_THRESHOLD * biggest {
                culled += 1;
                continue;
            }
            atoms.push(key);
            entries.extend_from_slice(&lists[id]);
            atom_ptr.push(entries.len());
            theta_norms.push(n);
        }
        Ok(BandFrame {
            j,
            radius,
            lattice,
            cover,
            weights,
            atoms,
            atom_ptr,
            entries,
            theta_norms,
            culled,
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atom with the largest `θ` at node 0 (nearest the origin).
    pub fn central(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..self.len() {
            if let Some(&(_, v)) = self.theta(a).iter().find(|&&(x, _)| x == 0) {
                if v > best.1 {
                    best = (a, v);
                }
            }
        }
        best.0
    }

    /// `F_j θ_a` as a spectrum.
    pub fn atom_spectrum(&self, hft: &Hft, bank: &FilterBank, a: usize) -> SpectralField {
        let theta = hft.modes_to_spectrum(&hft.forward_sparse_modes(self.theta(a)));
        theta.multiply(&hft.sgrid, |l| Complex64::new(bank.f(self.j, l), 0.0))
    }

    /// `θ` of atom `a` as `(node, value)` pairs.
    pub fn theta(&self, a: usize) -> &[(usize, f64)] {
        &self.entries[self.atom_ptr[a]..self.atom_ptr[a + 1]]
    }

    /// `⟨u, θ_a⟩` for every atom.
    pub fn pair(&self, u: &SpatialField, grid: &SpatialGrid) -> Vec<Complex64> {
        (0..self.len())
            .map(|a| self.theta(a).iter().map(|&(x, v)| u.values[x] * (v * grid.weights[x])).sum())
            .collect()
    }

    /// `Σ_a c_a θ_a` on the grid.
    pub fn combine(&self, c: &[Complex64], grid: &SpatialGrid) -> SpatialField {
        let mut out = SpatialField::zeros(grid);
        for (a, &ca) in c.iter().enumerate() {
            for &(x, v) in self.theta(a) {
                out.values[x] += ca * v;
            }
        }
        out
    }

    /// Largest node count of a single cell.
    pub fn max_cell_size(&self) -> usize {
        self.cover.cells.iter().map(|c| c.len()).max().unwrap_or(0)
    }
}

/// Coefficients `⟨f, Θ_{ν;j,k}⟩`, band by band in atom order.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSet {
    pub source: String,
    pub bands: Vec<Vec<Complex64>>,
}

impl CoefficientSet {
    pub fn band_energy(&self, j: usize) -> f64 {
        self.bands[j].iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn energy(&self) -> f64 {
        (0..self.bands.len()).map(|j| self.band_energy(j)).sum()
    }

    pub fn scale(&self, s: Complex64) -> CoefficientSet {
        CoefficientSet {
            source: self.source.clone(),
            bands: self.bands.iter().map(|b| b.iter().map(|c| c * s).collect()).collect(),
        }
    }

    pub fn zeros_like(&self) -> CoefficientSet {
        CoefficientSet {
            source: "zero".into(),
            bands: self.bands.iter().map(|b| vec![ZERO; b.len()]).collect(),
        }
    }

    /// Rows `j, ν, k, re, im` in the frame's atom order.
    pub fn to_json(&self, frame: &Frame) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .bands
            .iter()
            .enumerate()
            .flat_map(|(j, b)| {
                b.iter().zip(&frame.bands[j].atoms).map(move |(c, &(nu, k))| serde_json::json!([j, nu, k, c.re, c.im]))
            })
            .collect();
        serde_json::json!({ "source": self.source, "columns": ["j", "nu", "k", "re", "im"], "rows": rows })
    }
}

/// A materialized atom.
#[derive(Debug, Clone)]
pub struct FrameAtom {
    pub index: FrameIndex,
    pub values: PwField,
    pub band: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub params: FrameParams,
    pub bank: FilterBank,
    pub pu: PartitionOfUnity,
    pub bands: Vec<BandFrame>,
}

impl Frame {
    pub fn build(hft: &Hft, params: &FrameParams) -> Result<Frame> {
        params.validate(hft)?;
        let pu = crate::lattice::build_partition_of_unity(params.lambda_pu, &hft.grid, params.seed)?;
        Self::with_partition(hft, params, pu)
    }

    /// Reuse an existing partition of unity (it does not depend on `a0`).
    pub fn with_partition(hft: &Hft, params: &FrameParams, pu: PartitionOfUnity) -> Result<Frame> {
        params.validate(hft)?;
        let bank = FilterBank::new(params.j_max)?;
        let bands = (0..=params.j_max)
            .map(|j| BandFrame::build(j, params, &hft.grid, &pu))
            .collect::<Result<Vec<_>>>()?;
        Ok(Frame {
            params: params.clone(),
            bank,
            pu,
            bands,
        })
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, j: usize, a: usize) -> FrameIndex {
        let (nu, k) = self.bands[j].atoms[a];
        FrameIndex { j, nu, k }
    }

    /// Covered spectral range `[0, 2^{J_max}]`.
    pub fn omega(&self) -> f64 {
        self.bank.top()
    }

    /// `F_j f̂`.
    pub fn filter(&self, hft: &Hft, spec: &SpectralField, j: usize) -> SpectralField {
        spec.multiply(&hft.sgrid, |l| Complex64::new(self.bank.f(j, l), 0.0))
    }

    /// `F_j(Δ) f` sampled on the grid.
    pub fn band_field(&self, hft: &Hft, spec: &SpectralField, j: usize) -> SpatialField {
        hft.inverse(&self.filter(hft, spec, j))
    }

    /// Coefficients by grid quadrature of `F_j(Δ)f` against `θ`.
    pub fn analyze<S: Spectrum + ?Sized>(&self, hft: &Hft, f: &S, source: &str) -> CoefficientSet {
        let spec = f.spectrum(hft);
        let bands = self
            .bands
            .iter()
            .map(|b| b.pair(&self.band_field(hft, &spec, b.j), &hft.grid))
            .collect();
        CoefficientSet {
            source: source.into(),
            bands,
        }
    }

    /// Coefficients of band `j` for the listed atoms, computed on the spectral
    /// side as `⟨F_j f̂, θ̂⟩`.
    pub fn analyze_spectral<S: Spectrum + ?Sized>(&self, hft: &Hft, f: &S, j: usize, atoms: &[usize]) -> Vec<Complex64> {
        let spec = f.spectrum(hft);
        let fj = hft.spectrum_to_modes(&self.filter(hft, &spec, j));
        atoms
            .iter()
            .map(|&a| hft.modes_inner(&fj, &hft.forward_sparse_modes(self.bands[j].theta(a))))
            .collect()
    }

    /// Spectrum of `Θ_{ν;j,k}`.
    pub fn atom_spectrum(&self, hft: &Hft, j: usize, a: usize) -> SpectralField {
        self.bands[j].atom_spectrum(hft, &self.bank, a)
    }

    pub fn atom(&self, hft: &Hft, j: usize, a: usize) -> FrameAtom {
        FrameAtom {
            index: self.index(j, a),
            values: PwField::synthesize(hft, self.atom_spectrum(hft, j, a)),
            band: self.bank.band(j),
        }
    }

    /// `Σ c Θ` as a spectrum.
    pub fn synthesize(&self, hft: &Hft, c: &CoefficientSet) -> SpectralField {
        let mut out = SpectralField::zeros(&hft.sgrid);
        for (b, cb) in self.bands.iter().zip(&c.bands) {
            let g = hft.forward(&b.combine(cb, &hft.grid));
            out.axpy(Complex64::new(1.0, 0.0), &self.filter(hft, &g, b.j));
        }
        out
    }

    /// Frame operator `S f = Σ ⟨f, Θ⟩ Θ`.
    pub fn frame_operator<S: Spectrum + ?Sized>(&self, hft: &Hft, f: &S) -> SpectralField {
        self.synthesize(hft, &self.analyze(hft, f, "S"))
    }

    /// Sharp projection onto the covered range `PW_{2^J}`.
    pub fn project(&self, hft: &Hft, spec: &SpectralField) -> SpectralField {
        let w = self.omega();
        spec.multiply(&hft.sgrid, |l| Complex64::new(if l <= w { 1.0 } else { 0.0 }, 0.0))
    }

    /// The spot-check atom of band `j`, see [`BandFrame::central`].
    pub fn central_atom(&self, j: usize) -> usize {
        self.bands[j].central()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandPurity {
    pub j: usize,
    pub atoms: usize,
    pub culled: usize,
    pub max_leakage: f64,
    pub min_norm: f64,
    pub max_norm: f64,
}

/// Out-of-band share of `‖Θ‖²` for every atom of every band.
pub fn band_purity(frame: &Frame, hft: &Hft) -> Vec<BandPurity> {
    frame
        .bands
        .iter()
        .map(|b| {
            let (lo, hi) = frame.bank.band(b.j);
            let inside: Vec<bool> = hft.sgrid.lambdas.iter().map(|&l| (b.j == 0 || l > lo) && l < hi).collect();
            let filt: Vec<f64> = hft.sgrid.lambdas.iter().map(|&l| frame.bank.f_sqr(b.j, l)).collect();
            let mut out = BandPurity {
                j: b.j,
                atoms: b.len(),
                culled: b.culled,
                max_leakage: 0.0,
                min_norm: f64::INFINITY,
                max_norm: 0.0,
            };
            for a in 0..b.len() {
                let rows = hft.mode_row_energy(&hft.forward_sparse_modes(b.theta(a)));
                let mut total = 0.0;
                let mut outside = 0.0;
                for (i, e) in rows.iter().enumerate() {
                    let v = filt[i] * e * hft.sgrid.row_measure(i);
                    total += v;
                    if !inside[i] {
                        outside += v;
                    }
                }
                let leak = if total > 0.0 { outside / total } else { 0.0 };
                out.max_leakage = out.max_leakage.max(leak);
                out.min_norm = out.min_norm.min(total.sqrt());
                out.max_norm = out.max_norm.max(total.sqrt());
            }
            out
        })
        .collect()
}

/// Out-of-band share of a spectrum for band `j`.
pub fn band_leakage(hft: &Hft, bank: &FilterBank, j: usize, spec: &SpectralField) -> f64 {
    let (lo, hi) = bank.band(j);
    let total = spec.norm_sqr(&hft.sgrid);
    if total == 0.0 {
        return 0.0;
    }
    let out = spec.multiply(&hft.sgrid, |l| Complex64::new(if (j == 0 || l > lo) && l < hi { 0.0 } else { 1.0 }, 0.0));
    out.norm_sqr(&hft.sgrid) / total
}

/// Precomputed band-filtered test fields for repeated frame-bound checks.
pub struct BoundsProbe {
    pub fields: Vec<PwField>,
    /// `F_j(Δ) f` on the grid, `[field][j]`.
    band_fields: Vec<Vec<SpatialField>>,
    /// `‖F_j f‖²`, `[field][j]`.
    band_norms: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl BoundsProbe {
    /// `n_trials` seeded fields with spectrum in `[0, 2^{J_max}]`.
    pub fn new(hft: &Hft, bank: &FilterBank, n_trials: usize, seed: u64) -> Result<Self> {
        if n_trials < 10 {
            return Err(Error::Domain(format!("need at least 10 trials, got {n_trials}")));
        }
        let fields = random_pw_fields(hft, n_trials, 0.0, bank.top(), seed)?;
        Ok(Self::from_fields(hft, bank, fields))
    }

    pub fn from_fields(hft: &Hft, bank: &FilterBank, fields: Vec<PwField>) -> Self {
        let mut band_fields = Vec::new();
        let mut band_norms = Vec::new();
        let mut norms = Vec::new();
        for f in &fields {
            let mut bf = Vec::new();
            let mut bn = Vec::new();
            for j in bank.bands() {
                let s = f.spectrum.multiply(&hft.sgrid, |l| Complex64::new(bank.f(j, l), 0.0));
                bn.push(s.norm_sqr(&hft.sgrid));
                bf.push(hft.inverse(&s));
            }
            band_fields.push(bf);
            band_norms.push(bn);
            norms.push(f.spectrum.norm_sqr(&hft.sgrid));
        }
        BoundsProbe {
            fields,
            band_fields,
            band_norms,
            norms,
        }
    }

    pub fn evaluate(&self, frame: &Frame, hft: &Hft) -> FrameBoundsReport {
        let delta = frame.params.delta;
        let nb = frame.bands.len();
        let mut ratios = Vec::new();
        let mut per_band = vec![(f64::INFINITY, f64::NEG_INFINITY); nb];
        for (t, bfs) in self.band_fields.iter().enumerate() {
            let mut total = 0.0;
            for (j, b) in frame.bands.iter().enumerate() {
                let e: f64 = b.pair(&bfs[j], &hft.grid).iter().map(|c| c.norm_sqr()).sum();
                total += e;
                let bn = self.band_norms[t][j];
                if bn > 1e-12 * self.norms[t] {
                    let r = e / bn;
                    per_band[j].0 = per_band[j].0.min(r);
                    per_band[j].1 = per_band[j].1.max(r);
                }
            }
            ratios.push(total / self.norms[t]);
        }
        let lo = 1.0 - delta - FRAME_TOL;
        let hi = 1.0 + delta + FRAME_TOL;
        let inside = |a: f64, b: f64| a >= lo && b <= hi;
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let per_band: Vec<BandBounds> = per_band
            .into_iter()
            .enumerate()
            .map(|(j, (a, b))| BandBounds {
                j,
                min_ratio: a,
                max_ratio: b,
                pass: inside(a, b),
            })
            .collect();
        let pass = inside(min, max) && per_band.iter().all(|b| b.pass);
        FrameBoundsReport {
            delta,
            a0: frame.params.a0,
            tol: FRAME_TOL,
            n_trials: ratios.len(),
            min_ratio: min,
            max_ratio: max,
            ratios,
            per_band,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandBounds {
    pub j: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameBoundsReport {
    pub delta: f64,
    pub a0: f64,
    pub tol: f64,
    pub n_trials: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
    pub per_band: Vec<BandBounds>,
    pub pass: bool,
}

/// `Σ|⟨f,Θ⟩|² / ‖f‖²` extremes over `n_trials` seeded test fields.
pub fn frame_bounds(frame: &Frame, hft: &Hft, n_trials: usize, seed: u64) -> Result<FrameBoundsReport> {
    Ok(BoundsProbe::new(hft, &frame.bank, n_trials, seed)?.evaluate(frame, hft))
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub a0: f64,
    /// `(a0, min ratio, max ratio, pass)` in the order tried.
    pub trials: Vec<(f64, f64, f64, bool)>,
}

pub const A0_RANGE: (f64, f64) = (1.0 / 64.0, 2.0);

/// Largest `a0` in [`A0_RANGE`] whose frame-bound report passes, by bisection
/// on `log2 a0`.
pub fn calibrate_a0(hft: &Hft, params: &FrameParams, probe: &BoundsProbe, steps: usize) -> Result<Calibration> {
    let pu = crate::lattice::build_partition_of_unity(params.lambda_pu, &hft.grid, params.seed)?;
    let mut trials = Vec::new();
    let mut run = |a0: f64| -> Result<bool> {
        let p = FrameParams { a0, ..params.clone() };
        let frame = Frame::with_partition(hft, &p, pu.clone())?;
        let rep = probe.evaluate(&frame, hft);
        trials.push((a0, rep.min_ratio, rep.max_ratio, rep.pass));
        Ok(rep.pass)
    };
    let (lo, hi) = A0_RANGE;
    if run(hi)? {
        return Ok(Calibration { a0: hi, trials });
    }
    if !run(lo)? {
        return Err(Error::Degenerate(format!("no a0 in [{lo}, {hi}] meets the frame bounds")));
    }
    let (mut a, mut b) = (lo.log2(), hi.log2());
    for _ in 0..steps {
        let mid = 0.5 * (a + b);
        if run(mid.exp2())? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Calibration { a0: a.exp2(), trials })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    /// Relative errors `‖f - f_n‖/‖f‖`, `n = 0..=n_iter`.
    pub errors: Vec<f64>,
    /// Successive ratios `e_{n+1}/e_n`.
    pub factors: Vec<f64>,
    pub max_factor: f64,
    pub final_error: f64,
}

/// Frame algorithm in the concentrated part of `PW_{2^J}`: `f_0 = Q S f`
/// from the coefficients, `f_{n+1} = f_n + f_0 - Q S f_n`, `Q` the
/// projection onto `space`. With `reference` the relative error is
/// tracked, otherwise the residual `‖f_0 - Q S f_n‖/‖f_0‖` is.
pub fn reconstruct(
    frame: &Frame,
    hft: &Hft,
    space: &ConcentratedSpace,
    c: &CoefficientSet,
    n_iter: usize,
    reference: Option<&SpectralField>,
) -> Result<(SpectralField, Vec<f64>)> {
    let f0 = space.project(hft, &frame.synthesize(hft, c));
    let n0 = f0.norm_sqr(&hft.sgrid).sqrt();
    if n0 == 0.0 {
        return Ok((f0, vec![0.0; n_iter + 1]));
    }
    let scale = reference.map_or(n0, |r| r.norm_sqr(&hft.sgrid).sqrt());
    let mut f = f0.clone();
    let mut history = Vec::with_capacity(n_iter + 1);
    let measure = |f: &SpectralField, sf: &SpectralField| -> f64 {
        match reference {
            Some(r) => r.sub(f).norm_sqr(&hft.sgrid).sqrt() / scale,
            None => f0.sub(sf).norm_sqr(&hft.sgrid).sqrt() / scale,
        }
    };
    let mut sf = space.project(hft, &frame.frame_operator(hft, &f));
    history.push(measure(&f, &sf));
    let mut rises = 0;
    for it in 0..n_iter {
        let step = f0.sub(&sf);
        f.axpy(Complex64::new(1.0, 0.0), &step);
        sf = space.project(hft, &frame.frame_operator(hft, &f));
        let e = measure(&f, &sf);
        let prev = *history.last().expect("nonempty");
        rises = if e > prev && e > 1e-10 { rises + 1 } else { 0 };
        history.push(e);
        if rises >= 2 {
            return Err(Error::Divergence { iteration: it + 1, error: e });
        }
    }
    Ok((f, history))
}

pub fn reconstruction_report(errors: Vec<f64>, floor: f64) -> ReconstructionReport {
    let factors: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let max_factor = errors
        .windows(2)
        .filter(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    ReconstructionReport {
        final_error: *errors.last().unwrap_or(&0.0),
        errors,
        factors,
        max_factor,
    }
}

/// Largest `|1 - μ|` over the spectrum of `Q S Q`, by power iteration on
/// `I - Q S Q` from `start`.
pub fn power_iteration(frame: &Frame, hft: &Hft, space: &ConcentratedSpace, start: &SpectralField, iters: usize) -> f64 {
    let mut v = space.project(hft, start);
    let mut est = 0.0;
    for _ in 0..iters {
        let n = v.norm_sqr(&hft.sgrid).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        v = v.scale(Complex64::new(1.0 / n, 0.0));
        let sv = space.project(hft, &frame.frame_operator(hft, &v));
        let w = v.sub(&sv);
        est = w.norm_sqr(&hft.sgrid).sqrt();
        v = w;
    }
    est
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub r: f64,
    pub sup: f64,
    pub weighted: f64,
    /// `(1+r)^{-2} e^{-r/2}`.
    pub envelope: f64,
}

/// `sup_{d(0,x)=r} |Θ(x)| (1+r)^N / φ_0(r)` on the given radii.
pub fn decay_profile(hft: &Hft, spec: &SpectralField, n_weight: i32, radii: &[f64]) -> Result<Vec<DecayRow>> {
    if n_weight > 4 {
        return Err(Error::Domain(format!("weight exponent N ≤ 4 expected, got {n_weight}")));
    }
    let circles = hft.evaluate_on_circles(spec, radii, 2 * hft.m_max + 2);
    radii
        .iter()
        .zip(circles)
        .map(|(&r, vals)| {
            let sup = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let phi0 = spherical_function(0.0, r)?;
            Ok(DecayRow {
                r,
                sup,
                weighted: sup * (1.0 + r).powi(n_weight) / phi0,
                envelope: (1.0 + r).powi(-2) * (-0.5 * r).exp(),
            })
        })
        .collect()
}

/// Integer radii `1..=R_max-2` used for decay tables.
pub fn decay_radii(r_max: f64) -> Vec<f64> {
    (1..=((r_max - 2.0).floor() as i64).max(1)).map(|r| r as f64).collect()
}

/// Bounded unless the last five weighted values strictly increase.
pub fn profile_bounded(rows: &[DecayRow]) -> bool {
    if rows.iter().any(|r| !r.weighted.is_finite()) {
        return false;
    }
    let tail = &rows[rows.len().saturating_sub(5)..];
    tail.len() < 5 || !tail.windows(2).all(|w| w[1].weighted > w[0].weighted)
}

/// Smallest `C` with `sup|Θ| ≤ C (1+r)^{-2} e^{-r/2}` on the table.
pub fn envelope_constant(rows: &[DecayRow]) -> f64 {
    rows.iter().map(|r| r.sup / r.envelope).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub j: usize,
    pub r_max: f64,
    pub r_max_extended: f64,
    pub n_weight: i32,
    pub radii: Vec<f64>,
    pub weighted: Vec<f64>,
    pub weighted_extended: Vec<f64>,
    pub max_rel_change: f64,
    pub pass: bool,
}

/// Spot-check atom of band `j` rebuilt on the grid extended to `2 R_max`
/// (lattice, cover, weights and partition all recomputed there); the
/// weighted decay profiles are compared at the shared radii. The inner rings
/// of the extended grid are those of `hft.grid`, so the rebuilt atom's
/// spectrum is taken with `hft` as long as its support stays inside.
pub fn truncation_stability(frame: &Frame, hft: &Hft, j: usize, n_weight: i32) -> Result<TruncationReport> {
    let band = frame
        .bands
        .get(j)
        .ok_or_else(|| Error::Domain(format!("band {j} not in frame")))?;
    let grid2 = hft.grid.extended()?;
    let pu2 = crate::lattice::build_partition_of_unity(frame.params.lambda_pu, &grid2, frame.params.seed)?;
    let band2 = BandFrame::build(j, &frame.params, &grid2, &pu2)?;
    let a2 = band2.central();
    if band2.theta(a2).iter().any(|&(x, _)| x >= hft.grid.len()) {
        return Err(Error::Domain("spot-check atom reaches past the original disk".into()));
    }
    let radii = decay_radii(hft.grid.r_max);
    let p1 = decay_profile(hft, &band.atom_spectrum(hft, &frame.bank, band.central()), n_weight, &radii)?;
    let p2 = decay_profile(hft, &band2.atom_spectrum(hft, &frame.bank, a2), n_weight, &radii)?;
    let weighted: Vec<f64> = p1.iter().map(|r| r.weighted).collect();
    let weighted_extended: Vec<f64> = p2.iter().map(|r| r.weighted).collect();
    let max_rel_change = weighted
        .iter()
        .zip(&weighted_extended)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(TruncationReport {
        j,
        r_max: hft.grid.r_max,
        r_max_extended: grid2.r_max,
        n_weight,
        radii,
        weighted,
        weighted_extended,
        pass: max_rel_change < TRUNCATION_TOL,
        max_rel_change,
    })
}
