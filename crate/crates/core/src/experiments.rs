//! The verification suites behind the command-line runner. Each one returns
//! a [`Report`] with metrics, named verdicts and CSV tables.

use std::fmt::Write as _;
use std::time::Instant;

use serde_json::json;

use crate::besov::{constant_drift, equivalence_report, BesovParams, EquivalenceReport, Exponent};
use crate::concentration::ConcentratedSpace;
use crate::config::{ExperimentConfig, A0};
use crate::error::{Error, Result};
use crate::fields::{dilation_family, random_pw_fields};
use crate::frames::{
    band_purity, calibrate_a0, decay_profile, decay_radii, envelope_constant, power_iteration, profile_bounded,
    reconstruct, reconstruction_report, truncation_stability, BoundsProbe, Calibration, Frame, FrameParams,
    FRAME_TOL,
};
use crate::geometry::SpatialGrid;
use crate::hft::{exp_cosh_spectrum, Hft, SpatialField, SpectralGrid, CALIBRATION_FAMILY, PLANCHEREL_CONSTANT};
use crate::report::{Report, Summary};
use crate::spectral::PwField;

pub const EXPERIMENTS: [&str; 5] = ["plancherel", "frame-bounds", "reconstruct", "besov", "decay"];

/// Seed offsets so that the suites never share random streams.
const SEED_CALIBRATION: u64 = 0x0a0c;
const SEED_RECONSTRUCT: u64 = 0x5ec0;
const SEED_BESOV: u64 = 0xbe50;

/// Plancherel acceptance: norms within this relative error.
pub const PLANCHEREL_TOL: f64 = 1e-3;
/// Transform against the Bessel oracle, relative to its peak, for `λ ≤ 8`.
pub const ORACLE_TOL: f64 = 1e-5;
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
pub const BESOV_DRIFT_TOL: f64 = 0.1;

pub fn build_hft(cfg: &ExperimentConfig) -> Result<Hft> {
    Hft::calibrated(
        SpatialGrid::new(cfg.r_max, cfg.n_r, cfg.n_theta)?,
        SpectralGrid::new(cfg.lambda_max, cfg.n_lambda, cfg.n_b)?,
    )
}

/// Transform plus a frame built on demand (after calibrating `a0` if asked).
pub struct Context {
    pub cfg: ExperimentConfig,
    pub hft: Hft,
    frame: Option<Frame>,
    pub calibration: Option<Calibration>,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Context {
            cfg: cfg.clone(),
            hft: build_hft(cfg)?,
            frame: None,
            calibration: None,
        })
    }

    pub fn params(&self, a0: f64) -> FrameParams {
        FrameParams {
            delta: self.cfg.delta,
            a0,
            j_max: self.cfg.j_max,
            lambda_pu: self.cfg.lambda_pu,
            seed: self.cfg.seed,
        }
    }

    pub fn frame(&mut self) -> Result<&Frame> {
        if self.frame.is_none() {
            let a0 = match self.cfg.a0 {
                A0::Value(a) => a,
                A0::Calibrate => {
                    let bank = crate::filters::FilterBank::new(self.cfg.j_max)?;
                    let probe = BoundsProbe::new(
                        &self.hft,
                        &bank,
                        self.cfg.n_trials,
                        self.cfg.seed ^ SEED_CALIBRATION,
                    )?;
                    let cal = calibrate_a0(&self.hft, &self.params(1.0), &probe, self.cfg.calibration_steps)?;
                    let a0 = cal.a0;
                    self.calibration = Some(cal);
                    a0
                }
            };
            self.frame = Some(Frame::build(&self.hft, &self.params(a0))?);
        }
        Ok(self.frame.as_ref().expect("built above"))
    }

    fn note_frame(&self, rep: &mut Report) {
        if let Some(f) = &self.frame {
            rep.metric("a0", f.params.a0);
            rep.metric("atoms_per_band", f.bands.iter().map(|b| b.len()).collect::<Vec<_>>());
            rep.metric("culled_per_band", f.bands.iter().map(|b| b.culled).collect::<Vec<_>>());
            rep.metric("radius_per_band", f.bands.iter().map(|b| b.radius).collect::<Vec<_>>());
        }
        if let Some(c) = &self.calibration {
            rep.metric("calibration", c);
        }
    }
}

pub fn run(name: &str, ctx: &mut Context) -> Result<Report> {
    let t = Instant::now();
    let mut rep = match name {
        "plancherel" => plancherel(ctx)?,
        "frame-bounds" => frame_bounds(ctx)?,
        "reconstruct" => reconstruct_suite(ctx)?,
        "besov" => besov(ctx)?,
        "decay" => decay(ctx)?,
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    };
    rep.wall_clock_s = t.elapsed().as_secs_f64();
    Ok(rep)
}

pub fn run_all(ctx: &mut Context) -> Result<Summary> {
    let t = Instant::now();
    let reports = EXPERIMENTS.iter().map(|n| run(n, ctx)).collect::<Result<Vec<_>>>()?;
    Ok(Summary {
        experiment: "all".into(),
        config: ctx.cfg.clone(),
        pass: reports.iter().all(|r| r.pass),
        wall_clock_s: t.elapsed().as_secs_f64(),
        reports,
    })
}

/// Norm identity and Bessel oracle on `e^{-p cosh r}`.
pub fn plancherel(ctx: &mut Context) -> Result<Report> {
    let h = &ctx.hft;
    let mut rep = Report::new("plancherel", &ctx.cfg);
    rep.metric("plancherel_constant", h.sgrid.constant);
    rep.metric("plancherel_constant_exact", PLANCHEREL_CONSTANT);
    let mut csv = String::from("p,spatial_norm,spectral_norm,rel_err,oracle_err,tail_energy\n");
    let mut oracle_csv = String::from("p,lambda,re,im,oracle\n");
    let mut worst_norm: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let top = 8f64.min(h.sgrid.lambda_max);
    for &p in &CALIBRATION_FAMILY {
        let f = SpatialField::from_fn(&h.grid, |x| (-p * x.radius().cosh()).exp());
        let spatial = f.norm(&h.grid);
        let spec = h.forward(&f);
        let spectral = spec.norm_sqr(&h.sgrid).sqrt();
        let rel = (spectral - spatial).abs() / spatial;
        let tail = h.tail_fraction(&spec, 0.5 * h.sgrid.lambda_max);
        let peak = exp_cosh_spectrum(p, 0.0)?;
        let mut err: f64 = 0.0;
        for (i, &l) in h.sgrid.lambdas.iter().enumerate() {
            if l > top {
                continue;
            }
            let o = exp_cosh_spectrum(p, l)?;
            let v = spec.get(i, 0);
            err = err.max((v - o).norm() / peak);
            let _ = writeln!(oracle_csv, "{p},{l:.12},{:.12e},{:.12e},{o:.12e}", v.re, v.im);
        }
        worst_norm = worst_norm.max(rel);
        worst_oracle = worst_oracle.max(err);
        let _ = writeln!(csv, "{p},{spatial:.12e},{spectral:.12e},{rel:.3e},{err:.3e},{tail:.3e}");
        rep.metric(&format!("p{p}_norm_rel_err"), rel);
        rep.metric(&format!("p{p}_oracle_err"), err);
        rep.metric(&format!("p{p}_tail_energy"), tail);
    }
    rep.metric("max_norm_rel_err", worst_norm);
    rep.metric("max_oracle_err", worst_oracle);
    rep.verdict("norms_agree", worst_norm <= PLANCHEREL_TOL);
    rep.verdict("oracle_agrees", worst_oracle <= ORACLE_TOL);
    rep.table("plancherel.csv", csv);
    rep.table("oracle.csv", oracle_csv);
    Ok(rep)
}

pub fn frame_bounds(ctx: &mut Context) -> Result<Report> {
    ctx.frame()?;
    let frame = ctx.frame.as_ref().expect("built");
    let h = &ctx.hft;
    let mut rep = Report::new("frame-bounds", &ctx.cfg);
    ctx.note_frame(&mut rep);
    let probe = BoundsProbe::new(h, &frame.bank, ctx.cfg.n_trials, ctx.cfg.seed)?;
    let b = probe.evaluate(frame, h);
    rep.metric("min_ratio", b.min_ratio);
    rep.metric("max_ratio", b.max_ratio);
    rep.metric("interval", [1.0 - b.delta - FRAME_TOL, 1.0 + b.delta + FRAME_TOL]);
    rep.metric("per_band", &b.per_band);
    rep.verdict("bounds", b.pass);

    // S is self-adjoint and positive
    let f = &probe.fields[0];
    let g = &probe.fields[1];
    let sf = frame.frame_operator(h, f);
    let sg = frame.frame_operator(h, g);
    let a = sf.inner(&g.spectrum, &h.sgrid);
    let c = f.spectrum.inner(&sg, &h.sgrid);
    let asym = (a - c).norm() / a.norm().max(c.norm()).max(1e-300);
    let pos = sf.inner(&f.spectrum, &h.sgrid).re;
    rep.metric("self_adjoint_rel_err", asym);
    rep.metric("rayleigh_first", pos / f.spectrum.norm_sqr(&h.sgrid));
    rep.verdict("self_adjoint", asym < 1e-8 && pos > 0.0);

    // smaller cells give tighter bounds
    let half = Frame::with_partition(h, &FrameParams { a0: 0.5 * frame.params.a0, ..frame.params.clone() }, frame.pu.clone())?;
    let bh = probe.evaluate(&half, h);
    let spread = |lo: f64, hi: f64| (1.0 - lo).abs().max((hi - 1.0).abs());
    rep.metric("half_a0_min_ratio", bh.min_ratio);
    rep.metric("half_a0_max_ratio", bh.max_ratio);
    rep.verdict("half_a0_tightens", spread(bh.min_ratio, bh.max_ratio) <= spread(b.min_ratio, b.max_ratio));

    let mut csv = String::from("trial,ratio\n");
    for (t, r) in b.ratios.iter().enumerate() {
        let _ = writeln!(csv, "{t},{r:.12e}");
    }
    rep.table("frame_ratios.csv", csv);
    let mut csv = String::from("j,min_ratio,max_ratio,pass\n");
    for pb in &b.per_band {
        let _ = writeln!(csv, "{},{:.12e},{:.12e},{}", pb.j, pb.min_ratio, pb.max_ratio, pb.pass);
    }
    rep.table("band_bounds.csv", csv);
    if let Some(cal) = &ctx.calibration {
        let mut csv = String::from("a0,min_ratio,max_ratio,pass\n");
        for (a, lo, hi, ok) in &cal.trials {
            let _ = writeln!(csv, "{a:.12e},{lo:.12e},{hi:.12e},{ok}");
        }
        rep.table("calibration.csv", csv);
    }
    Ok(rep)
}

/// Relative errors below this are at the round-off floor and excluded from
/// the contraction factor.
const FACTOR_FLOOR: f64 = 1e-11;

pub fn reconstruct_suite(ctx: &mut Context) -> Result<Report> {
    ctx.frame()?;
    let frame = ctx.frame.as_ref().expect("built");
    let h = &ctx.hft;
    let cfg = &ctx.cfg;
    let mut rep = Report::new("reconstruct", cfg);
    ctx.note_frame(&mut rep);
    let space = ConcentratedSpace::new(h, frame.omega(), cfg.concentration)?;
    rep.metric("space", space.summary());
    let raw = random_pw_fields(h, 3, 0.0, frame.omega(), cfg.seed ^ SEED_RECONSTRUCT)?;
    let mut csv = String::from("field,iteration,error\n");
    let mut max_factor: f64 = 0.0;
    let mut worst_final: f64 = 0.0;
    let mut first_ratio: f64 = 0.0;
    let mut kept = Vec::new();
    for (n, r) in raw.iter().enumerate() {
        let f = PwField::synthesize(h, space.project(h, &r.spectrum));
        kept.push(f.norm(h));
        let c = frame.analyze(h, &f, &format!("f{n}"));
        let (_, errs) = reconstruct(frame, h, &space, &c, cfg.n_iter, Some(&f.spectrum))?;
        for (i, e) in errs.iter().enumerate() {
            let _ = writeln!(csv, "{n},{i},{e:.6e}");
        }
        let rr = reconstruction_report(errs, FACTOR_FLOOR);
        first_ratio = first_ratio.max(rr.factors[0]);
        max_factor = max_factor.max(rr.max_factor);
        worst_final = worst_final.max(rr.final_error);
        rep.metric(&format!("f{n}_errors"), &rr.errors);
    }
    rep.metric("kept_norm_fraction", kept);
    let rho = power_iteration(frame, h, &space, &raw[0].spectrum, 20);
    let bound = cfg.delta + FRAME_TOL;
    rep.metric("max_factor", max_factor);
    rep.metric("first_ratio", first_ratio);
    rep.metric("power_iteration", rho);
    rep.metric("final_error", worst_final);
    rep.verdict("contraction", max_factor <= bound);
    rep.verdict("converged", worst_final < RECONSTRUCTION_TOL);
    rep.verdict("power_iteration", rho <= bound && first_ratio <= rho + FRAME_TOL);

    let zero = frame.analyze(h, &PwField::zeros(h), "0");
    let (z, _) = reconstruct(frame, h, &space, &zero, 3, None)?;
    rep.verdict("zero_in_zero_out", z.norm_sqr(&h.sgrid) == 0.0);
    rep.table("reconstruct_errors.csv", csv);
    Ok(rep)
}

fn besov_csv(r: &EquivalenceReport) -> Result<String> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

fn equivalence_on(hft: &Hft, frame: &Frame, cfg: &ExperimentConfig, alpha: f64, q: Exponent) -> Result<EquivalenceReport> {
    let fam: Vec<(String, PwField)> = dilation_family(hft, 5, frame.omega(), cfg.seed ^ SEED_BESOV)?
        .into_iter()
        .enumerate()
        .map(|(m, f)| (format!("f{m}"), f))
        .collect();
    equivalence_report(hft, &fam, &BesovParams::new(alpha, q, cfg.j_max)?, frame)
}

pub fn besov(ctx: &mut Context) -> Result<Report> {
    ctx.frame()?;
    let frame = ctx.frame.as_ref().expect("built");
    let h = &ctx.hft;
    let cfg = &ctx.cfg;
    let mut rep = Report::new("besov", cfg);
    ctx.note_frame(&mut rep);
    let main = equivalence_on(h, frame, cfg, cfg.alpha, cfg.q)?;
    rep.metric("c_empirical", main.c_empirical);
    rep.metric("ratio_ranges", main.ranges);
    rep.metric("rows", &main.rows);
    rep.verdict("bounded_ratios", main.pass);

    let fine_cfg = cfg.refined();
    let fine_h = build_hft(&fine_cfg)?;
    let fine_frame = Frame::build(&fine_h, &frame.params)?;
    let fine = equivalence_on(&fine_h, &fine_frame, cfg, cfg.alpha, cfg.q)?;
    let drift = constant_drift(&main, &fine);
    rep.metric("c_empirical_refined", fine.c_empirical);
    rep.metric("refined_grid", json!({"n_r": fine_cfg.n_r, "n_theta": fine_cfg.n_theta, "n_lambda": fine_cfg.n_lambda, "n_b": fine_cfg.n_b}));
    rep.metric("c_drift", drift);
    rep.verdict("stable_under_refinement", drift < BESOV_DRIFT_TOL);

    let deg = equivalence_on(h, frame, cfg, 0.0, Exponent::Two)?;
    let lp_err = deg.rows.iter().map(|r| (r.lp / r.l2 - 1.0).abs()).fold(0.0, f64::max);
    let (lo, hi) = ((1.0 - cfg.delta).sqrt() - FRAME_TOL, (1.0 + cfg.delta).sqrt() + FRAME_TOL);
    let fr: Vec<f64> = deg.rows.iter().map(|r| r.frame / r.l2).collect();
    rep.metric("alpha0_lp_rel_err", lp_err);
    rep.metric("alpha0_frame_over_l2", &fr);
    rep.verdict("alpha0_lp_is_l2", lp_err <= 1e-6);
    rep.verdict("alpha0_frame_near_l2", fr.iter().all(|&v| v >= lo && v <= hi));

    rep.table("besov.csv", besov_csv(&main)?);
    rep.table("besov_refined.csv", besov_csv(&fine)?);
    rep.table("besov_alpha0.csv", besov_csv(&deg)?);
    Ok(rep)
}

pub fn decay(ctx: &mut Context) -> Result<Report> {
    ctx.frame()?;
    let frame = ctx.frame.as_ref().expect("built");
    let h = &ctx.hft;
    let cfg = &ctx.cfg;
    let mut rep = Report::new("decay", cfg);
    ctx.note_frame(&mut rep);

    let purity = band_purity(frame, h);
    let leak = purity.iter().map(|p| p.max_leakage).fold(0.0, f64::max);
    rep.metric("purity", &purity);
    rep.verdict("band_purity", leak <= 1e-10 && purity.iter().all(|p| p.min_norm > 0.0 && p.max_norm.is_finite()));

    let radii = decay_radii(h.grid.r_max);
    let mut csv = format!("j,r,sup,weighted_n0,weighted_n{},envelope\n", cfg.n_weight);
    let mut trunc_csv = String::from("j,r,weighted,weighted_extended\n");
    let mut finite = true;
    let mut bounded = true;
    let mut stable = true;
    let mut constants = Vec::new();
    let mut changes = Vec::new();
    for j in 0..frame.bands.len() {
        let a = frame.central_atom(j);
        let spec = frame.atom_spectrum(h, j, a);
        let p0 = decay_profile(h, &spec, 0, &radii)?;
        let pn = decay_profile(h, &spec, cfg.n_weight, &radii)?;
        for (x, y) in p0.iter().zip(&pn) {
            let _ = writeln!(csv, "{j},{},{:.6e},{:.6e},{:.6e},{:.6e}", x.r, x.sup, x.weighted, y.weighted, x.envelope);
        }
        finite &= p0.iter().all(|r| r.weighted.is_finite());
        bounded &= profile_bounded(&pn);
        constants.push(envelope_constant(&p0));
        let t = truncation_stability(frame, h, j, cfg.n_weight)?;
        for ((r, a), b) in t.radii.iter().zip(&t.weighted).zip(&t.weighted_extended) {
            let _ = writeln!(trunc_csv, "{j},{r},{a:.9e},{b:.9e}");
        }
        stable &= t.pass;
        changes.push(t.max_rel_change);
    }
    rep.metric("envelope_constants", constants);
    rep.metric("truncation_changes", changes);
    rep.verdict("n0_finite", finite);
    rep.verdict("weighted_bounded", bounded);
    rep.verdict("truncation_stable", stable);
    rep.table("decay.csv", csv);
    rep.table("truncation.csv", trunc_csv);
    Ok(rep)
}
