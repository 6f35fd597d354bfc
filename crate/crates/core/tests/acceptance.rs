//! Acceptance suite at the default configuration. Prints one PASS/FAIL line
//! per criterion, exits nonzero if any fails. Runs without the libtest
//! harness so that the lines always reach the terminal.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use hypframes::config::ExperimentConfig;
use hypframes::experiments::{self, Context};
use hypframes::fields::random_pw_fields;
use hypframes::filters::FilterBank;
use hypframes::frames::rate_radius;
use hypframes::hft::{Hft, SpatialField, SpectralField};
use hypframes::lattice::{build_lattice, verify_lattice};
use hypframes::report::Report;
use hypframes::spectral::{
    apply_multiplier, best_approximation, bernstein_check, l2_norm, riesz_identity_check, sobolev_norm, Multiplier,
    PwField,
};

type Outcome = hypframes::Result<(bool, String)>;

fn f(r: &Report, key: &str) -> f64 {
    r.metrics.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn plancherel(ctx: &mut Context) -> Outcome {
    let r = experiments::run("plancherel", ctx)?;
    let norm = f(&r, "max_norm_rel_err");
    let oracle = f(&r, "max_oracle_err");
    Ok((norm <= 1e-3 && oracle <= 1e-5, format!("norm rel err {norm:.2e}, oracle err {oracle:.2e}")))
}

fn calderon(hft: &Hft) -> Outcome {
    let bank = FilterBank::new(3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let l = rng.gen_range(0.0..=bank.top());
        worst = worst.max((bank.calderon_sum(l) - 1.0).abs());
    }
    let mut split: f64 = 0.0;
    for g in random_pw_fields(hft, 10, 0.0, bank.top(), 22)? {
        let total = l2_norm(hft, &g).powi(2);
        let mut parts = 0.0;
        for j in bank.bands() {
            let fj = apply_multiplier(hft, &Multiplier::filter(FilterBank::new(3)?, j), &g)?;
            parts += l2_norm(hft, &fj).powi(2);
        }
        split = split.max((parts / total - 1.0).abs());
    }
    Ok((worst <= 1e-15 && split <= 1e-6, format!("identity err {worst:.1e}, Parseval split err {split:.1e}")))
}

fn bernstein_jackson(hft: &Hft) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, (&omega, n)) in [2.0, 4.0, 8.0].iter().zip([17, 17, 16]).enumerate() {
        for g in random_pw_fields(hft, n, 0.0, omega, 300 + k as u64)? {
            for s in [0.5, 1.0, 2.0] {
                worst = worst.max(bernstein_check(hft, omega, &g, s)?.ratio);
            }
            count += 1;
        }
    }
    // smooth suite: the radial family e^{-p cosh r}
    let mut jackson_ok = true;
    let mut slack = f64::INFINITY;
    for p in [1.0, 2.0, 4.0] {
        let u = SpatialField::from_fn(&hft.grid, |x| (-p * x.radius().cosh()).exp());
        let spec = hft.forward(&u);
        let lap = sobolev_norm(hft, &spec, 2.0)?;
        for omega in [2.0, 4.0, 8.0] {
            let e = best_approximation(hft, omega, &spec);
            let bound = lap / (omega * omega);
            jackson_ok &= e <= bound;
            slack = slack.min(bound / e.max(f64::MIN_POSITIVE));
        }
    }
    Ok((
        count == 50 && worst <= 1.0 + 1e-6 && jackson_ok,
        format!("{count} fields, max Bernstein ratio {worst:.6}, min Jackson bound/E {slack:.2e}"),
    ))
}

/// Fields concentrated on one λ node, with `ω` at that node: there the
/// scalar remainder sits exactly at its bound.
fn riesz(hft: &Hft) -> Outcome {
    let sg = &hft.sgrid;
    let mut monotone = true;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for target in [1.0, 3.0, 6.0, 10.0] {
        let i = sg.lambdas.iter().position(|&l| l >= target).expect("node in range");
        let mut spec = SpectralField::zeros(sg);
        for q in 0..sg.n_b {
            let b = sg.boundary_angle(q);
            spec.values[i * sg.n_b + q] = Complex64::new(1.0 + 0.4 * b.cos(), 0.2 * (3.0 * b).sin());
        }
        let g = PwField::synthesize(hft, spec);
        let omega = sg.lambdas[i];
        let mut last = f64::INFINITY;
        for k in [8, 16, 32, 64] {
            let rep = riesz_identity_check(hft, omega, &g, k)?;
            monotone &= rep.residual < last;
            last = rep.residual;
            let ratio = rep.residual / rep.tail_bound;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok((
        monotone && lo >= 0.5 && hi <= 2.0,
        format!("monotone {monotone}, residual/bound in [{lo:.4}, {hi:.4}]"),
    ))
}

fn frame_bounds(ctx: &mut Context) -> Outcome {
    let r = experiments::run("frame-bounds", ctx)?;
    let (lo, hi) = (f(&r, "min_ratio"), f(&r, "max_ratio"));
    let bands = r.metrics["per_band"].as_array().cloned().unwrap_or_default();
    let per_band = bands.len() == 4
        && bands.iter().all(|b| {
            let (l, h) = (b["min_ratio"].as_f64().unwrap_or(0.0), b["max_ratio"].as_f64().unwrap_or(9.0));
            l >= 0.45 && h <= 1.55
        });
    Ok((
        lo >= 0.45 && hi <= 1.55 && per_band,
        format!("a0 {}, ratios [{lo:.4}, {hi:.4}], per band ok {per_band}", f(&r, "a0")),
    ))
}

fn decay(ctx: &mut Context) -> Outcome {
    let r = experiments::run("decay", ctx)?;
    let leak = r.metrics["purity"]
        .as_array()
        .map(|v| v.iter().filter_map(|b| b["max_leakage"].as_f64()).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    let trunc = r.metrics["truncation_changes"]
        .as_array()
        .map(|v| v.iter().filter_map(Value::as_f64).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    let bounded = r.verdicts.get("weighted_bounded").copied().unwrap_or(false);
    Ok((
        leak <= 1e-10 && bounded && trunc < 0.05,
        format!("max leakage {leak:.1e}, N=2 bounded {bounded}, truncation change {trunc:.2e}"),
    ))
}

fn reconstruction(ctx: &mut Context) -> Outcome {
    let r = experiments::run("reconstruct", ctx)?;
    let factor = f(&r, "max_factor");
    let err = f(&r, "final_error");
    let delta = ctx.cfg.delta;
    Ok((
        factor <= delta + 0.05 && err < 1e-6 && ctx.cfg.n_iter == 30,
        format!("max factor {factor:.4}, error after {} iterations {err:.2e}", ctx.cfg.n_iter),
    ))
}

fn besov(ctx: &mut Context) -> Outcome {
    let r = experiments::run("besov", ctx)?;
    let c = f(&r, "c_empirical");
    let drift = f(&r, "c_drift");
    let lp = f(&r, "alpha0_lp_rel_err");
    let frame: Vec<f64> = r.metrics["alpha0_frame_over_l2"]
        .as_array()
        .map(|v| v.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let (flo, fhi) = (0.5f64.sqrt() - 0.05, 1.5f64.sqrt() + 0.05);
    let frame_ok = frame.len() == 5 && frame.iter().all(|&x| x >= flo && x <= fhi);
    let bounded = r.verdicts.get("bounded_ratios").copied().unwrap_or(false);
    Ok((
        bounded && drift < 0.1 && lp <= 1e-6 && frame_ok,
        format!("C {c:.4}, drift {:.2}%, α=0 LP err {lp:.1e}, frame/‖f‖ ok {frame_ok}", 100.0 * drift),
    ))
}

fn lattices(ctx: &mut Context) -> Outcome {
    let a0 = ctx.frame()?.params.a0;
    let cfg = ctx.cfg.clone();
    let mut radii: Vec<f64> = (0..=cfg.j_max).map(|j| rate_radius(j, cfg.delta, a0)).collect();
    radii.push(cfg.lambda_pu);
    let mut ok = true;
    let mut worst_mult = 0;
    for (k, &r) in radii.iter().enumerate() {
        let lat = build_lattice(r, &ctx.hft.grid, cfg.seed + k as u64)?;
        let chk = verify_lattice(&lat, &ctx.hft.grid);
        ok &= chk.pass();
        worst_mult = worst_mult.max(chk.multiplicity);
    }
    Ok((ok, format!("{} lattices, max multiplicity {worst_mult}", radii.len())))
}

fn main() {
    let cfg = ExperimentConfig {
        output_dir: std::env::temp_dir().join("hypframes-acceptance"),
        ..ExperimentConfig::default()
    };
    let t = Instant::now();
    let mut ctx = match Context::new(&cfg) {
        Ok(c) => c,
        Err(e) => {
            println!("setup FAIL: {e}");
            std::process::exit(1);
        }
    };
    let setup = t.elapsed().as_secs_f64();
    println!("transform setup {setup:.1}s (counted in criterion 1)");

    type Runner = fn(&mut Context) -> Outcome;
    let criteria: [(&str, f64, Runner); 9] = [
        ("1 plancherel", 120.0, plancherel),
        ("2 calderon", 60.0, |c| calderon(&c.hft)),
        ("3 bernstein-jackson", 120.0, |c| bernstein_jackson(&c.hft)),
        ("4 riesz", 120.0, |c| riesz(&c.hft)),
        // the first frame user pays for a0 calibration and the frame build
        ("5 frame-bounds", 600.0, frame_bounds),
        ("6 purity-decay", 300.0, decay),
        ("7 reconstruction", 300.0, reconstruction),
        ("8 besov", 300.0, besov),
        ("9 lattices", 60.0, lattices),
    ];
    let mut failures = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run(&mut ctx);
        let mut secs = t.elapsed().as_secs_f64();
        if k == 0 {
            secs += setup;
        }
        let in_time = secs < *limit;
        let (pass, detail) = match out {
            Ok((p, d)) => (p && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {name:<20} {detail}; {secs:.1}s (limit {limit:.0}s)",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
