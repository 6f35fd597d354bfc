//! Seeded band-limited test fields.
//!
//! Every field is a sum of wave packets: a Gaussian λ-envelope at least five
//! widths inside the requested band (so the hard cut-off is invisible at the
//! 1e-5 level), times a few low angular modes
//! whose coefficients vary linearly in λ. Spectra are built in the angular-mode
//! domain so that nothing is lost to mode truncation.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::hft::Hft;
use crate::spectral::PwField;

#[derive(Debug, Clone)]
pub struct Packet {
    pub center: f64,
    pub width: f64,
    /// Spectrum vanishes outside `[lo, hi]`.
    pub lo: f64,
    pub hi: f64,
    /// `(m, a_m, b_m)`: the mode-`m` coefficient is `a_m + b_m (λ - center)/width`.
    pub coeffs: Vec<(i64, Complex64, Complex64)>,
}

impl Packet {
    pub fn envelope(&self, lambda: f64) -> f64 {
        if lambda < self.lo || lambda > self.hi {
            return 0.0;
        }
        let z = (lambda - self.center) / self.width;
        (-0.5 * z * z).exp()
    }
}

/// Mode array of a sum of packets.
pub fn packets_to_modes(hft: &Hft, packets: &[Packet]) -> Vec<Complex64> {
    let width = hft.mode_width();
    let mm = hft.m_max as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); hft.sgrid.n_lambda() * width];
    for p in packets {
        for (i, &l) in hft.sgrid.lambdas.iter().enumerate() {
            let e = p.envelope(l);
            if e == 0.0 {
                continue;
            }
            let t = (l - p.center) / p.width;
            for &(m, a, b) in &p.coeffs {
                if m.abs() <= mm {
                    out[i * width + (m + mm) as usize] += (a + b * t) * e;
                }
            }
        }
    }
    out
}

pub fn packets_field(hft: &Hft, packets: &[Packet]) -> PwField {
    PwField::synthesize(hft, hft.modes_to_spectrum(&packets_to_modes(hft, packets)))
}

fn normal_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random packet with spectrum in `[lo, hi]`, centered near the middle. The
/// lower edge only constrains the width when `lo > 0`.
pub fn random_packet(rng: &mut ChaCha8Rng, lo: f64, hi: f64, max_mode: i64) -> Packet {
    let span = hi - lo;
    let center = lo + span * (0.5 + rng.gen_range(-0.15..=0.15));
    let room = if lo > 0.0 { (center - lo).min(hi - center) } else { hi - center };
    let width = rng.gen_range(0.6..=1.0) * (room / 5.0).min(0.8);
    let coeffs = (-max_mode..=max_mode)
        .map(|m| {
            let s = 1.0 / (1.0 + m.abs() as f64);
            (m, normal_c(rng) * s, normal_c(rng) * (0.3 * s))
        })
        .collect();
    Packet {
        center,
        width,
        lo,
        hi,
        coeffs,
    }
}

/// `n` random fields with spectrum in `[lo, hi]`, normalized to unit
/// Plancherel norm. Fields of negligible norm are redrawn.
pub fn random_pw_fields(hft: &Hft, n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<PwField>> {
    if !(hi > lo && lo >= 0.0) || hi > hft.sgrid.lambda_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "test band [{lo}, {hi}] must lie in [0, Λ_max = {}]",
            hft.sgrid.lambda_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 10 * n + 10 {
            return Err(Error::Degenerate(format!("band [{lo}, {hi}] keeps yielding null fields")));
        }
        let k = rng.gen_range(1..=3);
        let packets: Vec<Packet> = (0..k).map(|_| random_packet(&mut rng, lo, hi, 4)).collect();
        let f = packets_field(hft, &packets);
        let nrm = f.norm(hft);
        if nrm < 1e-12 {
            continue;
        }
        out.push(f.scale(Complex64::new(1.0 / nrm, 0.0)));
    }
    Ok(out)
}

/// Dyadic dilation family inside `[0, top]`: field `m` is a packet centered
/// at `2^{m-2}`, the same angular profile for every `m`. Widths are capped at
/// 0.8 so that every member stays localized on the disk, and shrink near the
/// top so that the cut-off at `top` sits five widths out.
pub fn dilation_family(hft: &Hft, n: usize, top: f64, seed: u64) -> Result<Vec<PwField>> {
    if top > hft.sgrid.lambda_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("family top {top} exceeds Λ_max = {}", hft.sgrid.lambda_max)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(i64, Complex64, Complex64)> = (-2i64..=2)
        .map(|m| (m, normal_c(&mut rng) / (1.0 + m.abs() as f64), Complex64::new(0.0, 0.0)))
        .collect();
    (0..n)
        .map(|m| {
            let c = 0.25 * 2f64.powi(m as i32);
            let width = 0.8f64.min((top - c) / 5.0);
            if width <= 0.05 {
                return Err(Error::Domain(format!("dilation member {m} (center {c}) does not fit below {top}")));
            }
            let p = Packet {
                center: c,
                width,
                lo: 0.0,
                hi: top,
                coeffs: coeffs.clone(),
            };
            let f = packets_field(hft, &[p]);
            let nrm = f.norm(hft);
            Ok(f.scale(Complex64::new(1.0 / nrm, 0.0)))
        })
        .collect()
}
