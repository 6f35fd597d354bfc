//! Dyadic Littlewood-Paley filters.
//!
//! `g` is 1 on `[0,1]`, 0 on `[2,∞)` and a smooth monotone step in between;
//! `Q(s) = g(s) - g(2s)`, `F_0 = √g`, `F_j(λ) = √Q(λ/2^j)`. The squares
//! telescope: `Σ_{j≤J} F_j² = g(λ/2^J)`.

use serde::Serialize;

use crate::error::{Error, Result};

#[inline]
fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step `η(t)`: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = h(t);
        a / (a + h(1.0 - t))
    }
}

/// `log η(t)`, finite for every `t > 0` even where `η` underflows.
pub fn log_smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        f64::NEG_INFINITY
    } else if t >= 1.0 {
        0.0
    } else {
        let a = -1.0 / t;
        let b = -1.0 / (1.0 - t);
        let m = a.max(b);
        a - (m + ((a - m).exp() + (b - m).exp()).ln())
    }
}

/// `g(s)`.
pub fn g(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let a = h(2.0 - s);
        a / (a + h(s - 1.0))
    }
}

/// `1 - g(s)`, without cancellation.
fn g_complement(s: f64) -> f64 {
    if s <= 1.0 {
        0.0
    } else if s >= 2.0 {
        1.0
    } else {
        let b = h(s - 1.0);
        b / (h(2.0 - s) + b)
    }
}

/// `Q(s) = g(s) - g(2s)`; on `[1/2, 1]` this is `1 - g(2s)`, on `[1, 2]` it is `g(s)`.
pub fn q(s: f64) -> f64 {
    if s <= 0.5 || s >= 2.0 {
        0.0
    } else if s <= 1.0 {
        g_complement(2.0 * s)
    } else {
        g(s)
    }
}

/// Band `[2^{j-1}, 2^{j+1}]` of `F_j` (`[0, 2]` for `j = 0`).
pub fn band_of(j: i64) -> Result<(f64, f64)> {
    if j < 0 {
        return Err(Error::Domain(format!("band index must be nonnegative, got {j}")));
    }
    if j == 0 {
        Ok((0.0, 2.0))
    } else {
        Ok((2f64.powi(j as i32 - 1), 2f64.powi(j as i32 + 1)))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FilterBank {
    pub j_max: usize,
}

pub fn make_filter_bank(j_max: usize) -> Result<FilterBank> {
    FilterBank::new(j_max)
}

impl FilterBank {
    pub fn new(j_max: usize) -> Result<Self> {
        if j_max < 1 {
            return Err(Error::Domain("J_max must be at least 1".into()));
        }
        Ok(FilterBank { j_max })
    }

    pub fn g(&self, s: f64) -> f64 {
        g(s)
    }

    pub fn q(&self, s: f64) -> f64 {
        q(s)
    }

    /// `F_j(λ)`.
    pub fn f(&self, j: usize, lambda: f64) -> f64 {
        if j == 0 {
            g(lambda).sqrt()
        } else {
            q(lambda / 2f64.powi(j as i32)).sqrt()
        }
    }

    /// `F_j(λ)²` without the square root round trip.
    pub fn f_sqr(&self, j: usize, lambda: f64) -> f64 {
        if j == 0 {
            g(lambda)
        } else {
            q(lambda / 2f64.powi(j as i32))
        }
    }

    pub fn band(&self, j: usize) -> (f64, f64) {
        band_of(j as i64).expect("nonnegative band index")
    }

    pub fn bands(&self) -> impl Iterator<Item = usize> {
        0..=self.j_max
    }

    /// Top of the resolved range, `2^{J_max}`.
    pub fn top(&self) -> f64 {
        2f64.powi(self.j_max as i32)
    }

    /// `Σ_j F_j(λ)²`.
    pub fn calderon_sum(&self, lambda: f64) -> f64 {
        self.bands().map(|j| self.f(j, lambda).powi(2)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn g_and_q_examples() {
        assert_eq!(g(0.5), 1.0);
        assert_eq!(g(3.0), 0.0);
        assert_eq!(q(1.0), 1.0);
        assert_eq!(g(1.0) - g(2.0), 1.0);
        assert!((g(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_is_monotone_and_bounded() {
        let mut prev = 1.0;
        for i in 0..=4000 {
            let s = 1.0 + i as f64 / 4000.0;
            let v = g(s);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn q_support_and_range() {
        for i in 0..=6000 {
            let s = i as f64 / 1000.0;
            let v = q(s);
            assert!((0.0..=1.0).contains(&v));
            if !(0.5..=2.0).contains(&s) {
                assert_eq!(v, 0.0);
            }
            let direct = g(s) - g(2.0 * s);
            assert!((v - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn calderon_identity_random() {
        let bank = make_filter_bank(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let l = rng.gen_range(0.0..8.0);
            assert!((bank.calderon_sum(l) - 1.0).abs() <= 1e-15, "λ={l}");
        }
        // above the top the sum is g(λ/2^J)
        assert!((bank.calderon_sum(12.0) - g(1.5)).abs() < 1e-15);
    }

    #[test]
    fn bands() {
        assert_eq!(band_of(1).unwrap(), (1.0, 4.0));
        assert_eq!(band_of(0).unwrap(), (0.0, 2.0));
        assert!(band_of(-1).is_err());
        let bank = FilterBank::new(4).unwrap();
        for j in 0..=4 {
            let (lo, hi) = bank.band(j);
            for i in 0..=2000 {
                let l = i as f64 * 0.02;
                if (j > 0 && l <= lo) || l >= hi {
                    assert_eq!(bank.f(j, l), 0.0, "j={j} λ={l}");
                }
            }
        }
        // only neighbouring bands overlap
        for j in 0..4 {
            for k in j + 2..=4 {
                assert!(bank.band(j).1 <= bank.band(k).0);
            }
        }
        assert!(FilterBank::new(0).is_err());
    }

    #[test]
    fn derivatives_bounded() {
        // fourth finite difference of g stays moderate on a fine grid
        let hstep = 1e-2;
        let mut worst: f64 = 0.0;
        for i in 0..=100 {
            let s = 1.0 + i as f64 / 100.0;
            let d4 = (g(s + 2.0 * hstep) - 4.0 * g(s + hstep) + 6.0 * g(s) - 4.0 * g(s - hstep) + g(s - 2.0 * hstep))
                / hstep.powi(4);
            worst = worst.max(d4.abs());
        }
        assert!(worst.is_finite() && worst < 1e4, "{worst}");
    }

    #[test]
    fn log_step_agrees() {
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!((log_smooth_step(t).exp() - smooth_step(t)).abs() < 1e-15);
        }
        assert!(log_smooth_step(1e-4).is_finite());
        assert_eq!(smooth_step(1e-4), 0.0);
    }
}
