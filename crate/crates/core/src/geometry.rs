//! Poincaré disk model of the hyperbolic plane (curvature -1).
//!
//! Metric `4|dz|²/(1-|z|²)²`, geodesic polar coordinates `z = tanh(r/2) e^{iθ}`,
//! area element `sinh r dr dθ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub u: f64,
    pub v: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { u: 0.0, v: 0.0 };

    pub fn new(u: f64, v: f64) -> Result<Self> {
        let p = Point { u, v };
        if !(u.is_finite() && v.is_finite()) || p.norm_sqr() >= 1.0 {
            return Err(Error::Domain(format!("({u}, {v}) is not inside the unit disk")));
        }
        Ok(p)
    }

    /// Point at geodesic polar coordinates `(r, θ)`.
    pub fn from_polar(r: f64, theta: f64) -> Self {
        let rho = (0.5 * r).tanh();
        Point {
            u: rho * theta.cos(),
            v: rho * theta.sin(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u * self.u + self.v * self.v
    }

    /// Hyperbolic distance to the origin.
    pub fn radius(&self) -> f64 {
        2.0 * self.norm_sqr().sqrt().atanh()
    }

    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    fn from_complex(z: Complex64) -> Self {
        Point { u: z.re, v: z.im }
    }
}

fn check(p: &Point) -> Result<()> {
    if !(p.u.is_finite() && p.v.is_finite()) || p.norm_sqr() >= 1.0 {
        return Err(Error::Domain(format!("({}, {}) is not inside the unit disk", p.u, p.v)));
    }
    Ok(())
}

/// Hyperbolic distance, `arccosh(1 + 2|p-q|²/((1-|p|²)(1-|q|²)))`.
pub fn hyp_distance(p: Point, q: Point) -> Result<f64> {
    check(&p)?;
    check(&q)?;
    Ok(distance_unchecked(p, q))
}

/// Same formula written as `2 asinh(...)`, which keeps full relative accuracy
/// for nearby points.
#[inline]
pub(crate) fn distance_unchecked(p: Point, q: Point) -> f64 {
    let du = p.u - q.u;
    let dv = p.v - q.v;
    let num = du * du + dv * dv;
    let den = (1.0 - p.norm_sqr()) * (1.0 - q.norm_sqr());
    2.0 * (num / den).sqrt().asinh()
}

/// Area of a geodesic ball, `2π(cosh R - 1)`.
pub fn ball_volume(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("ball radius must be nonnegative, got {r}")));
    }
    // 2π(cosh R - 1) = 4π sinh²(R/2), no cancellation near 0
    let s = (0.5 * r).sinh();
    Ok(4.0 * PI * s * s)
}

/// Orientation-preserving isometry `z ↦ (a z + b)/(conj(b) z + conj(a))`
/// with `|a|² - |b|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    a: Complex64,
    b: Complex64,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// Rotate by `angle` about the origin, then translate the origin to `w`.
    pub fn new(w: Point, angle: f64) -> Result<Self> {
        check(&w)?;
        let s = (1.0 - w.norm_sqr()).sqrt().recip();
        let half = Complex64::from_polar(1.0, 0.5 * angle);
        Ok(Isometry {
            a: half * s,
            b: w.to_complex() * half.conj() * s,
        })
    }

    pub fn translation(w: Point) -> Result<Self> {
        Self::new(w, 0.0)
    }

    pub fn rotation(angle: f64) -> Self {
        let half = Complex64::from_polar(1.0, 0.5 * angle);
        Isometry {
            a: half,
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        // renormalize so |a|²-|b|² stays 1 under repeated composition
        let det = (a.norm_sqr() - b.norm_sqr()).sqrt();
        Isometry { a: a / det, b: b / det }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// Image of the origin.
    pub fn offset(&self) -> Point {
        Point::from_complex(self.b / self.a.conj())
    }

    pub fn angle(&self) -> f64 {
        2.0 * self.a.arg()
    }

    pub fn apply(&self, p: Point) -> Point {
        let z = p.to_complex();
        let w = (self.a * z + self.b) / (self.b.conj() * z + self.a.conj());
        Point::from_complex(w)
    }
}

pub fn apply_isometry(t: &Isometry, p: Point) -> Point {
    t.apply(p)
}

/// Geodesic polar product grid on the ball of radius `r_max`.
///
/// Radial nodes are Gauss-Legendre in `r` with weights multiplied by `sinh r`;
/// angles are `2πl/n_θ`. Node `i*n_θ + l` sits on ring `i` at angle `l`.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub radii: Vec<f64>,
    /// `w_i sinh r_i` (radial measure, without the angular factor).
    pub radial_weights: Vec<f64>,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

pub fn build_spatial_grid(r_max: f64, n_r: usize, n_theta: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(r_max, n_r, n_theta)
}

impl SpatialGrid {
    pub fn new(r_max: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Domain(format!("R_max must be positive, got {r_max}")));
        }
        if n_r < 8 || n_theta < 8 {
            return Err(Error::Domain(format!(
                "grid resolution must be at least 8x8, got {n_r}x{n_theta}"
            )));
        }
        if r_max > 300.0 {
            return Err(Error::Domain("R_max above 300 overflows the disk coordinates".into()));
        }
        let (radii, w) = gauss_legendre(n_r, 0.0, r_max);
        let radial_weights: Vec<f64> = radii.iter().zip(&w).map(|(r, w)| w * r.sinh()).collect();
        let dtheta = 2.0 * PI / n_theta as f64;
        let mut nodes = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        for (i, &r) in radii.iter().enumerate() {
            for l in 0..n_theta {
                nodes.push(Point::from_polar(r, l as f64 * dtheta));
                weights.push(radial_weights[i] * dtheta);
            }
        }
        Ok(SpatialGrid {
            r_max,
            n_r,
            n_theta,
            radii,
            radial_weights,
            nodes,
            weights,
        })
    }

    /// Same grid out to `2 R_max`: the original rings are kept exactly and
    /// `n_r` more Gauss-Legendre rings fill `[R_max, 2 R_max]`.
    pub fn extended(&self) -> Result<SpatialGrid> {
        let r2 = 2.0 * self.r_max;
        if r2 > 300.0 {
            return Err(Error::Domain("R_max above 300 overflows the disk coordinates".into()));
        }
        let (outer, w) = gauss_legendre(self.n_r, self.r_max, r2);
        let mut radii = self.radii.clone();
        let mut radial_weights = self.radial_weights.clone();
        radii.extend_from_slice(&outer);
        radial_weights.extend(outer.iter().zip(&w).map(|(r, w)| w * r.sinh()));
        let dtheta = self.dtheta();
        let mut nodes = self.nodes.clone();
        let mut weights = self.weights.clone();
        for (i, &r) in outer.iter().enumerate() {
            for l in 0..self.n_theta {
                nodes.push(Point::from_polar(r, l as f64 * dtheta));
                weights.push(radial_weights[self.n_r + i] * dtheta);
            }
        }
        Ok(SpatialGrid {
            r_max: r2,
            n_r: 2 * self.n_r,
            n_theta: self.n_theta,
            radii,
            radial_weights,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn ring(&self, idx: usize) -> usize {
        idx / self.n_theta
    }

    pub fn node_radius(&self, idx: usize) -> f64 {
        self.radii[idx / self.n_theta]
    }

    pub fn node_angle(&self, idx: usize) -> f64 {
        (idx % self.n_theta) as f64 * self.dtheta()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance_unchecked(self.nodes[i], self.nodes[j])
    }

    /// Visit every node within hyperbolic distance `s` of `center` (closed
    /// ball), passing the node index and its distance.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, center: Point, s: f64, mut f: F) {
        let r0 = center.radius();
        let t0 = center.angle();
        let lo = self.radii.partition_point(|&r| r < r0 - s);
        let hi = self.radii.partition_point(|&r| r <= r0 + s);
        let h = self.dtheta();
        for i in lo..hi {
            let ri = self.radii[i];
            match angular_window(r0, ri, s) {
                None => continue,
                Some(half) if half >= PI => {
                    for l in 0..self.n_theta {
                        let idx = i * self.n_theta + l;
                        let d = distance_unchecked(center, self.nodes[idx]);
                        if d <= s {
                            f(idx, d);
                        }
                    }
                }
                Some(half) => {
                    // a little slack on the window, then the exact test decides
                    let a = ((t0 - half) / h).floor() as i64 - 1;
                    let b = ((t0 + half) / h).ceil() as i64 + 1;
                    let n = self.n_theta as i64;
                    let span = (b - a + 1).min(n);
                    for t in 0..span {
                        let l = (a + t).rem_euclid(n) as usize;
                        let idx = i * self.n_theta + l;
                        let d = distance_unchecked(center, self.nodes[idx]);
                        if d <= s {
                            f(idx, d);
                        }
                    }
                }
            }
        }
    }
}

/// Half-width of the angular interval of the circle of radius `ri` that lies
/// within distance `s` of a point at radius `r0`; `None` if empty.
pub(crate) fn angular_window(r0: f64, ri: f64, s: f64) -> Option<f64> {
    if (ri - r0).abs() > s {
        return None;
    }
    let den = r0.sinh() * ri.sinh();
    if den <= 0.0 {
        return Some(PI);
    }
    let c = (r0.cosh() * ri.cosh() - s.cosh()) / den;
    if c <= -1.0 {
        Some(PI)
    } else if c >= 1.0 {
        // tangent case, keep a hairline window for rounding
        Some(1e-12)
    } else {
        Some(c.acos())
    }
}
