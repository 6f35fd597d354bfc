//! Thin wrapper over `gauss-quad`: Gauss-Legendre nodes mapped to an interval,
//! sorted ascending.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// `n`-point Gauss-Legendre rule on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n).expect("quadrature order must be positive");
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    pairs
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .unzip()
}

/// Integrate `f` over `[a, b]` with an `n`-point rule.
pub fn integrate<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, mut f: F) -> f64 {
    let (x, w) = gauss_legendre(n, a, b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}
