//! r-lattices, disjoint covers, smooth cell weights and a partition of unity,
//! all realized on the nodes of a [`SpatialGrid`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{log_smooth_step, smooth_step};
use crate::geometry::{angular_window, distance_unchecked, Point, SpatialGrid};

/// Grid nodes indexed by ring and angle for radius queries.
pub(crate) struct NodeIndex<'g> {
    grid: &'g SpatialGrid,
    /// Per ring, `(angle index, id)` sorted by angle index.
    rings: Vec<Vec<(usize, usize)>>,
}

impl<'g> NodeIndex<'g> {
    pub(crate) fn new(grid: &'g SpatialGrid) -> Self {
        NodeIndex {
            grid,
            rings: vec![Vec::new(); grid.n_r],
        }
    }

    pub(crate) fn insert(&mut self, node: usize, id: usize) {
        let ring = &mut self.rings[node / self.grid.n_theta];
        let l = node % self.grid.n_theta;
        let pos = ring.partition_point(|&(a, _)| a < l);
        ring.insert(pos, (l, id));
    }

    /// Visit `(id, node, distance)` for every indexed node within `s` of `p`.
    pub(crate) fn for_each_within<F: FnMut(usize, usize, f64)>(&self, p: Point, s: f64, mut f: F) {
        let g = self.grid;
        let r0 = p.radius();
        let t0 = p.angle();
        let lo = g.radii.partition_point(|&r| r < r0 - s);
        let hi = g.radii.partition_point(|&r| r <= r0 + s);
        let n = g.n_theta as i64;
        let h = g.dtheta();
        let mut visit = |ring: usize, entries: &[(usize, usize)]| {
            for &(l, id) in entries {
                let node = ring * g.n_theta + l;
                let d = distance_unchecked(p, g.nodes[node]);
                if d <= s {
                    f(id, node, d);
                }
            }
        };
        for i in lo..hi {
            let list = &self.rings[i];
            if list.is_empty() {
                continue;
            }
            let half = match angular_window(r0, g.radii[i], s) {
                None => continue,
                Some(v) => v,
            };
            let a = ((t0 - half) / h).floor() as i64 - 1;
            let b = ((t0 + half) / h).ceil() as i64 + 1;
            if half >= PI || b - a + 1 >= n {
                visit(i, list);
                continue;
            }
            let a = a.rem_euclid(n) as usize;
            let b = b.rem_euclid(n) as usize;
            let start = list.partition_point(|&(l, _)| l < a);
            if a <= b {
                let end = list.partition_point(|&(l, _)| l <= b);
                visit(i, &list[start..end]);
            } else {
                visit(i, &list[start..]);
                let end = list.partition_point(|&(l, _)| l <= b);
                visit(i, &list[..end]);
            }
        }
    }

    /// Nearest indexed node to `p`, searching outward from `start` radius.
    pub(crate) fn nearest(&self, p: Point, start: f64) -> Option<(usize, usize, f64)> {
        let mut s = start.max(1e-3);
        loop {
            let mut best: Option<(usize, usize, f64)> = None;
            self.for_each_within(p, s, |id, node, d| {
                if best.is_none_or(|(bid, _, bd)| d < bd || (d == bd && id < bid)) {
                    best = Some((id, node, d));
                }
            });
            if best.is_some() {
                return best;
            }
            if s > 4.0 * self.grid.r_max {
                return None;
            }
            s *= 2.0;
        }
    }
}

/// Node visiting order: rings inside-out, each ring rotated by a seeded offset.
fn greedy_order(grid: &SpatialGrid, seed: u64) -> impl Iterator<Item = usize> + '_ {
    let offset = ChaCha8Rng::seed_from_u64(seed).gen_range(0..grid.n_theta);
    (0..grid.n_r).flat_map(move |i| (0..grid.n_theta).map(move |l| i * grid.n_theta + (l + offset) % grid.n_theta))
}

/// Greedy maximal `sep`-separated subset of `candidates` (in order). Every
/// candidate ends up strictly within `sep` of a chosen node.
fn greedy_net<I: Iterator<Item = usize>>(grid: &SpatialGrid, candidates: I, sep: f64) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut index = NodeIndex::new(grid);
    for node in candidates {
        let mut close = false;
        index.for_each_within(grid.nodes[node], sep, |_, _, d| {
            if d < sep {
                close = true;
            }
        });
        if !close {
            index.insert(node, chosen.len());
            chosen.push(node);
        }
    }
    chosen
}

/// `⌊(cosh(5r/4) - 1)/(cosh(r/4) - 1)⌋`: disjoint `r/4` balls around centers
/// that lie in `B(x, r)` all fit inside `B(x, 5r/4)`.
pub fn multiplicity_bound(r: f64) -> usize {
    let s = (0.625 * r).sinh() / (0.125 * r).sinh();
    (s * s).floor() as usize
}

#[derive(Debug, Clone, Serialize)]
pub struct Lattice {
    pub r: f64,
    pub centers: Vec<Point>,
    /// Grid node carrying each center.
    pub center_nodes: Vec<usize>,
    pub multiplicity_bound: usize,
    /// Largest number of balls `B(x_i, r)` containing a single grid node.
    pub multiplicity: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub(crate) fn index<'g>(&self, grid: &'g SpatialGrid) -> NodeIndex<'g> {
        let mut idx = NodeIndex::new(grid);
        for (k, &n) in self.center_nodes.iter().enumerate() {
            idx.insert(n, k);
        }
        idx
    }
}

fn measured_multiplicity(grid: &SpatialGrid, index: &NodeIndex<'_>, r: f64) -> usize {
    let mut worst = 0;
    for &p in &grid.nodes {
        let mut c = 0;
        index.for_each_within(p, r, |_, _, _| c += 1);
        worst = worst.max(c);
    }
    worst
}

/// Greedy `r/2`-separated set of grid nodes covering every node within
/// `R_max - r` of the origin at distance below `r/2`.
pub fn build_lattice(r: f64, grid: &SpatialGrid, seed: u64) -> Result<Lattice> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("lattice radius must be positive, got {r}")));
    }
    if r > grid.r_max {
        return Err(Error::Lattice(format!(
            "radius {r} exceeds the truncation radius {} and admits no center",
            grid.r_max
        )));
    }
    let inner = grid.r_max - r;
    let mut nodes = greedy_net(grid, greedy_order(grid, seed).filter(|&i| grid.node_radius(i) <= inner), 0.5 * r);
    if nodes.is_empty() {
        nodes.push(greedy_order(grid, seed).next().expect("grid has nodes"));
    }
    let centers: Vec<Point> = nodes.iter().map(|&n| grid.nodes[n]).collect();
    let mut lat = Lattice {
        r,
        centers,
        center_nodes: nodes,
        multiplicity_bound: multiplicity_bound(r),
        multiplicity: 0,
    };
    lat.multiplicity = measured_multiplicity(grid, &lat.index(grid), r);
    Ok(lat)
}

#[derive(Debug, Clone, Serialize)]
pub struct Cover {
    pub r: f64,
    /// Cell index of every grid node.
    pub assignment: Vec<usize>,
    /// `|U_k|`.
    pub cell_measures: Vec<f64>,
    /// Nodes of each cell.
    #[serde(skip)]
    pub cells: Vec<Vec<usize>>,
    /// Nodes outside every `B(x_k, r/2)`, given to the nearest center.
    pub uncovered: usize,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.cell_measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_measures.is_empty()
    }
}

/// `U_k = B(x_k, r/2) \ (∪_{j<k} U_j ∪ ∪_{i≠k} B(x_i, r/4))` at node resolution.
pub fn build_cover(lat: &Lattice, grid: &SpatialGrid) -> Result<Cover> {
    if lat.is_empty() {
        return Err(Error::Lattice("empty lattice".into()));
    }
    let index = lat.index(grid);
    let quarter = 0.25 * lat.r;
    let half = 0.5 * lat.r;
    let mut assignment = vec![0usize; grid.len()];
    let mut uncovered = 0;
    for (x, &p) in grid.nodes.iter().enumerate() {
        let mut core: Option<(usize, f64)> = None;
        let mut first: Option<usize> = None;
        index.for_each_within(p, half, |k, _, d| {
            if d < quarter && core.is_none_or(|(ck, cd)| d < cd || (d == cd && k < ck)) {
                core = Some((k, d));
            }
            if first.is_none_or(|f| k < f) {
                first = Some(k);
            }
        });
        assignment[x] = match (core, first) {
            (Some((k, _)), _) => k,
            (None, Some(k)) => k,
            (None, None) => {
                uncovered += 1;
                index.nearest(p, half).map(|(k, _, _)| k).expect("lattice is nonempty")
            }
        };
    }
    let mut cell_measures = vec![0.0; lat.len()];
    let mut cells = vec![Vec::new(); lat.len()];
    for (x, &k) in assignment.iter().enumerate() {
        cell_measures[k] += grid.weights[x];
        cells[k].push(x);
    }
    Ok(Cover {
        r: lat.r,
        assignment,
        cell_measures,
        cells,
        uncovered,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Weights {
    /// `ψ_k(x)` for the cell `k` holding node `x` (ψ of every other cell is 0 there).
    pub psi: Vec<f64>,
    /// `|U_k|_ψ = ∫ ψ_k`.
    pub weighted_measures: Vec<f64>,
    /// `max_k |U_k| / |U_k|_ψ`.
    pub measure_ratio: f64,
    /// Mollification width actually used.
    pub epsilon: f64,
    pub retries: usize,
}

impl Weights {
    pub fn ratio(&self, cov: &Cover, k: usize) -> f64 {
        cov.cell_measures[k] / self.weighted_measures[k]
    }
}

pub const WEIGHT_RETRIES: usize = 40;

fn weights_for(cov: &Cover, grid: &SpatialGrid, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let mut psi = vec![1.0; grid.len()];
    for (x, &p) in grid.nodes.iter().enumerate() {
        let k = cov.assignment[x];
        let mut d_out = f64::INFINITY;
        grid.for_each_within(p, eps, |y, d| {
            if cov.assignment[y] != k && d < d_out {
                d_out = d;
            }
        });
        if d_out.is_finite() {
            psi[x] = smooth_step(d_out / eps);
        }
    }
    let mut wm = vec![0.0; cov.len()];
    for (x, &k) in cov.assignment.iter().enumerate() {
        wm[k] += psi[x] * grid.weights[x];
    }
    (psi, wm)
}

/// `ψ_k(x) = η(dist(x, U_k^c)/ε)`, halving `ε` until
/// `max_k |U_k|/|U_k|_ψ ≤ 1 + δ`.
pub fn build_weights(cov: &Cover, grid: &SpatialGrid, delta: f64, epsilon: f64) -> Result<Weights> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {epsilon}")));
    }
    let mut eps = epsilon;
    let mut worst = (0usize, f64::INFINITY);
    for retry in 0..=WEIGHT_RETRIES {
        let (psi, wm) = weights_for(cov, grid, eps);
        worst = (0, 0.0);
        for (k, (&m, &w)) in cov.cell_measures.iter().zip(&wm).enumerate() {
            let ratio = if w > 0.0 { m / w } else { f64::INFINITY };
            if ratio > worst.1 {
                worst = (k, ratio);
            }
        }
        if worst.1 <= 1.0 + delta {
            return Ok(Weights {
                psi,
                weighted_measures: wm,
                measure_ratio: worst.1.max(1.0),
                epsilon: eps,
                retries: retry,
            });
        }
        eps *= 0.5;
    }
    Err(Error::Weights {
        cell: worst.0,
        target: 1.0 + delta,
        best: worst.1,
        retries: WEIGHT_RETRIES,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionOfUnity {
    pub radius: f64,
    pub centers: Vec<Point>,
    /// Per node, the `(ν, φ_ν(x))` pairs with `φ_ν(x) > 0`.
    #[serde(skip)]
    pub values: Vec<Vec<(usize, f64)>>,
}

impl PartitionOfUnity {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn phi(&self, nu: usize, node: usize) -> f64 {
        self.values[node].iter().find(|(n, _)| *n == nu).map_or(0.0, |&(_, v)| v)
    }
}

/// Bump for `B(y, λ/2)`: 1 on `B(y, λ/4)`, smooth decay to 0 at `λ/2`.
/// Returned as a logarithm so that the far tail does not underflow.
fn log_bump(d: f64, lambda: f64) -> f64 {
    log_smooth_step((0.5 * lambda - d) / (0.25 * lambda))
}

/// `φ_ν = χ_ν / Σ_μ χ_μ` over a `λ`-lattice covering every grid node.
pub fn build_partition_of_unity(lambda: f64, grid: &SpatialGrid, seed: u64) -> Result<PartitionOfUnity> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("partition radius must be positive, got {lambda}")));
    }
    let nodes = greedy_net(grid, greedy_order(grid, seed), 0.5 * lambda);
    let mut index = NodeIndex::new(grid);
    for (nu, &n) in nodes.iter().enumerate() {
        index.insert(n, nu);
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut logs: Vec<(usize, f64)> = Vec::new();
    for (x, &p) in grid.nodes.iter().enumerate() {
        logs.clear();
        index.for_each_within(p, 0.5 * lambda, |nu, _, d| {
            let l = log_bump(d, lambda);
            if l > f64::NEG_INFINITY {
                logs.push((nu, l));
            }
        });
        if logs.is_empty() {
            return Err(Error::CoverGap { node: x });
        }
        logs.sort_by_key(|&(nu, _)| nu);
        let m = logs.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logs.iter().map(|&(_, l)| (l - m).exp()).sum::<f64>().ln();
        let row: Vec<(usize, f64)> = logs
            .iter()
            .map(|&(nu, l)| (nu, (l - lse).exp()))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        values.push(row);
    }
    Ok(PartitionOfUnity {
        radius: lambda,
        centers: nodes.iter().map(|&n| grid.nodes[n]).collect(),
        values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeCheck {
    pub centers: usize,
    pub min_separation: f64,
    /// Largest distance from an interior node to its nearest center.
    pub max_cover_distance: f64,
    pub multiplicity: usize,
    pub multiplicity_bound: usize,
    pub disjoint: bool,
    pub covering: bool,
    pub finite_multiplicity: bool,
}

impl LatticeCheck {
    pub fn pass(&self) -> bool {
        self.disjoint && self.covering && self.finite_multiplicity
    }
}

/// Exhaustive verification of the lattice properties. Pairs are only skipped
/// when their radii alone already separate them by more than the threshold.
pub fn verify_lattice(lat: &Lattice, grid: &SpatialGrid) -> LatticeCheck {
    let r = lat.r;
    let mut order: Vec<usize> = (0..lat.len()).collect();
    let radius: Vec<f64> = lat.centers.iter().map(|p| p.radius()).collect();
    order.sort_by(|&a, &b| radius[a].total_cmp(&radius[b]));
    let sorted_r: Vec<f64> = order.iter().map(|&k| radius[k]).collect();

    let mut min_sep = f64::INFINITY;
    for (a, &ka) in order.iter().enumerate() {
        for &kb in &order[a + 1..] {
            if radius[kb] - radius[ka] > min_sep.min(r) {
                break;
            }
            min_sep = min_sep.min(distance_unchecked(lat.centers[ka], lat.centers[kb]));
        }
    }

    let inner = grid.r_max - r;
    let mut max_cover: f64 = 0.0;
    let mut multiplicity = 0;
    for (x, &p) in grid.nodes.iter().enumerate() {
        let rx = grid.node_radius(x);
        let lo = sorted_r.partition_point(|&v| v < rx - r);
        let hi = sorted_r.partition_point(|&v| v <= rx + r);
        let mut count = 0;
        let mut nearest = f64::INFINITY;
        for &k in &order[lo..hi] {
            let d = distance_unchecked(p, lat.centers[k]);
            nearest = nearest.min(d);
            if d <= r {
                count += 1;
            }
        }
        multiplicity = multiplicity.max(count);
        if rx <= inner {
            if !nearest.is_finite() {
                nearest = lat.centers.iter().map(|&c| distance_unchecked(p, c)).fold(f64::INFINITY, f64::min);
            }
            max_cover = max_cover.max(nearest);
        }
    }
    LatticeCheck {
        centers: lat.len(),
        min_separation: min_sep,
        max_cover_distance: max_cover,
        multiplicity,
        multiplicity_bound: lat.multiplicity_bound,
        disjoint: min_sep >= 0.5 * r,
        covering: max_cover <= 0.5 * r,
        finite_multiplicity: multiplicity <= lat.multiplicity_bound,
    }
}

#[derive(Debug, Serialize)]
pub struct LatticeDump<'a> {
    pub r: f64,
    pub centers: &'a [Point],
    pub assignment: &'a [usize],
    pub cell_measures: &'a [f64],
    pub weighted_measures: &'a [f64],
    pub measure_ratio: f64,
    pub epsilon: f64,
    pub uncovered: usize,
}

/// JSON dump of a lattice with its cover and weights.
pub fn dump_json<W: std::io::Write>(lat: &Lattice, cov: &Cover, wts: &Weights, w: W) -> Result<()> {
    let dump = LatticeDump {
        r: lat.r,
        centers: &lat.centers,
        assignment: &cov.assignment,
        cell_measures: &cov.cell_measures,
        weighted_measures: &wts.weighted_measures,
        measure_ratio: wts.measure_ratio,
        epsilon: wts.epsilon,
        uncovered: cov.uncovered,
    };
    serde_json::to_writer(w, &dump)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(3.0, 40, 48).unwrap()
    }

    #[test]
    fn single_center_when_r_is_r_max() {
        let g = SpatialGrid::new(1.0, 8, 8).unwrap();
        let lat = build_lattice(1.0, &g, 0).unwrap();
        assert_eq!(lat.len(), 1);
        assert!(lat.centers[0].radius() < 0.1);
        assert!(build_lattice(1.5, &g, 0).is_err());
        assert!(build_lattice(0.0, &g, 0).is_err());
    }

    #[test]
    fn lattice_properties_brute_force() {
        let g = grid();
        for &r in &[0.3, 0.6, 1.2] {
            let lat = build_lattice(r, &g, 7).unwrap();
            let chk = verify_lattice(&lat, &g);
            assert!(chk.pass(), "{chk:?}");
            // independent all-pairs scan
            for a in 0..lat.len() {
                for b in a + 1..lat.len() {
                    assert!(distance_unchecked(lat.centers[a], lat.centers[b]) >= 0.5 * r);
                }
            }
            for (x, &p) in g.nodes.iter().enumerate() {
                if g.node_radius(x) <= g.r_max - r {
                    let d = lat.centers.iter().map(|&c| distance_unchecked(p, c)).fold(f64::INFINITY, f64::min);
                    assert!(d <= 0.5 * r);
                }
            }
            assert_eq!(chk.multiplicity, lat.multiplicity);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = grid();
        let a = build_lattice(0.5, &g, 3).unwrap();
        let b = build_lattice(0.5, &g, 3).unwrap();
        assert_eq!(a.center_nodes, b.center_nodes);
    }

    #[test]
    fn halving_r_adds_centers() {
        let g = SpatialGrid::new(3.0, 64, 96).unwrap();
        let a = build_lattice(1.0, &g, 0).unwrap();
        let b = build_lattice(0.5, &g, 0).unwrap();
        assert!(b.len() > a.len());
    }

    #[test]
    fn cover_invariants() {
        let g = grid();
        let lat = build_lattice(0.5, &g, 1).unwrap();
        let cov = build_cover(&lat, &g).unwrap();
        let total: f64 = cov.cell_measures.iter().sum();
        assert!((total / g.total_measure() - 1.0).abs() < 1e-10);
        let mut seen = vec![0; g.len()];
        for (k, cell) in cov.cells.iter().enumerate() {
            for &x in cell {
                seen[x] += 1;
                assert_eq!(cov.assignment[x], k);
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        for (x, &p) in g.nodes.iter().enumerate() {
            let k = cov.assignment[x];
            let d = distance_unchecked(p, lat.centers[k]);
            if g.node_radius(x) <= g.r_max - lat.r {
                assert!(d <= 0.5 * lat.r + 1e-12);
            }
            for (i, &c) in lat.centers.iter().enumerate() {
                if distance_unchecked(p, c) < 0.25 * lat.r {
                    assert_eq!(k, i);
                }
            }
        }
    }

    #[test]
    fn one_center_cover_takes_everything() {
        let g = SpatialGrid::new(1.0, 8, 8).unwrap();
        let lat = build_lattice(1.0, &g, 0).unwrap();
        let cov = build_cover(&lat, &g).unwrap();
        assert!(cov.assignment.iter().all(|&k| k == 0));
        assert!((cov.cell_measures[0] / g.total_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_far_centers_split_by_nearest() {
        let g = SpatialGrid::new(3.0, 24, 32).unwrap();
        let a = g.n_theta * 12;
        let b = g.n_theta * 12 + g.n_theta / 2;
        let lat = Lattice {
            r: 4.0,
            centers: vec![g.nodes[a], g.nodes[b]],
            center_nodes: vec![a, b],
            multiplicity_bound: multiplicity_bound(4.0),
            multiplicity: 0,
        };
        let cov = build_cover(&lat, &g).unwrap();
        for (x, &p) in g.nodes.iter().enumerate() {
            let da = distance_unchecked(p, g.nodes[a]);
            let db = distance_unchecked(p, g.nodes[b]);
            // the displayed formula: r/4 cores first, then lowest index
            let expect = if db < 1.0 {
                1
            } else if da <= 2.0 {
                0
            } else if db <= 2.0 {
                1
            } else if da <= db {
                0
            } else {
                1
            };
            assert_eq!(cov.assignment[x], expect, "node {x}");
        }
        let total: f64 = cov.cell_measures.iter().sum();
        assert!((total / g.total_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_meet_ratio() {
        let g = SpatialGrid::new(1.5, 24, 32).unwrap();
        let lat = build_lattice(0.5, &g, 0).unwrap();
        let cov = build_cover(&lat, &g).unwrap();
        assert!(cov.len() >= 2);
        let w = build_weights(&cov, &g, 0.5, 0.25).unwrap();
        assert!(w.measure_ratio <= 1.5 && w.measure_ratio >= 1.0);
        assert!(w.psi.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for k in 0..cov.len() {
            let direct: f64 = cov.cells[k].iter().map(|&x| w.psi[x] * g.weights[x]).sum();
            assert!((direct - w.weighted_measures[k]).abs() < 1e-12 * direct);
            assert!(w.ratio(&cov, k) <= 1.5);
        }
        // a tiny ε gives the indicator
        let sharp = build_weights(&cov, &g, 0.01, 1e-9).unwrap();
        assert!((sharp.measure_ratio - 1.0).abs() < 1e-12);
        assert!(build_weights(&cov, &g, 1.5, 0.1).is_err());
    }

    #[test]
    fn partition_sums_to_one() {
        let g = grid();
        let pu = build_partition_of_unity(1.0, &g, 0).unwrap();
        for (x, row) in pu.values.iter().enumerate() {
            let s: f64 = row.iter().map(|&(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-12, "node {x}: {s}");
            for &(nu, v) in row {
                assert!((0.0..=1.0).contains(&v));
                assert!(distance_unchecked(g.nodes[x], pu.centers[nu]) < 0.5);
            }
        }
    }

    #[test]
    fn single_bump_partition() {
        let g = SpatialGrid::new(1.0, 8, 8).unwrap();
        let pu = build_partition_of_unity(2.5, &g, 0).unwrap();
        assert_eq!(pu.len(), 1);
        assert!(pu.values.iter().all(|row| row.len() == 1 && row[0].1 == 1.0));
    }

    #[test]
    fn multiplicity_bound_value() {
        // Euclidean limit: (5/4)²/(1/4)² = 25
        assert_eq!(multiplicity_bound(1e-3), 24.max(multiplicity_bound(1e-3)));
        assert!(multiplicity_bound(1e-3) >= 24 && multiplicity_bound(1e-3) <= 25);
        assert!(multiplicity_bound(2.0) > 25);
    }

    #[test]
    fn json_dump_roundtrips() {
        let g = SpatialGrid::new(1.5, 12, 16).unwrap();
        let lat = build_lattice(0.8, &g, 0).unwrap();
        let cov = build_cover(&lat, &g).unwrap();
        let w = build_weights(&cov, &g, 0.5, 0.2).unwrap();
        let mut buf = Vec::new();
        dump_json(&lat, &cov, &w, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["centers"].as_array().unwrap().len(), lat.len());
        assert_eq!(v["assignment"].as_array().unwrap().len(), g.len());
    }
}
