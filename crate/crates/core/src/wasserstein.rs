//! Wasserstein-1 distance on the circle and related measure diagnostics.
//!
//! A grid density `mu_i` is the piecewise-constant function equal to `mu_i`
//! on the cell `[x_i - h/2, x_i + h/2)`; its cell masses are `h mu_i`.
//! Transport distances are computed between the atomic measures carrying
//! those masses at the nodes. Moments integrate exactly over the cells.

use crate::bounds::BoundCheck;
use crate::error::{check_len, GmfgError, Result};
use crate::field::ClusterField;
use crate::grid::{torus_distance_unchecked, TimeGrid, TorusGrid};

/// Probability weights on the nodes of a torus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    grid: TorusGrid,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub const MASS_TOL: f64 = 1e-10;

    pub fn from_weights(grid: TorusGrid, weights: Vec<f64>) -> Result<Self> {
        check_len(grid.n(), weights.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(GmfgError::InvalidInput("measure weights must be finite and nonnegative".into()));
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > Self::MASS_TOL {
            return Err(GmfgError::InvalidInput(format!("measure weights sum to {mass}, expected 1")));
        }
        Ok(DiscreteMeasure { grid, weights })
    }

    /// Measure with cell masses `h * density_i`.
    pub fn from_density(grid: TorusGrid, density: &[f64]) -> Result<Self> {
        let h = grid.h();
        Self::from_weights(grid, density.iter().map(|d| h * d).collect())
    }

    pub fn point_mass(grid: TorusGrid, node: usize) -> Self {
        let mut weights = vec![0.0; grid.n()];
        weights[node % grid.n()] = 1.0;
        DiscreteMeasure { grid, weights }
    }

    pub fn uniform(grid: TorusGrid) -> Self {
        let n = grid.n();
        DiscreteMeasure {
            grid,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(GmfgError::InvalidInput(format!(
                "measures live on different grids (n = {} vs {})",
                self.grid.n(),
                other.grid.n()
            )));
        }
        Ok(())
    }
}

/// `sum_i |F_i - median(F)|` for the prefix sums `F` of `diff`.
fn circle_cost(diff: impl Iterator<Item = f64>, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    let mut acc = 0.0;
    for d in diff {
        acc += d;
        scratch.push(acc);
    }
    let med = median(&mut scratch.clone());
    scratch.iter().map(|f| (f - med).abs()).sum()
}

/// Midpoint of the two central order statistics; negating the input
/// negates the result exactly.
fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = (n - 1) / 2;
    let (_, lo, rest) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let lo = *lo;
    if n % 2 == 1 {
        lo
    } else {
        let hi = rest.iter().copied().fold(f64::INFINITY, f64::min);
        0.5 * (lo + hi)
    }
}

/// Exact Wasserstein-1 distance on the circle.
///
/// With `F` the prefix sums of the weight difference, the optimal transport
/// cost is `h * sum_i |F_i - s|` minimised over the circulation `s`, whose
/// minimiser is the median of `F`.
pub fn w1_circle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.same_grid(nu)?;
    let mut scratch = Vec::with_capacity(mu.weights.len());
    let cost = circle_cost(mu.weights.iter().zip(&nu.weights).map(|(a, b)| a - b), &mut scratch);
    Ok(mu.grid.h() * cost)
}

/// W1 between two grid densities (cell masses `h * density`).
pub fn w1_densities(grid: &TorusGrid, a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(grid.n(), a.len())?;
    check_len(grid.n(), b.len())?;
    let h = grid.h();
    let mut scratch = Vec::with_capacity(a.len());
    Ok(h * h * circle_cost(a.iter().zip(b).map(|(x, y)| x - y), &mut scratch))
}

/// Largest support accepted by [`w1_lp_oracle`].
pub const LP_ORACLE_MAX_N: usize = 64;

/// Optimal transport by min-cost flow on the complete bipartite graph with
/// torus-distance costs. Only used as ground truth for [`w1_circle`].
pub fn w1_lp_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.same_grid(nu)?;
    let n = mu.grid.n();
    if n > LP_ORACLE_MAX_N {
        return Err(GmfgError::InvalidInput(format!(
            "transport oracle limited to n <= {LP_ORACLE_MAX_N}, got {n}"
        )));
    }
    let x = mu.grid.nodes();
    let cost = |i: usize, j: usize| torus_distance_unchecked(x[i], x[j]);
    Ok(min_cost_transport(&mu.weights, &nu.weights, cost))
}

/// Successive shortest augmenting paths (Bellman-Ford) for the
/// transportation problem `supply -> demand`.
fn min_cost_transport(supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> f64 {
    const EPS: f64 = 1e-15;
    let n = supply.len();
    // nodes: 0 source, 1..=n supply side, n+1..=2n demand side, 2n+1 sink
    let nodes = 2 * n + 2;
    let (src, sink) = (0, 2 * n + 1);
    struct Edge {
        to: usize,
        cap: f64,
        cost: f64,
    }
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let add = |edges: &mut Vec<Edge>, adj: &mut Vec<Vec<usize>>, u: usize, v: usize, cap: f64, c: f64| {
        adj[u].push(edges.len());
        edges.push(Edge { to: v, cap, cost: c });
        adj[v].push(edges.len());
        edges.push(Edge { to: u, cap: 0.0, cost: -c });
    };
    for i in 0..n {
        add(&mut edges, &mut adj, src, 1 + i, supply[i], 0.0);
        add(&mut edges, &mut adj, 1 + n + i, sink, demand[i], 0.0);
        for j in 0..n {
            add(&mut edges, &mut adj, 1 + i, 1 + n + j, f64::INFINITY, cost(i, j));
        }
    }

    let mut total = 0.0;
    loop {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via: Vec<Option<usize>> = vec![None; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if !dist[u].is_finite() {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > EPS && dist[u] + edge.cost < dist[edge.to] - 1e-15 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while let Some(e) = via[v] {
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        if push <= EPS {
            break;
        }
        let mut v = sink;
        while let Some(e) = via[v] {
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            total += push * edges[e].cost;
            v = edges[e ^ 1].to;
        }
    }
    total
}

/// Metric on density fields: supremum over time levels and clusters of the
/// W1 distance between matching slices.
pub fn rho(grid: &TorusGrid, mu1: &ClusterField, mu2: &ClusterField) -> Result<f64> {
    mu1.same_shape(mu2)?;
    check_len(grid.n(), mu1.n())?;
    let mut worst = 0.0f64;
    for k in 0..mu1.levels() {
        for j in 0..mu1.clusters() {
            worst = worst.max(w1_densities(grid, mu1.slice(k, j), mu2.slice(k, j))?);
        }
    }
    Ok(worst)
}

/// `int r(x) dx` over `[0, x]` for `r(x) = frac(x)`.
fn frac_antiderivative(x: f64) -> f64 {
    let fl = x.floor();
    let y = x - fl;
    0.5 * fl + 0.5 * y * y
}

/// `int d(x, 0) dx` over `[0, x]` for the torus distance to the origin.
fn tent_antiderivative(x: f64) -> f64 {
    let fl = x.floor();
    let y = x - fl;
    let g = if y <= 0.5 { 0.5 * y * y } else { 0.25 - 0.5 * (1.0 - y) * (1.0 - y) };
    0.25 * fl + g
}

fn cell_moment(grid: &TorusGrid, density: &[f64], antiderivative: fn(f64) -> f64) -> f64 {
    let h = grid.h();
    density
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let x = grid.node(i);
            d * (antiderivative(x + 0.5 * h) - antiderivative(x - 0.5 * h))
        })
        .sum()
}

/// First moment `int x mu(dx)` with `x` represented in `[0, 1)`.
pub fn moment_unit_interval(grid: &TorusGrid, density: &[f64]) -> f64 {
    cell_moment(grid, density, frac_antiderivative)
}

/// First moment `int d(x, 0) mu(dx)` with the torus distance to the origin.
pub fn moment_torus(grid: &TorusGrid, density: &[f64]) -> f64 {
    cell_moment(grid, density, tent_antiderivative)
}

/// Prefix sums of `h * density` for every `(t, alpha)` slice, used by the
/// pairwise time scans.
fn slice_cdfs(grid: &TorusGrid, mu: &ClusterField, j: usize) -> Vec<Vec<f64>> {
    let h = grid.h();
    (0..mu.levels())
        .map(|k| {
            let mut acc = 0.0;
            mu.slice(k, j)
                .iter()
                .map(|d| {
                    acc += h * d;
                    acc
                })
                .collect()
        })
        .collect()
}

fn w1_from_cdfs(h: f64, fa: &[f64], fb: &[f64], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(fa.iter().zip(fb).map(|(a, b)| a - b));
    let diffs = scratch.clone();
    let med = median(scratch);
    h * diffs.iter().map(|f| (f - med).abs()).sum::<f64>()
}

/// Worst ratio `W1(mu(t), mu(s)) / |t - s|^{1/2}` over grid time pairs and
/// clusters.
pub fn holder_half_ratio(grid: &TorusGrid, tgrid: &TimeGrid, mu: &ClusterField) -> Result<f64> {
    check_len(tgrid.levels(), mu.levels())?;
    check_len(grid.n(), mu.n())?;
    let h = grid.h();
    let per_cluster = crate::par::map_range(mu.clusters(), |j| {
        let cdfs = slice_cdfs(grid, mu, j);
        let mut scratch = Vec::with_capacity(grid.n());
        let mut worst = 0.0f64;
        for a in 0..cdfs.len() {
            for b in a + 1..cdfs.len() {
                let gap = (tgrid.time(b) - tgrid.time(a)).sqrt();
                worst = worst.max(w1_from_cdfs(h, &cdfs[a], &cdfs[b], &mut scratch) / gap);
            }
        }
        worst
    });
    Ok(per_cluster.into_iter().fold(0.0, f64::max))
}

/// Diagnostics of the `S^{1/2}` norm: sup first moment (`[0, 1)`
/// representative) and the discrete half-Holder seminorm in time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SHalfNorm {
    pub moment_part: f64,
    pub holder_part: f64,
}

pub fn s_half_norm(grid: &TorusGrid, tgrid: &TimeGrid, mu: &ClusterField) -> Result<SHalfNorm> {
    check_len(grid.n(), mu.n())?;
    let mut moment_part = 0.0f64;
    for k in 0..mu.levels() {
        for j in 0..mu.clusters() {
            moment_part = moment_part.max(moment_unit_interval(grid, mu.slice(k, j)));
        }
    }
    let holder_part = if mu.levels() < 2 { 0.0 } else { holder_half_ratio(grid, tgrid, mu)? };
    Ok(SHalfNorm { moment_part, holder_part })
}

/// `int f d(mu - nu)` for a test function with discrete Lipschitz constant
/// at most one; errors if the value exceeds `W1(mu, nu)`.
pub fn duality_gap_probe(mu: &DiscreteMeasure, nu: &DiscreteMeasure, f: &[f64]) -> Result<f64> {
    mu.same_grid(nu)?;
    let grid = mu.grid;
    check_len(grid.n(), f.len())?;
    let n = grid.n();
    let h = grid.h();
    for i in 0..n {
        let step = (f[(i + 1) % n] - f[i]).abs();
        if step > h * (1.0 + 1e-12) {
            return Err(GmfgError::InvalidInput(format!(
                "test function not 1-Lipschitz: |f[{}] - f[{i}]| = {step} > h = {h}",
                (i + 1) % n
            )));
        }
    }
    let pairing: f64 = f.iter().zip(mu.weights.iter().zip(&nu.weights)).map(|(fi, (a, b))| fi * (a - b)).sum();
    let d = w1_circle(mu, nu)?;
    let chk = BoundCheck::new("duality", pairing, d, 1e-10);
    if !chk.passed {
        return Err(GmfgError::NumericalFailure(format!(
            "duality violated: pairing {pairing} exceeds W1 {d}"
        )));
    }
    Ok(pairing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(grid: TorusGrid, rng: &mut ChaCha8Rng, sparse: bool) -> DiscreteMeasure {
        let mut w: Vec<f64> = (0..grid.n())
            .map(|_| {
                let v: f64 = rng.random();
                if sparse && v < 0.6 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        if w.iter().sum::<f64>() == 0.0 {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        DiscreteMeasure::from_weights(grid, w).unwrap()
    }

    #[test]
    fn examples() {
        let g = TorusGrid::new(20).unwrap();
        let a = DiscreteMeasure::point_mass(g, 2);
        assert_eq!(w1_circle(&a, &a).unwrap(), 0.0);
        let b = DiscreteMeasure::point_mass(g, 6);
        assert!((w1_circle(&a, &b).unwrap() - 0.2).abs() < 1e-15);
        let c = DiscreteMeasure::point_mass(g, 1);
        let d = DiscreteMeasure::point_mass(g, 17);
        assert!((w1_circle(&c, &d).unwrap() - 0.2).abs() < 1e-15);
        assert!((w1_lp_oracle(&c, &d).unwrap() - 0.2).abs() < 1e-15);
        let e = DiscreteMeasure::point_mass(g, 0);
        let f = DiscreteMeasure::point_mass(g, 10);
        assert!((w1_lp_oracle(&e, &f).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(w1_lp_oracle(&e, &e).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rejects_large_support() {
        let g = TorusGrid::new(65).unwrap();
        let a = DiscreteMeasure::uniform(g);
        assert!(w1_lp_oracle(&a, &a).is_err());
        let other = DiscreteMeasure::uniform(TorusGrid::new(8).unwrap());
        assert!(w1_circle(&a, &other).is_err());
    }

    #[test]
    fn circle_formula_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 16, 17, 32] {
            let g = TorusGrid::new(n).unwrap();
            for trial in 0..20 {
                let a = random_measure(g, &mut rng, trial % 2 == 0);
                let b = random_measure(g, &mut rng, trial % 3 == 0);
                let fast = w1_circle(&a, &b).unwrap();
                let lp = w1_lp_oracle(&a, &b).unwrap();
                assert!((fast - lp).abs() < 1e-10, "n={n}: {fast} vs {lp}");
            }
        }
    }

    #[test]
    fn rho_picks_the_worst_slice() {
        let g = TorusGrid::new(10).unwrap();
        let uniform = ClusterField::from_fn(3, 2, 10, |_, _, _| 1.0);
        let mut other = uniform.clone();
        let s = other.slice_mut(1, 1);
        s.iter_mut().for_each(|v| *v = 0.0);
        s[4] = 10.0;
        let mut third = uniform.clone();
        let s = third.slice_mut(1, 1);
        s.iter_mut().for_each(|v| *v = 0.0);
        s[6] = 10.0;
        assert_eq!(rho(&g, &uniform, &uniform).unwrap(), 0.0);
        assert!((rho(&g, &other, &third).unwrap() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn moments_of_uniform_and_point_masses() {
        let g = TorusGrid::new(64).unwrap();
        let uniform = vec![1.0; 64];
        assert!((moment_unit_interval(&g, &uniform) - 0.5).abs() < 1e-14);
        assert!((moment_torus(&g, &uniform) - 0.25).abs() < 1e-14);
        let mut spike = vec![0.0; 64];
        spike[0] = 64.0;
        // cell straddles 0: representative splits into both ends of [0, 1)
        assert!((moment_unit_interval(&g, &spike) - 0.5).abs() < 1e-14);
        assert!((moment_torus(&g, &spike) - g.h() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn s_half_norm_of_constant_uniform_field() {
        let g = TorusGrid::new(32).unwrap();
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let mu = ClusterField::from_fn(11, 3, 32, |_, _, _| 1.0);
        let s = s_half_norm(&g, &tg, &mu).unwrap();
        assert!((s.moment_part - 0.5).abs() < 1e-14);
        assert_eq!(s.holder_part, 0.0);
        let single = ClusterField::from_fn(1, 1, 32, |_, _, _| 1.0);
        assert_eq!(s_half_norm(&g, &tg, &single).unwrap().holder_part, 0.0);
    }

    #[test]
    fn holder_ratio_matches_direct_pairs() {
        let g = TorusGrid::new(16).unwrap();
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let mu = ClusterField::from_fn(5, 2, 16, |k, j, i| {
            1.0 + 0.5 * (2.0 * std::f64::consts::PI * (g.node(i) - 0.1 * (k * (j + 1)) as f64)).cos()
        });
        let mut direct = 0.0f64;
        for j in 0..2 {
            for a in 0..5 {
                for b in a + 1..5 {
                    let d = w1_densities(&g, mu.slice(a, j), mu.slice(b, j)).unwrap();
                    direct = direct.max(d / (tg.time(b) - tg.time(a)).sqrt());
                }
            }
        }
        assert!((holder_half_ratio(&g, &tg, &mu).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn duality_certificates() {
        let g = TorusGrid::new(10).unwrap();
        let a = DiscreteMeasure::point_mass(g, 0);
        let b = DiscreteMeasure::point_mass(g, 3);
        assert_eq!(duality_gap_probe(&a, &b, &[0.7; 10]).unwrap(), 0.0);
        let f: Vec<f64> = g.nodes().iter().map(|&x| torus_distance_unchecked(x, 0.0)).collect();
        let val = duality_gap_probe(&b, &a, &f).unwrap();
        assert!((val - 0.3).abs() < 1e-15);
        assert!((val - w1_circle(&a, &b).unwrap()).abs() < 1e-15);
        let steep: Vec<f64> = g.nodes().iter().map(|x| 2.0 * x).collect();
        assert!(duality_gap_probe(&a, &b, &steep).is_err());
    }

    proptest! {
        #[test]
        fn metric_axioms(seed in any::<u64>(), n in 4usize..40) {
            let g = TorusGrid::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_measure(g, &mut rng, false);
            let b = random_measure(g, &mut rng, true);
            let c = random_measure(g, &mut rng, false);
            let ab = w1_circle(&a, &b).unwrap();
            prop_assert_eq!(ab, w1_circle(&b, &a).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert!(w1_circle(&a, &c).unwrap() <= ab + w1_circle(&b, &c).unwrap() + 1e-10);
        }

        #[test]
        fn shift_invariance(seed in any::<u64>(), n in 4usize..40, k in 0usize..40) {
            let g = TorusGrid::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_measure(g, &mut rng, true);
            let b = random_measure(g, &mut rng, false);
            let shift = |m: &DiscreteMeasure| {
                let w: Vec<f64> = (0..n).map(|i| m.weights()[(i + n - k % n) % n]).collect();
                DiscreteMeasure::from_weights(g, w).unwrap()
            };
            let d0 = w1_circle(&a, &b).unwrap();
            let d1 = w1_circle(&shift(&a), &shift(&b)).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-14);
        }

        #[test]
        fn moving_a_point_mass(n in 4usize..60, i in 0usize..60, step in 0usize..60) {
            let g = TorusGrid::new(n).unwrap();
            let a = DiscreteMeasure::point_mass(g, i);
            let b = DiscreteMeasure::point_mass(g, i + step);
            let delta = (step % n) as f64 / n as f64;
            prop_assert!((w1_circle(&a, &b).unwrap() - delta.min(1.0 - delta)).abs() < 1e-14);
        }

        #[test]
        fn random_lipschitz_functions_respect_duality(seed in any::<u64>()) {
            let n = 24;
            let g = TorusGrid::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_measure(g, &mut rng, false);
            let b = random_measure(g, &mut rng, true);
            // inf-convolution with the torus metric is 1-Lipschitz
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = g.nodes();
            let f: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| raw[j] + torus_distance_unchecked(x[i], x[j])).fold(f64::INFINITY, f64::min))
                .collect();
            prop_assert!(duality_gap_probe(&a, &b, &f).is_ok());
        }
    }
}
