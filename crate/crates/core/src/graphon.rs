//! Graphons on the cluster grid and the coupled running cost
//! `l1[mu](t, a, x) = int g(a, a') int l2(x, y) mu(t, a', dy) da'`.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundCheck;
use crate::error::{check_len, GmfgError, Result};
use crate::expr::{Expr, Point, Var};
use crate::field::ClusterField;
use crate::grid::TorusGrid;
use crate::wasserstein::rho;

/// Midpoint nodes `a_j = (j + 1/2) / M` with weights `1 / M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlphaGrid {
    m: usize,
}

impl AlphaGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(GmfgError::InvalidInput("cluster grid needs at least one node".into()));
        }
        Ok(AlphaGrid { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) / self.m as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.m as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphonKind {
    /// `g = p` (dense Erdos-Renyi limit).
    Constant(f64),
    /// `g(a, a') = 1 - max(a, a')`.
    UniformAttachment,
    /// Square symmetric table; cell `(r, s)` covers `[r/K, (r+1)/K) x [s/K, (s+1)/K)`.
    PiecewiseConstant(Vec<Vec<f64>>),
    /// Catalog expression in `a` and `ap`.
    Expression(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graphon {
    kind: GraphonKind,
    bound: Option<f64>,
}

impl Graphon {
    pub fn new(kind: GraphonKind, bound: Option<f64>) -> Result<Self> {
        match &kind {
            GraphonKind::Constant(p) if !p.is_finite() => {
                return Err(GmfgError::InvalidInput(format!("graphon constant must be finite, got {p}")))
            }
            GraphonKind::PiecewiseConstant(table) => {
                let k = table.len();
                if k == 0 {
                    return Err(GmfgError::InvalidInput("graphon table is empty".into()));
                }
                for (r, row) in table.iter().enumerate() {
                    check_len(k, row.len())?;
                    for (s, v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(GmfgError::InvalidInput(format!("graphon table entry ({r}, {s}) is not finite")));
                        }
                        if *v != table[s][r] {
                            return Err(GmfgError::InvalidInput(format!(
                                "graphon table is not symmetric at ({r}, {s}): {v} vs {}",
                                table[s][r]
                            )));
                        }
                    }
                }
            }
            GraphonKind::Expression(e)
                if (e.uses(Var::T) || e.uses(Var::X) || e.uses(Var::Y)) => {
                    return Err(GmfgError::InvalidInput("graphon expression may only use a and ap".into()));
                }
            _ => {}
        }
        if let Some(b) = bound {
            if !(b.is_finite() && b >= 0.0) {
                return Err(GmfgError::InvalidInput(format!("graphon bound must be nonnegative, got {b}")));
            }
        }
        Ok(Graphon { kind, bound })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::new(GraphonKind::Constant(p), None)
    }

    pub fn uniform_attachment() -> Self {
        Graphon {
            kind: GraphonKind::UniformAttachment,
            bound: None,
        }
    }

    pub fn kind(&self) -> &GraphonKind {
        &self.kind
    }

    pub fn eval(&self, a: f64, ap: f64) -> Result<f64> {
        for v in [a, ap] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GmfgError::InvalidInput(format!("cluster index {v} outside [0, 1]")));
            }
        }
        Ok(match &self.kind {
            GraphonKind::Constant(p) => *p,
            GraphonKind::UniformAttachment => 1.0 - a.max(ap),
            GraphonKind::PiecewiseConstant(table) => {
                let k = table.len();
                let cell = |v: f64| ((v * k as f64).floor() as usize).min(k - 1);
                table[cell(a)][cell(ap)]
            }
            GraphonKind::Expression(e) => e.eval(&Point { a, ap, ..Default::default() }),
        })
    }

    /// `G_jk = g(a_j, a_k)`, exactly symmetric and checked against the
    /// configured bound.
    pub fn matrix(&self, alpha: &AlphaGrid) -> Result<Vec<Vec<f64>>> {
        let m = alpha.len();
        let mut g = vec![vec![0.0; m]; m];
        for j in 0..m {
            for k in 0..=j {
                let v = self.eval(alpha.node(j), alpha.node(k))?;
                let w = self.eval(alpha.node(k), alpha.node(j))?;
                if !v.is_finite() || (v - w).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(GmfgError::InvalidInput(format!(
                        "graphon is not symmetric at nodes ({j}, {k}): {v} vs {w}"
                    )));
                }
                g[j][k] = v;
                g[k][j] = v;
            }
        }
        if let Some(b) = self.bound {
            let sup = g.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
            if sup > b {
                return Err(GmfgError::InvalidInput(format!("graphon sup {sup} exceeds configured bound {b}")));
            }
        }
        Ok(g)
    }
}

/// Discrete norms of the kernel `l2(x_i, y_m)`, using forward differences
/// in each variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelNorms {
    pub sup: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxdy: f64,
    pub second: f64,
}

impl KernelNorms {
    /// `|l2|_{1,0}`: value plus first difference in `x`.
    pub fn c10(&self) -> f64 {
        self.sup + self.dx
    }

    /// `|l2|_{1,1}`: value plus first and mixed differences.
    pub fn c11(&self) -> f64 {
        self.sup + self.dx + self.dy + self.dxdy
    }
}

/// Pluggable running-cost operators `mu -> l1[mu]`.
pub trait RunningCost: Send + Sync {
    fn assemble(&self, mu: &ClusterField) -> Result<ClusterField>;

    /// Bound on `|l1[mu]|_{0,0,1}` valid for every probability field.
    fn uniform_bound(&self) -> f64;

    /// Lipschitz constant of `mu -> l1[mu]` from `rho` to `|.|_{0,0,1}`.
    fn lipschitz_constant(&self) -> f64;
}

/// Kernel cost `l1 = sum_k (1/M) G_jk h sum_m l2(x_i, y_m) mu(t, a_k, y_m)`.
#[derive(Debug, Clone)]
pub struct CostModel {
    grid: TorusGrid,
    alpha: AlphaGrid,
    kernel: Vec<f64>,
    g: Vec<Vec<f64>>,
    g_sup: f64,
    norms: KernelNorms,
}

impl CostModel {
    /// `kernel` is row-major `n x n` with entry `(i, m) = l2(x_i, y_m)`.
    pub fn new(grid: TorusGrid, alpha: AlphaGrid, kernel: Vec<f64>, graphon: &Graphon) -> Result<Self> {
        let n = grid.n();
        check_len(n * n, kernel.len())?;
        if let Some(pos) = kernel.iter().position(|v| !v.is_finite()) {
            return Err(GmfgError::InvalidInput(format!(
                "cost kernel entry ({}, {}) is not finite",
                pos / n,
                pos % n
            )));
        }
        let g = graphon.matrix(&alpha)?;
        let g_sup = g.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        let norms = kernel_norms(&grid, &kernel);
        Ok(CostModel {
            grid,
            alpha,
            kernel,
            g,
            g_sup,
            norms,
        })
    }

    pub fn from_expr(grid: TorusGrid, alpha: AlphaGrid, ell2: &Expr, graphon: &Graphon) -> Result<Self> {
        let x = grid.nodes();
        let mut kernel = Vec::with_capacity(x.len() * x.len());
        for &xi in &x {
            for &ym in &x {
                kernel.push(ell2.eval(&Point { x: xi, y: ym, ..Default::default() }));
            }
        }
        Self::new(grid, alpha, kernel, graphon)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &AlphaGrid {
        &self.alpha
    }

    pub fn graphon_matrix(&self) -> &[Vec<f64>] {
        &self.g
    }

    pub fn graphon_sup(&self) -> f64 {
        self.g_sup
    }

    pub fn kernel(&self, i: usize, m: usize) -> f64 {
        self.kernel[i * self.grid.n() + m]
    }

    pub fn kernel_norms(&self) -> KernelNorms {
        self.norms
    }

    fn assemble_unchecked(&self, mu: &ClusterField) -> Result<ClusterField> {
        let n = self.grid.n();
        let m_clusters = self.alpha.len();
        check_len(n, mu.n())?;
        check_len(m_clusters, mu.clusters())?;
        let h = self.grid.h();
        let w = self.alpha.weight();
        let levels = mu.levels();
        let rows = crate::par::map_range(levels, |k| {
            // inner integrals P[k'][i] = h sum_m l2(x_i, y_m) mu(t, a_k', y_m)
            let inner: Vec<Vec<f64>> = (0..m_clusters)
                .map(|kp| {
                    let s = mu.slice(k, kp);
                    (0..n)
                        .map(|i| {
                            let row = &self.kernel[i * n..(i + 1) * n];
                            h * row.iter().zip(s).map(|(a, b)| a * b).sum::<f64>()
                        })
                        .collect()
                })
                .collect();
            let mut out = vec![0.0; m_clusters * n];
            for j in 0..m_clusters {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (kp, p) in inner.iter().enumerate() {
                        acc += w * self.g[j][kp] * p[i];
                    }
                    out[j * n + i] = acc;
                }
            }
            out
        });
        ClusterField::from_vec(levels, m_clusters, n, rows.concat())
    }
}

impl RunningCost for CostModel {
    /// Assembles `l1[mu]` and asserts the uniform bound
    /// `|l1|_{0,0,1} <= |l2|_{1,0} |g|_0`.
    fn assemble(&self, mu: &ClusterField) -> Result<ClusterField> {
        let ell1 = self.assemble_unchecked(mu)?;
        let chk = check_uniform_bound(&self.grid, &ell1, self.uniform_bound(), mass_excess(&self.grid, mu));
        if !chk.passed {
            return Err(GmfgError::NumericalFailure(format!(
                "running cost bound violated: |l1|_(0,0,1) = {} > {}",
                chk.lhs, chk.rhs
            )));
        }
        Ok(ell1)
    }

    fn uniform_bound(&self) -> f64 {
        self.norms.c10() * self.g_sup
    }

    fn lipschitz_constant(&self) -> f64 {
        self.norms.c11() * self.g_sup
    }
}

/// Largest `h sum |mu|` over slices; 1 for probability fields.
fn mass_excess(grid: &TorusGrid, mu: &ClusterField) -> f64 {
    let h = grid.h();
    let mut worst = 1.0f64;
    for k in 0..mu.levels() {
        for j in 0..mu.clusters() {
            worst = worst.max(h * mu.slice(k, j).iter().map(|v| v.abs()).sum::<f64>());
        }
    }
    worst
}

fn kernel_norms(grid: &TorusGrid, kernel: &[f64]) -> KernelNorms {
    let n = grid.n();
    let h = grid.h();
    let at = |i: usize, m: usize| kernel[(i % n) * n + (m % n)];
    let mut norms = KernelNorms {
        sup: 0.0,
        dx: 0.0,
        dy: 0.0,
        dxdy: 0.0,
        second: 0.0,
    };
    for i in 0..n {
        for m in 0..n {
            let v = at(i, m);
            norms.sup = norms.sup.max(v.abs());
            norms.dx = norms.dx.max(((at(i + 1, m) - v) / h).abs());
            norms.dy = norms.dy.max(((at(i, m + 1) - v) / h).abs());
            norms.dxdy = norms.dxdy.max(((at(i + 1, m + 1) - at(i + 1, m) - at(i, m + 1) + v) / (h * h)).abs());
            let dxx = (at(i + 1, m) - 2.0 * v + at(i + n - 1, m)) / (h * h);
            let dyy = (at(i, m + 1) - 2.0 * v + at(i, m + n - 1)) / (h * h);
            norms.second = norms.second.max(dxx.abs()).max(dyy.abs());
        }
    }
    norms
}

/// `|u|_{0,0,1}`: sup of values plus sup of forward difference quotients in
/// space, over every `(t, a)` slice.
pub fn norm_001(grid: &TorusGrid, u: &ClusterField) -> f64 {
    let n = grid.n();
    let h = grid.h();
    let mut sup = 0.0f64;
    let mut lip = 0.0f64;
    for k in 0..u.levels() {
        for j in 0..u.clusters() {
            let s = u.slice(k, j);
            for i in 0..n {
                sup = sup.max(s[i].abs());
                lip = lip.max(((s[(i + 1) % n] - s[i]) / h).abs());
            }
        }
    }
    sup + lip
}

fn check_uniform_bound(grid: &TorusGrid, ell1: &ClusterField, bound: f64, mass: f64) -> BoundCheck {
    let rhs = bound * mass;
    BoundCheck::new("ell1_uniform_bound", norm_001(grid, ell1), rhs, 1e-12 * (1.0 + rhs))
}

/// Lipschitz dependence of the running cost on the density:
/// `|l1[mu1] - l1[mu2]|_{0,0,1} <= |l2|_{1,1} |g|_0 rho(mu1, mu2)`.
pub fn check_ell1_lipschitz(cost: &CostModel, mu1: &ClusterField, mu2: &ClusterField) -> Result<BoundCheck> {
    let a = cost.assemble(mu1)?;
    let b = cost.assemble(mu2)?;
    let diff = a.zip_map(&b, |x, y| x - y)?;
    let lhs = norm_001(&cost.grid, &diff);
    let rhs = cost.lipschitz_constant() * rho(&cost.grid, mu1, mu2)?;
    Ok(BoundCheck::new("ell1_lipschitz", lhs, rhs, 1e-10 * (1.0 + rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density_field(rng: &mut ChaCha8Rng, levels: usize, m: usize, n: usize) -> ClusterField {
        let data = (0..levels * m * n).map(|_| rng.random::<f64>().powi(3)).collect();
        let mut f = ClusterField::from_vec(levels, m, n, data).unwrap();
        for k in 0..levels {
            for j in 0..m {
                let s = f.slice_mut(k, j);
                let mass: f64 = s.iter().sum::<f64>() / n as f64;
                s.iter_mut().for_each(|v| *v /= mass);
            }
        }
        f
    }

    #[test]
    fn graphon_examples() {
        let ua = Graphon::uniform_attachment();
        assert_eq!(ua.eval(0.3, 0.5).unwrap(), 0.5);
        let c = Graphon::constant(0.7).unwrap();
        assert_eq!(c.eval(0.1, 0.9).unwrap(), 0.7);
        assert!(ua.eval(1.2, 0.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = Graphon::new(GraphonKind::Expression(Expr::parse("a*ap + exp(-(a-ap)^2)").unwrap()), None).unwrap();
        for _ in 0..100 {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            assert_eq!(ua.eval(a, b).unwrap(), ua.eval(b, a).unwrap());
            assert_eq!(e.eval(a, b).unwrap(), e.eval(b, a).unwrap());
        }
    }

    #[test]
    fn piecewise_tables() {
        let t = vec![vec![1.0, 0.2], vec![0.2, 0.5]];
        let g = Graphon::new(GraphonKind::PiecewiseConstant(t), Some(1.0)).unwrap();
        assert_eq!(g.eval(0.1, 0.9).unwrap(), 0.2);
        assert_eq!(g.eval(1.0, 1.0).unwrap(), 0.5);
        let m = g.matrix(&AlphaGrid::new(4).unwrap()).unwrap();
        assert_eq!(m[0][1], 1.0);
        assert_eq!(m[0][3], 0.2);
        let asym = vec![vec![1.0, 0.2], vec![0.3, 0.5]];
        assert!(Graphon::new(GraphonKind::PiecewiseConstant(asym), None).is_err());
        let over = Graphon::new(GraphonKind::Constant(2.0), Some(1.0)).unwrap();
        assert!(over.matrix(&AlphaGrid::new(2).unwrap()).is_err());
        let lopsided = Graphon::new(GraphonKind::Expression(Expr::parse("a").unwrap()), None).unwrap();
        assert!(lopsided.matrix(&AlphaGrid::new(3).unwrap()).is_err());
    }

    #[test]
    fn uniform_attachment_matrix() {
        let alpha = AlphaGrid::new(8).unwrap();
        let m = Graphon::uniform_attachment().matrix(&alpha).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                assert_eq!(m[j][k], 1.0 - alpha.node(j).max(alpha.node(k)));
            }
        }
    }

    fn model(n: usize, m: usize, ell2: &str, g: Graphon) -> CostModel {
        CostModel::from_expr(TorusGrid::new(n).unwrap(), AlphaGrid::new(m).unwrap(), &Expr::parse(ell2).unwrap(), &g)
            .unwrap()
    }

    #[test]
    fn assembly_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mu = random_density_field(&mut rng, 3, 4, 16);
        let zero = model(16, 4, "cos(2*pi*(x-y))", Graphon::constant(0.0).unwrap());
        assert_eq!(zero.assemble(&mu).unwrap().sup_norm(), 0.0);
        let flat = model(16, 4, "1", Graphon::constant(0.3).unwrap());
        let l = flat.assemble(&mu).unwrap();
        assert!(l.as_slice().iter().all(|v| (v - 0.3).abs() < 1e-14));
        let uniform = ClusterField::from_fn(3, 4, 16, |_, _, _| 1.0);
        let trig = model(16, 4, "cos(2*pi*(x-y))", Graphon::uniform_attachment());
        assert!(trig.assemble(&uniform).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn constant_graphon_factorises() {
        let base = ClusterField::from_fn(2, 5, 16, |k, _, i| 1.0 + 0.5 * ((i + k) as f64 * 0.4).sin());
        let mut fixed = base.clone();
        for k in 0..2 {
            let s = fixed.slice(k, 0).to_vec();
            let mass: f64 = s.iter().sum::<f64>() / 16.0;
            for j in 0..5 {
                fixed.slice_mut(k, j).iter_mut().zip(&s).for_each(|(v, x)| *v = x / mass);
            }
        }
        let c = model(16, 5, "cos(2*pi*(x-y)) + sin(2*pi*x)*sin(2*pi*y)", Graphon::constant(0.5).unwrap());
        assert!(c.assemble(&fixed).unwrap().alpha_variation() <= 1e-12);
    }

    #[test]
    fn point_mass_lipschitz_example() {
        let n = 20;
        let c = model(n, 1, "cos(2*pi*(x-y))", Graphon::constant(1.0).unwrap());
        let mut a = ClusterField::zeros(1, 1, n);
        let mut b = ClusterField::zeros(1, 1, n);
        a.slice_mut(0, 0)[3] = n as f64;
        b.slice_mut(0, 0)[5] = n as f64;
        let chk = check_ell1_lipschitz(&c, &a, &b).unwrap();
        assert!(chk.passed, "{chk:?}");
        let pi2 = std::f64::consts::PI * 2.0;
        assert!(chk.lhs <= (1.0 + pi2) * pi2 * 0.1 + 1e-12);
    }

    #[test]
    fn kernel_norms_of_cosine() {
        let c = model(64, 1, "cos(2*pi*(x-y))", Graphon::constant(1.0).unwrap());
        let k = c.kernel_norms();
        let pi2 = 2.0 * std::f64::consts::PI;
        assert!((k.sup - 1.0).abs() < 1e-12);
        assert!(k.dx <= pi2 && k.dx > 0.99 * pi2);
        assert!(k.dxdy <= pi2 * pi2 && k.dxdy > 0.99 * pi2 * pi2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn lipschitz_sweep_uniform_attachment(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = model(16, 4, "cos(2*pi*(x-y)) + 0.5*sin(2*pi*x)", Graphon::uniform_attachment());
            let a = random_density_field(&mut rng, 2, 4, 16);
            let b = random_density_field(&mut rng, 2, 4, 16);
            prop_assert!(check_ell1_lipschitz(&c, &a, &b).unwrap().passed);
        }

        #[test]
        fn assembly_is_affine(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = model(12, 3, "exp(cos(2*pi*(x-y)))", Graphon::uniform_attachment());
            let a = random_density_field(&mut rng, 2, 3, 12);
            let b = random_density_field(&mut rng, 2, 3, 12);
            let mid = a.blend(&b, 0.5).unwrap();
            let lhs = c.assemble(&mid).unwrap();
            let rhs = c.assemble(&a).unwrap().blend(&c.assemble(&b).unwrap(), 0.5).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
        }

        #[test]
        fn permuting_clusters_with_symmetric_table(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 4;
            let perm = [2usize, 0, 3, 1];
            let c = model(8, m, "cos(2*pi*(x-y))", Graphon::uniform_attachment());
            let gm = c.graphon_matrix().to_vec();
            // graphon with the permuted table reproduces the permuted output
            let table: Vec<Vec<f64>> = (0..m).map(|j| (0..m).map(|k| gm[perm[j]][perm[k]]).collect()).collect();
            let permuted = model(8, m, "cos(2*pi*(x-y))", Graphon::new(GraphonKind::PiecewiseConstant(table), None).unwrap());
            let mu = random_density_field(&mut rng, 2, m, 8);
            let out = c.assemble(&mu).unwrap().permute_clusters(&perm).unwrap();
            let out2 = permuted.assemble(&mu.permute_clusters(&perm).unwrap()).unwrap();
            prop_assert!(out.max_abs_diff(&out2).unwrap() < 1e-14);
        }
    }
}
