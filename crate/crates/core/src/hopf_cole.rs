//! The HJB stage of the fixed-point map.
//!
//! With `vt = v - b` the value equation reads
//! `vt_t - 1/2 |vt_x|^2 + 1/2 vt_xx + lt = 0`, `vt(T) = -b(T)`, where
//! `lt = l1 + b_t + 1/2 b_x^2 + 1/2 b_xx`. The substitution `w = exp(-vt)`
//! turns it into the linear backward problem
//! `w_t + 1/2 w_xx - lt w = 0`, `w(T) = exp(b(T))`,
//! which is solved per cluster with the parabolic solver. The drift fed to
//! the Fokker-Planck stage is `vt_x = -w_x / w`.

use crate::bounds::BoundCheck;
use crate::error::{check_len, GmfgError, Result};
use crate::expr::{check_derivative, check_periodic, Expr, Point, Var};
use crate::field::{ClusterField, SpaceTimeField};
use crate::graphon::{AlphaGrid, RunningCost};
use crate::grid::{TimeGrid, TorusGrid};
use crate::parabolic::solve_backward;

/// Smooth drift potential `b(t, a, x)` with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftPotential {
    b: Expr,
    bt: Expr,
    bx: Expr,
    bxx: Expr,
}

impl DriftPotential {
    pub fn zero() -> Self {
        let z = Expr::Const(0.0);
        DriftPotential {
            b: z.clone(),
            bt: z.clone(),
            bx: z.clone(),
            bxx: z,
        }
    }

    /// Builds the potential from a catalog expression, checking periodicity
    /// in `x` and that the symbolic derivatives agree with
    /// finite-difference probes. `key` names the config entry in errors.
    pub fn from_expr(b: Expr, horizon: f64, key: &str) -> Result<Self> {
        if b.uses(Var::Y) || b.uses(Var::Ap) {
            return Err(GmfgError::config(key, "drift potential may only use t, a and x"));
        }
        check_periodic(&b, Var::X, key, horizon)?;
        let bt = b.derivative(Var::T);
        let bx = b.derivative(Var::X);
        let bxx = bx.derivative(Var::X);
        check_derivative(&b, &bt, Var::T, key, horizon)?;
        check_derivative(&b, &bx, Var::X, key, horizon)?;
        check_derivative(&bx, &bxx, Var::X, key, horizon)?;
        Ok(DriftPotential { b, bt, bx, bxx })
    }

    pub fn parse(src: &str, horizon: f64) -> Result<Self> {
        Self::from_expr(Expr::parse(src)?, horizon, "drift.b")
    }

    pub fn expr(&self) -> &Expr {
        &self.b
    }

    pub fn eval(&self, t: f64, a: f64, x: f64) -> f64 {
        self.b.eval(&Point::txa(t, a, x))
    }

    pub fn grad(&self, t: f64, a: f64, x: f64) -> f64 {
        self.bx.eval(&Point::txa(t, a, x))
    }

    /// `b_t + 1/2 b_x^2 + 1/2 b_xx`, the correction turning `l1` into `lt`.
    pub fn correction(&self, t: f64, a: f64, x: f64) -> f64 {
        let p = Point::txa(t, a, x);
        let bx = self.bx.eval(&p);
        self.bt.eval(&p) + 0.5 * bx * bx + 0.5 * self.bxx.eval(&p)
    }

    pub fn sample(&self, grid: &TorusGrid, tgrid: &TimeGrid, alpha: &AlphaGrid) -> DriftSamples {
        let (levels, m, n) = (tgrid.levels(), alpha.len(), grid.n());
        let at = |f: &dyn Fn(f64, f64, f64) -> f64| {
            ClusterField::from_fn(levels, m, n, |k, j, i| f(tgrid.time(k), alpha.node(j), grid.node(i)))
        };
        DriftSamples {
            b: at(&|t, a, x| self.eval(t, a, x)),
            grad: at(&|t, a, x| self.grad(t, a, x)),
            correction: at(&|t, a, x| self.correction(t, a, x)),
        }
    }
}

/// Grid samples of `b`, `b_x` and `b_t + 1/2 b_x^2 + 1/2 b_xx`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSamples {
    pub b: ClusterField,
    pub grad: ClusterField,
    pub correction: ClusterField,
}

impl DriftSamples {
    /// `sup_x |b(T, a_j, x)|`.
    pub fn terminal_sup(&self, j: usize) -> f64 {
        let last = self.b.levels() - 1;
        self.b.slice(last, j).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn terminal_exp(&self, j: usize) -> Vec<f64> {
        let last = self.b.levels() - 1;
        self.b.slice(last, j).iter().map(|v| v.exp()).collect()
    }
}

/// `lt = l1 + b_t + 1/2 b_x^2 + 1/2 b_xx` on the grid.
pub fn effective_cost(ell1: &ClusterField, drift: &DriftSamples) -> Result<ClusterField> {
    ell1.zip_map(&drift.correction, |l, c| l + c)
}

/// Solves `w_t + 1/2 w_xx - lt w = 0` backward from `w(T) = terminal`.
pub fn solve_w(
    ell_tilde: &SpaceTimeField,
    terminal: &[f64],
    grid: &TorusGrid,
    tgrid: &TimeGrid,
    theta: f64,
) -> Result<SpaceTimeField> {
    let zero = SpaceTimeField::zeros(ell_tilde.levels(), ell_tilde.n());
    solve_backward(ell_tilde, &zero, terminal, grid, tgrid, theta)
}

/// Two-sided Harnack bound `exp(-B) <= w <= exp(B)` with
/// `B = |b(T)|_0 + |lt|_0 T`, reported as `max |log w| <= B`.
pub fn check_harnack(w: &SpaceTimeField, terminal_sup: f64, c_sup: f64, horizon: f64) -> BoundCheck {
    let log_sup = w.as_slice().iter().fold(0.0f64, |m, v| {
        if *v > 0.0 {
            m.max(v.ln().abs())
        } else {
            f64::INFINITY
        }
    });
    let rhs = terminal_sup + c_sup * horizon;
    BoundCheck::new("harnack", log_sup, rhs, 1e-12 * (1.0 + rhs))
}

/// Output of the HJB stage for every cluster.
#[derive(Debug, Clone)]
pub struct ValueField {
    pub w: ClusterField,
    pub v_tilde: ClusterField,
    pub grad_v_tilde: ClusterField,
    pub ell1: ClusterField,
    pub ell_tilde: ClusterField,
    /// Tightest Harnack check over all clusters.
    pub harnack: BoundCheck,
}

impl ValueField {
    /// `v = vt + b`.
    pub fn value(&self, drift: &DriftSamples) -> Result<ClusterField> {
        self.v_tilde.zip_map(&drift.b, |a, b| a + b)
    }

    /// `a* = -v_x = -(vt_x + b_x)`.
    pub fn control(&self, drift: &DriftSamples) -> Result<ClusterField> {
        self.grad_v_tilde.zip_map(&drift.grad, |g, b| -(g + b))
    }

    /// `max |vt + log w|`.
    pub fn hopf_cole_gap(&self) -> f64 {
        self.v_tilde
            .as_slice()
            .iter()
            .zip(self.w.as_slice())
            .fold(0.0, |m, (v, w)| m.max((v + w.ln()).abs()))
    }
}

/// Grids and scheme parameters shared by both PDE stages.
#[derive(Debug, Clone, Copy)]
pub struct Discretization {
    pub grid: TorusGrid,
    pub tgrid: TimeGrid,
    pub alpha: AlphaGrid,
    pub theta: f64,
}

/// The HJB stage: assembles `l1[mu]`, forms `lt`, solves for `w` per
/// cluster and returns `vt_x = -w_x / w` with the cached transforms.
pub fn phi1(mu: &ClusterField, cost: &dyn RunningCost, drift: &DriftSamples, disc: &Discretization) -> Result<ValueField> {
    let Discretization { grid, tgrid, alpha, theta } = *disc;
    check_len(alpha.len(), mu.clusters())?;
    check_len(tgrid.levels(), mu.levels())?;
    let ell1 = cost.assemble(mu)?;
    let ell_tilde = effective_cost(&ell1, drift)?;
    let per_cluster = crate::par::try_map_range(alpha.len(), |j| {
        let c = ell_tilde.cluster(j);
        let w = solve_w(&c, &drift.terminal_exp(j), &grid, &tgrid, theta)?;
        if let Some(pos) = w.as_slice().iter().position(|v| !(*v > 0.0)) {
            return Err(GmfgError::Positivity(format!(
                "Hopf-Cole variable w = {} at cluster {j}, time level {}, node {}; reduce the time step",
                w.as_slice()[pos],
                pos / grid.n(),
                pos % grid.n()
            )));
        }
        let harnack = check_harnack(&w, drift.terminal_sup(j), c.sup_norm(), tgrid.horizon());
        let mut grad = SpaceTimeField::zeros(w.levels(), w.n());
        for k in 0..w.levels() {
            let wx = grid.gradient(w.row(k))?;
            for (g, (d, v)) in grad.row_mut(k).iter_mut().zip(wx.iter().zip(w.row(k))) {
                *g = -d / v;
            }
        }
        Ok((w, grad, harnack))
    })?;
    let mut ws = Vec::with_capacity(per_cluster.len());
    let mut grads = Vec::with_capacity(per_cluster.len());
    let mut checks = Vec::with_capacity(per_cluster.len());
    for (w, g, c) in per_cluster {
        ws.push(w);
        grads.push(g);
        checks.push(c);
    }
    let w = ClusterField::from_cluster_slices(&ws)?;
    let mut v_tilde = w.map(|v| -v.ln());
    let last = tgrid.levels() - 1;
    for j in 0..alpha.len() {
        for (v, b) in v_tilde.slice_mut(last, j).iter_mut().zip(drift.b.slice(last, j)) {
            *v = -b;
        }
    }
    let harnack = BoundCheck::worst("harnack", checks).expect("at least one cluster");
    Ok(ValueField {
        grad_v_tilde: ClusterField::from_cluster_slices(&grads)?,
        w,
        v_tilde,
        ell1,
        ell_tilde,
        harnack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{CostModel, Graphon};
    use std::f64::consts::PI;

    fn disc(n: usize, steps: usize, horizon: f64, m: usize) -> Discretization {
        Discretization {
            grid: TorusGrid::new(n).unwrap(),
            tgrid: TimeGrid::new(horizon, steps).unwrap(),
            alpha: AlphaGrid::new(m).unwrap(),
            theta: 0.5,
        }
    }

    #[test]
    fn derivative_validation_at_load() {
        assert!(DriftPotential::parse("0.3*sin(2*pi*x)*(1 + t*a)", 1.0).is_ok());
        let err = DriftPotential::parse("x^2", 1.0).unwrap_err();
        assert!(err.to_string().contains("drift.b"));
        assert!(DriftPotential::parse("sin(2*pi*(x - y))", 1.0).is_err());
    }

    #[test]
    fn effective_cost_examples() {
        let d = disc(64, 4, 1.0, 2);
        let ell1 = ClusterField::from_fn(5, 2, 64, |k, j, i| (k + j + i) as f64 * 0.01);
        let zero = DriftPotential::zero().sample(&d.grid, &d.tgrid, &d.alpha);
        assert_eq!(effective_cost(&ell1, &zero).unwrap(), ell1);
        let lin = DriftPotential::parse("t", 1.0).unwrap().sample(&d.grid, &d.tgrid, &d.alpha);
        let shifted = effective_cost(&ell1, &lin).unwrap();
        assert!(shifted.zip_map(&ell1, |a, b| a - b - 1.0).unwrap().sup_norm() < 1e-15);
        let s = DriftPotential::parse("sin(2*pi*x)", 1.0).unwrap().sample(&d.grid, &d.tgrid, &d.alpha);
        let z = ClusterField::zeros(5, 2, 64);
        let lt = effective_cost(&z, &s).unwrap();
        for i in 0..64 {
            let x = d.grid.node(i);
            let exact = 0.5 * (2.0 * PI * (2.0 * PI * x).cos()).powi(2) - 2.0 * PI * PI * (2.0 * PI * x).sin();
            assert!((lt.get(2, 1, i) - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn w_for_constant_costs() {
        let d = disc(16, 100, 1.0, 1);
        let levels = d.tgrid.levels();
        let ones = vec![1.0; 16];
        let w0 = solve_w(&SpaceTimeField::zeros(levels, 16), &ones, &d.grid, &d.tgrid, 0.5).unwrap();
        assert!(w0.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let k = 0.7;
        let w = solve_w(&SpaceTimeField::constant(levels, 16, k), &ones, &d.grid, &d.tgrid, 0.5).unwrap();
        for step in 0..levels {
            let t = d.tgrid.time(step);
            let exact = (-k * (1.0 - t)).exp();
            assert!(w.row(step).iter().all(|v| (v - exact).abs() < 1e-13));
        }
        let chk = check_harnack(&w, 0.0, k, 1.0);
        assert!(chk.passed);
        let unit = solve_w(&SpaceTimeField::constant(levels, 16, 1.0), &ones, &d.grid, &d.tgrid, 0.5).unwrap();
        let lo = unit.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lo >= (-1.0f64).exp() * (1.0 - 1e-12));
    }

    #[test]
    fn harnack_degenerate_and_formula() {
        let w = SpaceTimeField::constant(3, 4, 1.0);
        let chk = check_harnack(&w, 0.0, 0.0, 1.0);
        assert!(chk.passed);
        assert_eq!(chk.rhs, 0.0);
        let chk = check_harnack(&w, 0.5, 2.0, 0.5);
        assert!((chk.rhs - 1.5).abs() < 1e-15);
        let bad = SpaceTimeField::constant(3, 4, 3.0);
        assert!(!check_harnack(&bad, 0.5, 0.0, 1.0).passed);
        let neg = SpaceTimeField::constant(3, 4, -1.0);
        assert!(!check_harnack(&neg, 10.0, 0.0, 1.0).passed);
    }

    fn cost(d: &Discretization, ell2: &str, g: Graphon) -> CostModel {
        CostModel::from_expr(d.grid, d.alpha, &Expr::parse(ell2).unwrap(), &g).unwrap()
    }

    #[test]
    fn decoupled_gives_zero_gradient() {
        let d = disc(32, 40, 0.5, 3);
        let mu = ClusterField::from_fn(41, 3, 32, |_, _, i| 1.0 + 0.5 * (2.0 * PI * i as f64 / 32.0).cos());
        let c = cost(&d, "cos(2*pi*(x-y))", Graphon::constant(0.0).unwrap());
        let drift = DriftPotential::zero().sample(&d.grid, &d.tgrid, &d.alpha);
        let vf = phi1(&mu, &c, &drift, &d).unwrap();
        assert_eq!(vf.grad_v_tilde.sup_norm(), 0.0);
        assert!(vf.harnack.passed);
        assert!(vf.hopf_cole_gap() <= 1e-12);
    }

    #[test]
    fn constant_graphon_outputs_are_alpha_independent() {
        let d = disc(32, 40, 0.5, 4);
        let mu = ClusterField::from_fn(41, 4, 32, |k, _, i| {
            1.0 + 0.5 * (2.0 * PI * (i as f64 / 32.0 - 0.01 * k as f64)).cos()
        });
        let c = cost(&d, "cos(2*pi*(x-y))", Graphon::constant(0.5).unwrap());
        let drift = DriftPotential::parse("0.2*sin(2*pi*x)*(1+t)", 0.5).unwrap().sample(&d.grid, &d.tgrid, &d.alpha);
        let vf = phi1(&mu, &c, &drift, &d).unwrap();
        assert!(vf.grad_v_tilde.alpha_variation() <= 1e-10);
        assert!(vf.grad_v_tilde.sup_norm() > 0.1);
        assert!(vf.harnack.passed, "{:?}", vf.harnack);
    }

    #[test]
    fn permuting_alpha_slices_permutes_outputs() {
        let d = disc(16, 20, 0.3, 3);
        let mu = ClusterField::from_fn(21, 3, 16, |k, j, i| {
            1.0 + 0.3 * (2.0 * PI * (i as f64 / 16.0 - 0.1 * (j + 1) as f64 - 0.01 * k as f64)).sin()
        });
        let table = vec![vec![0.5, 0.2, 0.1], vec![0.2, 0.9, 0.3], vec![0.1, 0.3, 0.4]];
        let perm = [2usize, 0, 1];
        let ptable: Vec<Vec<f64>> = (0..3).map(|j| (0..3).map(|k| table[perm[j]][perm[k]]).collect()).collect();
        let g = Graphon::new(crate::graphon::GraphonKind::PiecewiseConstant(table), None).unwrap();
        let pg = Graphon::new(crate::graphon::GraphonKind::PiecewiseConstant(ptable), None).unwrap();
        let drift = DriftPotential::parse("0.1*cos(2*pi*x)", 0.3).unwrap().sample(&d.grid, &d.tgrid, &d.alpha);
        let a = phi1(&mu, &cost(&d, "cos(2*pi*(x-y))", g), &drift, &d).unwrap();
        let b = phi1(&mu.permute_clusters(&perm).unwrap(), &cost(&d, "cos(2*pi*(x-y))", pg), &drift, &d).unwrap();
        let diff = a.grad_v_tilde.permute_clusters(&perm).unwrap().max_abs_diff(&b.grad_v_tilde).unwrap();
        assert!(diff < 1e-13, "{diff}");
    }
}
