//! The Fokker-Planck stage of the fixed-point map:
//! `nu_t = (beta nu)_x + 1/2 nu_xx`, `nu(0) = m0`, per cluster, where
//! `beta = vt_x` is the gradient returned by the HJB stage. Mass moves
//! against `beta`; the particle picture has drift `-beta`.
//!
//! Each step is implicit in both advection and diffusion:
//! `nu^{k+1} - dt [(beta nu^{k+1})_x + 1/2 nu^{k+1}_xx] = nu^k`
//! with central differences. Every column of the matrix sums to one, so
//! mass is conserved to rounding, and the matrix is an M-matrix (hence
//! positivity preserving) whenever the cell Peclet number
//! `max|beta| h` is at most one.

use crate::bounds::BoundCheck;
use crate::error::{check_len, GmfgError, Result};
use crate::expr::{Expr, Point, Var};
use crate::field::ClusterField;
use crate::graphon::AlphaGrid;
use crate::grid::{TimeGrid, TorusGrid};
use crate::tridiag::CyclicTridiagonal;
use crate::wasserstein::{holder_half_ratio, moment_torus};

/// Densities `mu(t_k, a_j, x_i)`; see [`check_density`] for the invariants.
pub type DensityField = ClusterField;

pub const MASS_TOL: f64 = 1e-10;
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// Initial densities `m0(a_j, .)`, normalised to unit mass once at load.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    n: usize,
    slices: Vec<Vec<f64>>,
}

impl InitialDensity {
    /// Validates nonnegativity and rescales every slice to `h sum = 1`.
    pub fn new(grid: &TorusGrid, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(GmfgError::InvalidInput("initial density has no clusters".into()));
        }
        let h = grid.h();
        let mut out = Vec::with_capacity(slices.len());
        for (j, s) in slices.into_iter().enumerate() {
            check_len(grid.n(), s.len())?;
            if let Some(v) = s.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(GmfgError::InvalidInput(format!(
                    "initial density of cluster {j} has invalid value {v}"
                )));
            }
            let mass = h * s.iter().sum::<f64>();
            if !(mass > 0.0) {
                return Err(GmfgError::InvalidInput(format!("initial density of cluster {j} has zero mass")));
            }
            out.push(s.into_iter().map(|v| v / mass).collect());
        }
        Ok(InitialDensity { n: grid.n(), slices: out })
    }

    /// Samples a catalog expression in `a` and `x` on the grids.
    pub fn from_expr(grid: &TorusGrid, alpha: &AlphaGrid, e: &Expr) -> Result<Self> {
        if e.uses(Var::T) || e.uses(Var::Y) || e.uses(Var::Ap) {
            return Err(GmfgError::config("initial.m0", "initial density may only use a and x"));
        }
        let slices = (0..alpha.len())
            .map(|j| grid.sample(|x| e.eval(&Point { a: alpha.node(j), x, ..Default::default() })))
            .collect();
        Self::new(grid, slices).map_err(|err| GmfgError::config("initial.m0", err.to_string()))
    }

    pub fn uniform(grid: &TorusGrid, clusters: usize) -> Self {
        InitialDensity {
            n: grid.n(),
            slices: vec![vec![1.0; grid.n()]; clusters],
        }
    }

    pub fn clusters(&self) -> usize {
        self.slices.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        &self.slices[j]
    }

    /// The field equal to `m0` at every time level.
    pub fn constant_in_time(&self, levels: usize) -> ClusterField {
        ClusterField::from_fn(levels, self.clusters(), self.n, |_, j, i| self.slices[j][i])
    }
}

/// Peclet guard `max|beta| h <= 1`.
pub fn check_peclet(grid: &TorusGrid, max_drift: f64) -> Result<()> {
    if !max_drift.is_finite() {
        return Err(GmfgError::NumericalFailure("non-finite Fokker-Planck drift".into()));
    }
    if max_drift * grid.h() > 1.0 {
        return Err(GmfgError::StabilityGuard {
            max_drift,
            required_h: 1.0 / max_drift,
            required_n: max_drift.ceil() as usize,
            n: grid.n(),
        });
    }
    Ok(())
}

/// One implicit step from `nu_k` using the drift at the new time level.
pub fn fpk_step(grid: &TorusGrid, nu_k: &[f64], drift_next: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_len(grid.n(), nu_k.len())?;
    check_len(grid.n(), drift_next.len())?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(GmfgError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    check_peclet(grid, drift_next.iter().fold(0.0, |m, v| m.max(v.abs())))?;
    step_unchecked(grid, nu_k, drift_next, dt)
}

fn step_unchecked(grid: &TorusGrid, nu_k: &[f64], beta: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = grid.n();
    let h = grid.h();
    let s = 0.5 * dt / (h * h);
    let lower: Vec<f64> = (0..n).map(|i| -s * (1.0 - h * beta[(i + n - 1) % n])).collect();
    let upper: Vec<f64> = (0..n).map(|i| -s * (1.0 + h * beta[(i + 1) % n])).collect();
    let diag = vec![1.0 + 2.0 * s; n];
    let out = CyclicTridiagonal::new(lower, diag, upper)?.solve(nu_k)?;
    if let Some((i, v)) = out.iter().enumerate().find(|(_, v)| **v < -NEGATIVITY_TOL) {
        return Err(GmfgError::NumericalFailure(format!(
            "Fokker-Planck step produced negative density {v} at node {i}"
        )));
    }
    Ok(out)
}

/// The Fokker-Planck stage: forward trajectories for every cluster.
pub fn phi2(grad_v_tilde: &ClusterField, m0: &InitialDensity, grid: &TorusGrid, tgrid: &TimeGrid) -> Result<DensityField> {
    check_len(tgrid.levels(), grad_v_tilde.levels())?;
    check_len(m0.clusters(), grad_v_tilde.clusters())?;
    check_len(grid.n(), grad_v_tilde.n())?;
    check_len(grid.n(), m0.n())?;
    check_peclet(grid, grad_v_tilde.sup_norm())?;
    let dt = tgrid.dt();
    let slices = crate::par::try_map_range(m0.clusters(), |j| {
        let mut traj = Vec::with_capacity(tgrid.levels());
        traj.push(m0.slice(j).to_vec());
        for k in 0..tgrid.steps() {
            let next = step_unchecked(grid, &traj[k], grad_v_tilde.slice(k + 1, j), dt)?;
            traj.push(next);
        }
        Ok(traj)
    })?;
    Ok(ClusterField::from_fn(tgrid.levels(), m0.clusters(), grid.n(), |k, j, i| slices[j][k][i]))
}

/// Mass and positivity of a density field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensityCheck {
    pub max_mass_error: f64,
    pub min_value: f64,
    pub passed: bool,
}

pub fn check_density(grid: &TorusGrid, mu: &ClusterField) -> DensityCheck {
    let h = grid.h();
    let mut max_mass_error = 0.0f64;
    let mut min_value = f64::INFINITY;
    for k in 0..mu.levels() {
        for j in 0..mu.clusters() {
            let s = mu.slice(k, j);
            max_mass_error = max_mass_error.max((h * s.iter().sum::<f64>() - 1.0).abs());
            min_value = s.iter().fold(min_value, |m, v| m.min(*v));
        }
    }
    let passed = max_mass_error <= MASS_TOL && min_value >= -NEGATIVITY_TOL;
    DensityCheck {
        max_mass_error,
        min_value,
        passed,
    }
}

/// Half-Holder continuity in time:
/// `W1(mu(t), mu(s)) <= (1 + sqrt(T) |beta|_0) |t - s|^{1/2}`.
pub fn check_holder_half(grid: &TorusGrid, tgrid: &TimeGrid, mu: &ClusterField, drift_bound: f64) -> Result<BoundCheck> {
    let rhs = 1.0 + tgrid.horizon().sqrt() * drift_bound;
    let lhs = if mu.levels() < 2 { 0.0 } else { holder_half_ratio(grid, tgrid, mu)? };
    Ok(BoundCheck::new("holder_half", lhs, rhs, 1e-12 * rhs))
}

/// First-moment growth: `sup_t int d(x, 0) mu(t, dx) - int d(x, 0) m0(dx)
/// <= |beta|_0 T + sqrt(T)`, worst cluster reported.
pub fn check_first_moment(
    grid: &TorusGrid,
    tgrid: &TimeGrid,
    mu: &ClusterField,
    m0: &InitialDensity,
    drift_bound: f64,
) -> Result<BoundCheck> {
    check_len(m0.clusters(), mu.clusters())?;
    let t = tgrid.horizon();
    let mut growth = f64::NEG_INFINITY;
    for j in 0..mu.clusters() {
        let base = moment_torus(grid, m0.slice(j));
        for k in 0..mu.levels() {
            growth = growth.max(moment_torus(grid, mu.slice(k, j)) - base);
        }
    }
    let rhs = drift_bound * t + t.sqrt();
    Ok(BoundCheck::new("first_moment", growth, rhs, 1e-12 * (1.0 + rhs)))
}
