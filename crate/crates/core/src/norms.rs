//! Discrete parabolic Holder seminorms of solution fields.
//!
//! For `delta` in `(0, 1]` the surrogate of `|u|_{delta/2, delta}` is
//! `sup|u| + [u]_x + [u]_t` with
//! `[u]_x = max |u(t, x) - u(t, y)| / d(x, y)^delta` and
//! `[u]_t = max |u(t, x) - u(s, x)| / |t - s|^{delta/2}`.
//! Pairs are restricted to dyadic lags (1, 2, 4, ... grid steps), so every
//! value is a lower bound of the continuum seminorm.

use serde::{Deserialize, Serialize};

use crate::error::{GmfgError, Result};
use crate::field::ClusterField;
use crate::grid::{TimeGrid, TorusGrid};
use crate::wasserstein::{s_half_norm, SHalfNorm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderNorms {
    pub delta: f64,
    pub sup: f64,
    pub space: f64,
    pub time: f64,
}

impl HolderNorms {
    pub fn total(&self) -> f64 {
        self.sup + self.space + self.time
    }
}

fn dyadic(limit: usize) -> impl Iterator<Item = usize> {
    std::iter::successors(Some(1usize), |l| l.checked_mul(2)).take_while(move |l| *l <= limit)
}

pub fn holder_norms(grid: &TorusGrid, tgrid: &TimeGrid, u: &ClusterField, delta: f64) -> Result<HolderNorms> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(GmfgError::InvalidInput(format!("Holder exponent must lie in (0, 1], got {delta}")));
    }
    if u.levels() != tgrid.levels() || u.n() != grid.n() {
        return Err(GmfgError::ShapeMismatch {
            expected: tgrid.levels() * grid.n(),
            got: u.levels() * u.n(),
        });
    }
    let n = grid.n();
    let per_cluster = crate::par::map_range(u.clusters(), |j| {
        let mut space = 0.0f64;
        let mut time = 0.0f64;
        for lag in dyadic(n / 2) {
            let scale = (lag as f64 * grid.h()).powf(delta);
            for k in 0..u.levels() {
                let s = u.slice(k, j);
                for i in 0..n {
                    space = space.max((s[(i + lag) % n] - s[i]).abs() / scale);
                }
            }
        }
        for lag in dyadic(tgrid.steps()) {
            let scale = (lag as f64 * tgrid.dt()).powf(0.5 * delta);
            for k in 0..u.levels() - lag {
                let (a, b) = (u.slice(k, j), u.slice(k + lag, j));
                for i in 0..n {
                    time = time.max((b[i] - a[i]).abs() / scale);
                }
            }
        }
        (space, time)
    });
    Ok(HolderNorms {
        delta,
        sup: u.sup_norm(),
        space: per_cluster.iter().map(|p| p.0).fold(0.0, f64::max),
        time: per_cluster.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

/// Norm diagnostics of an equilibrium triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionNorms {
    pub value: HolderNorms,
    pub gradient: HolderNorms,
    pub density: HolderNorms,
    pub density_s_half: SHalfNorm,
}

pub fn solution_norms(
    grid: &TorusGrid,
    tgrid: &TimeGrid,
    value: &ClusterField,
    gradient: &ClusterField,
    mu: &ClusterField,
    delta: f64,
) -> Result<SolutionNorms> {
    Ok(SolutionNorms {
        value: holder_norms(grid, tgrid, value, delta)?,
        gradient: holder_norms(grid, tgrid, gradient, delta)?,
        density: holder_norms(grid, tgrid, mu, delta)?,
        density_s_half: s_half_norm(grid, tgrid, mu)?,
    })
}
