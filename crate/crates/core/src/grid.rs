//! Uniform periodic grid on the unit circle and the finite-difference
//! operators shared by every PDE module.
//!
//! Grid functions are plain `&[f64]` slices of length `n`; node `i` sits at
//! `x_i = i / n`. All stencils use indices modulo `n`.

use crate::error::{check_len, GmfgError, Result};

/// Maps a real number onto the fundamental domain `[0, 1)`.
pub fn wrap(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(GmfgError::InvalidInput(format!("cannot wrap non-finite value {x}")));
    }
    Ok(wrap_unchecked(x))
}

#[inline]
pub(crate) fn wrap_unchecked(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Canonical distance on the circle: `min_z |x - y - z|`, always in `[0, 0.5]`.
pub fn torus_distance(x: f64, y: f64) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(GmfgError::InvalidInput(format!(
            "torus distance of non-finite values ({x}, {y})"
        )));
    }
    Ok(torus_distance_unchecked(x, y))
}

#[inline]
pub(crate) fn torus_distance_unchecked(x: f64, y: f64) -> f64 {
    let d = wrap_unchecked(x - y);
    d.min(1.0 - d)
}

/// Uniform grid with `n` nodes on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    n: usize,
    h: f64,
}

impl TorusGrid {
    pub const MIN_NODES: usize = 4;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(GmfgError::InvalidInput(format!(
                "torus grid needs at least {} nodes, got {n}",
                Self::MIN_NODES
            )));
        }
        Ok(TorusGrid { n, h: 1.0 / n as f64 })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.node(i))).collect()
    }

    #[inline]
    fn next(&self, i: usize) -> usize {
        if i + 1 == self.n {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.n - 1
        } else {
            i - 1
        }
    }

    /// Central difference `(u_{i+1} - u_{i-1}) / 2h`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        let inv = 0.5 / self.h;
        Ok((0..self.n)
            .map(|i| (u[self.next(i)] - u[self.prev(i)]) * inv)
            .collect())
    }

    /// Three-point Laplacian `(u_{i+1} - 2 u_i + u_{i-1}) / h^2`.
    pub fn laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        let inv = 1.0 / (self.h * self.h);
        Ok((0..self.n)
            .map(|i| (u[self.next(i)] - 2.0 * u[i] + u[self.prev(i)]) * inv)
            .collect())
    }

    /// Conservative divergence `(F_{i+1/2} - F_{i-1/2}) / h` with face values
    /// `F_{i+1/2} = (F_i + F_{i+1}) / 2`. The node sum telescopes to zero.
    pub fn divergence(&self, flux: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, flux.len())?;
        let faces: Vec<f64> = (0..self.n)
            .map(|i| 0.5 * (flux[i] + flux[self.next(i)]))
            .collect();
        let inv = 1.0 / self.h;
        Ok((0..self.n)
            .map(|i| (faces[i] - faces[self.prev(i)]) * inv)
            .collect())
    }

    /// Forward difference quotient `(u_{i+1} - u_i) / h`.
    pub fn forward_difference(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        let inv = 1.0 / self.h;
        Ok((0..self.n).map(|i| (u[self.next(i)] - u[i]) * inv).collect())
    }

    /// Fourth-order central first derivative. Used by diagnostics that must
    /// not share truncation error with the second-order solver stencils.
    pub fn gradient4(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        let n = self.n;
        let inv = 1.0 / (12.0 * self.h);
        Ok((0..n)
            .map(|i| {
                let p1 = u[(i + 1) % n];
                let p2 = u[(i + 2) % n];
                let m1 = u[(i + n - 1) % n];
                let m2 = u[(i + n - 2) % n];
                (-p2 + 8.0 * p1 - 8.0 * m1 + m2) * inv
            })
            .collect())
    }

    /// Fourth-order central second derivative.
    pub fn laplacian4(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, u.len())?;
        let n = self.n;
        let inv = 1.0 / (12.0 * self.h * self.h);
        Ok((0..n)
            .map(|i| {
                let p1 = u[(i + 1) % n];
                let p2 = u[(i + 2) % n];
                let m1 = u[(i + n - 1) % n];
                let m2 = u[(i + n - 2) % n];
                (-p2 + 16.0 * p1 - 30.0 * u[i] + 16.0 * m1 - m2) * inv
            })
            .collect())
    }

    /// Periodic piecewise-linear interpolation of nodal values at `x`.
    #[inline]
    pub fn interpolate(&self, u: &[f64], x: f64) -> f64 {
        let s = wrap_unchecked(x) * self.n as f64;
        let i = (s.floor() as usize).min(self.n - 1);
        let frac = s - i as f64;
        let j = self.next(i);
        u[i] + frac * (u[j] - u[i])
    }

    /// Index of the node closest to `x` on the circle.
    #[inline]
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = (wrap_unchecked(x) * self.n as f64).round() as usize;
        s % self.n
    }
}

/// Uniform time grid `t_k = k * dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(GmfgError::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(GmfgError::InvalidInput("time grid needs at least one step".into()));
        }
        Ok(TimeGrid {
            horizon,
            steps,
            dt: horizon / steps as f64,
        })
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of time levels, `steps + 1`.
    #[inline]
    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }
}
