//! Periodic (cyclic) tridiagonal systems.
//!
//! Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`
//! with indices taken modulo `n`, so `lower[0]` and `upper[n-1]` are the
//! corner entries. Solved by the Thomas algorithm with a Sherman-Morrison
//! correction for the corners.

use crate::error::{check_len, GmfgError, Result};

/// Max-norm residual accepted after a solve, relative to `max(1, |rhs|_inf)`.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(GmfgError::InvalidInput(format!(
                "cyclic tridiagonal system needs n >= 3, got {n}"
            )));
        }
        check_len(n, lower.len())?;
        check_len(n, upper.len())?;
        Ok(CyclicTridiagonal { lower, diag, upper })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `A x` with periodic wrap-around.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let prev = x[(i + n - 1) % n];
                let next = x[(i + 1) % n];
                self.lower[i] * prev + self.diag[i] * x[i] + self.upper[i] * next
            })
            .collect()
    }

    /// Solves `A x = rhs`; one step of iterative refinement is applied when
    /// the first residual exceeds [`RESIDUAL_TOL`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), rhs.len())?;
        let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut x = self.solve_once(rhs)?;
        let mut res = self.residual(&x, rhs);
        if max_abs(&res) > RESIDUAL_TOL * scale {
            let dx = self.solve_once(&res)?;
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            res = self.residual(&x, rhs);
            let r = max_abs(&res);
            if r > RESIDUAL_TOL * scale || !r.is_finite() {
                return Err(GmfgError::NumericalFailure(format!(
                    "cyclic tridiagonal residual {r:.3e} above tolerance"
                )));
            }
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        self.apply(x).iter().zip(rhs).map(|(ax, r)| r - ax).collect()
    }

    fn solve_once(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let alpha = self.upper[n - 1]; // A[n-1][0]
        let beta = self.lower[0]; // A[0][n-1]
        let gamma = -self.diag[0];
        if gamma == 0.0 {
            return Err(GmfgError::NumericalFailure("zero leading diagonal entry".into()));
        }
        let mut bb = self.diag.clone();
        bb[0] -= gamma;
        bb[n - 1] -= alpha * beta / gamma;

        let y = thomas(&self.lower, &bb, &self.upper, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = thomas(&self.lower, &bb, &self.upper, &u)?;

        let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
        if denom == 0.0 || !denom.is_finite() {
            return Err(GmfgError::NumericalFailure("singular cyclic system".into()));
        }
        let fact = (y[0] + beta * y[n - 1] / gamma) / denom;
        Ok(y.iter().zip(&z).map(|(yi, zi)| yi - fact * zi).collect())
    }
}

/// Non-periodic Thomas solve; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut gam = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = diag[0];
    if bet == 0.0 {
        return Err(GmfgError::NumericalFailure("zero pivot in tridiagonal solve".into()));
    }
    x[0] = rhs[0] / bet;
    for j in 1..n {
        gam[j] = upper[j - 1] / bet;
        bet = diag[j] - lower[j] * gam[j];
        if bet == 0.0 {
            return Err(GmfgError::NumericalFailure("zero pivot in tridiagonal solve".into()));
        }
        x[j] = (rhs[j] - lower[j] * x[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        let next = x[j + 1];
        x[j] -= gam[j + 1] * next;
    }
    Ok(x)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
