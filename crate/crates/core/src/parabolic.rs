//! Linear parabolic problems `du/dt = 1/2 u_xx - c u + f`, `u(0) = psi`, on
//! the circle.
//!
//! Time stepping is a theta-scheme (Crank-Nicolson by default) in which the
//! reaction term uses an exponentially fitted coefficient: with
//! `cbar = theta c_{k+1} + (1 - theta) c_k` and `E = exp(-cbar dt)`, the
//! reaction is applied with `chat dt = (1 - E) / ((1 - theta) + theta E)`
//! and the source is scaled by `chat / cbar`. For `theta = 1/2` this is
//! `chat dt = 2 tanh(cbar dt / 2)`, which differs from `cbar dt` at third
//! order, so the scheme stays second order. Spatially constant problems
//! are then integrated exactly, which keeps the comparison-principle and
//! Harnack bounds sharp on the discrete level.

use crate::bounds::BoundCheck;
use crate::error::{check_len, GmfgError, Result};
use crate::field::SpaceTimeField;
use crate::grid::{TimeGrid, TorusGrid};
use crate::tridiag::CyclicTridiagonal;

pub const DEFAULT_THETA: f64 = 0.5;

/// Coefficients of `du/dt = 1/2 u_xx - c u + f` with initial datum `psi`.
#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    pub c: SpaceTimeField,
    pub f: SpaceTimeField,
    pub psi: Vec<f64>,
}

impl ParabolicProblem {
    pub fn new(c: SpaceTimeField, f: SpaceTimeField, psi: Vec<f64>) -> Result<Self> {
        check_len(c.levels(), f.levels())?;
        check_len(c.n(), f.n())?;
        check_len(c.n(), psi.len())?;
        Ok(ParabolicProblem { c, f, psi })
    }

    /// Problem with zero initial datum.
    pub fn with_zero_datum(c: SpaceTimeField, f: SpaceTimeField) -> Result<Self> {
        let n = c.n();
        Self::new(c, f, vec![0.0; n])
    }

    fn conforms(&self, grid: &TorusGrid, tgrid: &TimeGrid) -> Result<()> {
        check_len(grid.n(), self.c.n())?;
        check_len(tgrid.levels(), self.c.levels())
    }
}

/// Effective reaction `chat dt` and source factor `chat / cbar` for one
/// node; `x = cbar dt`.
#[inline]
fn fitted(x: f64, theta: f64) -> (f64, f64) {
    let e = (-x).exp();
    let denom = (1.0 - theta) + theta * e;
    // (1 - E) / x, continuous at 0
    let one_minus_e_over_x = if x.abs() < 1e-300 { 1.0 } else { -(-x).exp_m1() / x };
    (one_minus_e_over_x * x / denom, one_minus_e_over_x / denom)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(GmfgError::InvalidInput(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok(())
}

fn check_step(dt: f64, theta: f64, c_sup: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(GmfgError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    check_theta(theta)?;
    if theta < 1.0 && dt * c_sup >= 1.0 {
        return Err(GmfgError::TimeStepTooLarge {
            product: dt * c_sup,
            required_dt: 1.0 / c_sup,
        });
    }
    Ok(())
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One theta-step from `u_k` to `u_{k+1}`.
///
/// `c_k`, `c_next` are the reaction coefficients and `f_k`, `f_next` the
/// sources at the two time levels.
#[allow(clippy::too_many_arguments)]
pub fn step_theta(
    grid: &TorusGrid,
    u_k: &[f64],
    c_k: &[f64],
    c_next: &[f64],
    f_k: &[f64],
    f_next: &[f64],
    dt: f64,
    theta: f64,
) -> Result<Vec<f64>> {
    let n = grid.n();
    for len in [u_k.len(), c_k.len(), c_next.len(), f_k.len(), f_next.len()] {
        check_len(n, len)?;
    }
    check_step(dt, theta, sup(c_k).max(sup(c_next)))?;
    step_unchecked(grid, u_k, c_k, c_next, f_k, f_next, dt, theta)
}

#[allow(clippy::too_many_arguments)]
fn step_unchecked(
    grid: &TorusGrid,
    u_k: &[f64],
    c_k: &[f64],
    c_next: &[f64],
    f_k: &[f64],
    f_next: &[f64],
    dt: f64,
    theta: f64,
) -> Result<Vec<f64>> {
    let n = grid.n();
    let h = grid.h();
    let r = 0.5 * dt / (h * h);
    // increment form: (1 + theta q) d - theta r D d = -q u + r D u + s,
    // with D the periodic second difference and d = u_{k+1} - u_k
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let cbar = theta * c_next[i] + (1.0 - theta) * c_k[i];
        let fbar = theta * f_next[i] + (1.0 - theta) * f_k[i];
        let (q, scale) = fitted(cbar * dt, theta);
        diag[i] = 1.0 + theta * q + 2.0 * theta * r;
        let lap = u_k[(i + n - 1) % n] - 2.0 * u_k[i] + u_k[(i + 1) % n];
        rhs[i] = -q * u_k[i] + r * lap + fbar * scale * dt;
    }
    let delta = if theta == 0.0 {
        rhs
    } else {
        let off = vec![-theta * r; n];
        CyclicTridiagonal::new(off.clone(), diag, off)?.solve(&rhs)?
    };
    Ok(u_k.iter().zip(&delta).map(|(u, d)| u + d).collect())
}

/// Solves the forward problem on `[0, T]`; row `k` of the result is `u(t_k)`.
pub fn solve(problem: &ParabolicProblem, grid: &TorusGrid, tgrid: &TimeGrid, theta: f64) -> Result<SpaceTimeField> {
    problem.conforms(grid, tgrid)?;
    check_step(tgrid.dt(), theta, problem.c.sup_norm())?;
    let dt = tgrid.dt();
    let mut out = SpaceTimeField::zeros(tgrid.levels(), grid.n());
    out.row_mut(0).copy_from_slice(&problem.psi);
    for k in 0..tgrid.steps() {
        let next = step_unchecked(
            grid,
            out.row(k),
            problem.c.row(k),
            problem.c.row(k + 1),
            problem.f.row(k),
            problem.f.row(k + 1),
            dt,
            theta,
        )?;
        out.row_mut(k + 1).copy_from_slice(&next);
    }
    Ok(out)
}

/// Solves the backward problem `dv/dt + 1/2 v_xx - c v + f = 0`,
/// `v(T) = terminal`, by running [`solve`] on time-reflected coefficients
/// and reflecting the result. `c` and `f` are indexed by forward time.
pub fn solve_backward(
    c: &SpaceTimeField,
    f: &SpaceTimeField,
    terminal: &[f64],
    grid: &TorusGrid,
    tgrid: &TimeGrid,
    theta: f64,
) -> Result<SpaceTimeField> {
    let problem = ParabolicProblem::new(c.time_reversed(), f.time_reversed(), terminal.to_vec())?;
    Ok(solve(&problem, grid, tgrid, theta)?.time_reversed())
}

/// Comparison-principle bound for zero initial data:
/// `|u|_0 <= exp(|c|_0 T) |f|_0 T`.
pub fn check_sup_bound(u: &SpaceTimeField, problem: &ParabolicProblem, tgrid: &TimeGrid) -> BoundCheck {
    let t = tgrid.horizon();
    let rhs = (problem.c.sup_norm() * t).exp() * problem.f.sup_norm() * t;
    BoundCheck::new("sup_bound", u.sup_norm(), rhs, 1e-8 * (1.0 + rhs))
}

/// Lipschitz dependence on the source for shared `c` and zero data:
/// `|u1 - u2|_0 <= T exp(T |c|_0) |f1 - f2|_0`.
pub fn check_sensitivity(
    u1: &SpaceTimeField,
    u2: &SpaceTimeField,
    c: &SpaceTimeField,
    f1: &SpaceTimeField,
    f2: &SpaceTimeField,
    tgrid: &TimeGrid,
) -> Result<BoundCheck> {
    let t = tgrid.horizon();
    let df = f1.max_abs_diff(f2)?;
    let rhs = t * (t * c.sup_norm()).exp() * df;
    Ok(BoundCheck::new("sensitivity", u1.max_abs_diff(u2)?, rhs, 1e-8 * (1.0 + rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn constant_problem(levels: usize, n: usize, c: f64, f: f64) -> ParabolicProblem {
        ParabolicProblem::with_zero_datum(
            SpaceTimeField::constant(levels, n, c),
            SpaceTimeField::constant(levels, n, f),
        )
        .unwrap()
    }

    #[test]
    fn constant_is_steady_under_heat_flow() {
        let g = TorusGrid::new(16).unwrap();
        let z = vec![0.0; 16];
        let u = step_theta(&g, &[1.0; 16], &z, &z, &z, &z, 0.01, 0.5).unwrap();
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn reaction_step_matches_exact_ode() {
        let g = TorusGrid::new(8).unwrap();
        let ones = vec![1.0; 8];
        let dt = 0.01;
        let u = step_theta(&g, &[0.0; 8], &ones, &ones, &ones, &ones, dt, 0.5).unwrap();
        let exact = 1.0 - (-dt).exp();
        for v in u {
            assert!((v - exact).abs() < dt.powi(3));
        }
    }

    #[test]
    fn heat_mode_amplitude_per_step() {
        let n = 64;
        let g = TorusGrid::new(n).unwrap();
        let dt = 1e-3;
        let u0 = g.sample(|x| (2.0 * PI * x).sin());
        let z = vec![0.0; n];
        let u1 = step_theta(&g, &u0, &z, &z, &z, &z, dt, 0.5).unwrap();
        let i = n / 4;
        let factor = u1[i] / u0[i];
        let exact = (-2.0 * PI * PI * dt).exp();
        let h = g.h();
        // truncation: symbol error 2 pi^2 dt * (2 pi h)^2 / 12 plus O(dt^3)
        let tol = dt.powi(3) * (2.0 * PI * PI).powi(3) + 2.0 * PI * PI * dt * (2.0 * PI * h).powi(2) / 12.0 * 1.01;
        assert!((factor - exact).abs() < tol, "{factor} vs {exact}");
    }

    fn heat_error(n: usize, steps: usize) -> f64 {
        let g = TorusGrid::new(n).unwrap();
        let tg = TimeGrid::new(0.1, steps).unwrap();
        let psi = g.sample(|x| (2.0 * PI * x).sin());
        let p = ParabolicProblem::new(
            SpaceTimeField::zeros(tg.levels(), n),
            SpaceTimeField::zeros(tg.levels(), n),
            psi,
        )
        .unwrap();
        let u = solve(&p, &g, &tg, 0.5).unwrap();
        let decay = (-2.0 * PI * PI * 0.1f64).exp();
        let exact = g.sample(|x| decay * (2.0 * PI * x).sin());
        u.row(tg.steps()).iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn heat_eigenmode_closed_form() {
        let e1 = heat_error(128, 200);
        assert!(e1 <= 1e-4, "error {e1}");
        let e0 = heat_error(64, 100);
        assert!(e0 / e1 >= 3.5, "ratio {}", e0 / e1);
    }

    #[test]
    fn ode_closed_form_and_comparison_bound() {
        let n = 16;
        let tg = TimeGrid::new(1.0, 200).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let p = constant_problem(tg.levels(), n, 1.0, 1.0);
        let u = solve(&p, &g, &tg, 0.5).unwrap();
        let target = 1.0 - (-1.0f64).exp();
        assert!(u.row(200).iter().all(|v| (v - target).abs() < 1e-4));
        let chk = check_sup_bound(&u, &p, &tg);
        assert!(chk.passed);
        assert!((chk.rhs - 1.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn barrier_case_with_zero_reaction() {
        let n = 16;
        let tg = TimeGrid::new(0.5, 50).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let p = constant_problem(tg.levels(), n, 0.0, 2.0);
        let u = solve(&p, &g, &tg, 0.5).unwrap();
        let chk = check_sup_bound(&u, &p, &tg);
        assert!(chk.passed);
        assert!((chk.rhs - 1.0).abs() < 1e-15);
        assert!((chk.lhs - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let n = 12;
        let tg = TimeGrid::new(1.0, 30).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let c = SpaceTimeField::from_fn(tg.levels(), n, |k, i| (k as f64 * 0.1 + i as f64).sin());
        let p = ParabolicProblem::with_zero_datum(c, SpaceTimeField::zeros(tg.levels(), n)).unwrap();
        assert_eq!(solve(&p, &g, &tg, 0.5).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn sensitivity_unit_source() {
        let n = 16;
        let tg = TimeGrid::new(1.0, 100).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let p1 = constant_problem(tg.levels(), n, 0.0, 1.0);
        let p2 = constant_problem(tg.levels(), n, 0.0, 0.0);
        let u1 = solve(&p1, &g, &tg, 0.5).unwrap();
        let u2 = solve(&p2, &g, &tg, 0.5).unwrap();
        let chk = check_sensitivity(&u1, &u2, &p1.c, &p1.f, &p2.f, &tg).unwrap();
        assert!(chk.passed);
        assert!((chk.lhs - 1.0).abs() < 1e-12);
        assert!((chk.rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refuses_large_explicit_reaction() {
        let n = 8;
        let tg = TimeGrid::new(1.0, 2).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let p = constant_problem(tg.levels(), n, 4.0, 0.0);
        assert!(matches!(solve(&p, &g, &tg, 0.5), Err(GmfgError::TimeStepTooLarge { .. })));
        assert!(solve(&p, &g, &tg, 1.0).is_ok());
        assert!(solve(&p, &g, &tg, 1.5).is_err());
    }

    #[test]
    fn backward_solve_is_exact_reflection() {
        let n = 16;
        let tg = TimeGrid::new(0.3, 40).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let c = SpaceTimeField::from_fn(tg.levels(), n, |k, i| 0.5 + 0.3 * ((k + i) as f64).cos());
        let f = SpaceTimeField::from_fn(tg.levels(), n, |k, i| ((2 * k + i) as f64).sin());
        let terminal = g.sample(|x| (2.0 * PI * x).cos());
        let v = solve_backward(&c, &f, &terminal, &g, &tg, 0.5).unwrap();
        assert_eq!(v.row(tg.steps()), terminal.as_slice());
        let p = ParabolicProblem::new(c.time_reversed(), f.time_reversed(), terminal.clone()).unwrap();
        let u = solve(&p, &g, &tg, 0.5).unwrap();
        for k in 0..tg.levels() {
            assert_eq!(v.row(k), u.row(tg.steps() - k));
        }
    }

    #[test]
    fn identical_inputs_bit_identical_outputs() {
        let n = 32;
        let tg = TimeGrid::new(0.2, 25).unwrap();
        let g = TorusGrid::new(n).unwrap();
        let c = SpaceTimeField::from_fn(tg.levels(), n, |k, i| (0.1 * (k * i) as f64).cos());
        let f = SpaceTimeField::from_fn(tg.levels(), n, |k, i| (0.2 * (k + i) as f64).sin());
        let p = ParabolicProblem::with_zero_datum(c, f).unwrap();
        assert_eq!(solve(&p, &g, &tg, 0.5).unwrap(), solve(&p, &g, &tg, 0.5).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn bounds_hold_for_random_smooth_coefficients(
            c0 in 0.0f64..2.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0,
            f0 in -1.0f64..1.0, f1 in -1.0f64..1.0, f2 in -1.0f64..1.0,
            theta in prop_oneof![Just(0.5), Just(1.0)],
        ) {
            let n = 32;
            let tg = TimeGrid::new(0.5, 50).unwrap();
            let g = TorusGrid::new(n).unwrap();
            let c = SpaceTimeField::from_fn(tg.levels(), n, |k, i| {
                let (t, x) = (tg.time(k), g.node(i));
                c0 + c1 * (2.0 * PI * x).sin() + c2 * t * (2.0 * PI * x).cos()
            });
            let fa = SpaceTimeField::from_fn(tg.levels(), n, |k, i| {
                let (t, x) = (tg.time(k), g.node(i));
                f0 + f1 * (2.0 * PI * (x + t)).cos() + f2 * (4.0 * PI * x).sin()
            });
            let fb = fa.map(|v| 0.5 * v + 0.1);
            let pa = ParabolicProblem::with_zero_datum(c.clone(), fa.clone()).unwrap();
            let pb = ParabolicProblem::with_zero_datum(c.clone(), fb.clone()).unwrap();
            let ua = solve(&pa, &g, &tg, theta).unwrap();
            let ub = solve(&pb, &g, &tg, theta).unwrap();
            prop_assert!(check_sup_bound(&ua, &pa, &tg).passed);
            prop_assert!(check_sensitivity(&ua, &ub, &c, &fa, &fb, &tg).unwrap().passed);
        }

        #[test]
        fn implicit_euler_comparison_principle(
            c0 in 0.0f64..3.0, c1 in 0.0f64..1.0, f1 in 0.0f64..1.0, p1 in 0.0f64..1.0,
        ) {
            let n = 24;
            let tg = TimeGrid::new(0.4, 20).unwrap();
            let g = TorusGrid::new(n).unwrap();
            let c = SpaceTimeField::from_fn(tg.levels(), n, |_, i| c0 + c1 * (1.0 + (2.0 * PI * g.node(i)).sin()));
            let f = SpaceTimeField::from_fn(tg.levels(), n, |k, i| f1 * (1.0 + (2.0 * PI * (g.node(i) - tg.time(k))).cos()));
            let psi = g.sample(|x| p1 * (2.0 * PI * x).sin().powi(2));
            let p = ParabolicProblem::new(c, f, psi).unwrap();
            let u = solve(&p, &g, &tg, 1.0).unwrap();
            prop_assert!(u.as_slice().iter().all(|&v| v >= -1e-10));
        }
    }
}
