//! Browser bindings for the equilibrium solver. The page in `www/` calls
//! [`solve_equilibrium`], [`DemoSolution::particles`] and [`circle_w1`].

use std::sync::Arc;

use gmfg_core::expr::Expr;
use gmfg_core::fpk::InitialDensity;
use gmfg_core::graphon::{AlphaGrid, CostModel, Graphon, GraphonKind};
use gmfg_core::grid::{TimeGrid, TorusGrid};
use gmfg_core::hopf_cole::{Discretization, DriftPotential};
use gmfg_core::monte_carlo::{simulate_particles, McConfig};
use gmfg_core::wasserstein::{w1_circle, DiscreteMeasure};
use gmfg_core::{picard_solve, GmfgError, GmfgSolution, PicardConfig, Scenario};
use wasm_bindgen::prelude::*;

fn js(e: GmfgError) -> JsError {
    JsError::new(&e.to_string())
}

/// Inputs of the demo form.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DemoParams {
    pub n: usize,
    pub steps: usize,
    pub clusters: usize,
    pub horizon: f64,
    /// Constant graphon value; negative selects uniform attachment.
    pub p: f64,
    pub damping: f64,
    ell2: String,
    drift: String,
    m0: String,
}

#[wasm_bindgen]
impl DemoParams {
    #[wasm_bindgen(constructor)]
    pub fn new() -> DemoParams {
        DemoParams {
            n: 64,
            steps: 200,
            clusters: 8,
            horizon: 0.5,
            p: -1.0,
            damping: 0.5,
            ell2: "cos(2*pi*(x - y))".into(),
            drift: "0.2*sin(2*pi*x)".into(),
            m0: "1 + 0.5*cos(2*pi*(x - a))".into(),
        }
    }

    #[wasm_bindgen(setter)]
    pub fn set_ell2(&mut self, s: String) {
        self.ell2 = s;
    }

    #[wasm_bindgen(setter)]
    pub fn set_drift(&mut self, s: String) {
        self.drift = s;
    }

    #[wasm_bindgen(setter)]
    pub fn set_m0(&mut self, s: String) {
        self.m0 = s;
    }
}

impl Default for DemoParams {
    fn default() -> Self {
        Self::new()
    }
}

fn scenario(p: &DemoParams) -> gmfg_core::Result<Scenario> {
    let disc = Discretization {
        grid: TorusGrid::new(p.n)?,
        tgrid: TimeGrid::new(p.horizon, p.steps)?,
        alpha: AlphaGrid::new(p.clusters)?,
        theta: 0.5,
    };
    let graphon = if p.p < 0.0 {
        Graphon::uniform_attachment()
    } else {
        Graphon::new(GraphonKind::Constant(p.p), None)?
    };
    let cost = CostModel::from_expr(disc.grid, disc.alpha, &Expr::parse(&p.ell2)?, &graphon)?;
    let drift = DriftPotential::parse(&p.drift, p.horizon)?;
    let m0 = InitialDensity::from_expr(&disc.grid, &disc.alpha, &Expr::parse(&p.m0)?)?;
    Scenario::new(disc, Arc::new(cost), drift, m0)
}

/// A solved equilibrium kept on the Rust side; slices are copied out on
/// request.
#[wasm_bindgen]
pub struct DemoSolution {
    scenario: Scenario,
    solution: GmfgSolution,
}

#[wasm_bindgen]
pub fn solve_equilibrium(params: &DemoParams) -> Result<DemoSolution, JsError> {
    let scenario = scenario(params).map_err(js)?;
    let cfg = PicardConfig {
        damping: params.damping,
        ..Default::default()
    };
    let solution = picard_solve(&scenario, &cfg).map_err(js)?;
    Ok(DemoSolution { scenario, solution })
}

#[wasm_bindgen]
impl DemoSolution {
    pub fn levels(&self) -> usize {
        self.solution.mu.levels()
    }

    pub fn clusters(&self) -> usize {
        self.solution.mu.clusters()
    }

    pub fn n(&self) -> usize {
        self.solution.mu.n()
    }

    pub fn converged(&self) -> bool {
        self.solution.report.converged
    }

    pub fn iterations(&self) -> usize {
        self.solution.report.iterations
    }

    pub fn checks_passed(&self) -> bool {
        self.solution.report.bounds_passed()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.solution.report.residuals.clone()
    }

    pub fn alpha_variation(&self) -> f64 {
        self.solution.mu.alpha_variation()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.scenario.disc.tgrid.time(k.min(self.levels() - 1))
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.scenario.disc.alpha.node(j.min(self.clusters() - 1))
    }

    pub fn density(&self, k: usize, j: usize) -> Vec<f64> {
        self.solution.mu.slice(k.min(self.levels() - 1), j.min(self.clusters() - 1)).to_vec()
    }

    pub fn value(&self, k: usize, j: usize) -> Vec<f64> {
        self.solution.value.slice(k.min(self.levels() - 1), j.min(self.clusters() - 1)).to_vec()
    }

    pub fn control(&self, k: usize, j: usize) -> Vec<f64> {
        self.solution.control.slice(k.min(self.levels() - 1), j.min(self.clusters() - 1)).to_vec()
    }

    /// Particle histogram (as a density) of cluster `j` at level `k`,
    /// simulated with the equilibrium drift.
    pub fn particles(&self, j: usize, k: usize, n_paths: usize, seed: u64) -> Result<Vec<f64>, JsError> {
        let disc = &self.scenario.disc;
        let j = j.min(self.clusters() - 1);
        let drift = self.solution.hjb.grad_v_tilde.cluster(j).map(|g| -g);
        let m0 = DiscreteMeasure::from_density(disc.grid, self.scenario.m0.slice(j)).map_err(js)?;
        let cfg = McConfig {
            n_paths,
            dt_mc: disc.tgrid.dt(),
            rng_seed: seed,
            antithetic: false,
        };
        let hist = simulate_particles(&disc.grid, &disc.tgrid, &drift, &m0, &cfg).map_err(js)?;
        let inv_h = 1.0 / disc.grid.h();
        Ok(hist[k.min(self.levels() - 1)].weights().iter().map(|w| w * inv_h).collect())
    }
}

/// `W1` on the circle between two nonnegative node densities of equal
/// length, each normalised to unit mass.
#[wasm_bindgen]
pub fn circle_w1(a: Vec<f64>, b: Vec<f64>) -> Result<f64, JsError> {
    if a.len() != b.len() {
        return Err(JsError::new("densities must have the same length"));
    }
    let grid = TorusGrid::new(a.len()).map_err(js)?;
    let measure = |d: Vec<f64>| {
        let s: f64 = d.iter().sum();
        if !(s > 0.0) || d.iter().any(|v| !(*v >= 0.0)) {
            return Err(JsError::new("densities must be nonnegative with positive mass"));
        }
        DiscreteMeasure::from_weights(grid, d.into_iter().map(|v| v / s).collect()).map_err(js)
    };
    w1_circle(&measure(a)?, &measure(b)?).map_err(js)
}
