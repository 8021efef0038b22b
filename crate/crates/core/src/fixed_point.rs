//! Damped Picard iteration of the fixed-point map `Phi = Phi2 o Phi1` on
//! density fields, with convergence, uniqueness and residual diagnostics.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundCheck;
use crate::clock::Stopwatch;
use crate::error::{check_len, GmfgError, Result};
use crate::field::ClusterField;
use crate::fpk::{check_density, check_first_moment, check_holder_half, phi2, DensityCheck};
use crate::graphon::RunningCost;
use crate::hopf_cole::{phi1, ValueField};
use crate::scenario::Scenario;
use crate::wasserstein::rho;

/// Starting density for the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedDensity {
    /// `m0` held constant in time.
    Initial,
    Uniform,
    Field(ClusterField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: SeedDensity,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            damping: 0.5,
            tol: 1e-6,
            max_iter: 200,
            seed: SeedDensity::Initial,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(GmfgError::config("picard.damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(GmfgError::config("picard.tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(GmfgError::config("picard.max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

/// Convergence history and bound checks of one solve. Every field is
/// always present so the serialised key set never changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub best_iteration: usize,
    pub fixed_point_residual: Option<f64>,
    pub tail_non_increasing: bool,
    pub contraction_ratio: Option<f64>,
    pub density: DensityCheck,
    pub density_violations: usize,
    pub harnack: Option<BoundCheck>,
    pub harnack_violations: usize,
    pub holder_half: Option<BoundCheck>,
    pub first_moment: Option<BoundCheck>,
    pub drift_bound: Option<f64>,
    pub alpha_variation_mu: Option<f64>,
    pub alpha_variation_v: Option<f64>,
    pub warnings: Vec<String>,
    pub seconds_phi1: f64,
    pub seconds_phi2: f64,
    pub seconds_total: f64,
}

impl SolveReport {
    fn empty() -> Self {
        SolveReport {
            converged: false,
            iterations: 0,
            residuals: Vec::new(),
            best_iteration: 0,
            fixed_point_residual: None,
            tail_non_increasing: true,
            contraction_ratio: None,
            density: DensityCheck {
                max_mass_error: 0.0,
                min_value: f64::INFINITY,
                passed: true,
            },
            density_violations: 0,
            harnack: None,
            harnack_violations: 0,
            holder_half: None,
            first_moment: None,
            drift_bound: None,
            alpha_variation_mu: None,
            alpha_variation_v: None,
            warnings: Vec::new(),
            seconds_phi1: 0.0,
            seconds_phi2: 0.0,
            seconds_total: 0.0,
        }
    }

    /// True when every recorded bound and invariant check passed.
    pub fn bounds_passed(&self) -> bool {
        self.density.passed
            && self.density_violations == 0
            && self.harnack_violations == 0
            && self.holder_half.as_ref().is_none_or(|c| c.passed)
            && self.first_moment.as_ref().is_none_or(|c| c.passed)
    }

    fn absorb_density(&mut self, c: DensityCheck) {
        self.density.max_mass_error = self.density.max_mass_error.max(c.max_mass_error);
        self.density.min_value = self.density.min_value.min(c.min_value);
        self.density.passed &= c.passed;
        if !c.passed {
            self.density_violations += 1;
        }
    }

    fn absorb_harnack(&mut self, c: &BoundCheck) {
        if !c.passed {
            self.harnack_violations += 1;
        }
        let tighter = match &self.harnack {
            None => true,
            Some(old) => (c.passed, c.slack + c.tolerance) < (old.passed, old.slack + old.tolerance),
        };
        if tighter {
            self.harnack = Some(c.clone());
        }
    }
}

/// The equilibrium triple and its report.
#[derive(Debug, Clone)]
pub struct GmfgSolution {
    pub mu: ClusterField,
    /// `v = vt + b`.
    pub value: ClusterField,
    /// `a* = -v_x`.
    pub control: ClusterField,
    pub hjb: ValueField,
    pub report: SolveReport,
}

fn seed_field(scenario: &Scenario, seed: &SeedDensity) -> Result<ClusterField> {
    let levels = scenario.disc.tgrid.levels();
    let field = match seed {
        SeedDensity::Initial => scenario.m0.constant_in_time(levels),
        SeedDensity::Uniform => ClusterField::from_fn(levels, scenario.m0.clusters(), scenario.disc.grid.n(), |_, _, _| 1.0),
        SeedDensity::Field(f) => {
            check_len(levels, f.levels())?;
            check_len(scenario.m0.clusters(), f.clusters())?;
            check_len(scenario.disc.grid.n(), f.n())?;
            if !check_density(&scenario.disc.grid, f).passed {
                return Err(GmfgError::InvalidInput("seed field is not a probability density field".into()));
            }
            f.clone()
        }
    };
    Ok(field)
}

fn impose_initial(mu: &mut ClusterField, scenario: &Scenario) {
    for j in 0..mu.clusters() {
        mu.slice_mut(0, j).copy_from_slice(scenario.m0.slice(j));
    }
}

/// Runs `mu <- (1 - lambda) mu + lambda Phi(mu)` until
/// `rho(mu_next, mu) < tol` or `max_iter`. The data `mu(0) = m0` is
/// imposed on every iterate. When two consecutive images `Phi(mu)` are
/// identical the map is constant along the iteration and the image is
/// accepted with step zero. Without convergence the iterate with the
/// smallest step is returned with `converged = false`.
pub fn picard_solve(scenario: &Scenario, config: &PicardConfig) -> Result<GmfgSolution> {
    config.validate()?;
    let start = Stopwatch::start();
    let disc = &scenario.disc;
    let grid = &disc.grid;
    let mut report = SolveReport::empty();
    let mut mu = seed_field(scenario, &config.seed)?;
    impose_initial(&mut mu, scenario);
    let mut best: Option<(f64, ClusterField)> = None;
    let mut prev_image: Option<ClusterField> = None;

    for it in 1..=config.max_iter {
        let t0 = Stopwatch::start();
        let vf = phi1(&mu, scenario.cost.as_ref(), &scenario.drift_samples, disc)?;
        report.absorb_harnack(&vf.harnack);
        report.seconds_phi1 += t0.seconds();
        let t1 = Stopwatch::start();
        let nu = phi2(&vf.grad_v_tilde, &scenario.m0, grid, &disc.tgrid)?;
        report.seconds_phi2 += t1.seconds();
        report.absorb_density(check_density(grid, &nu));

        let image_repeated = prev_image.as_ref().is_some_and(|p| *p == nu);
        let mut next = if image_repeated { nu.clone() } else { mu.blend(&nu, config.damping)? };
        impose_initial(&mut next, scenario);
        report.absorb_density(check_density(grid, &next));
        let r = if image_repeated { 0.0 } else { rho(grid, &next, &mu)? };
        prev_image = Some(nu);
        report.residuals.push(r);
        report.iterations = it;
        mu = next;
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, mu.clone()));
            report.best_iteration = it;
        }
        if r < config.tol {
            report.converged = true;
            break;
        }
        if !r.is_finite() {
            return Err(GmfgError::NumericalFailure(format!("Picard residual became {r} at iteration {it}")));
        }
    }
    if !report.converged {
        if let Some((_, b)) = best {
            mu = b;
        }
        report.warnings.push(format!(
            "no convergence after {} iterations (best step {:.3e} at iteration {}); try smaller damping, shorter horizon or finer grids",
            report.iterations,
            report.residuals.get(report.best_iteration.saturating_sub(1)).copied().unwrap_or(f64::NAN),
            report.best_iteration
        ));
    }

    let t0 = Stopwatch::start();
    let hjb = phi1(&mu, scenario.cost.as_ref(), &scenario.drift_samples, disc)?;
    report.absorb_harnack(&hjb.harnack);
    report.seconds_phi1 += t0.seconds();
    let t1 = Stopwatch::start();
    let image = phi2(&hjb.grad_v_tilde, &scenario.m0, grid, &disc.tgrid)?;
    report.seconds_phi2 += t1.seconds();
    report.absorb_density(check_density(grid, &image));
    report.fixed_point_residual = Some(rho(grid, &mu, &image)?);

    let value = hjb.value(&scenario.drift_samples)?;
    let control = hjb.control(&scenario.drift_samples)?;
    let drift_bound = hjb.grad_v_tilde.sup_norm();
    report.drift_bound = Some(drift_bound);
    report.holder_half = Some(check_holder_half(grid, &disc.tgrid, &mu, drift_bound)?);
    report.first_moment = Some(check_first_moment(grid, &disc.tgrid, &mu, &scenario.m0, drift_bound)?);
    report.alpha_variation_mu = Some(mu.alpha_variation());
    report.alpha_variation_v = Some(value.alpha_variation());

    let res = &report.residuals;
    if res.len() >= 3 {
        let tail = &res[res.len() - 3..];
        report.tail_non_increasing = tail[0] >= tail[1] && tail[1] >= tail[2];
        if report.converged && !report.tail_non_increasing {
            report.warnings.push("residual tail oscillates; consider a smaller damping".into());
        }
    }
    let ratios: Vec<f64> = res.windows(2).filter(|w| w[0] > 0.0 && w[1] > 0.0).map(|w| (w[1] / w[0]).ln()).collect();
    if !ratios.is_empty() {
        report.contraction_ratio = Some((ratios.iter().sum::<f64>() / ratios.len() as f64).exp());
    }
    if !report.bounds_passed() {
        report.warnings.push("one or more bound checks failed".into());
    }
    report.seconds_total = start.seconds();
    Ok(GmfgSolution {
        mu,
        value,
        control,
        hjb,
        report,
    })
}

/// `k` distinct starting fields: `m0` constant in time, the uniform
/// field, and cosine-modulated copies of `m0` with shifted phases.
pub fn probe_seeds(scenario: &Scenario, k: usize) -> Vec<ClusterField> {
    let grid = scenario.disc.grid;
    let levels = scenario.disc.tgrid.levels();
    let m = scenario.m0.clusters();
    (0..k)
        .map(|s| match s {
            0 => scenario.m0.constant_in_time(levels),
            1 => ClusterField::from_fn(levels, m, grid.n(), |_, _, _| 1.0),
            _ => {
                let phase = s as f64 / k as f64;
                let mut f = ClusterField::from_fn(levels, m, grid.n(), |_, j, i| {
                    let x = grid.node(i);
                    scenario.m0.slice(j)[i] * (1.0 + 0.8 * (2.0 * std::f64::consts::PI * (x - phase)).cos())
                });
                for kk in 0..levels {
                    for j in 0..m {
                        let sl = f.slice_mut(kk, j);
                        let mass = grid.h() * sl.iter().sum::<f64>();
                        sl.iter_mut().for_each(|v| *v /= mass);
                    }
                }
                f
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seeds: usize,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
    /// `(a, b, rho(limit_a, limit_b))` for every seed pair.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub max_pairwise: f64,
    pub threshold: f64,
    pub inconclusive: bool,
    pub passed: bool,
}

/// Solves from every seed and compares the limits pairwise; passes when
/// all runs converge and every pairwise `rho` is at most `10 tol`.
pub fn uniqueness_probe(scenario: &Scenario, config: &PicardConfig, seeds: &[ClusterField]) -> Result<(ProbeReport, Vec<GmfgSolution>)> {
    if seeds.is_empty() {
        return Err(GmfgError::InvalidInput("uniqueness probe needs at least one seed".into()));
    }
    let mut sols = Vec::with_capacity(seeds.len());
    for s in seeds {
        let cfg = PicardConfig {
            seed: SeedDensity::Field(s.clone()),
            ..config.clone()
        };
        sols.push(picard_solve(scenario, &cfg)?);
    }
    let mut pairwise = Vec::new();
    let mut max_pairwise = 0.0f64;
    for a in 0..sols.len() {
        for b in a + 1..sols.len() {
            let d = rho(&scenario.disc.grid, &sols[a].mu, &sols[b].mu)?;
            max_pairwise = max_pairwise.max(d);
            pairwise.push((a, b, d));
        }
    }
    let converged: Vec<bool> = sols.iter().map(|s| s.report.converged).collect();
    let inconclusive = converged.iter().any(|c| !c);
    let threshold = 10.0 * config.tol;
    let report = ProbeReport {
        seeds: seeds.len(),
        iterations: sols.iter().map(|s| s.report.iterations).collect(),
        converged,
        pairwise,
        max_pairwise,
        threshold,
        inconclusive,
        passed: !inconclusive && max_pairwise <= threshold,
    };
    Ok((report, sols))
}

/// Max-norm residuals of the equilibrium system evaluated on the discrete
/// solution with fourth-order stencils and midpoint time differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `v_t + 1/2 v_xx + (b_x + a*) v_x + 1/2 |a*|^2 + l1[mu]`.
    pub hjb: f64,
    /// `a* + v_x`.
    pub argmin: f64,
    /// `mu_t + ((b_x + a*) mu)_x - 1/2 mu_xx`.
    pub fpk: f64,
    /// `max |v(T)|`.
    pub terminal: f64,
    /// `max |mu(0) - m0|`.
    pub initial: f64,
}

pub fn residual_audit(sol: &GmfgSolution, scenario: &Scenario) -> Result<ResidualReport> {
    let grid = &scenario.disc.grid;
    let tgrid = &scenario.disc.tgrid;
    let dt = tgrid.dt();
    let m = scenario.m0.clusters();
    let bx = &scenario.drift_samples.grad;
    let ell1 = scenario.cost.assemble(&sol.mu)?;
    let v = &sol.value;
    let a = &sol.control;
    let mu = &sol.mu;

    let per_cluster = crate::par::try_map_range(m, |j| {
        let mut hjb = 0.0f64;
        let mut argmin = 0.0f64;
        let mut fpk = 0.0f64;
        let hjb_terms = |k: usize| -> Result<Vec<f64>> {
            let vs = v.slice(k, j);
            let vx = grid.gradient4(vs)?;
            let vxx = grid.laplacian4(vs)?;
            Ok((0..grid.n())
                .map(|i| {
                    let drift = bx.get(k, j, i) + a.get(k, j, i);
                    0.5 * vxx[i] + drift * vx[i] + 0.5 * a.get(k, j, i).powi(2) + ell1.get(k, j, i)
                })
                .collect())
        };
        let fpk_terms = |k: usize| -> Result<Vec<f64>> {
            let ms = mu.slice(k, j);
            let flux: Vec<f64> = (0..grid.n()).map(|i| (bx.get(k, j, i) + a.get(k, j, i)) * ms[i]).collect();
            let div = grid.gradient4(&flux)?;
            let lap = grid.laplacian4(ms)?;
            Ok((0..grid.n()).map(|i| -div[i] + 0.5 * lap[i]).collect())
        };
        let mut h_prev = hjb_terms(0)?;
        let mut f_prev = fpk_terms(0)?;
        for k in 0..tgrid.levels() {
            let vx = grid.gradient4(v.slice(k, j))?;
            for i in 0..grid.n() {
                argmin = argmin.max((a.get(k, j, i) + vx[i]).abs());
            }
            if k + 1 == tgrid.levels() {
                break;
            }
            let h_next = hjb_terms(k + 1)?;
            let f_next = fpk_terms(k + 1)?;
            for i in 0..grid.n() {
                let vt = (v.get(k + 1, j, i) - v.get(k, j, i)) / dt;
                hjb = hjb.max((vt + 0.5 * (h_prev[i] + h_next[i])).abs());
                let mt = (mu.get(k + 1, j, i) - mu.get(k, j, i)) / dt;
                fpk = fpk.max((mt - 0.5 * (f_prev[i] + f_next[i])).abs());
            }
            h_prev = h_next;
            f_prev = f_next;
        }
        Ok((hjb, argmin, fpk))
    })?;
    let last = tgrid.levels() - 1;
    let mut terminal = 0.0f64;
    let mut initial = 0.0f64;
    for j in 0..m {
        terminal = v.slice(last, j).iter().fold(terminal, |acc, x| acc.max(x.abs()));
        for (x, y) in mu.slice(0, j).iter().zip(scenario.m0.slice(j)) {
            initial = initial.max((x - y).abs());
        }
    }
    let fold = |f: fn(&(f64, f64, f64)) -> f64| per_cluster.iter().map(f).fold(0.0, f64::max);
    Ok(ResidualReport {
        hjb: fold(|r| r.0),
        argmin: fold(|r| r.1),
        fpk: fold(|r| r.2),
        terminal,
        initial,
    })
}
