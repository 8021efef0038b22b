//! Monte Carlo oracles: Feynman-Kac estimates of linear parabolic
//! solutions, particle simulation of the controlled state, the cost
//! functional and a Nash inequality spot check.
//!
//! Every path (or antithetic pair) draws from its own ChaCha8 stream
//! selected by `(rng_seed, path index)`, and reductions run in a fixed
//! order, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GmfgError, Result};
use crate::field::{ClusterField, SpaceTimeField};
use crate::fixed_point::GmfgSolution;
use crate::graphon::RunningCost;
use crate::grid::{wrap_unchecked, TimeGrid, TorusGrid};
use crate::par::{map_range, pairwise_sum};
use crate::scenario::Scenario;
use crate::wasserstein::{w1_circle, DiscreteMeasure};

pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt_mc: f64,
    pub rng_seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 4000,
            dt_mc: 1e-3,
            rng_seed: 12345,
            antithetic: true,
        }
    }
}

impl McConfig {
    /// Checks `n_paths >= 100`, `dt_mc > 0` and, when given, `dt_mc` not
    /// above the PDE step.
    pub fn validate(&self, pde_dt: Option<f64>) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(GmfgError::config(
                "monte_carlo.n_paths",
                format!("must be at least {MIN_PATHS}, got {}", self.n_paths),
            ));
        }
        if !(self.dt_mc > 0.0 && self.dt_mc.is_finite()) {
            return Err(GmfgError::config("monte_carlo.dt_mc", format!("must be positive, got {}", self.dt_mc)));
        }
        if let Some(dt) = pde_dt {
            if self.dt_mc > dt * (1.0 + 1e-12) {
                return Err(GmfgError::config(
                    "monte_carlo.dt_mc",
                    format!("{} exceeds the PDE time step {dt}", self.dt_mc),
                ));
            }
        }
        Ok(())
    }

    pub fn with_paths(self, n_paths: usize) -> Self {
        McConfig { n_paths, ..self }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        McConfig { rng_seed, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Mean and standard error, computed about the first sample so identical
/// samples give exactly that value with zero error.
fn summarize(samples: &[f64], n_paths: usize) -> McEstimate {
    let x0 = samples[0];
    let d: Vec<f64> = samples.iter().map(|x| x - x0).collect();
    let n = d.len() as f64;
    let md = pairwise_sum(&d) / n;
    let sq: Vec<f64> = d.iter().map(|x| (x - md) * (x - md)).collect();
    let var = if d.len() > 1 { pairwise_sum(&sq) / (n - 1.0) } else { 0.0 };
    McEstimate {
        mean: x0 + md,
        std_error: (var / n).sqrt(),
        n_paths,
    }
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `(steps, ds)` with `ds <= dt_mc` covering `span` exactly.
fn substeps(span: f64, dt_mc: f64) -> (usize, f64) {
    let steps = ((span / dt_mc) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

/// Feynman-Kac estimate of the backward problem
/// `v_t + 1/2 v_xx - c v + f = 0`, `v(T) = psi` (zero when `None`), at
/// `(t, x)`: the mean of
/// `sum_k exp(-sum_{i<k} c_i ds) f_k ds + exp(-sum c_i ds) psi(X_T)` along
/// `X_s = wrap(x + W_s - W_t)` with left-endpoint sums.
pub fn mc_parabolic(
    c: &(dyn Fn(f64, f64) -> f64 + Sync),
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    psi: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    t: f64,
    x: f64,
    horizon: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.validate(None)?;
    if !(t.is_finite() && x.is_finite() && horizon.is_finite()) {
        return Err(GmfgError::InvalidInput("mc_parabolic needs finite t, x and T".into()));
    }
    if t >= horizon {
        return Ok(McEstimate {
            mean: psi.map_or(0.0, |p| p(wrap_unchecked(x))),
            std_error: 0.0,
            n_paths: cfg.n_paths,
        });
    }
    let (steps, ds) = substeps(horizon - t, cfg.dt_mc);
    let sq = ds.sqrt();
    let path = |normals: &mut dyn FnMut() -> f64| -> f64 {
        let mut pos = x;
        let mut log_discount = 0.0f64;
        let mut acc = 0.0;
        for k in 0..steps {
            let s = t + k as f64 * ds;
            let y = wrap_unchecked(pos);
            acc += (-log_discount).exp() * f(s, y) * ds;
            log_discount += c(s, y) * ds;
            pos += sq * normals();
        }
        if let Some(p) = psi {
            acc += (-log_discount).exp() * p(wrap_unchecked(pos));
        }
        acc
    };
    let samples: Vec<f64> = if cfg.antithetic {
        let pairs = cfg.n_paths.div_ceil(2);
        map_range(pairs, |p| {
            let mut rng = stream(cfg.rng_seed, p);
            let z: Vec<f64> = (0..steps).map(|_| rng.sample(StandardNormal)).collect();
            let mut it = z.iter();
            let plus = path(&mut || *it.next().expect("enough normals"));
            let mut it = z.iter();
            let minus = path(&mut || -*it.next().expect("enough normals"));
            0.5 * (plus + minus)
        })
    } else {
        map_range(cfg.n_paths, |p| {
            let mut rng = stream(cfg.rng_seed, p);
            path(&mut || rng.sample(StandardNormal))
        })
    };
    let used = if cfg.antithetic { 2 * samples.len() } else { samples.len() };
    Ok(summarize(&samples, used))
}

/// First-order time-discretisation allowance for [`mc_parabolic`]:
/// `dt_mc e^{|c| T} (|f| (1 + T |c|) + |psi| |c|)`.
pub fn mc_bias_allowance(dt_mc: f64, c_sup: f64, f_sup: f64, psi_sup: f64, span: f64) -> f64 {
    dt_mc * (c_sup * span).exp() * (f_sup * (1.0 + span * c_sup) + psi_sup * c_sup)
}

/// Linear interpolation of a grid field in time and (periodically) space.
#[derive(Debug, Clone, Copy)]
pub struct FieldSampler<'a> {
    grid: &'a TorusGrid,
    tgrid: &'a TimeGrid,
    field: &'a SpaceTimeField,
}

impl<'a> FieldSampler<'a> {
    pub fn new(grid: &'a TorusGrid, tgrid: &'a TimeGrid, field: &'a SpaceTimeField) -> Result<Self> {
        crate::error::check_len(tgrid.levels(), field.levels())?;
        crate::error::check_len(grid.n(), field.n())?;
        Ok(FieldSampler { grid, tgrid, field })
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let s = (t / self.tgrid.dt()).clamp(0.0, self.tgrid.steps() as f64);
        let k = (s.floor() as usize).min(self.tgrid.steps().saturating_sub(1));
        let frac = s - k as f64;
        let a = self.grid.interpolate(self.field.row(k), x);
        if frac == 0.0 {
            return a;
        }
        let b = self.grid.interpolate(self.field.row(k + 1), x);
        a + frac * (b - a)
    }
}

/// Inverse-CDF draw from cell masses with uniform jitter inside the cell.
fn sample_position(grid: &TorusGrid, cdf: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    let i = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
    let jitter: f64 = rng.random::<f64>() - 0.5;
    wrap_unchecked(grid.node(i) + jitter * grid.h())
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |s, w| {
            *s += w;
            Some(*s)
        })
        .collect()
}

const PARTICLE_CHUNK: usize = 256;

/// Euler-Maruyama simulation of `dX = drift(t, X) dt + dW` on the circle
/// with `X_0 ~ m0`. Returns the nearest-node histogram at every PDE time
/// level. The drift is interpolated from the grid field; each PDE step is
/// split into substeps no longer than `dt_mc`.
pub fn simulate_particles(
    grid: &TorusGrid,
    tgrid: &TimeGrid,
    drift: &SpaceTimeField,
    m0: &DiscreteMeasure,
    cfg: &McConfig,
) -> Result<Vec<DiscreteMeasure>> {
    cfg.validate(Some(tgrid.dt()))?;
    crate::error::check_len(grid.n(), m0.grid().n())?;
    let sampler = FieldSampler::new(grid, tgrid, drift)?;
    let (sub, ds) = substeps(tgrid.dt(), cfg.dt_mc);
    let sq = ds.sqrt();
    let cdf = cumulative(m0.weights());
    let levels = tgrid.levels();
    let n = grid.n();
    let chunks = cfg.n_paths.div_ceil(PARTICLE_CHUNK);
    let counts = map_range(chunks, |c| {
        let mut counts = vec![0u32; levels * n];
        let lo = c * PARTICLE_CHUNK;
        let hi = (lo + PARTICLE_CHUNK).min(cfg.n_paths);
        for p in lo..hi {
            let mut rng = stream(cfg.rng_seed, p);
            let mut x = sample_position(grid, &cdf, &mut rng);
            counts[grid.nearest_node(x)] += 1;
            for k in 0..tgrid.steps() {
                for s in 0..sub {
                    let t = tgrid.time(k) + s as f64 * ds;
                    let z: f64 = rng.sample(StandardNormal);
                    x = wrap_unchecked(x + sampler.eval(t, x) * ds + sq * z);
                }
                counts[(k + 1) * n + grid.nearest_node(x)] += 1;
            }
        }
        counts
    });
    let mut total = vec![0u64; levels * n];
    for c in &counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += u64::from(*v);
        }
    }
    let inv = 1.0 / cfg.n_paths as f64;
    (0..levels)
        .map(|k| DiscreteMeasure::from_weights(*grid, total[k * n..(k + 1) * n].iter().map(|c| *c as f64 * inv).collect()))
        .collect()
}

/// Bootstrap scale of the sampling error of an empirical measure built from
/// `n_samples` particles: the mean `W1(resample, measure)` over
/// multinomial resamples.
pub fn bootstrap_w1(measure: &DiscreteMeasure, n_samples: usize, replicates: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 || replicates == 0 {
        return Err(GmfgError::InvalidInput("bootstrap needs samples and replicates".into()));
    }
    let grid = *measure.grid();
    let cdf = cumulative(measure.weights());
    let dists = crate::par::try_map_range(replicates, |r| {
        let mut rng = stream(seed, r);
        let mut counts = vec![0usize; grid.n()];
        for _ in 0..n_samples {
            let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
            counts[cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)] += 1;
        }
        let w = counts.iter().map(|c| *c as f64 / n_samples as f64).collect();
        w1_circle(&DiscreteMeasure::from_weights(grid, w)?, measure)
    })?;
    Ok(pairwise_sum(&dists) / replicates as f64)
}

/// Monte Carlo estimate of
/// `J(a, mu) = E int_0^T (1/2 a^2 + l1[mu])(t, alpha_j, X_t) dt` with
/// `dX = (b_x + a) dt + dW`, `X_0 ~ mu(0, alpha_j)`.
pub fn cost_functional(
    scenario: &Scenario,
    control: &SpaceTimeField,
    mu: &ClusterField,
    cluster: usize,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let disc = &scenario.disc;
    cfg.validate(Some(disc.tgrid.dt()))?;
    if cluster >= disc.alpha.len() {
        return Err(GmfgError::InvalidInput(format!("cluster {cluster} out of range")));
    }
    let ell1 = scenario.cost.assemble(mu)?.cluster(cluster);
    let a = FieldSampler::new(&disc.grid, &disc.tgrid, control)?;
    let l = FieldSampler::new(&disc.grid, &disc.tgrid, &ell1)?;
    let alpha = disc.alpha.node(cluster);
    let m0 = DiscreteMeasure::from_density(disc.grid, mu.slice(0, cluster))?;
    let cdf = cumulative(m0.weights());
    let (steps, ds) = substeps(disc.tgrid.horizon(), cfg.dt_mc);
    let sq = ds.sqrt();
    let samples = map_range(cfg.n_paths, |p| {
        let mut rng = stream(cfg.rng_seed, p);
        let mut x = sample_position(&disc.grid, &cdf, &mut rng);
        let mut acc = 0.0;
        for k in 0..steps {
            let t = k as f64 * ds;
            let ak = a.eval(t, x);
            acc += (0.5 * ak * ak + l.eval(t, x)) * ds;
            let z: f64 = rng.sample(StandardNormal);
            x = wrap_unchecked(x + (scenario.drift.grad(t, alpha, x) + ak) * ds + sq * z);
        }
        acc
    });
    Ok(summarize(&samples, cfg.n_paths))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashEntry {
    pub epsilon: f64,
    pub cost: McEstimate,
    pub combined_std_error: f64,
    /// `J(a) + 3 se - J(a*)`; nonnegative when the check passes.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub cluster: usize,
    pub alpha: f64,
    pub equilibrium: McEstimate,
    pub perturbations: Vec<NashEntry>,
    pub passed: bool,
}

pub const NASH_BATTERY: [f64; 3] = [0.2, -0.2, 0.5];

/// Compares `J(a*, mu*)` against `J(a* + eps sin(2 pi x), mu*)` with common
/// random numbers; passes when `J(a*) <= J(a) + 3 sqrt(se1^2 + se2^2)` for
/// every `eps`.
pub fn nash_check(scenario: &Scenario, sol: &GmfgSolution, cluster: usize, epsilons: &[f64], cfg: &McConfig) -> Result<NashReport> {
    let grid = scenario.disc.grid;
    let a_star = sol.control.cluster(cluster);
    let equilibrium = cost_functional(scenario, &a_star, &sol.mu, cluster, cfg)?;
    let mut perturbations = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let a = SpaceTimeField::from_fn(a_star.levels(), a_star.n(), |k, i| {
            a_star.get(k, i) + eps * (2.0 * std::f64::consts::PI * grid.node(i)).sin()
        });
        let cost = cost_functional(scenario, &a, &sol.mu, cluster, cfg)?;
        let combined = equilibrium.std_error.hypot(cost.std_error);
        let margin = cost.mean + 3.0 * combined - equilibrium.mean;
        perturbations.push(NashEntry {
            epsilon: eps,
            cost,
            combined_std_error: combined,
            margin,
            passed: margin >= 0.0,
        });
    }
    Ok(NashReport {
        cluster,
        alpha: scenario.disc.alpha.node(cluster),
        equilibrium,
        passed: perturbations.iter().all(|p| p.passed),
        perturbations,
    })
}

/// Agreement of `w(0, alpha_j, x)` with its Feynman-Kac estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeynmanKacEntry {
    pub cluster: usize,
    pub x: f64,
    pub pde: f64,
    pub mc: McEstimate,
    pub allowance: f64,
    pub passed: bool,
}

/// `W1` between the particle histogram and the Fokker-Planck slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleEntry {
    pub cluster: usize,
    pub time: f64,
    pub w1: f64,
    pub bootstrap: f64,
    pub allowance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub clusters: Vec<usize>,
    pub feynman_kac: Vec<FeynmanKacEntry>,
    pub particles: Vec<ParticleEntry>,
    pub nash: Vec<NashReport>,
    pub passed: bool,
}

pub const BOOTSTRAP_REPLICATES: usize = 32;
pub const PARTICLE_CHECKPOINTS: usize = 5;

/// The first, middle and last cluster, without repeats.
pub fn sample_clusters(m: usize) -> Vec<usize> {
    let mut v = vec![0, m / 2, m.saturating_sub(1)];
    v.dedup();
    v
}

/// `PARTICLE_CHECKPOINTS` evenly spaced positive time levels.
pub fn checkpoint_levels(tgrid: &TimeGrid) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=PARTICLE_CHECKPOINTS)
        .map(|i| (i * tgrid.steps()).div_ceil(PARTICLE_CHECKPOINTS))
        .collect();
    v.dedup();
    v
}

/// W1 between particles and the Fokker-Planck solution at the checkpoint
/// levels, for the drift `-vt_x` of one cluster.
pub fn particle_entries(scenario: &Scenario, sol: &GmfgSolution, cluster: usize, cfg: &McConfig) -> Result<Vec<ParticleEntry>> {
    let disc = &scenario.disc;
    let drift = sol.hjb.grad_v_tilde.cluster(cluster).map(|g| -g);
    let m0 = DiscreteMeasure::from_density(disc.grid, scenario.m0.slice(cluster))?;
    let hist = simulate_particles(&disc.grid, &disc.tgrid, &drift, &m0, cfg)?;
    checkpoint_levels(&disc.tgrid)
        .into_iter()
        .map(|k| {
            let fpk = DiscreteMeasure::from_density(disc.grid, sol.mu.slice(k, cluster))?;
            let w1 = w1_circle(&hist[k], &fpk)?;
            let bootstrap = bootstrap_w1(&fpk, cfg.n_paths, BOOTSTRAP_REPLICATES, cfg.rng_seed ^ k as u64)?;
            let allowance = disc.grid.h() + cfg.dt_mc;
            Ok(ParticleEntry {
                cluster,
                time: disc.tgrid.time(k),
                w1,
                bootstrap,
                allowance,
                passed: w1 <= 3.0 * bootstrap + allowance,
            })
        })
        .collect()
}

/// Feynman-Kac estimates of `w` at `t = 0` for one cluster: the backward
/// problem with reaction `lt` and terminal value `exp(b(T))`.
pub fn feynman_kac_entries(scenario: &Scenario, sol: &GmfgSolution, cluster: usize, xs: &[f64], cfg: &McConfig) -> Result<Vec<FeynmanKacEntry>> {
    let disc = &scenario.disc;
    let (grid, tgrid) = (disc.grid, disc.tgrid);
    let c_field = sol.hjb.ell_tilde.cluster(cluster);
    let c = FieldSampler::new(&grid, &tgrid, &c_field)?;
    let alpha = disc.alpha.node(cluster);
    let horizon = tgrid.horizon();
    let psi = |x: f64| scenario.drift.eval(horizon, alpha, x).exp();
    let w = sol.hjb.w.cluster(cluster);
    let c_sup = c_field.sup_norm();
    let psi_sup = scenario.drift_samples.terminal_sup(cluster).exp();
    let pde_allowance = w.sup_norm() * (1.0 + c_sup * horizon) * (grid.h().powi(2) + tgrid.dt().powi(2));
    xs.iter()
        .map(|&x| {
            let mc = mc_parabolic(&|t, y| c.eval(t, y), &|_, _| 0.0, Some(&psi), 0.0, x, horizon, cfg)?;
            let pde = grid.interpolate(w.row(0), x);
            let allowance = mc_bias_allowance(cfg.dt_mc, c_sup, 0.0, psi_sup, horizon) + pde_allowance;
            Ok(FeynmanKacEntry {
                cluster,
                x,
                pde,
                mc,
                allowance,
                passed: (pde - mc.mean).abs() <= 3.0 * mc.std_error + allowance,
            })
        })
        .collect()
}

/// Runs the Feynman-Kac, particle and Nash oracles on the sampled
/// clusters of a solved scenario.
pub fn validate_solution(scenario: &Scenario, sol: &GmfgSolution, cfg: &McConfig) -> Result<ValidationReport> {
    cfg.validate(Some(scenario.disc.tgrid.dt()))?;
    let clusters = sample_clusters(scenario.disc.alpha.len());
    let xs = [0.0, 0.25, 0.5, 0.75];
    let mut feynman_kac = Vec::new();
    let mut particles = Vec::new();
    let mut nash = Vec::new();
    for &j in &clusters {
        feynman_kac.extend(feynman_kac_entries(scenario, sol, j, &xs, cfg)?);
        particles.extend(particle_entries(scenario, sol, j, cfg)?);
        nash.push(nash_check(scenario, sol, j, &NASH_BATTERY, cfg)?);
    }
    let passed = feynman_kac.iter().all(|e| e.passed) && particles.iter().all(|e| e.passed) && nash.iter().all(|n| n.passed);
    Ok(ValidationReport {
        clusters,
        feynman_kac,
        particles,
        nash,
        passed,
    })
}
