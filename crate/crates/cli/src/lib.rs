//! Runner behind the `gmfg` binary: loads a scenario, runs one command and
//! writes the field CSVs and `report.json`.
//!
//! Exit statuses: 0 converged with every check passing, 1 usage or I/O
//! error, 2 no convergence, 3 a bound check, guard or oracle failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gmfg_core::fixed_point::{probe_seeds, residual_audit, uniqueness_probe, ProbeReport, ResidualReport};
use gmfg_core::monte_carlo::{validate_solution, ValidationReport};
use gmfg_core::norms::{solution_norms, SolutionNorms};
use gmfg_core::output::{read_field_csv, write_field_csv, write_json};
use gmfg_core::{picard_solve, GmfgError, GmfgSolution, Scenario, ScenarioConfig, SolveReport};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;

/// Exponent of the Holder diagnostics written to reports.
pub const NORM_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Validate,
    Probe,
    Norms,
}

/// Contents of `report.json`. Every key is present on every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub exit_code: u8,
    pub status: String,
    pub error: Option<String>,
    pub config: ScenarioConfig,
    pub solve: Option<SolveReport>,
    pub alpha_variation: Option<f64>,
    pub residuals: Option<ResidualReport>,
    pub norms: Option<SolutionNorms>,
    pub validation: Option<ValidationReport>,
    pub probe: Option<ProbeReport>,
    pub seconds_total: f64,
}

impl RunReport {
    fn new(command: Command, config: &ScenarioConfig) -> Self {
        RunReport {
            command,
            exit_code: EXIT_OK,
            status: String::new(),
            error: None,
            config: config.clone(),
            solve: None,
            alpha_variation: None,
            residuals: None,
            norms: None,
            validation: None,
            probe: None,
            seconds_total: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir` of the scenario.
    pub output: Option<PathBuf>,
    pub quiet: bool,
    pub seeds: usize,
}

/// Result of one command: the exit status, the report (when one was
/// written) and the human-readable summary lines.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: u8,
    pub report: Option<RunReport>,
    pub lines: Vec<String>,
}

fn error_exit(e: &GmfgError) -> u8 {
    match e {
        GmfgError::StabilityGuard { .. }
        | GmfgError::TimeStepTooLarge { .. }
        | GmfgError::Positivity(_)
        | GmfgError::NumericalFailure(_) => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

fn usage(message: String) -> Outcome {
    Outcome {
        exit_code: EXIT_USAGE,
        report: None,
        lines: vec![format!("error: {message}")],
    }
}

fn output_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.output.clone().unwrap_or_else(|| cfg.output_dir())
}

fn write_fields(dir: &Path, sc: &Scenario, sol: &GmfgSolution) -> gmfg_core::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| GmfgError::InvalidInput(format!("creating {}: {e}", dir.display())))?;
    let d = &sc.disc;
    let grad_v = sol.control.map(|a| -a);
    write_field_csv(&dir.join("mu.csv"), &d.grid, &d.tgrid, &d.alpha, &sol.mu)?;
    write_field_csv(&dir.join("v.csv"), &d.grid, &d.tgrid, &d.alpha, &sol.value)?;
    write_field_csv(&dir.join("grad_v.csv"), &d.grid, &d.tgrid, &d.alpha, &grad_v)
}

fn solve_status(report: &SolveReport) -> (u8, String) {
    if !report.bounds_passed() {
        (EXIT_CHECK_FAILED, "bound check failed".into())
    } else if !report.converged {
        (EXIT_NOT_CONVERGED, "not converged".into())
    } else {
        (EXIT_OK, "converged".into())
    }
}

fn summarize_solve(lines: &mut Vec<String>, r: &SolveReport) {
    lines.push(format!(
        "picard: {} after {} iterations, last step {:.3e}, fixed-point residual {:.3e}",
        if r.converged { "converged" } else { "not converged" },
        r.iterations,
        r.residuals.last().copied().unwrap_or(f64::NAN),
        r.fixed_point_residual.unwrap_or(f64::NAN)
    ));
    lines.push(format!(
        "checks: density {} (mass error {:.2e}, min {:.2e}), harnack violations {}, holder {}, first moment {}",
        if r.density.passed { "ok" } else { "FAILED" },
        r.density.max_mass_error,
        r.density.min_value,
        r.harnack_violations,
        r.holder_half.as_ref().map_or("n/a", |c| if c.passed { "ok" } else { "FAILED" }),
        r.first_moment.as_ref().map_or("n/a", |c| if c.passed { "ok" } else { "FAILED" }),
    ));
    for w in &r.warnings {
        lines.push(format!("warning: {w}"));
    }
}

/// Solves and records the diagnostics shared by `solve` and `validate`.
fn solve_into(report: &mut RunReport, sc: &Scenario, cfg: &ScenarioConfig, lines: &mut Vec<String>) -> Option<GmfgSolution> {
    let picard = match cfg.picard_config() {
        Ok(p) => p,
        Err(e) => {
            report.exit_code = EXIT_USAGE;
            report.status = "error".into();
            report.error = Some(e.to_string());
            return None;
        }
    };
    match picard_solve(sc, &picard) {
        Ok(sol) => {
            let (code, status) = solve_status(&sol.report);
            report.exit_code = code;
            report.status = status;
            report.alpha_variation = Some(
                sol.report
                    .alpha_variation_mu
                    .unwrap_or(0.0)
                    .max(sol.report.alpha_variation_v.unwrap_or(0.0)),
            );
            summarize_solve(lines, &sol.report);
            match residual_audit(&sol, sc) {
                Ok(r) => report.residuals = Some(r),
                Err(e) => lines.push(format!("warning: residual audit failed: {e}")),
            }
            let grad_v = sol.control.map(|a| -a);
            match solution_norms(&sc.disc.grid, &sc.disc.tgrid, &sol.value, &grad_v, &sol.mu, NORM_DELTA) {
                Ok(n) => report.norms = Some(n),
                Err(e) => lines.push(format!("warning: norm diagnostics failed: {e}")),
            }
            report.solve = Some(sol.report.clone());
            Some(sol)
        }
        Err(e) => {
            report.exit_code = error_exit(&e);
            report.status = "failed".into();
            report.error = Some(e.to_string());
            lines.push(format!("error: {e}"));
            None
        }
    }
}

fn finish(mut report: RunReport, dir: &Path, start: Instant, mut lines: Vec<String>) -> Outcome {
    report.seconds_total = start.elapsed().as_secs_f64();
    let path = dir.join("report.json");
    let written = std::fs::create_dir_all(dir)
        .map_err(|e| GmfgError::InvalidInput(format!("creating {}: {e}", dir.display())))
        .and_then(|_| write_json(&path, &report));
    if let Err(e) = written {
        lines.push(format!("error: {e}"));
        report.exit_code = EXIT_USAGE;
    } else {
        lines.push(format!("report: {}", path.display()));
    }
    Outcome {
        exit_code: report.exit_code,
        report: Some(report),
        lines,
    }
}

fn build(cfg: &ScenarioConfig) -> Result<Scenario, Outcome> {
    cfg.build().map_err(|e| usage(e.to_string()))
}

pub fn run_solve(cfg: &ScenarioConfig, opts: &RunOptions) -> Outcome {
    let start = Instant::now();
    let sc = match build(cfg) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let dir = output_dir(cfg, opts);
    let mut report = RunReport::new(Command::Solve, cfg);
    let mut lines = Vec::new();
    if let Some(sol) = solve_into(&mut report, &sc, cfg, &mut lines) {
        if let Err(e) = write_fields(&dir, &sc, &sol) {
            return usage(e.to_string());
        }
    }
    finish(report, &dir, start, lines)
}

pub fn run_validate(cfg: &ScenarioConfig, opts: &RunOptions) -> Outcome {
    let start = Instant::now();
    let sc = match build(cfg) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let dir = output_dir(cfg, opts);
    let mut report = RunReport::new(Command::Validate, cfg);
    let mut lines = Vec::new();
    if let Some(sol) = solve_into(&mut report, &sc, cfg, &mut lines) {
        if let Err(e) = write_fields(&dir, &sc, &sol) {
            return usage(e.to_string());
        }
        match validate_solution(&sc, &sol, &cfg.mc_config()) {
            Ok(v) => {
                let fk = v.feynman_kac.iter().filter(|e| e.passed).count();
                let pa = v.particles.iter().filter(|e| e.passed).count();
                let na = v.nash.iter().filter(|e| e.passed).count();
                lines.push(format!(
                    "oracles: feynman-kac {fk}/{}, particles {pa}/{}, nash {na}/{}",
                    v.feynman_kac.len(),
                    v.particles.len(),
                    v.nash.len()
                ));
                if !v.passed && report.exit_code == EXIT_OK {
                    report.exit_code = EXIT_CHECK_FAILED;
                    report.status = "oracle check failed".into();
                }
                report.validation = Some(v);
            }
            Err(e) => {
                report.exit_code = error_exit(&e);
                report.error = Some(e.to_string());
                lines.push(format!("error: {e}"));
            }
        }
    }
    finish(report, &dir, start, lines)
}

pub fn run_probe(cfg: &ScenarioConfig, opts: &RunOptions) -> Outcome {
    let start = Instant::now();
    if opts.seeds == 0 {
        return usage("--seeds must be at least 1".into());
    }
    let sc = match build(cfg) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let picard = match cfg.picard_config() {
        Ok(p) => p,
        Err(e) => return usage(e.to_string()),
    };
    let dir = output_dir(cfg, opts);
    let mut report = RunReport::new(Command::Probe, cfg);
    let mut lines = Vec::new();
    let seeds = probe_seeds(&sc, opts.seeds);
    match uniqueness_probe(&sc, &picard, &seeds) {
        Ok((probe, sols)) => {
            lines.push(format!(
                "probe: {} seeds, max pairwise rho {:.3e} (threshold {:.1e}), {}",
                probe.seeds,
                probe.max_pairwise,
                probe.threshold,
                if probe.passed {
                    "pass"
                } else if probe.inconclusive {
                    "inconclusive"
                } else {
                    "FAIL"
                }
            ));
            let first = &sols[0];
            summarize_solve(&mut lines, &first.report);
            let (code, status) = if probe.passed {
                solve_status(&first.report)
            } else if probe.inconclusive {
                (EXIT_NOT_CONVERGED, "inconclusive".into())
            } else {
                (EXIT_CHECK_FAILED, "limits differ".into())
            };
            report.exit_code = code;
            report.status = status;
            if sols.iter().any(|s| !s.report.bounds_passed()) {
                report.exit_code = EXIT_CHECK_FAILED;
                report.status = "bound check failed".into();
            }
            report.solve = Some(first.report.clone());
            report.probe = Some(probe);
            if let Err(e) = write_fields(&dir, &sc, first) {
                return usage(e.to_string());
            }
        }
        Err(e) => {
            report.exit_code = error_exit(&e);
            report.status = "failed".into();
            report.error = Some(e.to_string());
            lines.push(format!("error: {e}"));
        }
    }
    finish(report, &dir, start, lines)
}

/// Holder diagnostics of the fields saved by a previous `solve`, written
/// to `norms.json` in the output directory.
pub fn run_norms(cfg: &ScenarioConfig, opts: &RunOptions) -> Outcome {
    let dir = output_dir(cfg, opts);
    let disc = match cfg.discretization() {
        Ok(d) => d,
        Err(e) => return usage(e.to_string()),
    };
    let load = |name: &str| -> gmfg_core::Result<gmfg_core::ClusterField> {
        let f = read_field_csv(&dir.join(name))?;
        if f.values.levels() != disc.tgrid.levels() || f.values.clusters() != disc.alpha.len() || f.values.n() != disc.grid.n() {
            return Err(GmfgError::InvalidInput(format!("{name} does not match the scenario grids")));
        }
        Ok(f.values)
    };
    let norms = (|| -> gmfg_core::Result<SolutionNorms> {
        let (v, g, mu) = (load("v.csv")?, load("grad_v.csv")?, load("mu.csv")?);
        let n = solution_norms(&disc.grid, &disc.tgrid, &v, &g, &mu, NORM_DELTA)?;
        write_json(&dir.join("norms.json"), &n)?;
        Ok(n)
    })();
    match norms {
        Ok(n) => Outcome {
            exit_code: EXIT_OK,
            report: None,
            lines: vec![
                format!("delta = {NORM_DELTA}"),
                format!("v:      sup {:.4e}  [.]_x {:.4e}  [.]_t {:.4e}", n.value.sup, n.value.space, n.value.time),
                format!("grad v: sup {:.4e}  [.]_x {:.4e}  [.]_t {:.4e}", n.gradient.sup, n.gradient.space, n.gradient.time),
                format!("mu:     sup {:.4e}  [.]_x {:.4e}  [.]_t {:.4e}", n.density.sup, n.density.space, n.density.time),
                format!(
                    "mu S^1/2: moment {:.4e}  holder {:.4e}",
                    n.density_s_half.moment_part, n.density_s_half.holder_part
                ),
                format!("written: {}", dir.join("norms.json").display()),
            ],
        },
        Err(e) => usage(e.to_string()),
    }
}

pub fn run(command: Command, config_path: &Path, opts: &RunOptions) -> Outcome {
    let cfg = match gmfg_core::load_scenario(config_path) {
        Ok(c) => c,
        Err(e) => return usage(e.to_string()),
    };
    match command {
        Command::Solve => run_solve(&cfg, opts),
        Command::Validate => run_validate(&cfg, opts),
        Command::Probe => run_probe(&cfg, opts),
        Command::Norms => run_norms(&cfg, opts),
    }
}
