//! Scenario files and the assembled model.
//!
//! A scenario is a TOML document with the sections `grid`, `time`,
//! `clusters`, `graphon`, `cost`, `drift`, `initial`, `picard`,
//! `monte_carlo` and `output`. Every key has a default, unknown keys are
//! rejected and relative file paths resolve against the scenario file.
//!
//! ```toml
//! [grid]
//! n = 64
//! [time]
//! T = 0.5
//! n_t = 200
//! [graphon]
//! kind = "uniform_attachment"
//! [cost]
//! ell2 = "cos(2*pi*(x - y))"
//! [drift]
//! b = "0.2*sin(2*pi*x)"
//! [initial]
//! m0 = "1 + 0.5*cos(2*pi*x)"
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, GmfgError, Result};
use crate::expr::Expr;
use crate::fixed_point::{PicardConfig, SeedDensity};
use crate::fpk::InitialDensity;
use crate::graphon::{AlphaGrid, CostModel, Graphon, GraphonKind};
use crate::grid::{TimeGrid, TorusGrid};
use crate::hopf_cole::{Discretization, DriftPotential, DriftSamples};
use crate::monte_carlo::McConfig;
use crate::output::read_field_csv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_t: usize,
    /// Implicitness of the HJB scheme; 0.5 is Crank-Nicolson.
    pub theta: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            horizon: 0.5,
            n_t: 200,
            theta: crate::parabolic::DEFAULT_THETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSection {
    #[serde(rename = "M")]
    pub m: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection { m: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphonSection {
    /// `constant`, `uniform_attachment`, `table`, `expr` or `file`.
    pub kind: String,
    pub p: f64,
    pub table: Option<Vec<Vec<f64>>>,
    pub expr: Option<String>,
    pub file: Option<PathBuf>,
    pub bound: Option<f64>,
}

impl Default for GraphonSection {
    fn default() -> Self {
        GraphonSection {
            kind: "uniform_attachment".into(),
            p: 1.0,
            table: None,
            expr: None,
            file: None,
            bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSection {
    pub ell2: String,
    /// Dense `n x n` kernel table; overrides `ell2`.
    pub ell2_file: Option<PathBuf>,
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection {
            ell2: "cos(2*pi*(x - y))".into(),
            ell2_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub b: String,
}

impl Default for DriftSection {
    fn default() -> Self {
        DriftSection { b: "0".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub m0: String,
    /// Dense `M x n` (or `1 x n`) histogram, or a density CSV whose last
    /// time level is used; overrides `m0`.
    pub m0_file: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            m0: "1".into(),
            m0_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// `initial`, `uniform` or `file`.
    pub seed: String,
    /// Density CSV with the full time grid, used when `seed = "file"`.
    pub seed_file: Option<PathBuf>,
}

impl Default for PicardSection {
    fn default() -> Self {
        let d = PicardConfig::default();
        PicardSection {
            damping: d.damping,
            tol: d.tol,
            max_iter: d.max_iter,
            seed: "initial".into(),
            seed_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub n_paths: usize,
    /// Defaults to the PDE time step.
    pub dt_mc: Option<f64>,
    pub rng_seed: u64,
    pub antithetic: bool,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            n_paths: 4000,
            dt_mc: None,
            rng_seed: 12345,
            antithetic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "output".into() }
    }
}

/// The parsed scenario file with all defaults applied.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub grid: GridSection,
    pub time: TimeSection,
    pub clusters: ClusterSection,
    pub graphon: GraphonSection,
    pub cost: CostSection,
    pub drift: DriftSection,
    pub initial: InitialSection,
    pub picard: PicardSection,
    pub monte_carlo: MonteCarloSection,
    pub output: OutputSection,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| GmfgError::io(path, e))?;
    let mut cfg = ScenarioConfig::parse(&src)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.build()?;
    Ok(cfg)
}

impl ScenarioConfig {
    /// Parses and validates the numeric fields; file references are not
    /// touched until [`ScenarioConfig::build`].
    pub fn parse(src: &str) -> Result<ScenarioConfig> {
        let mut cfg: ScenarioConfig = toml::from_str(src).map_err(|e| GmfgError::Parse {
            line: e.span().map(|s| line_of(src, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        if cfg.monte_carlo.dt_mc.is_none() {
            cfg.monte_carlo.dt_mc = Some(cfg.time.horizon / cfg.time.n_t as f64);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, key: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(GmfgError::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        if self.grid.n < TorusGrid::MIN_NODES {
            return Err(GmfgError::config("grid.n", format!("must be at least {}, got {}", TorusGrid::MIN_NODES, self.grid.n)));
        }
        positive(self.time.horizon, "time.T")?;
        if self.time.n_t == 0 {
            return Err(GmfgError::config("time.n_t", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.time.theta) {
            return Err(GmfgError::config("time.theta", format!("must lie in [0, 1], got {}", self.time.theta)));
        }
        if self.clusters.m == 0 {
            return Err(GmfgError::config("clusters.M", "must be at least 1"));
        }
        self.picard_config_unresolved().validate()?;
        if !["initial", "uniform", "file"].contains(&self.picard.seed.as_str()) {
            return Err(GmfgError::config("picard.seed", format!("expected initial, uniform or file, got {:?}", self.picard.seed)));
        }
        if self.picard.seed == "file" && self.picard.seed_file.is_none() {
            return Err(GmfgError::config("picard.seed_file", "required when picard.seed = \"file\""));
        }
        let dt = self.time.horizon / self.time.n_t as f64;
        let mc = McConfig {
            n_paths: self.monte_carlo.n_paths,
            dt_mc: self.monte_carlo.dt_mc.unwrap_or(dt),
            rng_seed: self.monte_carlo.rng_seed,
            antithetic: self.monte_carlo.antithetic,
        };
        mc.validate(Some(dt))?;
        if let Some(b) = self.graphon.bound {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(GmfgError::config("graphon.bound", format!("must be nonnegative, got {b}")));
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Ok(Discretization {
            grid: TorusGrid::new(self.grid.n)?,
            tgrid: TimeGrid::new(self.time.horizon, self.time.n_t)?,
            alpha: AlphaGrid::new(self.clusters.m)?,
            theta: self.time.theta,
        })
    }

    fn picard_config_unresolved(&self) -> PicardConfig {
        PicardConfig {
            damping: self.picard.damping,
            tol: self.picard.tol,
            max_iter: self.picard.max_iter,
            seed: SeedDensity::Initial,
        }
    }

    /// The Picard settings, loading the seed field if one is configured.
    pub fn picard_config(&self) -> Result<PicardConfig> {
        let mut cfg = self.picard_config_unresolved();
        cfg.seed = match self.picard.seed.as_str() {
            "uniform" => SeedDensity::Uniform,
            "file" => {
                let path = self.resolve(self.picard.seed_file.as_deref().expect("validated"));
                let field = read_field_csv(&path)?;
                SeedDensity::Field(field.values)
            }
            _ => SeedDensity::Initial,
        };
        Ok(cfg)
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_paths: self.monte_carlo.n_paths,
            dt_mc: self.monte_carlo.dt_mc.unwrap_or(self.time.horizon / self.time.n_t as f64),
            rng_seed: self.monte_carlo.rng_seed,
            antithetic: self.monte_carlo.antithetic,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    fn graphon(&self) -> Result<Graphon> {
        let g = &self.graphon;
        let wrap = |e: GmfgError| GmfgError::config("graphon", e.to_string());
        let kind = match g.kind.as_str() {
            "constant" => GraphonKind::Constant(g.p),
            "uniform_attachment" => GraphonKind::UniformAttachment,
            "table" => GraphonKind::PiecewiseConstant(
                g.table.clone().ok_or_else(|| GmfgError::config("graphon.table", "required when kind = \"table\""))?,
            ),
            "expr" => {
                let src = g.expr.as_deref().ok_or_else(|| GmfgError::config("graphon.expr", "required when kind = \"expr\""))?;
                GraphonKind::Expression(Expr::parse(src).map_err(|e| GmfgError::config("graphon.expr", e.to_string()))?)
            }
            "file" => {
                let path = g.file.as_deref().ok_or_else(|| GmfgError::config("graphon.file", "required when kind = \"file\""))?;
                let table = read_dense_matrix(&self.resolve(path))?;
                GraphonKind::PiecewiseConstant(table)
            }
            other => {
                return Err(GmfgError::config(
                    "graphon.kind",
                    format!("expected constant, uniform_attachment, table, expr or file, got {other:?}"),
                ))
            }
        };
        Graphon::new(kind, g.bound).map_err(wrap)
    }

    /// Assembles the model: samples every expression, reads every file,
    /// normalises `m0` and validates `b` and the graphon.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let disc = self.discretization()?;
        let graphon = self.graphon()?;
        graphon.matrix(&disc.alpha).map_err(|e| GmfgError::config("graphon", e.to_string()))?;
        let cost = match &self.cost.ell2_file {
            Some(p) => {
                let table = read_dense_matrix(&self.resolve(p))?;
                if table.len() != disc.grid.n() || table.iter().any(|r| r.len() != disc.grid.n()) {
                    return Err(GmfgError::config("cost.ell2_file", format!("expected an {0} x {0} table", disc.grid.n())));
                }
                CostModel::new(disc.grid, disc.alpha, table.concat(), &graphon)
            }
            None => {
                let e = Expr::parse(&self.cost.ell2).map_err(|e| GmfgError::config("cost.ell2", e.to_string()))?;
                CostModel::from_expr(disc.grid, disc.alpha, &e, &graphon)
            }
        }
        .map_err(|e| GmfgError::config("cost", e.to_string()))?;
        let drift = DriftPotential::parse(&self.drift.b, self.time.horizon)?;
        let m0 = match &self.initial.m0_file {
            Some(p) => self.initial_from_file(&self.resolve(p), &disc)?,
            None => {
                let e = Expr::parse(&self.initial.m0).map_err(|e| GmfgError::config("initial.m0", e.to_string()))?;
                InitialDensity::from_expr(&disc.grid, &disc.alpha, &e)?
            }
        };
        Scenario::new(disc, Arc::new(cost), drift, m0)
    }

    fn initial_from_file(&self, path: &Path, disc: &Discretization) -> Result<InitialDensity> {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let slices = if is_csv {
            let f = read_field_csv(path)?;
            let last = f.values.levels() - 1;
            (0..f.values.clusters()).map(|j| f.values.slice(last, j).to_vec()).collect()
        } else {
            read_dense_matrix(path)?
        };
        let slices = match slices.len() {
            1 => vec![slices[0].clone(); disc.alpha.len()],
            m if m == disc.alpha.len() => slices,
            m => {
                return Err(GmfgError::config(
                    "initial.m0_file",
                    format!("has {m} rows, expected 1 or {}", disc.alpha.len()),
                ))
            }
        };
        InitialDensity::new(&disc.grid, slices).map_err(|e| GmfgError::config("initial.m0_file", e.to_string()))
    }
}

/// Parses a dense matrix: a `rows cols` header line followed by the
/// values in row-major order, separated by whitespace or commas. Lines
/// starting with `#` are ignored.
pub fn parse_dense_matrix(src: &str) -> Result<Vec<Vec<f64>>> {
    let mut header: Option<(usize, usize)> = None;
    let mut values = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        if header.is_none() {
            let mut dim = || -> Result<usize> {
                tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .filter(|d| *d > 0)
                    .ok_or_else(|| GmfgError::Parse {
                        line: ln + 1,
                        message: "expected header `rows cols` with positive integers".into(),
                    })
            };
            header = Some((dim()?, dim()?));
            if tokens.next().is_some() {
                return Err(GmfgError::Parse {
                    line: ln + 1,
                    message: "header must contain exactly two integers".into(),
                });
            }
            continue;
        }
        for t in tokens {
            let v: f64 = t.parse().map_err(|_| GmfgError::Parse {
                line: ln + 1,
                message: format!("not a number: {t:?}"),
            })?;
            if !v.is_finite() {
                return Err(GmfgError::Parse {
                    line: ln + 1,
                    message: format!("non-finite value {t:?}"),
                });
            }
            values.push(v);
        }
    }
    let (rows, cols) = header.ok_or(GmfgError::Parse {
        line: 1,
        message: "empty matrix file".into(),
    })?;
    if values.len() != rows * cols {
        return Err(GmfgError::Parse {
            line: src.lines().count(),
            message: format!("expected {} values for a {rows} x {cols} matrix, found {}", rows * cols, values.len()),
        });
    }
    Ok(values.chunks(cols).map(<[f64]>::to_vec).collect())
}

pub fn read_dense_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let src = std::fs::read_to_string(path).map_err(|e| GmfgError::io(path, e))?;
    parse_dense_matrix(&src)
}

/// The assembled, immutable model consumed by the solvers.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub disc: Discretization,
    pub cost: Arc<CostModel>,
    pub drift: DriftPotential,
    pub drift_samples: DriftSamples,
    pub m0: InitialDensity,
}

impl Scenario {
    pub fn new(disc: Discretization, cost: Arc<CostModel>, drift: DriftPotential, m0: InitialDensity) -> Result<Self> {
        check_len(disc.grid.n(), cost.grid().n())?;
        check_len(disc.alpha.len(), cost.alpha().len())?;
        check_len(disc.alpha.len(), m0.clusters())?;
        check_len(disc.grid.n(), m0.n())?;
        if !(0.0..=1.0).contains(&disc.theta) {
            return Err(GmfgError::InvalidInput(format!("theta must lie in [0, 1], got {}", disc.theta)));
        }
        let drift_samples = drift.sample(&disc.grid, &disc.tgrid, &disc.alpha);
        Ok(Scenario {
            disc,
            cost,
            drift,
            drift_samples,
            m0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ScenarioConfig::parse("").unwrap();
        assert_eq!(cfg.grid.n, 64);
        assert_eq!(cfg.time.n_t, 200);
        assert_eq!(cfg.clusters.m, 16);
        assert_eq!(cfg.time.horizon, 0.5);
        assert_eq!(cfg.picard.damping, 0.5);
        assert_eq!(cfg.picard.tol, 1e-6);
        assert_eq!(cfg.monte_carlo.dt_mc, Some(0.5 / 200.0));
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn uniform_attachment_matrix() {
        let cfg = ScenarioConfig::parse("[clusters]\nM = 5\n[graphon]\nkind = \"uniform_attachment\"\n").unwrap();
        let sc = cfg.build().unwrap();
        let a = sc.disc.alpha;
        let g = sc.cost.graphon_matrix();
        for j in 0..5 {
            for k in 0..5 {
                assert_eq!(g[j][k], 1.0 - a.node(j).max(a.node(k)));
            }
        }
    }

    #[test]
    fn errors_name_the_key() {
        let err = ScenarioConfig::parse("[time]\nT = -0.5\n").unwrap_err();
        assert!(err.to_string().contains("time.T"), "{err}");
        let err = ScenarioConfig::parse("[grid]\nn = 2\n").unwrap_err();
        assert!(err.to_string().contains("grid.n"));
        let err = ScenarioConfig::parse("[picard]\ndamping = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("picard.damping"));
        let err = ScenarioConfig::parse("[monte_carlo]\nn_paths = 10\n").unwrap_err();
        assert!(err.to_string().contains("monte_carlo.n_paths"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match ScenarioConfig::parse("[grid]\nn = 64\nbogus = 1\n").unwrap_err() {
            GmfgError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(ScenarioConfig::parse("[grid\n").unwrap_err(), GmfgError::Parse { line: 1, .. }));
    }

    #[test]
    fn asymmetric_table_rejected() {
        let cfg = ScenarioConfig::parse("[clusters]\nM = 2\n[graphon]\nkind = \"table\"\ntable = [[1.0, 0.5], [0.4, 1.0]]\n").unwrap();
        let err = cfg.build().unwrap_err();
        assert!(err.to_string().contains("graphon"), "{err}");
    }

    #[test]
    fn bad_drift_rejected() {
        let cfg = ScenarioConfig::parse("[drift]\nb = \"x^2\"\n").unwrap();
        assert!(cfg.build().unwrap_err().to_string().contains("drift.b"));
    }

    #[test]
    fn dense_matrix_parsing() {
        let m = parse_dense_matrix("# comment\n2 3\n1 2 3\n4,5,6\n").unwrap();
        assert_eq!(m, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        match parse_dense_matrix("2 2\n1 2\n3 x\n").unwrap_err() {
            GmfgError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        assert!(parse_dense_matrix("2 2\n1 2 3\n").is_err());
        assert!(parse_dense_matrix("").is_err());
    }

    #[test]
    fn files_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m0.txt"), "1 8\n1 2 3 4 4 3 2 1\n").unwrap();
        std::fs::write(dir.path().join("g.txt"), "2 2\n1 0.5\n0.5 1\n").unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(
            &path,
            "[grid]\nn = 8\n[clusters]\nM = 3\n[graphon]\nkind = \"file\"\nfile = \"g.txt\"\n[initial]\nm0_file = \"m0.txt\"\n",
        )
        .unwrap();
        let cfg = load_scenario(&path).unwrap();
        let sc = cfg.build().unwrap();
        let h = sc.disc.grid.h();
        for j in 0..3 {
            assert!((h * sc.m0.slice(j).iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert_eq!(sc.cost.graphon_matrix()[0][2], 0.5);
        assert!(load_scenario(dir.path().join("missing.toml")).is_err());
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let cfg = ScenarioConfig::parse("[grid]\nn = 32\n").unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
