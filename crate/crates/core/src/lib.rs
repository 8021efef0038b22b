//! Graphon mean field game equilibria on the circle.
//!
//! The equilibrium pair (value `v`, population density `mu`) is computed by
//! damped Picard iteration of a two-stage map: a Hopf-Cole linearised
//! Hamilton-Jacobi-Bellman solve per cluster, followed by a conservative
//! Fokker-Planck solve per cluster. Clusters are coupled through a graphon
//! in the running cost. Monte Carlo oracles (Feynman-Kac, particle
//! simulation, cost functional) validate every stage independently.
//!
//! ```
//! use gmfg_core::{grid::TorusGrid, wasserstein::{w1_circle, DiscreteMeasure}};
//!
//! let grid = TorusGrid::new(20).unwrap();
//! let a = DiscreteMeasure::point_mass(grid, 1);
//! let b = DiscreteMeasure::point_mass(grid, 17);
//! assert!((w1_circle(&a, &b).unwrap() - 0.2).abs() < 1e-12);
//! ```

pub mod bounds;
pub mod error;
pub mod expr;
pub mod field;
pub mod fixed_point;
pub mod fpk;
pub mod graphon;
pub mod grid;
pub mod hopf_cole;
pub mod monte_carlo;
pub mod norms;
pub mod output;
pub mod parabolic;
pub mod scenario;
pub mod tridiag;
pub mod wasserstein;

mod clock;
mod par;

pub use bounds::BoundCheck;
pub use error::{GmfgError, Result};
pub use field::{ClusterField, SpaceTimeField};
pub use fixed_point::{picard_solve, GmfgSolution, PicardConfig, SolveReport};
pub use graphon::{AlphaGrid, CostModel, Graphon};
pub use grid::{TimeGrid, TorusGrid};
pub use hopf_cole::{Discretization, DriftPotential, ValueField};
pub use monte_carlo::{McConfig, McEstimate};
pub use scenario::{load_scenario, Scenario, ScenarioConfig};
