//! Runtime a-priori bound checks.

use serde::{Deserialize, Serialize};

/// Outcome of comparing a measured quantity against an analytic bound.
///
/// `passed` is `lhs <= rhs + tolerance`; `slack` is `rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub slack: f64,
    pub passed: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let passed = lhs.is_finite() && rhs.is_finite() && lhs <= rhs + tolerance;
        BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            tolerance,
            slack: rhs - lhs,
            passed,
        }
    }

    /// Combines checks of the same kind, keeping the tightest one.
    pub fn worst(name: impl Into<String>, checks: impl IntoIterator<Item = BoundCheck>) -> Option<BoundCheck> {
        let name = name.into();
        checks
            .into_iter()
            .min_by(|a, b| {
                (a.passed, a.slack + a.tolerance)
                    .partial_cmp(&(b.passed, b.slack + b.tolerance))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|mut c| {
                c.name = name;
                c
            })
    }
}
