//! Numerical tolerances shared by every layer.
//!
//! `herm` and `pd` are relative to the spectral scale of the matrix under
//! test; the others are absolute on metric-whitened quantities.

use serde::{Deserialize, Serialize};

/// Environment variable overriding the default equivalence tolerance.
pub const TOL_ENV: &str = "HSCALE_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Hermitian defect, relative to the matrix norm.
    pub herm: f64,
    /// Positive-definiteness floor, relative to the matrix norm.
    pub pd: f64,
    /// Floor on whitened singular values of a linking map.
    pub inj: f64,
    /// Slack on the contraction bound.
    pub contr: f64,
    /// Path-independence slack on composed linking maps.
    pub path: f64,
    /// Relative tolerance of D^x class equality.
    pub equal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            pd: 1e-10,
            inj: 1e-8,
            contr: 1e-9,
            path: 1e-9,
            equal: 1e-9,
        }
    }
}

impl Tolerances {
    /// Defaults, with `equal` taken from `HSCALE_TOL` when it parses.
    pub fn from_env() -> Self {
        let mut tol = Self::default();
        if let Some(v) = std::env::var(TOL_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
        {
            tol.equal = v;
        }
        tol
    }
}

/// Per-field overrides as they appear in a system file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub herm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inj: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equal: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            herm: self.herm.unwrap_or(base.herm),
            pd: self.pd.unwrap_or(base.pd),
            inj: self.inj.unwrap_or(base.inj),
            contr: self.contr.unwrap_or(base.contr),
            path: self.path.unwrap_or(base.path),
            equal: self.equal.unwrap_or(base.equal),
        }
    }
}
