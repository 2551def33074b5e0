//! Run configuration: a TOML file with sections, overridable by flags.
//! The canonicalized effective configuration is hashed into a fingerprint
//! embedded in every output.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fgp_core::optimizer::{ConstraintSet, Grid, SolverConfig, TrackingConstraint};
use fgp_core::intensity::RegionK;

use crate::AppError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSection {
    /// Bounds on the asset-1 market weight.
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    /// Grid resolution: 10^-decimals between consecutive points.
    pub decimals: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ConstraintSection {
    pub ratio_lo: Option<f64>,
    pub ratio_hi: Option<f64>,
    pub box_lo: Option<f64>,
    pub box_hi: Option<f64>,
    #[serde(default)]
    pub monotone: bool,
    pub tracking_sigma: Option<[[f64; 2]; 2]>,
    pub tracking_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapSection {
    pub paths: usize,
    pub max_len: usize,
    /// Start point (asset-1 weight); defaults to the last row of the prices.
    pub mu0: Option<f64>,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self {
            paths: 50,
            max_len: 10_000,
            mu0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub residual_tol: f64,
    pub stationarity_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub phi_floor: f64,
    pub log_margin: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            residual_tol: d.residual_tol,
            stationarity_tol: d.stationarity_tol,
            max_outer: d.max_outer,
            max_inner: d.max_inner,
            penalty_init: d.penalty_init,
            penalty_growth: d.penalty_growth,
            phi_floor: d.phi_floor,
            log_margin: d.log_margin,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub region: RegionSection,
    pub grid: GridSection,
    #[serde(default)]
    pub constraints: ConstraintSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub solver: SolverSection,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::parse(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| AppError::parse(format!("config {}: {e}", path.display())))
    }

    pub fn region_k(&self) -> Result<RegionK, AppError> {
        RegionK::two_asset(self.region.lo, self.region.hi).map_err(AppError::from)
    }

    pub fn build_grid(&self) -> Result<Grid, AppError> {
        Grid::from_decimals(self.region.lo, self.region.hi, self.grid.decimals)
            .map_err(AppError::from)
    }

    pub fn constraint_set(&self) -> Result<ConstraintSet, AppError> {
        let c = &self.constraints;
        let ratio_bounds = match (c.ratio_lo, c.ratio_hi) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(f64::INFINITY))),
        };
        let box_bounds = match (c.box_lo, c.box_hi) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(1.0))),
        };
        let tracking = match (c.tracking_sigma, c.tracking_epsilon) {
            (Some(sigma), Some(epsilon)) => Some(TrackingConstraint { sigma, epsilon }),
            (None, None) => None,
            _ => {
                return Err(AppError::parse(
                    "tracking constraint needs both tracking_sigma and tracking_epsilon".into(),
                ))
            }
        };
        Ok(ConstraintSet {
            ratio_bounds,
            box_bounds,
            monotone: c.monotone,
            tracking,
        })
    }

    pub fn solver_config(&self, seed: u64) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            residual_tol: s.residual_tol,
            stationarity_tol: s.stationarity_tol,
            max_outer: s.max_outer,
            max_inner: s.max_inner,
            penalty_init: s.penalty_init,
            penalty_growth: s.penalty_growth,
            seed,
            phi_floor: s.phi_floor,
            log_margin: s.log_margin,
        }
    }
}

/// SHA-256 over the canonical JSON of the effective settings; first 16 hex
/// characters identify the run in every output file.
pub fn fingerprint<T: Serialize>(effective: &T) -> String {
    let canonical = serde_json::to_string(effective).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}
