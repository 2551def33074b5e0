//! Portfolio specifications accepted on the command line: catalog names
//! (`market`, `equal`, `entropy`, `diversity:<r>`) or the path of a solved
//! portfolio JSON file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fgp_core::fgp::{catalog, CatalogName, FGPair};
use fgp_core::optimizer::{polyhedral_extension, Grid, GridSolution, Residuals};
use fgp_core::{PortfolioKind, PortfolioMap};

use crate::AppError;

pub const FORMAT_VERSION: &str = "1";

/// On-disk schema of a solved portfolio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: String,
    pub config_fingerprint: String,
    pub grid: Vec<f64>,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub start_label: String,
    pub converged: bool,
}

impl SolutionFile {
    pub fn from_solution(solution: &GridSolution, grid: &Grid, fingerprint: String) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            config_fingerprint: fingerprint,
            grid: grid.xs().to_vec(),
            z: solution.vars.z.clone(),
            phi: solution.vars.phi.clone(),
            objective: solution.objective,
            residuals: solution.residuals.clone(),
            iterations: solution.iterations,
            start_label: solution.start_label.clone(),
            converged: solution.converged,
        }
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::parse(format!("cannot read {}: {e}", path.display())))?;
        let file: SolutionFile = serde_json::from_str(&text)
            .map_err(|e| AppError::parse(format!("{}: {e}", path.display())))?;
        if file.format_version != FORMAT_VERSION {
            return Err(AppError::parse(format!(
                "{}: format_version {} unsupported (expected {FORMAT_VERSION})",
                path.display(),
                file.format_version
            )));
        }
        Ok(file)
    }

    pub fn grid(&self) -> Result<Grid, AppError> {
        Grid::new(self.grid.clone()).map_err(AppError::from)
    }

    pub fn to_solution(&self) -> GridSolution {
        GridSolution {
            vars: fgp_core::optimizer::DecisionVars {
                z: self.z.clone(),
                phi: self.phi.clone(),
            },
            objective: self.objective,
            residuals: self.residuals.clone(),
            iterations: self.iterations,
            start_label: self.start_label.clone(),
            converged: self.converged,
        }
    }

    /// The extended pair on (0, 1).
    pub fn fg_pair(&self) -> Result<FGPair, AppError> {
        let grid = self.grid()?;
        polyhedral_extension(&self.to_solution(), &grid).map_err(AppError::from)
    }

    /// Backtest portfolio with the regime-exit clamp: outside [x_1, x_m] the
    /// portfolio holds the boundary grid weights.
    pub fn clamped_pair(&self) -> Result<(FGPair, f64, f64), AppError> {
        let grid = self.grid()?;
        let lo = grid.xs()[0];
        let hi = *grid.xs().last().unwrap();
        let pair = self.fg_pair()?;
        let inner = pair.portfolio.clone();
        let z_lo = self.z[0];
        let z_hi = *self.z.last().unwrap();
        let clamped = PortfolioMap::new(PortfolioKind::Grid, move |p| {
            let x = p.coords()[0];
            if x < lo {
                vec![z_lo, 1.0 - z_lo]
            } else if x > hi {
                vec![z_hi, 1.0 - z_hi]
            } else {
                inner.weights(p).expect("extension weights")
            }
        });
        Ok((FGPair::new(clamped, pair.generator), lo, hi))
    }
}

/// A parsed portfolio argument.
pub enum PortfolioSpec {
    Catalog(CatalogName),
    Solution(Box<SolutionFile>),
}

impl PortfolioSpec {
    pub fn parse(spec: &str) -> Result<Self, AppError> {
        if spec.ends_with(".json") {
            return Ok(Self::Solution(Box::new(SolutionFile::load(Path::new(
                spec,
            ))?)));
        }
        let name = match spec.split_once(':') {
            Some(("diversity", r)) => {
                let r: f64 = r
                    .parse()
                    .map_err(|_| AppError::parse(format!("bad diversity parameter '{r}'")))?;
                CatalogName::Diversity(r)
            }
            None => CatalogName::parse(spec, None)
                .map_err(|_| AppError::parse(format!("unknown portfolio '{spec}'")))?,
            Some((other, _)) => {
                return Err(AppError::parse(format!("unknown portfolio '{other}'")))
            }
        };
        Ok(Self::Catalog(name))
    }

    pub fn fg_pair(&self) -> Result<FGPair, AppError> {
        match self {
            Self::Catalog(name) => catalog(*name).map_err(AppError::from),
            Self::Solution(file) => file.fg_pair(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Catalog(CatalogName::Market) => "market".into(),
            Self::Catalog(CatalogName::Equal) => "equal".into(),
            Self::Catalog(CatalogName::Entropy) => "entropy".into(),
            Self::Catalog(CatalogName::Diversity(r)) => format!("diversity:{r}"),
            Self::Solution(f) => format!("solution({})", f.config_fingerprint),
        }
    }
}
