//! Functionally generated portfolio analysis.
//!
//! The library covers the discrete-time, model-free side of stochastic
//! portfolio theory: market weight paths and relative value processes,
//! portfolios generated by positive concave functions together with their
//! Fernholz decomposition and L-divergence, diagnostics for the partial
//! order "domination on compacts", bootstrap construction of jump intensity
//! measures, and a shape-constrained grid optimizer for two-asset markets
//! with a backtesting surface.

pub mod dominance;
pub mod error;
pub mod fgp;
pub mod intensity;
pub mod io;
pub mod optimizer;
pub mod simplex;

pub use error::{Error, Result};
pub use fgp::{
    catalog, fernholz_decompose, geometric_blend, l_divergence, portfolio_from_c2, CatalogName,
    DecompositionSeries, FGPair, GeneratingFunction,
};
pub use simplex::{
    line_integral, relative_value_path, weights_from_capitalizations, CapitalSeries, MarketPath,
    PortfolioKind, PortfolioMap, SimplexPoint, TangentVector,
};
