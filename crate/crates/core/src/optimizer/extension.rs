//! Extends a grid solution to a functionally generated pair on (0, 1):
//! the generating function interpolates phi piecewise-linearly and the
//! portfolio follows the segment-slope formula between grid points, with
//! the stored z as the designated selection at the kinks.

use crate::error::Result;
use crate::fgp::{FGPair, GeneratingFunction};
use crate::simplex::{PortfolioKind, PortfolioMap};

use super::{Grid, GridSolution};

/// Tolerance for recognizing an evaluation point as a grid point.
const GRID_SNAP: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Polyhedral {
    /// Full grid 0 = x_0 < x_1 < ... < x_m < x_{m+1} = 1.
    xf: Vec<f64>,
    phi: Vec<f64>,
    slopes: Vec<f64>,
    /// Interior grid points and their designated weights.
    xs: Vec<f64>,
    z: Vec<f64>,
}

impl Polyhedral {
    /// Index of the full-grid segment containing x.
    fn segment(&self, x: f64) -> usize {
        match self.xf.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(j) => j.min(self.xf.len() - 2),
            Err(j) => j.saturating_sub(1).min(self.xf.len() - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let j = self.segment(x);
        self.phi[j] + self.slopes[j] * (x - self.xf[j])
    }

    fn weight(&self, x: f64) -> f64 {
        // Exact designated selection at interior grid points.
        if let Some(i) = self.grid_index(x) {
            return self.z[i];
        }
        let j = self.segment(x);
        let phi = self.phi[j] + self.slopes[j] * (x - self.xf[j]);
        let w = x + x * (1.0 - x) * self.slopes[j] / phi;
        w.clamp(0.0, 1.0)
    }

    fn grid_index(&self, x: f64) -> Option<usize> {
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => Some(i),
            Err(i) => {
                if i < self.xs.len() && (self.xs[i] - x).abs() <= GRID_SNAP {
                    Some(i)
                } else if i > 0 && (x - self.xs[i - 1]).abs() <= GRID_SNAP {
                    Some(i - 1)
                } else {
                    None
                }
            }
        }
    }
}

/// Builds the extended pair from a feasible grid solution.
pub fn polyhedral_extension(solution: &GridSolution, grid: &Grid) -> Result<FGPair> {
    solution.vars.validate_shape(grid)?;
    let poly = Polyhedral {
        xf: grid.full(),
        phi: solution.vars.phi.clone(),
        slopes: solution.vars.slopes(grid),
        xs: grid.xs().to_vec(),
        z: solution.vars.z.clone(),
    };
    let gen_poly = poly.clone();
    let generator = GeneratingFunction::new("polyhedral", move |c: &[f64]| gen_poly.value(c[0]));
    let portfolio = PortfolioMap::new(PortfolioKind::Grid, move |p| {
        let w = poly.weight(p.coords()[0]);
        vec![w, 1.0 - w]
    });
    Ok(FGPair::new(portfolio, generator))
}
