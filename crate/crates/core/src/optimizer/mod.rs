//! Shape-constrained maximization of average L-divergence over a jump sample,
//! for two-asset markets on a grid of market weights.
//!
//! Decision variables are the portfolio weight of asset 1 at each interior
//! grid point and the generating function values at all grid points including
//! the endpoints 0 and 1. The generating function is piecewise linear; the
//! constraint menu covers nonnegativity + normalization, concavity of the
//! slopes, the generation inequality coupling weights to slopes, monotone
//! weights, weight-ratio bounds, box bounds and an experimental tracking
//! error bound.

mod brute;
mod consistency;
mod extension;
mod solve;

pub use brute::brute_force_solve;
pub use consistency::{consistency_experiment, ConsistencyReport};
pub use extension::polyhedral_extension;
pub use solve::{solve, SolverConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::JumpSample;

/// Interior grid points of the asset-1 market weight, with implied
/// endpoints 0 and 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    xs: Vec<f64>,
}

impl Grid {
    pub fn new(xs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::GridTooSmall { need: 1, got: 0 });
        }
        if xs[0] <= 0.0 || *xs.last().unwrap() >= 1.0 {
            return Err(Error::InvalidRegion(
                "grid points must lie strictly inside (0, 1)".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRegion(
                "grid points must be strictly increasing".into(),
            ));
        }
        Ok(Self { xs })
    }

    /// Inclusive uniform grid, e.g. (0.1, 0.3, 0.001) gives 201 points.
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi > lo) {
            return Err(Error::InvalidRegion(format!(
                "bad uniform grid spec lo={lo} hi={hi} step={step}"
            )));
        }
        let count = ((hi - lo) / step).round() as usize + 1;
        let xs = (0..count)
            .map(|k| {
                // Round to the step's decimal lattice to avoid drift.
                let x = lo + k as f64 * step;
                (x / step).round() * step
            })
            .collect();
        Self::new(xs)
    }

    /// Uniform grid with resolution 10^-decimals over [lo, hi].
    pub fn from_decimals(lo: f64, hi: f64, decimals: u32) -> Result<Self> {
        Self::uniform(lo, hi, 10f64.powi(-(decimals as i32)))
    }

    /// Number of interior points.
    pub fn m(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Interior points plus the endpoints 0 and 1 (length m + 2).
    pub fn full(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.xs.len() + 2);
        f.push(0.0);
        f.extend_from_slice(&self.xs);
        f.push(1.0);
        f
    }

    /// Smallest spacing between consecutive interior points.
    pub fn resolution(&self) -> f64 {
        self.xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
            .min(1.0)
    }

    /// Nearest interior grid index and the absolute offset.
    pub fn nearest(&self, x: f64) -> (usize, f64) {
        let idx = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.xs.len() => i - 1,
            Err(i) => {
                if (x - self.xs[i - 1]).abs() <= (self.xs[i] - x).abs() {
                    i - 1
                } else {
                    i
                }
            }
        };
        (idx, (x - self.xs[idx]).abs())
    }
}

/// Decision variables: z (portfolio weight of asset 1 at interior grid
/// points) and phi (generating function values at all m + 2 grid points).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionVars {
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
}

impl DecisionVars {
    pub fn validate_shape(&self, grid: &Grid) -> Result<()> {
        if self.z.len() != grid.m() || self.phi.len() != grid.m() + 2 {
            return Err(Error::DimensionMismatch(format!(
                "vars ({} z, {} phi) vs grid (m = {})",
                self.z.len(),
                self.phi.len(),
                grid.m()
            )));
        }
        Ok(())
    }

    /// Chord slopes s_j = (phi_{j+1} - phi_j) / (x_{j+1} - x_j), j = 0..m.
    pub fn slopes(&self, grid: &Grid) -> Vec<f64> {
        let xf = grid.full();
        self.phi
            .windows(2)
            .zip(xf.windows(2))
            .map(|(p, x)| (p[1] - p[0]) / (x[1] - x[0]))
            .collect()
    }
}

/// Experimental per-point tracking error bound
/// (pi(p) - p)' Sigma (pi(p) - p) <= epsilon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackingConstraint {
    pub sigma: [[f64; 2]; 2],
    pub epsilon: f64,
}

impl TrackingConstraint {
    /// For n = 2 the quadratic form collapses to kappa (z - x)^2.
    pub fn kappa(&self) -> f64 {
        self.sigma[0][0] - self.sigma[0][1] - self.sigma[1][0] + self.sigma[1][1]
    }
}

/// Constraint menu applying at every interior grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// Bounds (m, M) on the asset-1 weight ratio z / x.
    pub ratio_bounds: Option<(f64, f64)>,
    /// Box bounds (a, b) on the asset-1 weight z.
    pub box_bounds: Option<(f64, f64)>,
    /// Require z nondecreasing across the grid.
    pub monotone: bool,
    /// Experimental tracking error bound; parsed and checked, no paper example.
    pub tracking: Option<TrackingConstraint>,
}

impl ConstraintSet {
    pub fn none() -> Self {
        Self {
            ratio_bounds: None,
            box_bounds: None,
            monotone: false,
            tracking: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.ratio_bounds {
            if !(lo <= hi) {
                return Err(Error::Infeasible(format!("ratio bounds [{lo}, {hi}]")));
            }
        }
        if let Some((lo, hi)) = self.box_bounds {
            if !(lo <= hi) {
                return Err(Error::Infeasible(format!("box bounds [{lo}, {hi}]")));
            }
        }
        if let Some(t) = &self.tracking {
            if !(t.epsilon > 0.0) {
                return Err(Error::Infeasible(format!(
                    "tracking epsilon {} must be positive",
                    t.epsilon
                )));
            }
        }
        Ok(())
    }

    /// Per-coordinate feasible interval for z_i from ratio and box bounds.
    pub fn z_box(&self, x: f64) -> (f64, f64) {
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        if let Some((m, big_m)) = self.ratio_bounds {
            lo = lo.max(m * x);
            hi = hi.min(big_m * x);
        }
        if let Some((a, b)) = self.box_bounds {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if let Some(t) = &self.tracking {
            let k = t.kappa();
            if k > 0.0 {
                let r = (t.epsilon / k).sqrt();
                lo = lo.max(x - r);
                hi = hi.min(x + r);
            }
        }
        (lo, hi)
    }
}

/// One deduplicated sample record: grid indices of (p, q) and total weight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleRecord {
    pub ip: usize,
    pub iq: usize,
    pub weight: f64,
}

/// The finite-dimensional problem: grid, deduplicated sample, constraints
/// and solver configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub records: Vec<SampleRecord>,
    pub constraints: ConstraintSet,
    pub config: SolverConfig,
}

/// Maps a jump sample onto the grid and aggregates duplicate index pairs.
///
/// Each sample coordinate must land within half a grid resolution of an
/// interior grid point.
pub fn build_problem(
    sample: &JumpSample,
    grid: Grid,
    constraints: ConstraintSet,
    config: SolverConfig,
) -> Result<Problem> {
    constraints.validate()?;
    let half_res = 0.5 * grid.resolution() * (1.0 + 1e-9);
    let mut agg = std::collections::BTreeMap::<(usize, usize), f64>::new();
    for ((p, q), &w) in sample.pairs().iter().zip(sample.weights()) {
        if p.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "grid optimizer handles 2 assets, sample has {}",
                p.dim()
            )));
        }
        let (ip, off_p) = grid.nearest(p.coords()[0]);
        if off_p > half_res {
            return Err(Error::OffGridSample {
                value: p.coords()[0],
                offset: off_p,
                half_res,
            });
        }
        let (iq, off_q) = grid.nearest(q.coords()[0]);
        if off_q > half_res {
            return Err(Error::OffGridSample {
                value: q.coords()[0],
                offset: off_q,
                half_res,
            });
        }
        *agg.entry((ip, iq)).or_insert(0.0) += w;
    }
    // Renormalize aggregated weights: removes float accumulation noise so
    // that nested prefixes of one sample map to identical problems.
    let total: f64 = agg.values().sum();
    let records = agg
        .into_iter()
        .map(|((ip, iq), weight)| SampleRecord {
            ip,
            iq,
            weight: weight / total,
        })
        .collect();
    Ok(Problem {
        grid,
        records,
        constraints,
        config,
    })
}

/// Gradient of the objective with respect to (z, phi).
#[derive(Debug, Clone)]
pub struct Gradient {
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Objective sum_j w_j T(q_j | p_j) with analytic partial derivatives.
///
/// Errors when a log argument is nonpositive, naming the record and the
/// variable responsible.
pub fn objective_and_gradient(problem: &Problem, vars: &DecisionVars) -> Result<(f64, Gradient)> {
    vars.validate_shape(&problem.grid)?;
    let xs = problem.grid.xs();
    let mut value = 0.0;
    let mut gz = vec![0.0; vars.z.len()];
    let mut gphi = vec![0.0; vars.phi.len()];
    for (r, rec) in problem.records.iter().enumerate() {
        let xp = xs[rec.ip];
        let xq = xs[rec.iq];
        let delta = xq - xp;
        let z = vars.z[rec.ip];
        let growth = 1.0 + z * delta / xp - (1.0 - z) * delta / (1.0 - xp);
        if !(growth > 0.0) {
            return Err(Error::ObjectiveUndefined {
                record: r,
                term: format!("growth factor at z[{}]", rec.ip),
                value: growth,
            });
        }
        let phi_p = vars.phi[rec.ip + 1];
        let phi_q = vars.phi[rec.iq + 1];
        if !(phi_p > 0.0) {
            return Err(Error::ObjectiveUndefined {
                record: r,
                term: format!("phi[{}]", rec.ip + 1),
                value: phi_p,
            });
        }
        if !(phi_q > 0.0) {
            return Err(Error::ObjectiveUndefined {
                record: r,
                term: format!("phi[{}]", rec.iq + 1),
                value: phi_q,
            });
        }
        value += rec.weight * (growth.ln() - (phi_q / phi_p).ln());
        gz[rec.ip] += rec.weight * (delta / (xp * (1.0 - xp))) / growth;
        gphi[rec.ip + 1] += rec.weight / phi_p;
        gphi[rec.iq + 1] -= rec.weight / phi_q;
    }
    Ok((value, Gradient { z: gz, phi: gphi }))
}

/// Per-family maximum constraint violations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Residuals {
    /// max(0, -phi_j) over all grid points.
    pub nonnegativity: f64,
    /// |phi_1 - 1| at the first interior grid point.
    pub normalization: f64,
    /// max(0, s_{j+1} - s_j): slopes must be nonincreasing.
    pub concavity: f64,
    /// Two-sided violation of the generation inequality
    /// x + x(1-x) s_j / phi <= z <= x + x(1-x) s_{j-1} / phi.
    pub generation: f64,
    /// max(0, z_i - z_{i+1}) when the monotone constraint is on.
    pub monotonicity: f64,
    /// Violation of the weight ratio bounds m <= z/x <= M.
    pub ratio_bounds: f64,
    /// Violation of the box bounds a <= z <= b.
    pub box_bounds: f64,
    /// Violation of the tracking error bound.
    pub tracking: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [
            self.nonnegativity,
            self.normalization,
            self.concavity,
            self.generation,
            self.monotonicity,
            self.ratio_bounds,
            self.box_bounds,
            self.tracking,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates every constraint family as max(0, violation).
pub fn feasibility_residuals(
    vars: &DecisionVars,
    grid: &Grid,
    constraints: &ConstraintSet,
) -> Result<Residuals> {
    vars.validate_shape(grid)?;
    let xs = grid.xs();
    let m = grid.m();
    let s = vars.slopes(grid);

    let nonnegativity = vars.phi.iter().map(|&p| (-p).max(0.0)).fold(0.0, f64::max);
    let normalization = (vars.phi[1] - 1.0).abs();
    let concavity = s
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max);

    let mut generation = 0.0_f64;
    for i in 0..m {
        let x = xs[i];
        let c = x * (1.0 - x);
        let phi = vars.phi[i + 1];
        if phi <= 0.0 {
            // Division undefined; report through nonnegativity instead.
            continue;
        }
        let lo = x + c * s[i + 1] / phi;
        let hi = x + c * s[i] / phi;
        generation = generation.max(lo - vars.z[i]).max(vars.z[i] - hi);
    }
    let generation = generation.max(0.0);

    let monotonicity = if constraints.monotone {
        vars.z
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    let mut ratio_bounds = 0.0_f64;
    if let Some((lo, hi)) = constraints.ratio_bounds {
        for (i, &z) in vars.z.iter().enumerate() {
            let r = z / xs[i];
            ratio_bounds = ratio_bounds.max(lo - r).max(r - hi);
        }
    }
    let ratio_bounds = ratio_bounds.max(0.0);

    let mut box_bounds = 0.0_f64;
    if let Some((lo, hi)) = constraints.box_bounds {
        for &z in &vars.z {
            box_bounds = box_bounds.max(lo - z).max(z - hi);
        }
    }
    let box_bounds = box_bounds.max(0.0);

    let mut tracking = 0.0_f64;
    if let Some(t) = &constraints.tracking {
        let k = t.kappa();
        for (i, &z) in vars.z.iter().enumerate() {
            tracking = tracking.max(k * (z - xs[i]).powi(2) - t.epsilon);
        }
    }
    let tracking = tracking.max(0.0);

    Ok(Residuals {
        nonnegativity,
        normalization,
        concavity,
        generation,
        monotonicity,
        ratio_bounds,
        box_bounds,
        tracking,
    })
}

/// A solved (or best-effort) instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSolution {
    pub vars: DecisionVars,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub start_label: String,
    pub converged: bool,
}

/// The market restriction: z = x, phi identically 1 (zero slopes).
pub fn market_start(grid: &Grid) -> DecisionVars {
    DecisionVars {
        z: grid.xs().to_vec(),
        phi: vec![1.0; grid.m() + 2],
    }
}

/// The equal-weight restriction: z = 1/2, phi sampled from sqrt(x(1-x))
/// normalized at the first interior grid point.
pub fn equal_weight_start(grid: &Grid) -> DecisionVars {
    let u = |x: f64| (x * (1.0 - x)).sqrt();
    let scale = u(grid.xs()[0]);
    let phi = grid.full().iter().map(|&x| u(x) / scale).collect();
    DecisionVars {
        z: vec![0.5; grid.m()],
        phi,
    }
}
