//! Nested-sample consistency experiment: solve the problem on growing
//! prefixes of one jump sample and report how much the weight curve moves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intensity::JumpSample;

use super::{build_problem, solve, ConstraintSet, Grid, GridSolution, SolverConfig};

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub sizes: Vec<usize>,
    pub objectives: Vec<f64>,
    /// max |z^(N_k) - z^(N_{k+1})| over grid points carrying p-mass in the
    /// smaller sample; one entry per consecutive pair of sizes.
    pub distances: Vec<f64>,
    pub solutions: Vec<GridSolution>,
}

/// Solves the problem on nested prefixes of `sample` for each size in the
/// schedule (strictly increasing, at least 3 entries).
pub fn consistency_experiment(
    sample: &JumpSample,
    n_schedule: &[usize],
    grid: &Grid,
    constraints: &ConstraintSet,
    config: &SolverConfig,
) -> Result<ConsistencyReport> {
    if n_schedule.len() < 3 {
        return Err(Error::InvalidSchedule(format!(
            "need at least 3 sizes, got {}",
            n_schedule.len()
        )));
    }
    if n_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule(
            "sizes must be strictly increasing".into(),
        ));
    }
    let max_n = *n_schedule.last().unwrap();
    if max_n > sample.len() {
        return Err(Error::InvalidSchedule(format!(
            "schedule needs {max_n} pairs, sample has {}",
            sample.len()
        )));
    }
    let mut solutions = Vec::with_capacity(n_schedule.len());
    let mut mass_indices: Vec<std::collections::BTreeSet<usize>> = Vec::new();
    for &n in n_schedule {
        let prefix = sample.prefix(n)?;
        let problem = build_problem(&prefix, grid.clone(), constraints.clone(), config.clone())?;
        mass_indices.push(problem.records.iter().map(|r| r.ip).collect());
        solutions.push(solve(&problem)?);
    }
    let mut distances = Vec::with_capacity(n_schedule.len() - 1);
    for k in 0..solutions.len() - 1 {
        let d = mass_indices[k]
            .iter()
            .map(|&i| (solutions[k].vars.z[i] - solutions[k + 1].vars.z[i]).abs())
            .fold(0.0, f64::max);
        distances.push(d);
    }
    Ok(ConsistencyReport {
        sizes: n_schedule.to_vec(),
        objectives: solutions.iter().map(|s| s.objective).collect(),
        distances,
        solutions,
    })
}
