//! Exhaustive lattice enumeration for tiny instances; the verification
//! oracle for the iterative solver.

use crate::error::{Error, Result};

use super::{feasibility_residuals, DecisionVars, GridSolution, Problem};

/// Enumerates phi on a lattice (with concavity pruning) and, for each
/// feasible phi, enumerates z over lattice points inside the generation
/// interval intersected with the z-box, always including the interval
/// endpoints. Returns the best candidate found.
///
/// Instances are capped at m <= 4 and lattice_step >= 1e-2.
pub fn brute_force_solve(problem: &Problem, lattice_step: f64) -> Result<GridSolution> {
    let grid = &problem.grid;
    let m = grid.m();
    if m > 4 {
        return Err(Error::InstanceTooLarge(format!(
            "m = {m} interior points (max 4)"
        )));
    }
    if lattice_step < 1e-2 - 1e-12 {
        return Err(Error::InstanceTooLarge(format!(
            "lattice_step {lattice_step} below 1e-2"
        )));
    }
    let xs = grid.xs();
    let xf = grid.full();
    // Positive concave functions normalized at x_1 obey
    // phi <= diam / dist((x_1, 1-x_1), boundary) = 1 / min(x_1, 1 - x_1);
    // the same bound holds at the other grid points by continuity.
    let phi_max = 1.0 / xs[0].min(1.0 - xs[m - 1]);
    let levels: Vec<f64> = {
        let count = (phi_max / lattice_step).ceil() as usize + 1;
        (0..=count).map(|k| k as f64 * lattice_step).collect()
    };

    // Precompute record data for fast objective evaluation.
    struct Rec {
        ip: usize,
        iq: usize,
        w: f64,
        zcoef: f64,
        base: f64,
    }
    let recs: Vec<Rec> = problem
        .records
        .iter()
        .map(|r| {
            let xp = xs[r.ip];
            let delta = xs[r.iq] - xp;
            Rec {
                ip: r.ip,
                iq: r.iq,
                w: r.weight,
                zcoef: delta / (xp * (1.0 - xp)),
                base: 1.0 - delta / (1.0 - xp),
            }
        })
        .collect();

    let n_phi = m + 2;
    let mut phi = vec![0.0; n_phi];
    phi[1] = 1.0;
    let mut best: Option<(f64, DecisionVars)> = None;
    let mut any_feasible = false;

    // Depth-first over phi positions 0, 2, 3, ..., m+1 with slope pruning.
    let order: Vec<usize> = std::iter::once(0).chain(2..n_phi).collect();
    let stack_eval = |phi: &[f64],
                          best: &mut Option<(f64, DecisionVars)>,
                          any_feasible: &mut bool| {
        // Slopes of the candidate phi.
        let s: Vec<f64> = (0..=m)
            .map(|j| (phi[j + 1] - phi[j]) / (xf[j + 1] - xf[j]))
            .collect();
        // z intervals.
        let mut lo = Vec::with_capacity(m);
        let mut hi = Vec::with_capacity(m);
        for i in 0..m {
            let x = xs[i];
            let c = x * (1.0 - x);
            let p = phi[i + 1];
            if p <= 0.0 {
                return;
            }
            let (blo, bhi) = problem.constraints.z_box(x);
            let l = (x + c * s[i + 1] / p).max(blo);
            let h = (x + c * s[i] / p).min(bhi);
            if l > h + 1e-12 {
                return;
            }
            lo.push(l);
            hi.push(h.max(l));
        }
        // Candidate z values per coordinate: endpoints + lattice interior.
        let mut cands: Vec<Vec<f64>> = Vec::with_capacity(m);
        for i in 0..m {
            let mut c = vec![lo[i]];
            let mut k = (lo[i] / lattice_step).ceil() as i64;
            loop {
                let v = k as f64 * lattice_step;
                if v >= hi[i] - 1e-15 {
                    break;
                }
                if v > lo[i] + 1e-15 {
                    c.push(v);
                }
                k += 1;
            }
            if hi[i] > lo[i] + 1e-15 {
                c.push(hi[i]);
            }
            cands.push(c);
        }
        // Enumerate z with monotonicity pruning.
        let monotone = problem.constraints.monotone;
        let mut z = vec![0.0; m];
        fn rec_z(
            i: usize,
            m: usize,
            cands: &[Vec<f64>],
            monotone: bool,
            z: &mut Vec<f64>,
            eval: &mut dyn FnMut(&[f64]),
        ) {
            if i == m {
                eval(z);
                return;
            }
            for &v in &cands[i] {
                if monotone && i > 0 && v < z[i - 1] - 1e-12 {
                    continue;
                }
                z[i] = v;
                rec_z(i + 1, m, cands, monotone, z, eval);
            }
        }
        let mut eval = |z: &[f64]| {
            *any_feasible = true;
            let mut obj = 0.0;
            for r in &recs {
                let growth = r.base + z[r.ip] * r.zcoef;
                if !(growth > 0.0) {
                    return;
                }
                obj += r.w * (growth.ln() - (phi[r.iq + 1] / phi[r.ip + 1]).ln());
            }
            if best.as_ref().map_or(true, |(b, _)| obj > *b) {
                *best = Some((
                    obj,
                    DecisionVars {
                        z: z.to_vec(),
                        phi: phi.to_vec(),
                    },
                ));
            }
        };
        rec_z(0, m, &cands, monotone, &mut z, &mut eval);
    };

    fn rec_phi(
        depth: usize,
        order: &[usize],
        levels: &[f64],
        xf: &[f64],
        phi: &mut Vec<f64>,
        eval: &mut dyn FnMut(&[f64]),
    ) {
        if depth == order.len() {
            eval(phi);
            return;
        }
        let j = order[depth];
        for &v in levels {
            phi[j] = v;
            // Prune on the newest fully-determined slope: filling position j
            // (j >= 2) fixes s_{j-1}; require s_{j-1} <= s_{j-2}.
            if j >= 2 {
                let s_prev = (phi[j] - phi[j - 1]) / (xf[j] - xf[j - 1]);
                let s_before = (phi[j - 1] - phi[j - 2]) / (xf[j - 1] - xf[j - 2]);
                if s_prev > s_before + 1e-12 {
                    continue;
                }
            }
            rec_phi(depth + 1, order, levels, xf, phi, eval);
        }
    }

    rec_phi(
        0,
        &order,
        &levels,
        &xf,
        &mut phi,
        &mut |phi: &[f64]| stack_eval(phi, &mut best, &mut any_feasible),
    );

    match best {
        Some((objective, vars)) => {
            let residuals = feasibility_residuals(&vars, grid, &problem.constraints)?;
            Ok(GridSolution {
                vars,
                objective,
                residuals,
                iterations: 0,
                start_label: "brute-force".into(),
                converged: true,
            })
        }
        None => {
            debug_assert!(!any_feasible);
            Err(Error::Infeasible(
                "empty feasible lattice: no (z, phi) combination satisfies the constraints".into(),
            ))
        }
    }
}
