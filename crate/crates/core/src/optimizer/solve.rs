//! Augmented Lagrangian solver with projected-gradient inner iterations.
//!
//! The solver parametrizes the polyhedral pair by slopes: s are the m + 1
//! chord slopes of phi (phi recovered by prefix sums anchored at the
//! normalization phi_1 = 1) and sigma_i is the selected supergradient slope
//! at grid point i, carrying the weight z_i = x_i + x_i (1 - x_i) sigma_i /
//! phi_i. Concavity and the generation inequality together say exactly that
//! the interleaved chain s_0 >= sigma_0 >= s_1 >= ... >= s_m is
//! nonincreasing, which the projection enforces exactly via
//! pool-adjacent-violators. Multipliers cover the ratio/box bounds on z,
//! weight monotonicity and the phi floors. Multi-start from the market
//! restriction, the equal-weight restriction and a seeded perturbation; the
//! best feasible candidate wins (ties: lower residual, then start order).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    equal_weight_start, feasibility_residuals, market_start, objective_and_gradient,
    ConstraintSet, DecisionVars, Grid, GridSolution, Problem, Residuals,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Feasibility target for every constraint family.
    pub residual_tol: f64,
    /// Scaled first-order stationarity target.
    pub stationarity_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    /// Seed for the perturbed start.
    pub seed: u64,
    /// Lower bound kept on phi at interior grid points (weights divide
    /// by phi there).
    pub phi_floor: f64,
    /// Strict-feasibility margin inside log arguments during iteration.
    pub log_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            stationarity_tol: 1e-6,
            max_outer: 40,
            max_inner: 800,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            seed: 0,
            phi_floor: 1e-8,
            log_margin: 1e-10,
        }
    }
}

/// Precomputed per-record data: T = ln(phi_p + delta sigma_p) - ln(phi_p)
/// - ln(phi_q) + ln(phi_p) = ln(phi_p + delta sigma_p) - ln(phi_q).
struct Record {
    ip: usize,
    iq: usize,
    weight: f64,
    delta: f64,
}

/// Weighted pool-adjacent-violators: overwrite y with its projection onto
/// the nondecreasing cone in the metric diag(w).
fn isotonic_nondecreasing(y: &mut [f64], w: &[f64]) {
    let n = y.len();
    // (value, weight, count)
    let mut vals: Vec<(f64, f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = y[i];
        let mut c = w[i];
        let mut cnt = 1usize;
        while let Some(&(pv, pc, pcnt)) = vals.last() {
            if pv <= v {
                break;
            }
            v = (pv * pc + v * c) / (pc + c);
            c += pc;
            cnt += pcnt;
            vals.pop();
        }
        vals.push((v, c, cnt));
    }
    let mut i = 0;
    for (v, _, cnt) in vals {
        for _ in 0..cnt {
            y[i] = v;
            i += 1;
        }
    }
}

fn isotonic_nonincreasing(y: &mut [f64], w: &[f64]) {
    for v in y.iter_mut() {
        *v = -*v;
    }
    isotonic_nondecreasing(y, w);
    for v in y.iter_mut() {
        *v = -*v;
    }
}

/// Variable layout: [sigma_0..sigma_{m-1}, s_0..s_m].
struct Workspace<'a> {
    problem: &'a Problem,
    records: Vec<Record>,
    m: usize,
    dx: Vec<f64>,
    /// x_i (1 - x_i) at interior grid points.
    curv: Vec<f64>,
    /// Per-coordinate bounds for z from ratio/box/tracking constraints.
    z_lo: Vec<f64>,
    z_hi: Vec<f64>,
    /// Symmetric cap on chain entries; a safe superset of feasible slopes.
    s_cap: f64,
    /// Lower bounds on phi: 0 at the endpoints, phi_floor inside.
    phi_floor: Vec<f64>,
    monotone: bool,
    n_constraints: usize,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a Problem) -> Result<Self> {
        let grid = &problem.grid;
        let m = grid.m();
        let xs = grid.xs();
        let records = problem
            .records
            .iter()
            .map(|r| Record {
                ip: r.ip,
                iq: r.iq,
                weight: r.weight,
                delta: xs[r.iq] - xs[r.ip],
            })
            .collect();
        let mut z_lo = Vec::with_capacity(m);
        let mut z_hi = Vec::with_capacity(m);
        for (i, &x) in xs.iter().enumerate() {
            let (lo, hi) = problem.constraints.z_box(x);
            if lo > hi + 1e-14 {
                return Err(Error::Infeasible(format!(
                    "z bounds empty at grid point {i} (x = {x}): [{lo}, {hi}]"
                )));
            }
            z_lo.push(lo);
            z_hi.push(hi.max(lo));
        }
        let xf = grid.full();
        let dx: Vec<f64> = xf.windows(2).map(|w| w[1] - w[0]).collect();
        let curv: Vec<f64> = xs.iter().map(|&x| x * (1.0 - x)).collect();
        // Concave positive phi with phi_1 = 1 is bounded by
        // 1 / min(x_1, 1 - x_m); slopes then live well inside this cap.
        let edge = xs[0].min(1.0 - xs[m - 1]);
        let s_cap = 2.0 / (edge * edge);
        let mut phi_floor = vec![problem.config.phi_floor; m + 2];
        phi_floor[0] = 0.0;
        phi_floor[m + 1] = 0.0;
        let monotone = problem.constraints.monotone;
        let n_constraints = 2 * m + (m + 2) + if monotone { m - 1 } else { 0 };
        Ok(Self {
            problem,
            records,
            m,
            dx,
            curv,
            z_lo,
            z_hi,
            s_cap,
            phi_floor,
            monotone,
            n_constraints,
        })
    }

    fn split<'v>(&self, v: &'v [f64]) -> (&'v [f64], &'v [f64]) {
        v.split_at(self.m)
    }

    /// phi at interior grid points: phi_int[i] = 1 + sum_{k=1}^{i} s_k dx_k.
    fn phi_interior(&self, s: &[f64]) -> Vec<f64> {
        let mut phi = Vec::with_capacity(self.m);
        let mut acc = 1.0;
        phi.push(acc);
        for k in 1..self.m {
            acc += s[k] * self.dx[k];
            phi.push(acc);
        }
        phi
    }

    /// Full phi vector (m + 2 values) including the endpoints.
    fn phi_full(&self, s: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut phi = Vec::with_capacity(m + 2);
        phi.push(1.0 - s[0] * self.dx[0]);
        let interior = self.phi_interior(s);
        phi.extend_from_slice(&interior);
        phi.push(interior[m - 1] + s[m] * self.dx[m]);
        phi
    }

    fn z_values(&self, sigma: &[f64], phi_int: &[f64]) -> Vec<f64> {
        let xs = self.problem.grid.xs();
        (0..self.m)
            .map(|i| xs[i] + self.curv[i] * sigma[i] / phi_int[i])
            .collect()
    }

    fn vars_from_flat(&self, v: &[f64]) -> DecisionVars {
        let (sigma, s) = self.split(v);
        let phi_int = self.phi_interior(s);
        DecisionVars {
            z: self.z_values(sigma, &phi_int),
            phi: self.phi_full(s),
        }
    }

    /// Slopes from phi plus selection slopes from z; the generation
    /// inequality makes sigma land inside [s_{i+1}, s_i] for feasible vars.
    fn flat_from_vars(&self, vars: &DecisionVars) -> Vec<f64> {
        let xs = self.problem.grid.xs();
        let s = vars.slopes(&self.problem.grid);
        let mut v = Vec::with_capacity(2 * self.m + 1);
        for i in 0..self.m {
            let phi = vars.phi[i + 1];
            v.push((vars.z[i] - xs[i]) * phi / self.curv[i]);
        }
        v.extend_from_slice(&s);
        v
    }

    /// Exact projection onto the interleaved nonincreasing chain
    /// s_0 >= sigma_0 >= s_1 >= ... >= sigma_{m-1} >= s_m (clamped to the
    /// slope cap), in the metric diag(weights).
    fn project_weighted(&self, v: &mut [f64], weights: &[f64]) {
        let m = self.m;
        let mut chain = Vec::with_capacity(2 * m + 1);
        let mut wchain = Vec::with_capacity(2 * m + 1);
        for k in 0..m {
            chain.push(v[m + k]); // s_k
            wchain.push(weights[m + k]);
            chain.push(v[k]); // sigma_k
            wchain.push(weights[k]);
        }
        chain.push(v[2 * m]); // s_m
        wchain.push(weights[2 * m]);
        isotonic_nonincreasing(&mut chain, &wchain);
        for c in chain.iter_mut() {
            *c = c.clamp(-self.s_cap, self.s_cap);
        }
        for k in 0..m {
            v[m + k] = chain[2 * k];
            v[k] = chain[2 * k + 1];
        }
        v[2 * m] = chain[2 * m];
    }

    fn project(&self, v: &mut [f64]) {
        let ones = vec![1.0; v.len()];
        self.project_weighted(v, &ones);
    }

    /// Positive-curvature diagonal of the augmented Lagrangian
    /// (Gauss-Newton on active penalties plus the convex objective parts);
    /// the preconditioner for the inner loop.
    fn al_diagonal(&self, st: &AlState, v: &[f64], coeff: &[f64], diag: &mut [f64]) {
        let (sigma, s) = self.split(v);
        let phi_int = self.phi_interior(s);
        let m = self.m;
        let margin = self.problem.config.log_margin;
        for d in diag.iter_mut() {
            *d = 0.0;
        }
        // suffix accumulators for the s-part (phi chains).
        let mut suf_obj = vec![0.0; m];
        for r in &self.records {
            let num = (phi_int[r.ip] + r.delta * sigma[r.ip]).max(margin);
            let w_over = r.weight / (num * num);
            diag[r.ip] += w_over * r.delta * r.delta;
            suf_obj[r.ip] += w_over;
        }
        let dz_dsigma: Vec<f64> = (0..m).map(|i| self.curv[i] / phi_int[i]).collect();
        let dz_dphi: Vec<f64> = (0..m)
            .map(|i| -self.curv[i] * sigma[i] / (phi_int[i] * phi_int[i]))
            .collect();
        let mut suf_pen = vec![0.0; m];
        let mut pen_sigma = vec![0.0; m];
        for i in 0..m {
            let mut active = 0.0;
            if coeff[i] > 0.0 {
                active += 1.0;
            }
            if coeff[m + i] > 0.0 {
                active += 1.0;
            }
            if self.monotone {
                if i < m - 1 && coeff[3 * m + 2 + i] > 0.0 {
                    active += 1.0;
                }
                if i > 0 && coeff[3 * m + 2 + i - 1] > 0.0 {
                    active += 1.0;
                }
            }
            if active > 0.0 {
                pen_sigma[i] = active * st.rho * dz_dsigma[i] * dz_dsigma[i];
                suf_pen[i] = active * st.rho * dz_dphi[i] * dz_dphi[i];
            }
        }
        let mut floor_suffix = vec![0.0; m + 1];
        for j in 1..=m {
            if coeff[2 * m + j] > 0.0 {
                floor_suffix[j - 1] += st.rho;
            }
        }
        if coeff[2 * m + m + 1] > 0.0 {
            floor_suffix[m - 1] += st.rho;
            diag[m + m] += st.rho * self.dx[m] * self.dx[m];
        }
        if coeff[2 * m] > 0.0 {
            diag[m] += st.rho * self.dx[0] * self.dx[0];
        }
        for i in 0..m {
            diag[i] += pen_sigma[i];
        }
        // chain into s: diag[m+k] += dx_k^2 * sum_{i >= k} (...)
        let mut acc = 0.0;
        for k in (1..m).rev() {
            acc += suf_obj[k] + suf_pen[k] + floor_suffix[k];
            diag[m + k] += self.dx[k] * self.dx[k] * acc;
        }
        let dmax = diag.iter().cloned().fold(0.0, f64::max).max(1e-12);
        for d in diag.iter_mut() {
            *d = d.max(1e-8 * dmax).max(1e-12);
        }
    }

    /// Negated objective with linear extension of the log below the margin,
    /// and its gradient over (sigma, s).
    fn smooth_objective(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let (sigma, s) = self.split(v);
        let phi = self.phi_interior(s);
        let margin = self.problem.config.log_margin;
        for g in grad.iter_mut() {
            *g = 0.0;
        }
        let m = self.m;
        let safe_ln = |x: f64| -> (f64, f64) {
            if x >= margin {
                (x.ln(), 1.0 / x)
            } else {
                (margin.ln() + (x - margin) / margin, 1.0 / margin)
            }
        };
        let mut value = 0.0;
        let mut gphi = vec![0.0; m];
        for r in &self.records {
            let num = phi[r.ip] + r.delta * sigma[r.ip];
            let (ln_num, d_num) = safe_ln(num);
            let (ln_q, d_q) = safe_ln(phi[r.iq]);
            value += r.weight * (ln_num - ln_q);
            grad[r.ip] += r.weight * d_num * r.delta;
            gphi[r.ip] += r.weight * d_num;
            gphi[r.iq] -= r.weight * d_q;
        }
        // Chain phi-gradients into slope space: phi_int[i] depends on
        // s_k dx_k for 1 <= k <= i.
        let mut suffix = 0.0;
        for k in (1..m).rev() {
            suffix += gphi[k];
            grad[m + k] += suffix * self.dx[k];
        }
        for g in grad.iter_mut() {
            *g = -*g;
        }
        -value
    }

    /// Constraint values g_k(v) <= 0 in a fixed order:
    /// z lower bounds (m), z upper bounds (m), phi floors (m + 2),
    /// z monotonicity (m - 1, optional).
    fn constraints(&self, v: &[f64], out: &mut [f64]) {
        let (sigma, s) = self.split(v);
        let phi_int = self.phi_interior(s);
        let z = self.z_values(sigma, &phi_int);
        let m = self.m;
        for i in 0..m {
            out[i] = self.z_lo[i] - z[i];
            out[m + i] = z[i] - self.z_hi[i];
        }
        let phi = self.phi_full(s);
        for j in 0..m + 2 {
            out[2 * m + j] = self.phi_floor[j] - phi[j];
        }
        if self.monotone {
            for i in 0..m - 1 {
                out[3 * m + 2 + i] = z[i] - z[i + 1];
            }
        }
    }

    /// Adds sum_k coeff_k grad g_k to `grad` ((sigma, s) layout).
    fn add_constraint_gradients(&self, v: &[f64], coeff: &[f64], grad: &mut [f64]) {
        let (sigma, s) = self.split(v);
        let phi_int = self.phi_interior(s);
        let m = self.m;
        // dz_i/dsigma_i and dz_i/dphi_int[i].
        let dz_dsigma: Vec<f64> = (0..m).map(|i| self.curv[i] / phi_int[i]).collect();
        let dz_dphi: Vec<f64> = (0..m)
            .map(|i| -self.curv[i] * sigma[i] / (phi_int[i] * phi_int[i]))
            .collect();
        let mut gphi = vec![0.0; m];
        let mut add_z_grad = |i: usize, c: f64, gphi: &mut [f64], grad: &mut [f64]| {
            grad[i] += c * dz_dsigma[i];
            gphi[i] += c * dz_dphi[i];
        };
        for i in 0..m {
            let cl = coeff[i];
            if cl != 0.0 {
                add_z_grad(i, -cl, &mut gphi, grad);
            }
            let cu = coeff[m + i];
            if cu != 0.0 {
                add_z_grad(i, cu, &mut gphi, grad);
            }
        }
        // phi floors: g = floor_j - phi_j; phi_0 = 1 - s_0 dx_0,
        // phi_{j} (1 <= j <= m) = phi_int[j-1], phi_{m+1} = phi_int[m-1] + s_m dx_m.
        let c0 = coeff[2 * m];
        if c0 != 0.0 {
            grad[m] += c0 * self.dx[0];
        }
        for j in 1..=m {
            let cf = coeff[2 * m + j];
            if cf != 0.0 {
                gphi[j - 1] -= cf;
            }
        }
        let cend = coeff[2 * m + m + 1];
        if cend != 0.0 {
            gphi[m - 1] -= cend;
            grad[m + m] -= cend * self.dx[m];
        }
        if self.monotone {
            for i in 0..m - 1 {
                let cm = coeff[3 * m + 2 + i];
                if cm != 0.0 {
                    add_z_grad(i, cm, &mut gphi, grad);
                    add_z_grad(i + 1, -cm, &mut gphi, grad);
                }
            }
        }
        let mut suffix = 0.0;
        for k in (1..m).rev() {
            suffix += gphi[k];
            grad[m + k] += suffix * self.dx[k];
        }
    }
}

struct AlState {
    lambda: Vec<f64>,
    rho: f64,
}

/// Augmented Lagrangian value and gradient at v.
fn al_eval(ws: &Workspace, st: &AlState, v: &[f64], g: &mut [f64], c: &mut [f64]) -> f64 {
    let mut value = ws.smooth_objective(v, g);
    ws.constraints(v, c);
    // PHR: (1/2rho) [max(0, lambda + rho g)^2 - lambda^2].
    let mut coeff = vec![0.0; c.len()];
    for k in 0..c.len() {
        let t = st.lambda[k] + st.rho * c[k];
        if t > 0.0 {
            value += (t * t - st.lambda[k] * st.lambda[k]) / (2.0 * st.rho);
            coeff[k] = t;
        } else {
            value -= st.lambda[k] * st.lambda[k] / (2.0 * st.rho);
        }
    }
    ws.add_constraint_gradients(v, &coeff, g);
    value
}

/// Projected-gradient inner loop, preconditioned by the positive diagonal
/// of the augmented Lagrangian; the projection onto the slope chain runs in
/// the same metric (weighted pool-adjacent-violators), so each accepted step
/// is a scaled projected-gradient step with nonmonotone (memory 8) Armijo
/// backtracking. Returns (iterations, final scaled projected-gradient norm).
fn inner_minimize(
    ws: &Workspace,
    st: &AlState,
    v: &mut Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> (usize, f64) {
    let n = v.len();
    let mut grad = vec![0.0; n];
    let mut cons = vec![0.0; ws.n_constraints];
    let mut diag = vec![0.0; n];
    let mut coeff = vec![0.0; ws.n_constraints];
    let mut value = al_eval(ws, st, v, &mut grad, &mut cons);
    let mut recent = std::collections::VecDeque::with_capacity(8);
    recent.push_back(value);
    let mut pg_norm = f64::INFINITY;
    let mut alpha0 = 1.0_f64;
    for it in 0..max_iter {
        for k in 0..cons.len() {
            coeff[k] = (st.lambda[k] + st.rho * cons[k]).max(0.0);
        }
        ws.al_diagonal(st, v, &coeff, &mut diag);
        let mut trial: Vec<f64> = v
            .iter()
            .zip(grad.iter().zip(&diag))
            .map(|(x, (g, d))| x - g / d)
            .collect();
        ws.project_weighted(&mut trial, &diag);
        pg_norm = trial
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if pg_norm <= tol * (1.0 + value.abs()) {
            return (it, pg_norm);
        }
        let reference = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut alpha = alpha0;
        let mut moved = false;
        for ls in 0..60 {
            let cand = if ls == 0 && (alpha - 1.0).abs() < 1e-12 {
                trial.clone()
            } else {
                let mut c: Vec<f64> = v
                    .iter()
                    .zip(grad.iter().zip(&diag))
                    .map(|(x, (g, d))| x - alpha * g / d)
                    .collect();
                ws.project_weighted(&mut c, &diag);
                c
            };
            let dir_dot: f64 = cand
                .iter()
                .zip(v.iter())
                .zip(&grad)
                .map(|((c, x), g)| (c - x) * g)
                .sum();
            if dir_dot >= -1e-18 {
                // Projection fixed point along this direction.
                break;
            }
            let mut cand_grad = vec![0.0; n];
            let cand_val = al_eval(ws, st, &cand, &mut cand_grad, &mut cons);
            if cand_val <= reference + 1e-4 * dir_dot {
                *v = cand;
                grad = cand_grad;
                value = cand_val;
                moved = true;
                // Adapt the initial trial step to recent acceptance.
                alpha0 = if ls == 0 {
                    (alpha0 * 2.0).min(16.0)
                } else {
                    alpha.max(1e-6)
                };
                break;
            }
            alpha *= 0.25;
        }
        if !moved {
            return (it, pg_norm);
        }
        if recent.len() == 8 {
            recent.pop_front();
        }
        recent.push_back(value);
    }
    (max_iter, pg_norm)
}

fn run_augmented_lagrangian(
    ws: &Workspace,
    start: &DecisionVars,
) -> Result<(DecisionVars, Residuals, usize, bool)> {
    let cfg = &ws.problem.config;
    let mut v = ws.flat_from_vars(start);
    ws.project(&mut v);
    let mut st = AlState {
        lambda: vec![0.0; ws.n_constraints],
        rho: cfg.penalty_init,
    };
    let mut cons = vec![0.0; ws.n_constraints];
    let mut inner_tol = 1e-3;
    let mut total_iters = 0usize;
    let mut prev_violation = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>, Residuals)> = None;
    let mut converged = false;
    let trace = std::env::var_os("FGP_TRACE_SOLVER").is_some();
    for outer in 0..cfg.max_outer {
        let (iters, pg) = inner_minimize(ws, &st, &mut v, inner_tol, cfg.max_inner);
        total_iters += iters;
        let vars = ws.vars_from_flat(&v);
        let res = feasibility_residuals(&vars, &ws.problem.grid, &ws.problem.constraints)?;
        let violation = res.max();
        if trace {
            let mut g = vec![0.0; v.len()];
            let obj = -ws.smooth_objective(&v, &mut g);
            eprintln!(
                "al outer {outer}: inner {iters}, pg {pg:.2e}, obj {obj:.6e}, viol {violation:.2e}, rho {:.1e}",
                st.rho
            );
        }
        if violation <= cfg.residual_tol {
            let mut g = vec![0.0; v.len()];
            let obj = -ws.smooth_objective(&v, &mut g);
            if best.as_ref().map_or(true, |(b, _, _)| obj > *b) {
                best = Some((obj, v.clone(), res.clone()));
            }
        }
        let tight_inner = inner_tol <= cfg.stationarity_tol;
        if violation <= cfg.residual_tol && tight_inner {
            converged = true;
            break;
        }
        ws.constraints(&v, &mut cons);
        for k in 0..cons.len() {
            st.lambda[k] = (st.lambda[k] + st.rho * cons[k]).max(0.0);
        }
        if violation > 0.25 * prev_violation && violation > cfg.residual_tol {
            st.rho = (st.rho * cfg.penalty_growth).min(1e10);
        }
        prev_violation = violation;
        inner_tol = (inner_tol * 0.2).max(cfg.stationarity_tol);
    }
    let (vars, res) = match best {
        Some((_, bv, bres)) => (ws.vars_from_flat(&bv), bres),
        None => {
            let vars = ws.vars_from_flat(&v);
            let res = feasibility_residuals(&vars, &ws.problem.grid, &ws.problem.constraints)?;
            (vars, res)
        }
    };
    Ok((vars, res, total_iters, converged))
}

/// A seeded perturbation of the market restriction: a random concave bump on
/// phi with z at the midpoint of the generation interval.
fn perturbed_start(grid: &Grid, constraints: &ConstraintSet, seed: u64) -> DecisionVars {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX); // keep clear of per-path bootstrap streams
    let a = 0.2 + 0.6 * rng.gen::<f64>();
    let u = |x: f64| 1.0 + a * (x * (1.0 - x)).sqrt();
    let scale = u(grid.xs()[0]);
    let phi: Vec<f64> = grid.full().iter().map(|&x| u(x) / scale).collect();
    let mut vars = DecisionVars {
        z: vec![0.0; grid.m()],
        phi,
    };
    let s = vars.slopes(grid);
    for i in 0..grid.m() {
        let x = grid.xs()[i];
        let c = x * (1.0 - x);
        let lo = x + c * s[i + 1] / vars.phi[i + 1];
        let hi = x + c * s[i] / vars.phi[i + 1];
        let mid = 0.5 * (lo + hi);
        let (blo, bhi) = constraints.z_box(x);
        vars.z[i] = mid.clamp(blo, bhi.max(blo));
    }
    vars
}

/// Solves the problem by multi-start augmented Lagrangian.
///
/// Candidates are the three starts themselves (when feasible) and the
/// iterates they produce; the best feasible candidate by objective wins,
/// ties broken by lower residual and then start order. When nothing reaches
/// feasibility the lowest-residual candidate is returned with
/// `converged = false`.
pub fn solve(problem: &Problem) -> Result<GridSolution> {
    let ws = Workspace::new(problem)?;
    let grid = &problem.grid;
    let starts = [
        ("market", market_start(grid)),
        ("equal", equal_weight_start(grid)),
        (
            "perturbed",
            perturbed_start(grid, &problem.constraints, problem.config.seed),
        ),
    ];
    struct Candidate {
        vars: DecisionVars,
        objective: f64,
        residuals: Residuals,
        iterations: usize,
        label: String,
        converged: bool,
        feasible: bool,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    let tol = problem.config.residual_tol;
    for (label, start) in starts {
        let res = feasibility_residuals(&start, grid, &problem.constraints)?;
        if res.max() <= tol {
            if let Ok((obj, _)) = objective_and_gradient(problem, &start) {
                candidates.push(Candidate {
                    vars: start.clone(),
                    objective: obj,
                    residuals: res,
                    iterations: 0,
                    label: format!("{label}-start"),
                    converged: true,
                    feasible: true,
                });
            }
        }
        let (vars, res, iters, conv) = run_augmented_lagrangian(&ws, &start)?;
        let feasible = res.max() <= tol;
        let objective = match objective_and_gradient(problem, &vars) {
            Ok((obj, _)) => obj,
            Err(_) => f64::NEG_INFINITY,
        };
        candidates.push(Candidate {
            vars,
            objective,
            residuals: res,
            iterations: iters,
            label: label.to_string(),
            converged: conv,
            feasible,
        });
    }
    let total_iterations: usize = candidates.iter().map(|c| c.iterations).sum();
    let best_feasible = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.feasible && c.objective.is_finite())
        .max_by(|(ia, a), (ib, b)| {
            a.objective
                .total_cmp(&b.objective)
                .then(b.residuals.max().total_cmp(&a.residuals.max()))
                .then(ib.cmp(ia))
        });
    if let Some((_, c)) = best_feasible {
        return Ok(GridSolution {
            vars: c.vars.clone(),
            objective: c.objective,
            residuals: c.residuals.clone(),
            iterations: total_iterations,
            start_label: c.label.clone(),
            converged: c.converged,
        });
    }
    // Nothing feasible: surface the least-infeasible iterate.
    let least = candidates
        .iter()
        .min_by(|a, b| a.residuals.max().total_cmp(&b.residuals.max()))
        .expect("at least one start");
    Ok(GridSolution {
        vars: least.vars.clone(),
        objective: least.objective,
        residuals: least.residuals.clone(),
        iterations: total_iterations,
        start_label: least.label.clone(),
        converged: false,
    })
}
