//! Diagnostics for the partial order "domination on compacts": cycle tests,
//! drift quadratic forms, the relative concavity transform, the maximality
//! integral condition and the two-asset aggressiveness inequality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fgp::{l_divergence, FGPair, GeneratingFunction};
use crate::simplex::{growth_factor, MarketPath, PortfolioMap, SimplexPoint, TangentVector};

/// Closure tolerance for discrete cycles.
pub const CYCLE_CLOSE_TOL: f64 = 1e-12;
/// Ratio slack below 1 that counts as a violation of relative MCM.
pub const RMCM_TOL: f64 = 1e-12;

/// Verdict of a relative multiplicative cyclical monotonicity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CycleVerdict {
    Consistent,
    ViolatesRmcm,
}

/// Result of comparing two portfolios over one closed cycle.
#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub value_ratio: f64,
    pub verdict: CycleVerdict,
}

/// The drift quadratic form H(p)(v, v) = -Hess Phi(p)(v, v) / (2 Phi(p)),
/// with the Hessian taken as a second central difference along v.
///
/// The step starts at 1e-4 times the distance to the boundary and shrinks
/// until the stencil stays inside the simplex.
pub fn drift_form(
    generator: &GeneratingFunction,
    p: &SimplexPoint,
    v: &TangentVector,
) -> Result<f64> {
    if p.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, direction {}",
            p.dim(),
            v.dim()
        )));
    }
    let phi = generator.value(p)?;
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return Ok(0.0);
    }
    let mut t = 1e-4 * p.distance_to_boundary() / vnorm;
    loop {
        if t < 1e-300 {
            return Err(Error::StepUnderflow {
                dist: p.distance_to_boundary(),
            });
        }
        let plus: Vec<f64> = p
            .coords()
            .iter()
            .zip(v.coords())
            .map(|(pi, vi)| pi + t * vi)
            .collect();
        let minus: Vec<f64> = p
            .coords()
            .iter()
            .zip(v.coords())
            .map(|(pi, vi)| pi - t * vi)
            .collect();
        if plus.iter().chain(minus.iter()).any(|&c| c <= 0.0) {
            t *= 0.5;
            continue;
        }
        let f_plus = generator.value_raw(&plus);
        let f_minus = generator.value_raw(&minus);
        if !(f_plus > 0.0) {
            return Err(Error::NonpositiveGenerator { value: f_plus });
        }
        if !(f_minus > 0.0) {
            return Err(Error::NonpositiveGenerator { value: f_minus });
        }
        let hess = (f_plus - 2.0 * phi + f_minus) / (t * t);
        return Ok(-hess / (2.0 * phi));
    }
}

/// One row of a Taylor consistency report: T(p + tv | p) / t^2 at a probe size.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorProbe {
    pub t: f64,
    pub divergence_over_t2: f64,
}

/// Comparison of the small-jump L-divergence against the drift form.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorReport {
    pub drift_form_value: f64,
    pub probes: Vec<TaylorProbe>,
    /// Both sides vanish (market-like pair); ratios are meaningless.
    pub degenerate_zero: bool,
}

/// Checks T(p + tv | p) / t^2 -> H(p)(v, v) as t shrinks, probing
/// t in {1e-2, 1e-3, 1e-4}.
pub fn taylor_consistency(
    pair: &FGPair,
    p: &SimplexPoint,
    v: &TangentVector,
) -> Result<TaylorReport> {
    let h = drift_form(&pair.generator, p, v)?;
    let mut probes = Vec::new();
    let mut max_t_over_t2 = 0.0_f64;
    for &t in &[1e-2, 1e-3, 1e-4] {
        let q = p.step(v, t)?;
        let div = l_divergence(pair, &q, p)?;
        let ratio = div / (t * t);
        max_t_over_t2 = max_t_over_t2.max(ratio.abs());
        probes.push(TaylorProbe {
            t,
            divergence_over_t2: ratio,
        });
    }
    let degenerate_zero = h.abs() < 1e-12 && max_t_over_t2 < 1e-9;
    Ok(TaylorReport {
        drift_form_value: h,
        probes,
        degenerate_zero,
    })
}

/// Relative MCM over one closed cycle: computes V_tau / V_pi and flags a
/// violation when the ratio drops below 1 - 1e-12.
pub fn rmcm_cycle_test(
    tau: &PortfolioMap,
    pi: &PortfolioMap,
    cycle: &MarketPath,
) -> Result<CycleReport> {
    if !cycle.is_closed(CYCLE_CLOSE_TOL) {
        let first = cycle.points().first().unwrap();
        let last = cycle.points().last().unwrap();
        let gap = first
            .coords()
            .iter()
            .zip(last.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        return Err(Error::CycleNotClosed { gap });
    }
    let pts = cycle.points();
    let mut ratio = 1.0;
    for t in 0..pts.len() - 1 {
        let rt = tau.weight_ratio(&pts[t])?;
        let rp = pi.weight_ratio(&pts[t])?;
        let ft = growth_factor(&rt, &pts[t], &pts[t + 1]);
        let fp = growth_factor(&rp, &pts[t], &pts[t + 1]);
        if !(ft > 0.0) {
            return Err(Error::PortfolioRuin { time: t, factor: ft });
        }
        if !(fp > 0.0) {
            return Err(Error::PortfolioRuin { time: t, factor: fp });
        }
        ratio *= ft / fp;
    }
    let verdict = if ratio < 1.0 - RMCM_TOL {
        CycleVerdict::ViolatesRmcm
    } else {
        CycleVerdict::Consistent
    };
    Ok(CycleReport {
        value_ratio: ratio,
        verdict,
    })
}

/// Outcome of a pointwise L-divergence comparison over a sample of jumps.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub dominates: bool,
    /// Most violating (or least slack) pair and its margin T_tau - T_pi.
    pub worst_margin: f64,
    pub worst_pair: (SimplexPoint, SimplexPoint),
}

/// True iff T_tau(q|p) >= T_pi(q|p) - 1e-10 on every sampled pair.
pub fn divergence_dominates(
    fg_tau: &FGPair,
    fg_pi: &FGPair,
    samples: &[(SimplexPoint, SimplexPoint)],
) -> Result<DominanceReport> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_pair = samples[0].clone();
    for (p, q) in samples {
        let t_tau = l_divergence(fg_tau, q, p)?;
        let t_pi = l_divergence(fg_pi, q, p)?;
        let margin = t_tau - t_pi;
        if margin < worst_margin {
            worst_margin = margin;
            worst_pair = (p.clone(), q.clone());
        }
    }
    Ok(DominanceReport {
        dominates: worst_margin >= -1e-10,
        worst_margin,
        worst_pair,
    })
}

/// Sampled data of the relative concavity transform
/// w = (v o G) / (u o G) with G the inverse of F(x) = int_a^x u^-2.
#[derive(Debug, Clone, Serialize)]
pub struct RelativeConcavityTransform {
    pub xs: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Cumulative integral of 1/u^2 at the x-grid.
    pub f: Vec<f64>,
    /// Uniform y-grid over [0, ell] and the transform sampled there.
    pub ys: Vec<f64>,
    pub w: Vec<f64>,
    pub ell: f64,
    /// Domain was cut short because u reached zero.
    pub truncated: bool,
    pub concave: bool,
    /// Index into `ys` of the worst positive second difference, if any.
    pub witness: Option<usize>,
    pub worst_second_difference: f64,
}

/// Computes the relative concavity transform of two positive functions on
/// [a, b) sampled on a uniform grid.
///
/// F is a cumulative trapezoid of 1/u^2, G its piecewise-linear inverse, and
/// the concavity verdict comes from second differences of w on a uniform
/// y-grid (threshold 1e-6 times the scale of w).
pub fn relative_concavity_transform<U, V>(
    u_fn: U,
    v_fn: V,
    a: f64,
    b: f64,
    grid_size: usize,
) -> Result<RelativeConcavityTransform>
where
    U: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    if grid_size < 100 {
        return Err(Error::GridTooSmall {
            need: 100,
            got: grid_size,
        });
    }
    if !(b > a) {
        return Err(Error::InvalidRegion(format!("empty interval [{a}, {b})")));
    }
    let h = (b - a) / grid_size as f64;
    let mut xs = Vec::with_capacity(grid_size);
    let mut u = Vec::with_capacity(grid_size);
    let mut v = Vec::with_capacity(grid_size);
    let mut truncated = false;
    for k in 0..grid_size {
        let x = a + k as f64 * h;
        let uv = u_fn(x);
        if !positive(uv) {
            if k < 2 {
                return Err(Error::NonpositiveOnGrid { index: k, x });
            }
            truncated = true;
            break;
        }
        let vv = v_fn(x);
        if !positive(vv) {
            if k < 2 {
                return Err(Error::NonpositiveOnGrid { index: k, x });
            }
            truncated = true;
            break;
        }
        xs.push(x);
        u.push(uv);
        v.push(vv);
    }
    // Cumulative trapezoid of 1/u^2; strictly increasing since u > 0.
    let mut f = Vec::with_capacity(xs.len());
    f.push(0.0);
    for k in 1..xs.len() {
        let g0 = 1.0 / (u[k - 1] * u[k - 1]);
        let g1 = 1.0 / (u[k] * u[k]);
        f.push(f[k - 1] + 0.5 * (g0 + g1) * (xs[k] - xs[k - 1]));
    }
    let ell = *f.last().unwrap();

    // Invert F by monotone piecewise-linear interpolation onto a uniform
    // y-grid, then sample w = v(G(y)) / u(G(y)).
    let m = xs.len();
    let mut ys = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    let mut seg = 0usize;
    for k in 0..m {
        let y = ell * k as f64 / (m - 1) as f64;
        while seg + 1 < m - 1 && f[seg + 1] < y {
            seg += 1;
        }
        let span = f[seg + 1] - f[seg];
        let t = if span > 0.0 { (y - f[seg]) / span } else { 0.0 };
        let x = xs[seg] + t * (xs[seg + 1] - xs[seg]);
        let (uu, vv) = (u_fn(x), v_fn(x));
        if !positive(uu) || !positive(vv) {
            return Err(Error::NonpositiveOnGrid { index: k, x });
        }
        ys.push(y);
        w.push(vv / uu);
    }

    let scale = w.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for k in 1..m - 1 {
        let second = w[k + 1] - 2.0 * w[k] + w[k - 1];
        if second > worst {
            worst = second;
            witness = Some(k);
        }
    }
    let concave = worst <= 1e-6 * scale;
    Ok(RelativeConcavityTransform {
        xs,
        u,
        v,
        f,
        ys,
        w,
        ell,
        truncated,
        concave,
        witness: if concave { None } else { witness },
        worst_second_difference: worst,
    })
}

#[inline]
fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Verdict of the maximality integral condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntegralVerdict {
    Divergent,
    Convergent,
}

/// Partial values of int_0^{1-eps} Phi(t e(1) + (1-t) ebar)^{-2} dt on a
/// shrinking-epsilon schedule, with a heuristic classification.
#[derive(Debug, Clone, Serialize)]
pub struct IntegralReport {
    pub verdict: IntegralVerdict,
    pub epsilons: Vec<f64>,
    pub partial_values: Vec<f64>,
    /// Tail-corrected limit estimate, meaningful for convergent integrals.
    pub value_estimate: f64,
}

/// Value cap above which the integral is declared divergent outright.
pub const INTEGRAL_CAP: f64 = 1e3;
/// Increment-decay threshold: convergent integrals shrink their per-level
/// increments by orders of magnitude; ratios above 1/1.5 mean no decay.
pub const INTEGRAL_GROWTH_FACTOR: f64 = 1.5;

/// Classifies the integral condition along the segment from the barycenter
/// to the vertex e(1).
///
/// Partial integrals are computed on [0, 1-eps] for eps in
/// {1e-2, 1e-4, 1e-6, 1e-8} with decade-split composite Simpson panels to
/// resolve the blow-up near t = 1. Divergence is declared when every
/// successive increment fails to decay (ratio >= 1/1.5) or a partial value
/// tops the cap 1e3. These thresholds separate the catalog cases by orders
/// of magnitude.
pub fn integral_condition(generator: &GeneratingFunction, n: usize) -> Result<IntegralReport> {
    let epsilons: Vec<f64> = vec![1e-2, 1e-4, 1e-6, 1e-8];
    let seg = |t: f64| -> Vec<f64> {
        let base = (1.0 - t) / n as f64;
        let mut c = vec![base; n];
        c[0] += t;
        c
    };
    let integrand = |t: f64| -> Result<f64> {
        let v = generator.value_raw(&seg(t));
        if !(v > 0.0) {
            return Err(Error::NonpositiveGenerator { value: v });
        }
        Ok(1.0 / (v * v))
    };
    // Composite Simpson over [lo, hi] with 256 panels.
    let simpson = |lo: f64, hi: f64| -> Result<f64> {
        const PANELS: usize = 256;
        let h = (hi - lo) / (2 * PANELS) as f64;
        let mut acc = integrand(lo)? + integrand(hi)?;
        for i in 1..2 * PANELS {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(lo + i as f64 * h)?;
        }
        Ok(acc * h / 3.0)
    };
    let mut partial_values = Vec::with_capacity(epsilons.len());
    let mut acc = simpson(0.0, 0.9)?;
    let mut k = 1usize; // integrated up to 1 - 10^-k
    for &eps in &epsilons {
        let k_target = (-eps.log10()).round() as usize;
        while k < k_target {
            acc += simpson(1.0 - 10f64.powi(-(k as i32)), 1.0 - 10f64.powi(-(k as i32 + 1)))?;
            k += 1;
        }
        partial_values.push(acc);
    }
    let increments: Vec<f64> = partial_values.windows(2).map(|w| w[1] - w[0]).collect();
    let no_decay = increments
        .windows(2)
        .all(|w| w[0] > 0.0 && w[1] / w[0] >= 1.0 / INTEGRAL_GROWTH_FACTOR);
    let over_cap = partial_values.iter().any(|&v| v > INTEGRAL_CAP);
    let verdict = if no_decay || over_cap {
        IntegralVerdict::Divergent
    } else {
        IntegralVerdict::Convergent
    };
    let eps_last = *epsilons.last().unwrap();
    let tail = integrand(1.0 - eps_last)? * eps_last;
    let value_estimate = partial_values.last().unwrap() + tail;
    Ok(IntegralReport {
        verdict,
        epsilons,
        partial_values,
        value_estimate,
    })
}

/// Result of the two-asset aggressiveness scan.
#[derive(Debug, Clone, Serialize)]
pub struct AggressivenessReport {
    /// min over the grid of q(y)(1 - q(y)) - q'(y).
    pub min_value: f64,
    pub argmin_y: f64,
    /// A portfolio dominating the equal-weighted portfolio must have
    /// min >= 1/4 (necessary, not sufficient).
    pub meets_equal_weight_necessary_condition: bool,
}

/// Scans q(y)(1-q(y)) - q'(y) over y in [y_min, y_max], where
/// q(y) = tau1(x(y)) under the two-asset coordinate x = e^y / (1 + e^y)
/// and q' is a central difference on the grid.
pub fn two_asset_aggressiveness<F>(
    tau1: F,
    y_range: (f64, f64),
    grid: usize,
) -> Result<AggressivenessReport>
where
    F: Fn(f64) -> f64,
{
    if grid < 3 {
        return Err(Error::GridTooSmall { need: 3, got: grid });
    }
    let (y_min, y_max) = y_range;
    if !(y_max > y_min) {
        return Err(Error::InvalidRegion(format!(
            "empty y-range [{y_min}, {y_max}]"
        )));
    }
    let h = (y_max - y_min) / (grid - 1) as f64;
    let mut q = Vec::with_capacity(grid);
    for k in 0..grid {
        let y = y_min + k as f64 * h;
        let x = 1.0 / (1.0 + (-y).exp());
        let val = tau1(x);
        if !(0.0..=1.0).contains(&val) {
            return Err(Error::WeightOutOfRange { x, value: val });
        }
        q.push(val);
    }
    let mut min_value = f64::INFINITY;
    let mut argmin_y = y_min;
    for k in 1..grid - 1 {
        let qp = (q[k + 1] - q[k - 1]) / (2.0 * h);
        let val = q[k] * (1.0 - q[k]) - qp;
        if val < min_value {
            min_value = val;
            argmin_y = y_min + k as f64 * h;
        }
    }
    Ok(AggressivenessReport {
        min_value,
        argmin_y,
        meets_equal_weight_necessary_condition: min_value >= 0.25 - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgp::{catalog, CatalogName};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_interior(n: usize, min_coord: f64, rng: &mut ChaCha8Rng) -> SimplexPoint {
        loop {
            let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
            let p = SimplexPoint::from_masses(&raw).unwrap();
            if p.min_coord() >= min_coord {
                return p;
            }
        }
    }

    fn random_tangent(n: usize, rng: &mut ChaCha8Rng) -> TangentVector {
        let mut raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        for r in raw.iter_mut() {
            *r -= mean;
        }
        TangentVector::new(raw).unwrap()
    }

    #[test]
    fn drift_form_examples() {
        // Constant generator: zero form.
        let market = catalog(CatalogName::Market).unwrap();
        let p = SimplexPoint::two_asset(0.3).unwrap();
        let v = TangentVector::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(drift_form(&market.generator, &p, &v).unwrap(), 0.0);

        // Geometric mean in two assets along (1,-1): -u''/u = 1/(4 (x(1-x))^2),
        // so H = 1/(8 (x(1-x))^2).
        let equal = catalog(CatalogName::Equal).unwrap();
        for &x in &[0.2, 0.5, 0.7] {
            let p = SimplexPoint::two_asset(x).unwrap();
            let h = drift_form(&equal.generator, &p, &v).unwrap();
            let expect = 1.0 / (8.0 * (x * (1.0 - x)).powi(2));
            assert!((h - expect).abs() < 1e-4 * expect, "x={x}: {h} vs {expect}");
        }

        // Entropy at the barycenter: Hess(v,v) = -(v1^2/p1 + v2^2/p2) = -4,
        // Phi = log 2.
        let entropy = catalog(CatalogName::Entropy).unwrap();
        let bary = SimplexPoint::barycenter(2);
        let h = drift_form(&entropy.generator, &bary, &v).unwrap();
        let expect = 4.0 / (2.0 * 2.0_f64.ln());
        assert!((h - expect).abs() < 1e-5 * expect);
    }

    #[test]
    fn drift_form_nonnegative_for_concave_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for pair in [
            catalog(CatalogName::Market).unwrap(),
            catalog(CatalogName::Equal).unwrap(),
            catalog(CatalogName::Entropy).unwrap(),
            catalog(CatalogName::Diversity(0.5)).unwrap(),
        ] {
            for _ in 0..100 {
                let n = [2usize, 3, 5][rng.gen_range(0..3)];
                let p = random_interior(n, 0.05, &mut rng);
                let v = random_tangent(n, &mut rng);
                let h = drift_form(&pair.generator, &p, &v).unwrap();
                assert!(h >= -1e-8, "{}: H = {h}", pair.generator.name());
            }
        }
    }

    #[test]
    fn taylor_consistency_examples() {
        let market = catalog(CatalogName::Market).unwrap();
        let bary = SimplexPoint::barycenter(2);
        let v = TangentVector::new(vec![1.0, -1.0]).unwrap();
        let rep = taylor_consistency(&market, &bary, &v).unwrap();
        assert!(rep.degenerate_zero);

        for pair in [
            catalog(CatalogName::Equal).unwrap(),
            catalog(CatalogName::Diversity(0.5)).unwrap(),
        ] {
            let rep = taylor_consistency(&pair, &bary, &v).unwrap();
            assert!(!rep.degenerate_zero);
            let h = rep.drift_form_value;
            let at_1e3 = rep
                .probes
                .iter()
                .find(|p| (p.t - 1e-3).abs() < 1e-12)
                .unwrap();
            assert!(
                (at_1e3.divergence_over_t2 - h).abs() <= 0.05 * h,
                "{}: {} vs {h}",
                pair.generator.name(),
                at_1e3.divergence_over_t2
            );
        }
        // Equal-weight at the barycenter: H = 1/(8 * 0.0625) = 2.
        let eq = catalog(CatalogName::Equal).unwrap();
        let rep = taylor_consistency(&eq, &bary, &v).unwrap();
        assert!((rep.drift_form_value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn rmcm_examples() {
        let eq = catalog(CatalogName::Equal).unwrap();
        let market = catalog(CatalogName::Market).unwrap();
        let cycle = MarketPath::new(vec![
            SimplexPoint::two_asset(0.5).unwrap(),
            SimplexPoint::two_asset(0.6).unwrap(),
            SimplexPoint::two_asset(0.5).unwrap(),
        ])
        .unwrap();

        // tau = pi: ratio exactly 1.
        let rep = rmcm_cycle_test(&eq.portfolio, &eq.portfolio, &cycle).unwrap();
        assert_eq!(rep.value_ratio, 1.0);
        assert_eq!(rep.verdict, CycleVerdict::Consistent);

        // Equal vs market over the cycle: ratio = 25/24.
        let rep = rmcm_cycle_test(&eq.portfolio, &market.portfolio, &cycle).unwrap();
        assert!((rep.value_ratio - 1.041667).abs() < 1e-6);
        assert_eq!(rep.verdict, CycleVerdict::Consistent);

        // Market vs equal violates RMCM on this cycle.
        let rep = rmcm_cycle_test(&market.portfolio, &eq.portfolio, &cycle).unwrap();
        assert_eq!(rep.verdict, CycleVerdict::ViolatesRmcm);

        // Open path is rejected.
        let open = MarketPath::new(vec![
            SimplexPoint::two_asset(0.5).unwrap(),
            SimplexPoint::two_asset(0.6).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            rmcm_cycle_test(&eq.portfolio, &market.portfolio, &open),
            Err(Error::CycleNotClosed { .. })
        ));
    }

    #[test]
    fn fgp_vs_market_cycles_and_telescoping() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let market = catalog(CatalogName::Market).unwrap();
        for pair in [
            catalog(CatalogName::Equal).unwrap(),
            catalog(CatalogName::Entropy).unwrap(),
            catalog(CatalogName::Diversity(0.4)).unwrap(),
        ] {
            for _ in 0..50 {
                let n = [2usize, 3][rng.gen_range(0..2)];
                let len = rng.gen_range(2..6);
                let mut pts: Vec<_> =
                    (0..len).map(|_| random_interior(n, 0.05, &mut rng)).collect();
                pts.push(pts[0].clone());
                let cycle = MarketPath::new(pts.clone()).unwrap();
                let rep = rmcm_cycle_test(&pair.portfolio, &market.portfolio, &cycle).unwrap();
                assert!(rep.value_ratio >= 1.0 - 1e-12);

                // exp(sum of T) equals the ratio: generator terms cancel on cycles.
                let mut t_sum = 0.0;
                for w in pts.windows(2) {
                    t_sum += l_divergence(&pair, &w[1], &w[0]).unwrap();
                }
                assert!((t_sum.exp() - rep.value_ratio).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn example_3_8_dominance_direction() {
        // Diversity generator Phi (r = 0.5, n = 2) against Psi = Phi - 1.
        let r = 0.5;
        let phi_pair = catalog(CatalogName::Diversity(r)).unwrap();
        let psi_gen = GeneratingFunction::new("diversity-shifted", move |c: &[f64]| {
            c.iter().map(|x| x.powf(r)).sum::<f64>().powf(1.0 / r) - 1.0
        });
        let psi_portfolio = crate::fgp::portfolio_map_from_c2(psi_gen.clone());
        let psi_pair = FGPair::new(psi_portfolio, psi_gen);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples: Vec<_> = (0..2000)
            .map(|_| {
                (
                    random_interior(2, 0.01, &mut rng),
                    random_interior(2, 0.01, &mut rng),
                )
            })
            .collect();
        let rep = divergence_dominates(&psi_pair, &phi_pair, &samples).unwrap();
        assert!(rep.dominates, "worst margin {}", rep.worst_margin);

        let rev = divergence_dominates(&phi_pair, &psi_pair, &samples).unwrap();
        assert!(!rev.dominates);
        assert!(rev.worst_margin < -1e-10);

        // Identical pairs trivially dominate themselves.
        let same = divergence_dominates(&phi_pair, &phi_pair, &samples).unwrap();
        assert!(same.dominates);
        assert!(same.worst_margin.abs() <= 1e-15);
    }

    #[test]
    fn relative_concavity_examples() {
        // v = u gives w identically 1.
        let rep =
            relative_concavity_transform(|x| 1.0 + x, |x| 1.0 + x, 0.0, 1.0, 400).unwrap();
        assert!(rep.concave);
        assert!(rep.w.iter().all(|&w| (w - 1.0).abs() < 1e-12));

        // u = sqrt(x(1-x)), v = x(1-x) on [0.5, 0.85]: C >= c pointwise
        // (x(1-x) >= 1/8 there), so w must test concave.
        let u = |x: f64| (x * (1.0 - x)).sqrt();
        let v = |x: f64| x * (1.0 - x);
        for x in [0.5_f64, 0.6, 0.7, 0.8, 0.849] {
            let c = 1.0 / (4.0 * (x * (1.0 - x)).powi(2));
            let cc = 2.0 / (x * (1.0 - x));
            assert!(cc >= c, "C >= c fails at {x}");
        }
        let rep = relative_concavity_transform(u, v, 0.5, 0.85, 800).unwrap();
        assert!(rep.concave, "worst {}", rep.worst_second_difference);

        // v convex (C < c = 0 for linear u): witness returned.
        let rep =
            relative_concavity_transform(|_| 1.0, |x| 1.0 + x * x, 0.0, 1.0, 400).unwrap();
        assert!(!rep.concave);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn relative_concavity_truncates_when_u_hits_zero() {
        let rep = relative_concavity_transform(|x| 1.0 - x, |_| 1.0, 0.0, 2.0, 400).unwrap();
        assert!(rep.truncated);
        assert!(rep.xs.last().unwrap() < &1.0);
    }

    #[test]
    fn integral_condition_catalog_classification() {
        let market = catalog(CatalogName::Market).unwrap();
        let rep = integral_condition(&market.generator, 2).unwrap();
        assert_eq!(rep.verdict, IntegralVerdict::Convergent);
        assert!((rep.value_estimate - 1.0).abs() < 1e-9);

        let equal = catalog(CatalogName::Equal).unwrap();
        let rep = integral_condition(&equal.generator, 2).unwrap();
        assert_eq!(rep.verdict, IntegralVerdict::Divergent);
        // Logarithmic divergence: partial values follow 2 log((2 - eps)/eps).
        let expect_last = 2.0 * ((2.0 - 1e-8) / 1e-8_f64).ln();
        let got_last = *rep.partial_values.last().unwrap();
        assert!(
            (got_last - expect_last).abs() < 1e-3 * expect_last,
            "{got_last} vs {expect_last}"
        );

        let entropy = catalog(CatalogName::Entropy).unwrap();
        let rep = integral_condition(&entropy.generator, 2).unwrap();
        assert_eq!(rep.verdict, IntegralVerdict::Divergent);
        assert!(*rep.partial_values.last().unwrap() > INTEGRAL_CAP);

        let div = catalog(CatalogName::Diversity(0.5)).unwrap();
        let rep = integral_condition(&div.generator, 2).unwrap();
        assert_eq!(rep.verdict, IntegralVerdict::Convergent);
        // Phi >= 1 bounds the integrand by 1.
        assert!(rep.value_estimate <= 1.0);

        // n = 3 equal-weighted also diverges (and tops the cap).
        let rep = integral_condition(&equal.generator, 3).unwrap();
        assert_eq!(rep.verdict, IntegralVerdict::Divergent);
    }

    #[test]
    fn aggressiveness_examples() {
        // Equal-weighted: exactly 1/4 everywhere.
        let rep = two_asset_aggressiveness(|_| 0.5, (-5.0, 5.0), 1001).unwrap();
        assert_eq!(rep.min_value, 0.25);
        assert!(rep.meets_equal_weight_necessary_condition);

        // Market: q' = q(1-q), so the scan sits at 0 up to finite differences.
        let rep = two_asset_aggressiveness(|x| x, (-5.0, 5.0), 4096).unwrap();
        assert!(rep.min_value.abs() < 1e-6, "{}", rep.min_value);
        assert!(!rep.meets_equal_weight_necessary_condition);

        // Entropy-weighted on [-3, 3]: computable, strictly below 1/4.
        let rep = two_asset_aggressiveness(
            |x| {
                let e = [x, 1.0 - x].map(|t| -t * t.ln());
                e[0] / (e[0] + e[1])
            },
            (-3.0, 3.0),
            2001,
        )
        .unwrap();
        assert!(rep.min_value < 0.25);
        assert!(rep.min_value > 0.2);

        // Out-of-range rule is rejected.
        assert!(two_asset_aggressiveness(|x| 1.5 * x, (-1.0, 1.0), 101).is_err());
    }
}
