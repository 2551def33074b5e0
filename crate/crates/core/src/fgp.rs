//! Generating functions, the portfolios they generate, L-divergence and the
//! Fernholz decomposition.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::simplex::{growth_factor, MarketPath, PortfolioKind, PortfolioMap, SimplexPoint};

/// Round-off absorbed when clamping small negative L-divergences to zero.
pub const DIVERGENCE_CLAMP: f64 = 1e-10;

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A positive concave function on the simplex with optional analytic gradient.
///
/// The evaluator receives raw coordinates so it can be called on
/// finite-difference stencils as well as on validated points.
#[derive(Clone)]
pub struct GeneratingFunction {
    name: String,
    parameter: Option<f64>,
    eval: Arc<EvalFn>,
    gradient: Option<Arc<GradFn>>,
}

impl fmt::Debug for GeneratingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratingFunction")
            .field("name", &self.name)
            .field("parameter", &self.parameter)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl GeneratingFunction {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            parameter: None,
            eval: Arc::new(eval),
            gradient: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_parameter(mut self, r: f64) -> Self {
        self.parameter = Some(r);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameter(&self) -> Option<f64> {
        self.parameter
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Value at a simplex point; must be strictly positive.
    pub fn value(&self, p: &SimplexPoint) -> Result<f64> {
        let v = (self.eval)(p.coords());
        if !(v > 0.0) {
            return Err(Error::NonpositiveGenerator { value: v });
        }
        Ok(v)
    }

    /// Raw evaluation on unvalidated coordinates (finite-difference stencils).
    pub fn value_raw(&self, coords: &[f64]) -> f64 {
        (self.eval)(coords)
    }

    /// Ambient-space gradient of Phi at p, either analytic or by central
    /// differences in the tangent directions e(i) - p with a step scaled by
    /// the distance to the boundary.
    pub fn gradient_log(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        if let Some(g) = &self.gradient {
            let phi = self.value(p)?;
            return Ok(g(p.coords()).iter().map(|gi| gi / phi).collect());
        }
        self.gradient_log_fd(p)
    }

    /// Finite-difference directional derivatives of log Phi along e(i) - p.
    ///
    /// Note this returns the vector of D_{e(i)-p} log Phi(p), not an ambient
    /// gradient; both shapes feed `portfolio_from_c2` the same way because
    /// D_{e(i)-p} = g_i - <g, p> for any ambient representative g.
    fn directional_log_derivatives(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        let n = p.dim();
        let mut h = 1e-5 * p.distance_to_boundary();
        let coords = p.coords();
        let log_at = |pt: &[f64]| -> Result<f64> {
            let v = (self.eval)(pt);
            if !(v > 0.0) {
                return Err(Error::NonpositiveGenerator { value: v });
            }
            Ok(v.ln())
        };
        loop {
            if h < 1e-300 {
                return Err(Error::StepUnderflow {
                    dist: p.distance_to_boundary(),
                });
            }
            // p +- h (e(i) - p): coordinates stay positive when h < min_i p_i / (1 - p_i).
            let mut ok = true;
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let mut plus = Vec::with_capacity(n);
                let mut minus = Vec::with_capacity(n);
                for (j, &cj) in coords.iter().enumerate() {
                    let dir = if i == j { 1.0 - cj } else { -cj };
                    plus.push(cj + h * dir);
                    minus.push(cj - h * dir);
                }
                if plus.iter().chain(minus.iter()).any(|&c| c <= 0.0) {
                    ok = false;
                    break;
                }
                out.push((log_at(&plus)? - log_at(&minus)?) / (2.0 * h));
            }
            if ok {
                return Ok(out);
            }
            h *= 0.5;
        }
    }

    fn gradient_log_fd(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        // The directional derivatives already satisfy sum_i p_i D_i = 0 up to
        // round-off, so they act as a valid ambient representative.
        self.directional_log_derivatives(p)
    }

    /// Midpoint concavity probe: Phi((p+q)/2) >= (Phi(p)+Phi(q))/2 - tol.
    pub fn midpoint_concavity_check(
        &self,
        pairs: &[(SimplexPoint, SimplexPoint)],
        tol: f64,
    ) -> Result<bool> {
        for (p, q) in pairs {
            let mid = SimplexPoint::new(
                p.coords()
                    .iter()
                    .zip(q.coords())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )?;
            if self.value(&mid)? < 0.5 * (self.value(p)? + self.value(q)?) - tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A portfolio together with the concave function that generates it.
#[derive(Debug, Clone)]
pub struct FGPair {
    pub portfolio: PortfolioMap,
    pub generator: GeneratingFunction,
}

impl FGPair {
    pub fn new(portfolio: PortfolioMap, generator: GeneratingFunction) -> Self {
        Self {
            portfolio,
            generator,
        }
    }

    /// Checks the defining superdifferential inequality
    /// 1 + <pi(p)/p, q - p> >= Phi(q)/Phi(p) - tol on the given pairs.
    pub fn check_superdifferential(
        &self,
        pairs: &[(SimplexPoint, SimplexPoint)],
        tol: f64,
    ) -> Result<bool> {
        for (p, q) in pairs {
            let ratio = self.portfolio.weight_ratio(p)?;
            let lhs = growth_factor(&ratio, p, q);
            let rhs = self.generator.value(q)? / self.generator.value(p)?;
            if lhs < rhs - tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The catalog of standard functionally generated portfolios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogName {
    Market,
    Equal,
    Entropy,
    /// Diversity weighting with exponent r in (0, 1).
    Diversity(f64),
}

impl CatalogName {
    pub fn parse(name: &str, r: Option<f64>) -> Result<Self> {
        match name {
            "market" => Ok(Self::Market),
            "equal" => Ok(Self::Equal),
            "entropy" => Ok(Self::Entropy),
            "diversity" => {
                let r = r.ok_or(Error::BadDiversityParameter(f64::NAN))?;
                Ok(Self::Diversity(r))
            }
            other => Err(Error::InvalidPortfolioWeights(format!(
                "unknown catalog portfolio '{other}'"
            ))),
        }
    }
}

/// Builds the (portfolio, generating function) catalog entry.
pub fn catalog(name: CatalogName) -> Result<FGPair> {
    match name {
        CatalogName::Market => {
            let gen = GeneratingFunction::new("market", |_| 1.0).with_gradient(|p| vec![0.0; p.len()]);
            Ok(FGPair::new(PortfolioMap::market(), gen))
        }
        CatalogName::Equal => {
            let gen = GeneratingFunction::new("equal", |p| {
                let n = p.len() as f64;
                (p.iter().map(|x| x.ln()).sum::<f64>() / n).exp()
            })
            .with_gradient(|p| {
                let n = p.len() as f64;
                let phi = (p.iter().map(|x| x.ln()).sum::<f64>() / n).exp();
                p.iter().map(|x| phi / (n * x)).collect()
            });
            let portfolio = PortfolioMap::new(PortfolioKind::Catalog("equal".into()), |p| {
                vec![1.0 / p.dim() as f64; p.dim()]
            });
            Ok(FGPair::new(portfolio, gen))
        }
        CatalogName::Entropy => {
            let gen = GeneratingFunction::new("entropy", |p| {
                -p.iter().map(|x| x * x.ln()).sum::<f64>()
            })
            .with_gradient(|p| p.iter().map(|x| -(1.0 + x.ln())).collect());
            let portfolio = PortfolioMap::new(PortfolioKind::Catalog("entropy".into()), |p| {
                let terms: Vec<f64> = p.coords().iter().map(|x| -x * x.ln()).collect();
                let total: f64 = terms.iter().sum();
                terms.iter().map(|t| t / total).collect()
            });
            Ok(FGPair::new(portfolio, gen))
        }
        CatalogName::Diversity(r) => {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::BadDiversityParameter(r));
            }
            let gen = GeneratingFunction::new("diversity", move |p| {
                p.iter().map(|x| x.powf(r)).sum::<f64>().powf(1.0 / r)
            })
            .with_gradient(move |p| {
                let s: f64 = p.iter().map(|x| x.powf(r)).sum();
                let outer = s.powf(1.0 / r - 1.0);
                p.iter().map(|x| outer * x.powf(r - 1.0)).collect()
            })
            .with_parameter(r);
            let portfolio = PortfolioMap::new(PortfolioKind::Catalog("diversity".into()), move |p| {
                let powered: Vec<f64> = p.coords().iter().map(|x| x.powf(r)).collect();
                let total: f64 = powered.iter().sum();
                powered.iter().map(|t| t / total).collect()
            });
            Ok(FGPair::new(portfolio, gen))
        }
    }
}

/// Portfolio weights from a C^2 generating function via
/// pi_i(p) = p_i (1 + D_{e(i)-p} log Phi(p)).
pub fn portfolio_from_c2(generator: &GeneratingFunction, p: &SimplexPoint) -> Result<Vec<f64>> {
    let directional: Vec<f64> = if generator.has_analytic_gradient() {
        let g = generator.gradient_log(p)?;
        let dot: f64 = g.iter().zip(p.coords()).map(|(gi, pi)| gi * pi).sum();
        g.iter().map(|gi| gi - dot).collect()
    } else {
        // Finite-difference directional derivatives carry a small sum defect;
        // recentering keeps the weights summing to 1 exactly as in the
        // analytic branch.
        let d = generator.directional_log_derivatives(p)?;
        let dot: f64 = d.iter().zip(p.coords()).map(|(di, pi)| di * pi).sum();
        d.iter().map(|di| di - dot).collect()
    };
    let mut weights: Vec<f64> = p
        .coords()
        .iter()
        .zip(&directional)
        .map(|(pi, di)| pi * (1.0 + di))
        .collect();
    for (i, w) in weights.iter_mut().enumerate() {
        if *w < -1e-8 || *w > 1.0 + 1e-8 {
            return Err(Error::GeneratorNotConcave {
                asset: i,
                weight: *w,
            });
        }
        *w = w.clamp(0.0, 1.0);
    }
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok(weights)
}

/// Wraps a generating function as a PortfolioMap evaluated via `portfolio_from_c2`.
///
/// Evaluation panics on generator failures; use for smooth generators only.
pub fn portfolio_map_from_c2(generator: GeneratingFunction) -> PortfolioMap {
    PortfolioMap::custom(move |p| {
        portfolio_from_c2(&generator, p).expect("generator not differentiable/concave at point")
    })
}

/// L-divergence of the pair:
/// T(q|p) = log(1 + <pi(p)/p, q - p>) - log(Phi(q)/Phi(p)).
///
/// Values in [-1e-10, 0) are round-off and are clamped to 0; anything below
/// signals an inconsistent pair and is an error.
pub fn l_divergence(pair: &FGPair, q: &SimplexPoint, p: &SimplexPoint) -> Result<f64> {
    let ratio = pair.portfolio.weight_ratio(p)?;
    let factor = growth_factor(&ratio, p, q);
    if !(factor > 0.0) {
        return Err(Error::NonpositiveGrowth { factor });
    }
    let phi_p = pair.generator.value(p)?;
    let phi_q = pair.generator.value(q)?;
    let t = factor.ln() - (phi_q / phi_p).ln();
    if t < -DIVERGENCE_CLAMP {
        return Err(Error::NegativeDivergence { value: t });
    }
    Ok(t.max(0.0))
}

/// The three series of Fernholz's decomposition
/// log V(t) = [log Phi(mu(t)) - log Phi(mu(0))] + A(t).
#[derive(Debug, Clone)]
pub struct DecompositionSeries {
    pub log_relative_value: Vec<f64>,
    pub generator_term: Vec<f64>,
    pub drift: Vec<f64>,
}

impl DecompositionSeries {
    pub fn len(&self) -> usize {
        self.log_relative_value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_relative_value.is_empty()
    }

    /// Max pointwise defect of the identity log V = generator term + drift.
    pub fn identity_defect(&self) -> f64 {
        self.log_relative_value
            .iter()
            .zip(self.generator_term.iter().zip(&self.drift))
            .map(|(lv, (g, a))| (lv - g - a).abs())
            .fold(0.0, f64::max)
    }

    /// Largest decrease between consecutive drift values (0 if nondecreasing).
    pub fn max_drift_decrease(&self) -> f64 {
        self.drift
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Fernholz decomposition of the relative value along a market path:
/// the drift is the running sum of one-step L-divergences.
pub fn fernholz_decompose(pair: &FGPair, path: &MarketPath) -> Result<DecompositionSeries> {
    let pts = path.points();
    let mut log_v = Vec::with_capacity(pts.len());
    let mut gen_term = Vec::with_capacity(pts.len());
    let mut drift = Vec::with_capacity(pts.len());
    let log_phi0 = pair.generator.value(&pts[0])?.ln();
    log_v.push(0.0);
    gen_term.push(0.0);
    drift.push(0.0);
    let mut lv = 0.0;
    let mut a = 0.0;
    for t in 0..pts.len() - 1 {
        let ratio = pair.portfolio.weight_ratio(&pts[t])?;
        let factor = growth_factor(&ratio, &pts[t], &pts[t + 1]);
        if !(factor > 0.0) {
            return Err(Error::PortfolioRuin { time: t, factor });
        }
        let log_factor = factor.ln();
        let g_next = pair.generator.value(&pts[t + 1])?.ln() - log_phi0;
        let g_curr = gen_term[t];
        let t_step = log_factor - (g_next - g_curr);
        if t_step < -DIVERGENCE_CLAMP {
            return Err(Error::NegativeDivergence { value: t_step });
        }
        lv += log_factor;
        a += t_step.max(0.0);
        log_v.push(lv);
        gen_term.push(g_next);
        drift.push(a);
    }
    Ok(DecompositionSeries {
        log_relative_value: log_v,
        generator_term: gen_term,
        drift,
    })
}

/// Fernholz decomposition without the nonnegativity guard on the one-step
/// divergences. Backtests apply it to clamped portfolios held outside the
/// generator's feasible region, where single steps may contribute negative
/// drift; the identity log V = generator term + drift still holds.
pub fn decompose_lenient(pair: &FGPair, path: &MarketPath) -> Result<DecompositionSeries> {
    let pts = path.points();
    let log_phi0 = pair.generator.value(&pts[0])?.ln();
    let mut log_v = vec![0.0];
    let mut gen_term = vec![0.0];
    let mut drift = vec![0.0];
    let mut lv = 0.0;
    let mut a = 0.0;
    for t in 0..pts.len() - 1 {
        let ratio = pair.portfolio.weight_ratio(&pts[t])?;
        let factor = growth_factor(&ratio, &pts[t], &pts[t + 1]);
        if !(factor > 0.0) {
            return Err(Error::PortfolioRuin { time: t, factor });
        }
        let log_factor = factor.ln();
        let g_next = pair.generator.value(&pts[t + 1])?.ln() - log_phi0;
        a += log_factor - (g_next - gen_term[t]);
        lv += log_factor;
        log_v.push(lv);
        gen_term.push(g_next);
        drift.push(a);
    }
    Ok(DecompositionSeries {
        log_relative_value: log_v,
        generator_term: gen_term,
        drift,
    })
}

/// Blends two pairs: the portfolio is the weighted average and the generator
/// the geometric mean.
pub fn geometric_blend(fg1: &FGPair, fg2: &FGPair, lambda: f64) -> Result<FGPair> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::DimensionMismatch(format!(
            "blend weight {lambda} outside [0, 1]"
        )));
    }
    let (p1, p2) = (fg1.portfolio.clone(), fg2.portfolio.clone());
    let portfolio = PortfolioMap::custom(move |p| {
        let w1 = p1.weights(p).expect("left blend component failed");
        let w2 = p2.weights(p).expect("right blend component failed");
        w1.iter()
            .zip(&w2)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect()
    });
    let (g1, g2) = (fg1.generator.clone(), fg2.generator.clone());
    let name = format!(
        "blend({},{};{lambda})",
        fg1.generator.name(),
        fg2.generator.name()
    );
    let mut gen = GeneratingFunction::new(name, {
        let (g1, g2) = (g1.clone(), g2.clone());
        move |c| g1.value_raw(c).powf(lambda) * g2.value_raw(c).powf(1.0 - lambda)
    });
    if g1.has_analytic_gradient() && g2.has_analytic_gradient() {
        gen = gen.with_gradient(move |c| {
            // grad Phi = Phi * (lambda grad log Phi1 + (1-lambda) grad log Phi2)
            let v1 = g1.value_raw(c);
            let v2 = g2.value_raw(c);
            let phi = v1.powf(lambda) * v2.powf(1.0 - lambda);
            let p = SimplexPoint::new(c.to_vec()).expect("blend gradient off-simplex");
            let gl1 = g1.gradient_log(&p).expect("left gradient failed");
            let gl2 = g2.gradient_log(&p).expect("right gradient failed");
            gl1.iter()
                .zip(&gl2)
                .map(|(a, b)| phi * (lambda * a + (1.0 - lambda) * b))
                .collect()
        });
    }
    Ok(FGPair::new(portfolio, gen))
}

/// Outcome of the uniform concave upper bound check.
#[derive(Debug, Clone)]
pub struct BoundCheckReport {
    pub pass: bool,
    pub bound: f64,
    pub worst_value: f64,
    pub worst_point: SimplexPoint,
}

/// Checks Phi(p)/Phi(p0) <= diam(simplex) / dist(p0, boundary) on a sample
/// of interior points. The bound holds for every positive concave function
/// normalized at p0.
pub fn concave_bound_check(
    generator: &GeneratingFunction,
    p0: &SimplexPoint,
    sample: &[SimplexPoint],
) -> Result<BoundCheckReport> {
    let diam = 2.0_f64.sqrt();
    let bound = diam / p0.distance_to_boundary();
    let phi0 = generator.value(p0)?;
    let mut worst_value = f64::NEG_INFINITY;
    let mut worst_point = p0.clone();
    for p in sample {
        let v = generator.value(p)? / phi0;
        if v > worst_value {
            worst_value = v;
            worst_point = p.clone();
        }
    }
    Ok(BoundCheckReport {
        pass: worst_value <= bound,
        bound,
        worst_value,
        worst_point,
    })
}
