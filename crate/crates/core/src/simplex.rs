//! Simplex geometry, market paths, the relative value recursion and line
//! integrals of weight-ratio fields.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on |sum of coordinates - 1| for simplex membership.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Strict positivity threshold: every coordinate must exceed this.
pub const SIMPLEX_MIN_COORD: f64 = 1e-15;
/// Tolerance on |sum - 1| for portfolio weight vectors (closed simplex).
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// A point of the open unit simplex: strictly positive coordinates summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidSimplexPoint(format!(
                "need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        for (i, &c) in coords.iter().enumerate() {
            if !c.is_finite() || c <= SIMPLEX_MIN_COORD {
                return Err(Error::InvalidSimplexPoint(format!(
                    "coordinate {i} = {c} is not strictly positive"
                )));
            }
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidSimplexPoint(format!(
                "coordinates sum to {sum}, off by {:e}",
                sum - 1.0
            )));
        }
        Ok(Self { coords })
    }

    /// Normalizes a vector of positive masses onto the simplex.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let sum: f64 = masses.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidSimplexPoint(format!(
                "masses sum to {sum}, cannot normalize"
            )));
        }
        Self::new(masses.iter().map(|m| m / sum).collect())
    }

    /// Barycenter (1/n, ..., 1/n).
    pub fn barycenter(n: usize) -> Self {
        Self {
            coords: vec![1.0 / n as f64; n],
        }
    }

    /// Two-asset point (x, 1 - x).
    pub fn two_asset(x: f64) -> Result<Self> {
        Self::new(vec![x, 1.0 - x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean distance to the simplex boundary within the affine hull:
    /// min_i p_i * sqrt(n / (n - 1)).
    pub fn distance_to_boundary(&self) -> f64 {
        let n = self.dim() as f64;
        let min = self.coords.iter().cloned().fold(f64::INFINITY, f64::min);
        min * (n / (n - 1.0)).sqrt()
    }

    pub fn min_coord(&self) -> f64 {
        self.coords.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Displacement q - p as a tangent vector (no sum-zero re-check: the
    /// residual of two valid points is within 2e-12 of zero).
    pub fn displacement_to(&self, q: &SimplexPoint) -> TangentVector {
        TangentVector {
            coords: q
                .coords
                .iter()
                .zip(&self.coords)
                .map(|(qi, pi)| qi - pi)
                .collect(),
        }
    }

    /// p + t v, validated back onto the simplex.
    pub fn step(&self, v: &TangentVector, t: f64) -> Result<SimplexPoint> {
        SimplexPoint::new(
            self.coords
                .iter()
                .zip(&v.coords)
                .map(|(p, vi)| p + t * vi)
                .collect(),
        )
    }
}

impl fmt::Display for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A tangent vector of the simplex: coordinates sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let sum: f64 = coords.iter().sum();
        if sum.abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidTangentVector { sum });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// An ordered sequence of simplex points, optionally labelled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketPath {
    points: Vec<SimplexPoint>,
    timestamps: Option<Vec<String>>,
}

impl MarketPath {
    pub fn new(points: Vec<SimplexPoint>) -> Result<Self> {
        Self::with_timestamps(points, None)
    }

    pub fn with_timestamps(
        points: Vec<SimplexPoint>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPath);
        }
        let n = points[0].dim();
        for (i, p) in points.iter().enumerate() {
            if p.dim() != n {
                return Err(Error::MixedDimensions {
                    index: i,
                    found: p.dim(),
                    expected: n,
                });
            }
        }
        if let Some(ts) = &timestamps {
            if ts.len() != points.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} timestamps for {} points",
                    ts.len(),
                    points.len()
                )));
            }
        }
        Ok(Self { points, timestamps })
    }

    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Whether the path returns to its starting point (within `tol` per coordinate).
    pub fn is_closed(&self, tol: f64) -> bool {
        let first = self.points.first().unwrap();
        let last = self.points.last().unwrap();
        first
            .coords()
            .iter()
            .zip(last.coords())
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// A table of strictly positive capitalizations, assets as columns and times as rows.
#[derive(Debug, Clone)]
pub struct CapitalSeries {
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
    asset_names: Option<Vec<String>>,
}

impl CapitalSeries {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_labels(rows, None, None)
    }

    pub fn with_labels(
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
        asset_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyPath);
        }
        let n = rows[0].len();
        if n < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 assets, got {n}"
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MixedDimensions {
                    index: r,
                    found: row.len(),
                    expected: n,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::NonpositiveCapitalization {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            rows,
            labels,
            asset_names,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn asset_names(&self) -> Option<&[String]> {
        self.asset_names.as_deref()
    }

    pub fn n_assets(&self) -> usize {
        self.rows[0].len()
    }
}

/// How a portfolio map was built; carried along for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortfolioKind {
    Catalog(String),
    Grid,
    Custom,
}

type WeightFn = dyn Fn(&SimplexPoint) -> Vec<f64> + Send + Sync;

/// A rule assigning closed-simplex weights to each simplex point.
#[derive(Clone)]
pub struct PortfolioMap {
    kind: PortfolioKind,
    rule: Arc<WeightFn>,
}

impl fmt::Debug for PortfolioMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PortfolioMap")
            .field("kind", &self.kind)
            .finish()
    }
}

impl PortfolioMap {
    pub fn new<F>(kind: PortfolioKind, rule: F) -> Self
    where
        F: Fn(&SimplexPoint) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            kind,
            rule: Arc::new(rule),
        }
    }

    pub fn custom<F>(rule: F) -> Self
    where
        F: Fn(&SimplexPoint) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(PortfolioKind::Custom, rule)
    }

    /// The market portfolio p -> p.
    pub fn market() -> Self {
        Self::new(PortfolioKind::Catalog("market".into()), |p| {
            p.coords().to_vec()
        })
    }

    pub fn kind(&self) -> &PortfolioKind {
        &self.kind
    }

    /// Evaluates the rule and validates the output: nonnegative weights
    /// summing to 1 within 1e-10.
    pub fn weights(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        let w = (self.rule)(p);
        if w.len() != p.dim() {
            return Err(Error::InvalidPortfolioWeights(format!(
                "rule returned {} weights for {} assets",
                w.len(),
                p.dim()
            )));
        }
        let mut sum = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            if !wi.is_finite() || wi < 0.0 {
                return Err(Error::InvalidPortfolioWeights(format!(
                    "weight {i} = {wi}"
                )));
            }
            sum += wi;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidPortfolioWeights(format!(
                "weights sum to {sum}"
            )));
        }
        Ok(w)
    }

    /// Componentwise pi_i(p) / p_i.
    pub fn weight_ratio(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        let w = self.weights(p)?;
        Ok(w.iter().zip(p.coords()).map(|(wi, pi)| wi / pi).collect())
    }
}

/// Market weights from a capitalization table: mu_i(t) = X_i(t) / sum_j X_j(t).
pub fn weights_from_capitalizations(caps: &CapitalSeries) -> Result<MarketPath> {
    let points = caps
        .rows()
        .iter()
        .map(|row| SimplexPoint::from_masses(row))
        .collect::<Result<Vec<_>>>()?;
    MarketPath::with_timestamps(points, caps.labels().map(|l| l.to_vec()))
}

/// The relative value recursion: V(0) = 1 and
/// V(t+1)/V(t) = 1 + <pi(mu(t))/mu(t), mu(t+1) - mu(t)>.
///
/// Every growth factor must stay positive; a nonpositive factor means the
/// portfolio is ruined relative to the market and is reported with its time index.
pub fn relative_value_path(portfolio: &PortfolioMap, path: &MarketPath) -> Result<Vec<f64>> {
    let pts = path.points();
    let mut values = Vec::with_capacity(pts.len());
    values.push(1.0);
    for t in 0..pts.len().saturating_sub(1) {
        let ratio = portfolio.weight_ratio(&pts[t])?;
        let factor = growth_factor(&ratio, &pts[t], &pts[t + 1]);
        if !(factor > 0.0) {
            return Err(Error::PortfolioRuin { time: t, factor });
        }
        values.push(values[t] * factor);
    }
    Ok(values)
}

/// One-step growth factor 1 + <ratio, q - p>.
pub(crate) fn growth_factor(ratio: &[f64], p: &SimplexPoint, q: &SimplexPoint) -> f64 {
    1.0 + ratio
        .iter()
        .zip(p.coords().iter().zip(q.coords()))
        .map(|(r, (pi, qi))| r * (qi - pi))
        .sum::<f64>()
}

/// Composite midpoint quadrature of the weight-ratio line integral along a
/// piecewise-linear curve given by its vertices.
///
/// For a functionally generated portfolio this equals
/// log Phi(end) - log Phi(start) up to quadrature error, and vanishes on
/// closed curves.
pub fn line_integral(
    portfolio: &PortfolioMap,
    vertices: &[SimplexPoint],
    quadrature_steps: usize,
) -> Result<f64> {
    if vertices.len() < 2 {
        return Err(Error::EmptyPath);
    }
    if quadrature_steps < 2 {
        return Err(Error::TooFewQuadratureSteps(quadrature_steps));
    }
    for (i, v) in vertices.iter().enumerate() {
        // Interior vertices keep every convex combination interior.
        if v.min_coord() <= SIMPLEX_MIN_COORD {
            return Err(Error::CurveTouchesBoundary { index: i });
        }
    }
    let k = quadrature_steps as f64;
    let mut total = 0.0;
    for seg in vertices.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        let d: Vec<f64> = b
            .coords()
            .iter()
            .zip(a.coords())
            .map(|(bi, ai)| bi - ai)
            .collect();
        let mut seg_sum = 0.0;
        for j in 0..quadrature_steps {
            let t = (j as f64 + 0.5) / k;
            let x = SimplexPoint::new(
                a.coords()
                    .iter()
                    .zip(&d)
                    .map(|(ai, di)| ai + t * di)
                    .collect(),
            )?;
            let ratio = portfolio.weight_ratio(&x)?;
            seg_sum += ratio.iter().zip(&d).map(|(r, di)| r * di).sum::<f64>();
        }
        total += seg_sum / k;
    }
    Ok(total)
}
