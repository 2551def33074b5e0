//! Construction of discrete jump intensity measures: bootstrap market-weight
//! paths killed at the exit of a region K, and collections of weighted
//! (p, q) pairs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{MarketPath, SimplexPoint};

/// Per-coordinate closed bounds intersected with the simplex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionK {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl RegionK {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidRegion(format!(
                "{} lower bounds vs {} upper bounds",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l < h) {
                return Err(Error::InvalidRegion(format!(
                    "coordinate {i}: lo {l} must be below hi {h}"
                )));
            }
        }
        // Nonempty interior inside the simplex.
        let lo_sum: f64 = lo.iter().map(|&l| l.max(0.0)).sum();
        let hi_sum: f64 = hi.iter().map(|&h| h.min(1.0)).sum();
        if lo_sum >= 1.0 || hi_sum <= 1.0 {
            return Err(Error::InvalidRegion(format!(
                "box misses the simplex: clamped bounds sum to [{lo_sum}, {hi_sum}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Two-asset region from bounds on the first coordinate.
    pub fn two_asset(lo1: f64, hi1: f64) -> Result<Self> {
        Self::new(vec![lo1, 1.0 - hi1], vec![hi1, 1.0 - lo1])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &SimplexPoint) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&c, (&l, &h))| c >= l && c <= h)
    }
}

/// Aligned per-asset sequences of gross returns per period.
#[derive(Debug, Clone)]
pub struct ReturnHistory {
    /// rows: time, cols: asset; entries are gross returns (> 0).
    gross: Vec<Vec<f64>>,
}

impl ReturnHistory {
    pub fn from_gross(gross: Vec<Vec<f64>>) -> Result<Self> {
        if gross.is_empty() {
            return Err(Error::EmptyHistory);
        }
        let n = gross[0].len();
        for (r, row) in gross.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MixedDimensions {
                    index: r,
                    found: row.len(),
                    expected: n,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::NonpositiveReturn {
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { gross })
    }

    /// Gross returns from adjacent rows of a positive price/capitalization table.
    pub fn from_prices(prices: &[Vec<f64>]) -> Result<Self> {
        if prices.len() < 2 {
            return Err(Error::EmptyHistory);
        }
        let gross = prices
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b / a).collect())
            .collect();
        Self::from_gross(gross)
    }

    pub fn gross(&self) -> &[Vec<f64>] {
        &self.gross
    }

    pub fn len(&self) -> usize {
        self.gross.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gross.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.gross[0].len()
    }
}

/// Shifts per-asset log returns to zero sample mean and re-exponentiates.
pub fn recenter_returns(history: &ReturnHistory) -> ReturnHistory {
    let t = history.len() as f64;
    let n = history.n_assets();
    let mut mean_log = vec![0.0; n];
    for row in history.gross() {
        for (m, &g) in mean_log.iter_mut().zip(row) {
            *m += g.ln();
        }
    }
    for m in mean_log.iter_mut() {
        *m /= t;
    }
    let gross = history
        .gross()
        .iter()
        .map(|row| {
            row.iter()
                .zip(&mean_log)
                .map(|(&g, &m)| (g.ln() - m).exp())
                .collect()
        })
        .collect();
    ReturnHistory { gross }
}

/// A bootstrap path with its truncation flag (max_len reached before exit).
#[derive(Debug, Clone)]
pub struct KilledPath {
    pub path: MarketPath,
    pub truncated: bool,
}

/// Simulates market weight paths by resampling historical gross returns
/// (one time index per step, jointly across assets) and killing each path
/// at the first exit of K. The exiting point is discarded: every stored
/// point lies in K.
///
/// Path `i` draws from substream `i` of a ChaCha8 generator seeded with
/// `seed`, so output is reproducible and independent of scheduling.
pub fn bootstrap_paths(
    history: &ReturnHistory,
    mu0: &SimplexPoint,
    region: &RegionK,
    n_paths: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<KilledPath>> {
    if mu0.dim() != history.n_assets() || mu0.dim() != region.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mu0 has {} assets, history {}, region {}",
            mu0.dim(),
            history.n_assets(),
            region.dim()
        )));
    }
    if !region.contains(mu0) {
        return Err(Error::StartOutsideRegion);
    }
    if n_paths == 0 || max_len == 0 {
        return Err(Error::InvalidRegion(
            "n_paths and max_len must be positive".into(),
        ));
    }
    let mut out = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut caps: Vec<f64> = mu0.coords().to_vec();
        let mut points = vec![mu0.clone()];
        let mut truncated = false;
        loop {
            if points.len() >= max_len {
                truncated = true;
                break;
            }
            let idx = rng.gen_range(0..history.len());
            for (c, g) in caps.iter_mut().zip(&history.gross()[idx]) {
                *c *= g;
            }
            let next = SimplexPoint::from_masses(&caps)?;
            if !region.contains(&next) {
                break;
            }
            points.push(next);
        }
        out.push(KilledPath {
            path: MarketPath::new(points)?,
            truncated,
        });
    }
    Ok(out)
}

/// Provenance of a jump sample: how it was generated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub seed: Option<u64>,
    pub path_count: Option<usize>,
    pub description: String,
}

/// A weighted collection of simplex jump pairs: the discrete intensity measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpSample {
    pairs: Vec<(SimplexPoint, SimplexPoint)>,
    weights: Vec<f64>,
    pub provenance: SampleProvenance,
    /// Every pair has p == q: the objective is constant over this sample.
    pub degenerate: bool,
    /// Pairs dropped because rounding pushed them outside the region.
    pub dropped_off_region: usize,
}

impl JumpSample {
    pub fn new(
        pairs: Vec<(SimplexPoint, SimplexPoint)>,
        weights: Vec<f64>,
        provenance: SampleProvenance,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        if pairs.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} pairs vs {} weights",
                pairs.len(),
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPortfolioWeights(format!(
                "sample weights sum to {sum}"
            )));
        }
        let degenerate = pairs.iter().all(|(p, q)| p.coords() == q.coords());
        Ok(Self {
            pairs,
            weights,
            provenance,
            degenerate,
            dropped_off_region: 0,
        })
    }

    pub fn pairs(&self) -> &[(SimplexPoint, SimplexPoint)] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// First `n` pairs re-weighted uniformly (for nested-sample experiments).
    pub fn prefix(&self, n: usize) -> Result<JumpSample> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidSchedule(format!(
                "prefix size {n} outside 1..={}",
                self.len()
            )));
        }
        JumpSample::new(
            self.pairs[..n].to_vec(),
            vec![1.0 / n as f64; n],
            SampleProvenance {
                description: format!("{} (prefix {n})", self.provenance.description),
                ..self.provenance.clone()
            },
        )
    }

    pub fn all_in_region(&self, region: &RegionK) -> bool {
        self.pairs
            .iter()
            .all(|(p, q)| region.contains(p) && region.contains(q))
    }
}

/// Rounds a point's coordinates to `decimals` places, then restores an exact
/// unit sum through the largest coordinate.
fn round_point(p: &SimplexPoint, decimals: u32) -> Result<SimplexPoint> {
    let scale = 10f64.powi(decimals as i32);
    let mut coords: Vec<f64> = p.coords().iter().map(|c| (c * scale).round() / scale).collect();
    let largest = coords
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let others: f64 = coords
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != largest)
        .map(|(_, &c)| c)
        .sum();
    coords[largest] = 1.0 - others;
    SimplexPoint::new(coords)
}

/// Collects consecutive jump pairs from killed paths with uniform weights.
///
/// A path of length L contributes the L - 1 pairs (mu(t-1), mu(t)); paths
/// shorter than 2 contribute nothing. Coordinates are rounded to
/// `rounding_decimals` places (largest coordinate absorbs the rounding
/// defect). When a region is supplied, membership is re-verified after
/// rounding and offending pairs are dropped (counted in the result); this
/// can only happen when the region bounds are not aligned to the rounding
/// resolution.
pub fn collect_pairs(
    paths: &[MarketPath],
    rounding_decimals: u32,
    region: Option<&RegionK>,
    provenance: SampleProvenance,
) -> Result<JumpSample> {
    let mut pairs = Vec::new();
    let mut dropped = 0usize;
    for path in paths {
        let pts = path.points();
        for w in pts.windows(2) {
            let p = round_point(&w[0], rounding_decimals)?;
            let q = round_point(&w[1], rounding_decimals)?;
            if let Some(k) = region {
                if !k.contains(&p) || !k.contains(&q) {
                    dropped += 1;
                    continue;
                }
            }
            pairs.push((p, q));
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoJumps);
    }
    let n = pairs.len();
    let mut sample = JumpSample::new(pairs, vec![1.0 / n as f64; n], provenance)?;
    sample.dropped_off_region = dropped;
    Ok(sample)
}

/// Runs a user-supplied Markov transition rule, discards `burn_in` steps and
/// records `n_pairs` consecutive jumps with uniform weights.
///
/// The sampler sees a deterministic ChaCha8 stream derived from `seed`; a
/// sampler output off the simplex is rejected with its step index.
pub fn pairs_from_markov<F>(
    sampler: F,
    mu0: &SimplexPoint,
    burn_in: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<JumpSample>
where
    F: Fn(&SimplexPoint, &mut ChaCha8Rng) -> Vec<f64>,
{
    if n_pairs == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = mu0.clone();
    let step = |s: &SimplexPoint, t: usize, rng: &mut ChaCha8Rng| -> Result<SimplexPoint> {
        SimplexPoint::new(sampler(s, rng)).map_err(|e| Error::SamplerLeftSimplex {
            step: t,
            reason: e.to_string(),
        })
    };
    for t in 0..burn_in {
        state = step(&state, t, &mut rng)?;
    }
    let mut pairs = Vec::with_capacity(n_pairs);
    for j in 0..n_pairs {
        let next = step(&state, burn_in + j, &mut rng)?;
        pairs.push((state.clone(), next.clone()));
        state = next;
    }
    JumpSample::new(
        pairs,
        vec![1.0 / n_pairs as f64; n_pairs],
        SampleProvenance {
            seed: Some(seed),
            path_count: None,
            description: format!("markov chain, burn_in {burn_in}"),
        },
    )
}
