//! The six subcommands.

use std::fs::File;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use fgp_core::dominance::{
    divergence_dominates, integral_condition, rmcm_cycle_test, two_asset_aggressiveness,
    CycleVerdict, IntegralVerdict,
};
use fgp_core::fgp::{decompose_lenient, fernholz_decompose};
use fgp_core::intensity::{
    bootstrap_paths, collect_pairs, recenter_returns, ReturnHistory, SampleProvenance,
};
use fgp_core::io as fio;
use fgp_core::optimizer::{build_problem, solve};
use fgp_core::simplex::weights_from_capitalizations;
use fgp_core::{MarketPath, SimplexPoint};

use crate::config::{fingerprint, RunConfig};
use crate::portfolio::{PortfolioSpec, SolutionFile, FORMAT_VERSION};
use crate::{AppError, CheckMode};

fn create(path: &Path) -> Result<File, AppError> {
    File::create(path)
        .map_err(|e| AppError::other(format!("cannot create {}: {e}", path.display())))
}

pub fn cmd_weights(prices: &Path, out: &Path) -> Result<(), AppError> {
    let caps = fio::read_capital_series_path(prices)?;
    let path = weights_from_capitalizations(&caps)?;
    let fp = fingerprint(&json!({
        "command": "weights",
        "prices": prices.to_string_lossy(),
    }));
    fio::write_market_path(
        create(out)?,
        &path,
        caps.asset_names(),
        &[format!("config_fingerprint = {fp}")],
    )?;
    println!(
        "weights: {} rows x {} assets -> {} (fingerprint {fp})",
        path.len(),
        path.dim(),
        out.display()
    );
    Ok(())
}

pub fn cmd_decompose(weights: &Path, portfolio: &str, out: &Path) -> Result<(), AppError> {
    let path = fio::read_market_path_path(weights)?;
    let spec = PortfolioSpec::parse(portfolio)?;
    let pair = spec.fg_pair()?;
    let series = fernholz_decompose(&pair, &path).map_err(|e| match e {
        fgp_core::Error::PortfolioRuin { time, factor } => {
            let stamp = path
                .timestamps()
                .map(|ts| ts[time].clone())
                .unwrap_or_else(|| time.to_string());
            AppError::numeric(format!(
                "ruin event at {stamp}: growth factor {factor:e}"
            ))
        }
        other => AppError::from(other),
    })?;
    let fp = fingerprint(&json!({
        "command": "decompose",
        "weights": weights.to_string_lossy(),
        "portfolio": spec.describe(),
    }));
    fio::write_decomposition(
        create(out)?,
        &series,
        &[format!("config_fingerprint = {fp}")],
    )?;
    let last = series.len() - 1;
    println!(
        "decompose[{}]: log_V = {:.6}, generator_term = {:.6}, drift = {:.6} -> {}",
        spec.describe(),
        series.log_relative_value[last],
        series.generator_term[last],
        series.drift[last],
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulateEffective<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seed: u64,
    prices: String,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    config_path: &Path,
    prices: &Path,
    seed: u64,
    out: &Path,
    paths_override: Option<usize>,
    max_len_override: Option<usize>,
) -> Result<(), AppError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(p) = paths_override {
        config.bootstrap.paths = p;
    }
    if let Some(l) = max_len_override {
        config.bootstrap.max_len = l;
    }
    let region = config.region_k()?;
    let caps = fio::read_capital_series_path(prices)?;
    let history = recenter_returns(&ReturnHistory::from_prices(caps.rows())?);
    let mu0 = match config.bootstrap.mu0 {
        Some(x) => SimplexPoint::two_asset(x)?,
        None => {
            let path = weights_from_capitalizations(&caps)?;
            path.points().last().unwrap().clone()
        }
    };
    if caps.n_assets() != 2 {
        return Err(AppError::parse(format!(
            "simulate expects 2 assets, prices file has {}",
            caps.n_assets()
        )));
    }
    let fp = fingerprint(&SimulateEffective {
        command: "simulate",
        config: &config,
        seed,
        prices: prices.to_string_lossy().into_owned(),
    });
    let killed = bootstrap_paths(
        &history,
        &mu0,
        &region,
        config.bootstrap.paths,
        config.bootstrap.max_len,
        seed,
    )?;
    let truncated = killed.iter().filter(|k| k.truncated).count();
    let paths: Vec<MarketPath> = killed.into_iter().map(|k| k.path).collect();
    let sample = collect_pairs(
        &paths,
        config.grid.decimals,
        Some(&region),
        SampleProvenance {
            seed: Some(seed),
            path_count: Some(paths.len()),
            description: format!("bootstrap from {}", prices.display()),
        },
    )?;
    fio::write_jump_sample(
        create(out)?,
        &sample,
        &[format!("config_fingerprint = {fp}")],
    )?;
    println!(
        "simulate: {} paths ({} truncated at max_len) -> N = {} pairs, {} dropped off-region -> {} (fingerprint {fp})",
        paths.len(),
        truncated,
        sample.len(),
        sample.dropped_off_region,
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct OptimizeEffective<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seed: u64,
    sample: String,
}

pub fn cmd_optimize(
    config_path: &Path,
    sample_path: &Path,
    seed: u64,
    out: &Path,
) -> Result<(), AppError> {
    let config = RunConfig::load(config_path)?;
    let grid = config.build_grid()?;
    let constraints = config.constraint_set()?;
    let solver_config = config.solver_config(seed);
    let sample = fio::read_jump_sample_path(sample_path, "optimize input")?;
    let problem = build_problem(&sample, grid.clone(), constraints, solver_config)?;
    let solution = solve(&problem)?;
    let fp = fingerprint(&OptimizeEffective {
        command: "optimize",
        config: &config,
        seed,
        sample: sample_path.to_string_lossy().into_owned(),
    });
    let file = SolutionFile::from_solution(&solution, &grid, fp.clone());
    serde_json::to_writer_pretty(create(out)?, &file)
        .map_err(|e| AppError::other(format!("cannot write {}: {e}", out.display())))?;
    println!(
        "optimize: objective = {:.6e}, max residual = {:.3e}, start = {}, converged = {} -> {} (fingerprint {fp})",
        solution.objective,
        solution.residuals.max(),
        solution.start_label,
        solution.converged,
        out.display()
    );
    if !solution.converged {
        return Err(AppError::numeric(
            "solver hit the iteration cap before reaching feasibility".into(),
        ));
    }
    Ok(())
}

fn random_interior_two(min_coord: f64, rng: &mut ChaCha8Rng) -> SimplexPoint {
    let span = 1.0 - 2.0 * min_coord;
    let x = min_coord + span * rng.gen::<f64>();
    SimplexPoint::two_asset(x).expect("interior point")
}

pub fn cmd_check(
    mode: CheckMode,
    a: &str,
    b: Option<&str>,
    seed: u64,
    samples: usize,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let spec_a = PortfolioSpec::parse(a)?;
    let pair_a = spec_a.fg_pair()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fp = fingerprint(&json!({
        "command": "check",
        "mode": format!("{mode:?}"),
        "a": spec_a.describe(),
        "b": b,
        "seed": seed,
        "samples": samples,
    }));
    let report = match mode {
        CheckMode::Rmcm => {
            let spec_b = PortfolioSpec::parse(b.ok_or_else(|| {
                AppError::parse("--b is required for mode rmcm".into())
            })?)?;
            let pair_b = spec_b.fg_pair()?;
            let mut worst: f64 = f64::INFINITY;
            let mut violations = 0usize;
            for _ in 0..samples {
                let len = 2 + (rng.gen::<u64>() % 5) as usize;
                let mut pts: Vec<SimplexPoint> =
                    (0..len).map(|_| random_interior_two(0.05, &mut rng)).collect();
                pts.push(pts[0].clone());
                let cycle = MarketPath::new(pts)?;
                let rep = rmcm_cycle_test(&pair_a.portfolio, &pair_b.portfolio, &cycle)?;
                worst = worst.min(rep.value_ratio);
                if rep.verdict == CycleVerdict::ViolatesRmcm {
                    violations += 1;
                }
            }
            let verdict = if violations == 0 { "consistent" } else { "violates_RMCM" };
            println!(
                "check rmcm {} vs {}: {verdict} (worst cycle ratio {worst:.12}, {violations}/{samples} violations)",
                spec_a.describe(),
                spec_b.describe()
            );
            json!({
                "format_version": FORMAT_VERSION,
                "config_fingerprint": fp,
                "mode": "rmcm",
                "a": spec_a.describe(),
                "b": spec_b.describe(),
                "cycles": samples,
                "violations": violations,
                "worst_ratio": worst,
                "verdict": verdict,
            })
        }
        CheckMode::Divergence => {
            let spec_b = PortfolioSpec::parse(b.ok_or_else(|| {
                AppError::parse("--b is required for mode divergence".into())
            })?)?;
            let pair_b = spec_b.fg_pair()?;
            let pairs: Vec<_> = (0..samples)
                .map(|_| {
                    (
                        random_interior_two(0.01, &mut rng),
                        random_interior_two(0.01, &mut rng),
                    )
                })
                .collect();
            let rep = divergence_dominates(&pair_a, &pair_b, &pairs)?;
            println!(
                "check divergence {} >= {}: dominates = {} (worst margin {:.3e})",
                spec_a.describe(),
                spec_b.describe(),
                rep.dominates,
                rep.worst_margin
            );
            json!({
                "format_version": FORMAT_VERSION,
                "config_fingerprint": fp,
                "mode": "divergence",
                "a": spec_a.describe(),
                "b": spec_b.describe(),
                "samples": samples,
                "dominates": rep.dominates,
                "worst_margin": rep.worst_margin,
                "witness_p": rep.worst_pair.0.coords(),
                "witness_q": rep.worst_pair.1.coords(),
            })
        }
        CheckMode::Integral => {
            let rep = integral_condition(&pair_a.generator, 2)?;
            let verdict = match rep.verdict {
                IntegralVerdict::Divergent => "divergent",
                IntegralVerdict::Convergent => "convergent",
            };
            println!(
                "check integral {}: {verdict} (partial values {:?})",
                spec_a.describe(),
                rep.partial_values
            );
            json!({
                "format_version": FORMAT_VERSION,
                "config_fingerprint": fp,
                "mode": "integral",
                "a": spec_a.describe(),
                "verdict": verdict,
                "epsilons": rep.epsilons,
                "partial_values": rep.partial_values,
                "value_estimate": rep.value_estimate,
            })
        }
        CheckMode::Aggressiveness => {
            let portfolio = pair_a.portfolio.clone();
            let tau1 = move |x: f64| {
                let p = SimplexPoint::two_asset(x).expect("interior");
                portfolio.weights(&p).expect("weights")[0]
            };
            let rep = two_asset_aggressiveness(tau1, (-5.0, 5.0), 4096)?;
            println!(
                "check aggressiveness {}: min q(1-q) - q' = {:.9} at y = {:.3} (needs >= 0.25 to dominate equal-weight)",
                spec_a.describe(),
                rep.min_value,
                rep.argmin_y
            );
            json!({
                "format_version": FORMAT_VERSION,
                "config_fingerprint": fp,
                "mode": "aggressiveness",
                "a": spec_a.describe(),
                "min_value": rep.min_value,
                "argmin_y": rep.argmin_y,
                "meets_equal_weight_necessary_condition": rep.meets_equal_weight_necessary_condition,
            })
        }
    };
    if let Some(out) = out {
        serde_json::to_writer_pretty(create(out)?, &report)
            .map_err(|e| AppError::other(format!("cannot write {}: {e}", out.display())))?;
        println!("report -> {}", out.display());
    }
    Ok(())
}

pub fn cmd_backtest(
    solution_path: &Path,
    prices: &Path,
    out: &Path,
    summary_out: Option<&Path>,
) -> Result<(), AppError> {
    let solution = SolutionFile::load(solution_path)?;
    let (pair, lo, hi) = solution.clamped_pair()?;
    let caps = fio::read_capital_series_path(prices)?;
    if caps.n_assets() != 2 {
        return Err(AppError::parse(format!(
            "backtest expects 2 assets, prices file has {}",
            caps.n_assets()
        )));
    }
    let path = weights_from_capitalizations(&caps)?;
    let regime_exits = path
        .points()
        .iter()
        .filter(|p| p.coords()[0] < lo || p.coords()[0] > hi)
        .count();
    let series = decompose_lenient(&pair, &path)?;
    let fp = fingerprint(&json!({
        "command": "backtest",
        "solution": solution.config_fingerprint,
        "prices": prices.to_string_lossy(),
    }));
    fio::write_decomposition(
        create(out)?,
        &series,
        &[format!("config_fingerprint = {fp}")],
    )?;
    let last = series.len() - 1;
    if regime_exits > 0 {
        eprintln!(
            "warning: regime exit on {regime_exits} of {} steps (market weight left [{lo}, {hi}]); boundary weights held",
            series.len()
        );
    }
    let summary = json!({
        "format_version": FORMAT_VERSION,
        "config_fingerprint": fp,
        "steps": series.len() - 1,
        "final_log_relative_value": series.log_relative_value[last],
        "final_generator_term": series.generator_term[last],
        "final_drift": series.drift[last],
        "identity_defect": series.identity_defect(),
        "regime_exits": regime_exits,
    });
    println!(
        "backtest: log_V = {:.6}, generator_term = {:.6}, drift = {:.6}, regime exits = {regime_exits} -> {}",
        series.log_relative_value[last],
        series.generator_term[last],
        series.drift[last],
        out.display()
    );
    if let Some(p) = summary_out {
        serde_json::to_writer_pretty(create(p)?, &summary)
            .map_err(|e| AppError::other(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}
