//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers. Tolerances are pinned in the assertions.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fgp_core::dominance::{
    divergence_dominates, integral_condition, relative_concavity_transform, rmcm_cycle_test,
    two_asset_aggressiveness, IntegralVerdict,
};
use fgp_core::fgp::{
    catalog, decompose_lenient, fernholz_decompose, l_divergence, portfolio_map_from_c2,
    CatalogName, FGPair, GeneratingFunction,
};
use fgp_core::intensity::{
    bootstrap_paths, collect_pairs, pairs_from_markov, recenter_returns, RegionK, ReturnHistory,
    SampleProvenance,
};
use fgp_core::optimizer::{
    brute_force_solve, build_problem, consistency_experiment, equal_weight_start,
    feasibility_residuals, market_start, objective_and_gradient, polyhedral_extension, solve,
    ConstraintSet, Grid, SolverConfig,
};
use fgp_core::simplex::{relative_value_path, MarketPath, SimplexPoint};

fn random_interior(n: usize, min_coord: f64, rng: &mut ChaCha8Rng) -> SimplexPoint {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
        let p = SimplexPoint::from_masses(&raw).unwrap();
        if p.min_coord() >= min_coord {
            return p;
        }
    }
}

/// Interior point with dyadic coordinates: sums are exact in f64, so
/// exact-zero claims are meaningful.
fn dyadic_point(n: usize, rng: &mut ChaCha8Rng) -> SimplexPoint {
    const DENOM: u64 = 1 << 20;
    loop {
        let mut cuts: Vec<u64> = (0..n - 1).map(|_| rng.gen_range(1..DENOM)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        if cuts.len() != n - 1 {
            continue;
        }
        let mut masses = Vec::with_capacity(n);
        let mut prev = 0u64;
        for &c in &cuts {
            masses.push(c - prev);
            prev = c;
        }
        masses.push(DENOM - prev);
        if masses.iter().any(|&m| m < DENOM / 1024) {
            continue;
        }
        return SimplexPoint::new(masses.iter().map(|&m| m as f64 / DENOM as f64).collect())
            .unwrap();
    }
}

fn all_catalog() -> Vec<FGPair> {
    vec![
        catalog(CatalogName::Market).unwrap(),
        catalog(CatalogName::Equal).unwrap(),
        catalog(CatalogName::Entropy).unwrap(),
        catalog(CatalogName::Diversity(0.5)).unwrap(),
    ]
}

#[test]
fn criterion_01_decomposition_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let pairs = all_catalog();
    let mut worst_defect = 0.0_f64;
    let mut worst_vs_product = 0.0_f64;
    for path_idx in 0..100 {
        let n = [2usize, 3, 5][path_idx % 3];
        let pts: Vec<_> = (0..1000)
            .map(|_| random_interior(n, 0.02, &mut rng))
            .collect();
        let path = MarketPath::new(pts).unwrap();
        for pair in &pairs {
            let d = fernholz_decompose(pair, &path).unwrap();
            worst_defect = worst_defect.max(d.identity_defect());
            assert_eq!(d.max_drift_decrease(), 0.0, "drift decreased");
            // Cross-check the log relative value against the multiplicative
            // recursion.
            let v = relative_value_path(&pair.portfolio, &path).unwrap();
            let defect = d
                .log_relative_value
                .iter()
                .zip(&v)
                .map(|(lv, vv)| (lv - vv.ln()).abs())
                .fold(0.0, f64::max);
            worst_vs_product = worst_vs_product.max(defect);
        }
    }
    assert!(worst_defect <= 1e-10, "identity defect {worst_defect:e}");
    assert!(worst_vs_product <= 1e-10, "product defect {worst_vs_product:e}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.2} s (limit 10 s)");
    println!(
        "[acceptance 1] PASS: identity defect {worst_defect:.2e} <= 1e-10 on 100 paths x 4 portfolios, drift nondecreasing, {elapsed:.2} s"
    );
}

#[test]
fn criterion_02_divergence_nonnegativity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for pair in all_catalog() {
        for i in 0..10_000 {
            let n = [2usize, 3, 5][i % 3];
            let p = random_interior(n, 0.01, &mut rng);
            let q = random_interior(n, 0.01, &mut rng);
            // l_divergence errors below -1e-10 and clamps round-off to 0.
            let t = l_divergence(&pair, &q, &p).unwrap();
            assert!(t >= 0.0);
        }
    }
    // The market portfolio on exact-sum (dyadic) points: T is zero bitwise.
    let market = catalog(CatalogName::Market).unwrap();
    for i in 0..10_000 {
        let n = [2usize, 3, 5][i % 3];
        let p = dyadic_point(n, &mut rng);
        let q = dyadic_point(n, &mut rng);
        let t = l_divergence(&market, &q, &p).unwrap();
        assert_eq!(t, 0.0, "market T = {t:e} at {p} -> {q}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.2} s (limit 5 s)");
    println!(
        "[acceptance 2] PASS: T >= -1e-10 on 4 x 10^4 seeded pairs, market T == 0 exactly on dyadic pairs, {elapsed:.2} s"
    );
}

#[test]
fn criterion_03_derived_value_spot_checks() {
    // Independent oracle: the divergence formula written out directly.
    let oracle = |p1: f64, q1: f64| -> f64 {
        let growth: f64 = 1.0 + (0.5 / p1) * (q1 - p1) + (0.5 / (1.0 - p1)) * (p1 - q1);
        let gen_ratio = ((q1 * (1.0 - q1)).sqrt() / (p1 * (1.0 - p1)).sqrt()).ln();
        growth.ln() - gen_ratio
    };
    let expect_t = oracle(0.5, 0.6);
    assert!((expect_t - 0.020411).abs() < 1e-6);

    let eq = catalog(CatalogName::Equal).unwrap();
    let p = SimplexPoint::two_asset(0.5).unwrap();
    let q = SimplexPoint::two_asset(0.6).unwrap();
    let t = l_divergence(&eq, &q, &p).unwrap();
    assert!((t - 0.020411).abs() < 1e-6, "T = {t}");
    assert!((t - expect_t).abs() < 1e-12);

    let cycle = MarketPath::new(vec![p.clone(), q.clone(), p.clone()]).unwrap();
    let market = catalog(CatalogName::Market).unwrap();
    let rep = rmcm_cycle_test(&eq.portfolio, &market.portfolio, &cycle).unwrap();
    let expect_ratio = (oracle(0.5, 0.6) + oracle(0.6, 0.5)).exp();
    assert!((rep.value_ratio - 1.041667).abs() < 1e-6, "ratio {}", rep.value_ratio);
    assert!((rep.value_ratio - expect_ratio).abs() < 1e-10);
    println!(
        "[acceptance 3] PASS: T((0.6,0.4)|(0.5,0.5)) = {t:.6} and cycle ratio {:.6} match the direct-arithmetic oracle within 1e-6",
        rep.value_ratio
    );
}

#[test]
fn criterion_04_mcm_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let market = catalog(CatalogName::Market).unwrap();
    let mut worst_ratio = f64::INFINITY;
    let mut worst_exp_gap = 0.0_f64;
    for pair in all_catalog() {
        for i in 0..1000 {
            let n = [2usize, 3, 5][i % 3];
            let len = 2 + (rng.gen::<u64>() % 5) as usize; // cycle length <= 6
            let mut pts: Vec<_> = (0..len)
                .map(|_| random_interior(n, 0.05, &mut rng))
                .collect();
            pts.push(pts[0].clone());
            let cycle = MarketPath::new(pts.clone()).unwrap();
            let rep = rmcm_cycle_test(&pair.portfolio, &market.portfolio, &cycle).unwrap();
            worst_ratio = worst_ratio.min(rep.value_ratio);
            assert!(
                rep.value_ratio >= 1.0 - 1e-12,
                "{}: ratio {}",
                pair.generator.name(),
                rep.value_ratio
            );
            let mut t_sum = 0.0;
            for w in pts.windows(2) {
                t_sum += l_divergence(&pair, &w[1], &w[0]).unwrap();
            }
            let gap = (t_sum.exp() - rep.value_ratio).abs();
            worst_exp_gap = worst_exp_gap.max(gap);
            assert!(gap <= 1e-10, "exp(sum T) vs ratio gap {gap:e}");
        }
    }
    println!(
        "[acceptance 4] PASS: 4 x 10^3 cycles, worst ratio {worst_ratio:.15} >= 1 - 1e-12, exp(sum T) matches within {worst_exp_gap:.2e}"
    );
}

#[test]
fn criterion_05_example_dominance() {
    let r = 0.5;
    let phi_pair = catalog(CatalogName::Diversity(r)).unwrap();
    let psi_gen = GeneratingFunction::new("diversity-shifted", move |c: &[f64]| {
        c.iter().map(|x| x.powf(r)).sum::<f64>().powf(1.0 / r) - 1.0
    });
    let psi_pair = FGPair::new(portfolio_map_from_c2(psi_gen.clone()), psi_gen);

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let samples: Vec<_> = (0..10_000)
        .map(|_| {
            (
                random_interior(2, 0.01, &mut rng),
                random_interior(2, 0.01, &mut rng),
            )
        })
        .collect();
    let forward = divergence_dominates(&psi_pair, &phi_pair, &samples).unwrap();
    assert!(forward.dominates, "worst margin {}", forward.worst_margin);
    let reverse = divergence_dominates(&phi_pair, &psi_pair, &samples).unwrap();
    assert!(!reverse.dominates);
    assert!(reverse.worst_margin < -1e-10);
    println!(
        "[acceptance 5] PASS: shifted-generator portfolio dominates on 10^4 pairs (worst margin {:.3e}); reversed direction fails with witness p = {}, margin {:.3e}",
        forward.worst_margin, reverse.worst_pair.0, reverse.worst_margin
    );
}

#[test]
fn criterion_06_integral_condition_classification() {
    let verdicts: Vec<(&str, IntegralVerdict, f64)> = all_catalog()
        .iter()
        .map(|pair| {
            let rep = integral_condition(&pair.generator, 2).unwrap();
            (
                match pair.generator.name() {
                    "market" => "market",
                    "equal" => "equal",
                    "entropy" => "entropy",
                    _ => "diversity",
                },
                rep.verdict,
                rep.value_estimate,
            )
        })
        .collect();
    let find = |name: &str| verdicts.iter().find(|(n, _, _)| *n == name).unwrap();
    assert_eq!(find("equal").1, IntegralVerdict::Divergent);
    assert_eq!(find("entropy").1, IntegralVerdict::Divergent);
    assert_eq!(find("market").1, IntegralVerdict::Convergent);
    assert_eq!(find("diversity").1, IntegralVerdict::Convergent);
    let market_value = find("market").2;
    assert!(
        (market_value - 1.0).abs() <= 1e-9,
        "market integral {market_value}"
    );
    println!(
        "[acceptance 6] PASS: equal/entropy divergent, market/diversity convergent; market value {market_value:.12} within 1e-9 of 1"
    );
}

#[test]
fn criterion_07_two_asset_aggressiveness() {
    let eq = two_asset_aggressiveness(|_| 0.5, (-5.0, 5.0), 2001).unwrap();
    assert!((eq.min_value - 0.25).abs() <= 1e-9, "equal {}", eq.min_value);

    let market = two_asset_aggressiveness(|x| x, (-5.0, 5.0), 4096).unwrap();
    assert!(market.min_value.abs() <= 1e-6, "market {}", market.min_value);
    println!(
        "[acceptance 7] PASS: equal-weight scan = 0.25 (err {:.1e}), market scan = 0 within {:.1e}",
        (eq.min_value - 0.25).abs(),
        market.min_value.abs()
    );
}

#[test]
fn criterion_08_relative_concavity() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    // 20 seeded pairs with C >= c verified pointwise by finite differences.
    for case in 0..20 {
        let (u, v): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = if case % 2 == 0 {
            // Linear u (c = 0) against concave quadratic v (C > 0).
            let a = 0.5 * rng.gen::<f64>();
            let b = rng.gen::<f64>() - 0.5;
            let d = 0.2 + 0.6 * rng.gen::<f64>();
            (
                Box::new(move |x: f64| 1.0 + a * x),
                Box::new(move |x: f64| 2.0 + b * x - d * x * x),
            )
        } else {
            // Exponential u (c = -a^2 < 0) against linear v (C = 0).
            let a = 0.8 * rng.gen::<f64>();
            let b = 0.5 * (rng.gen::<f64>() - 0.5);
            (
                Box::new(move |x: f64| (a * x).exp()),
                Box::new(move |x: f64| 1.0 + b * x),
            )
        };
        // Pointwise C >= c oracle via second central differences.
        let h = 1e-4;
        for k in 1..100 {
            let x = k as f64 / 100.0;
            let upp = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
            let vpp = (v(x + h) - 2.0 * v(x) + v(x - h)) / (h * h);
            let c = -upp / u(x);
            let cc = -vpp / v(x);
            assert!(cc >= c - 1e-6, "case {case}: C < c at {x}");
        }
        let rep = relative_concavity_transform(&u, &v, 0.0, 1.0, 400).unwrap();
        assert!(
            rep.concave,
            "case {case}: worst second difference {:.3e}",
            rep.worst_second_difference
        );
    }
    // 5 constructed violations: v convex where u is linear.
    for case in 0..5 {
        let d = 0.5 + 0.5 * case as f64;
        let rep =
            relative_concavity_transform(|_| 1.0, move |x| 1.0 + d * x * x, 0.0, 1.0, 400)
                .unwrap();
        assert!(!rep.concave);
        assert!(rep.witness.is_some(), "no witness for violation {case}");
    }
    println!(
        "[acceptance 8] PASS: 20 C>=c pairs give concave transforms; 5 constructed violations return witnesses"
    );
}

#[test]
fn criterion_09_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    // Random m = 20 problem.
    let grid = Grid::uniform(0.2, 0.77, 0.03).unwrap();
    assert_eq!(grid.m(), 20);
    let m = grid.m();
    let n_pairs = 30;
    let pairs: Vec<_> = (0..n_pairs)
        .map(|_| {
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            (
                SimplexPoint::two_asset(grid.xs()[i]).unwrap(),
                SimplexPoint::two_asset(grid.xs()[j]).unwrap(),
            )
        })
        .collect();
    let sample = fgp_core::intensity::JumpSample::new(
        pairs,
        vec![1.0 / n_pairs as f64; n_pairs],
        SampleProvenance {
            seed: Some(909),
            path_count: None,
            description: "criterion 9".into(),
        },
    )
    .unwrap();
    let problem =
        build_problem(&sample, grid.clone(), ConstraintSet::none(), SolverConfig::default())
            .unwrap();

    let mut worst_rel = 0.0_f64;
    for _ in 0..50 {
        let vars = random_feasible_vars(&grid, &mut rng);
        let (_, g) = objective_and_gradient(&problem, &vars).unwrap();
        let h = 1e-6;
        let mut check = |get: &dyn Fn(&fgp_core::optimizer::DecisionVars) -> f64,
                         set: &dyn Fn(&mut fgp_core::optimizer::DecisionVars, f64),
                         analytic: f64| {
            let mut up = vars.clone();
            set(&mut up, get(&vars) + h);
            let mut dn = vars.clone();
            set(&mut dn, get(&vars) - h);
            let (vu, _) = objective_and_gradient(&problem, &up).unwrap();
            let (vd, _) = objective_and_gradient(&problem, &dn).unwrap();
            let fd = (vu - vd) / (2.0 * h);
            let rel = (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1.0);
            worst_rel = worst_rel.max(rel);
            assert!(rel <= 1e-6, "gradient mismatch: {analytic} vs {fd}");
        };
        for i in 0..m {
            check(&|v| v.z[i], &move |v, x| v.z[i] = x, g.z[i]);
        }
        for j in 0..m + 2 {
            check(&|v| v.phi[j], &move |v, x| v.phi[j] = x, g.phi[j]);
        }
    }
    println!(
        "[acceptance 9] PASS: analytic gradient matches central differences on 50 feasible points (worst scaled error {worst_rel:.2e} <= 1e-6)"
    );
}

fn random_feasible_vars(grid: &Grid, rng: &mut ChaCha8Rng) -> fgp_core::optimizer::DecisionVars {
    let a = rng.gen::<f64>();
    let b = rng.gen::<f64>() - 0.5;
    let shape = move |x: f64| 1.0 + a * (x * (1.0 - x)).sqrt() + b * x;
    let scale = shape(grid.xs()[0]);
    let phi: Vec<f64> = grid.full().iter().map(|&x| shape(x) / scale).collect();
    let mut vars = fgp_core::optimizer::DecisionVars {
        z: vec![0.0; grid.m()],
        phi,
    };
    let s = vars.slopes(grid);
    for i in 0..grid.m() {
        let x = grid.xs()[i];
        let c = x * (1.0 - x);
        let lo = x + c * s[i + 1] / vars.phi[i + 1];
        let hi = x + c * s[i] / vars.phi[i + 1];
        let t = rng.gen::<f64>();
        vars.z[i] = lo + t * (hi - lo);
    }
    vars
}

#[test]
fn criterion_10_optimizer_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let candidates = [0.3, 0.4, 0.5, 0.6, 0.7];
    let lattice_step = 0.1;
    for instance in 0..20 {
        let m = 1 + instance % 3;
        let first = rng.gen_range(0..=candidates.len() - m);
        let xs: Vec<f64> = candidates[first..first + m].to_vec();
        let grid = Grid::new(xs.clone()).unwrap();
        let n_pairs = 1 + (rng.gen::<u64>() % 6) as usize;
        let pairs: Vec<_> = (0..n_pairs)
            .map(|_| {
                let i = rng.gen_range(0..m);
                let j = rng.gen_range(0..m);
                (
                    SimplexPoint::two_asset(xs[i]).unwrap(),
                    SimplexPoint::two_asset(xs[j]).unwrap(),
                )
            })
            .collect();
        let sample = fgp_core::intensity::JumpSample::new(
            pairs,
            vec![1.0 / n_pairs as f64; n_pairs],
            SampleProvenance {
                seed: Some(instance as u64),
                path_count: None,
                description: "criterion 10".into(),
            },
        )
        .unwrap();
        let constraints = ConstraintSet {
            ratio_bounds: Some((0.5, 2.0)),
            box_bounds: None,
            monotone: instance % 2 == 0,
            tracking: None,
        };
        let config = SolverConfig {
            seed: instance as u64,
            ..SolverConfig::default()
        };
        let problem = build_problem(&sample, grid.clone(), constraints, config).unwrap();
        let sol = solve(&problem).unwrap();
        assert!(
            sol.residuals.max() <= 1e-8,
            "instance {instance}: residuals {:?}",
            sol.residuals
        );
        let brute = brute_force_solve(&problem, lattice_step).unwrap();
        assert!(
            sol.objective >= brute.objective - (1e-4 + lattice_step),
            "instance {instance}: solve {} vs brute {}",
            sol.objective,
            brute.objective
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.2} s (limit 60 s)");
    println!(
        "[acceptance 10] PASS: 20 tiny instances, solve >= lattice optimum - (1e-4 + {lattice_step}), residuals <= 1e-8, {elapsed:.2} s"
    );
}

/// Seeded synthetic two-asset gross returns via Box-Muller.
fn synthetic_history(months: usize, sigma: f64, seed: u64) -> ReturnHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gross = Vec::with_capacity(months);
    for _ in 0..months {
        let mut row = Vec::with_capacity(2);
        for _ in 0..2 {
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            row.push((sigma * z).exp());
        }
        gross.push(row);
    }
    ReturnHistory::from_gross(gross).unwrap()
}

#[test]
fn criterion_11_end_to_end_synthetic_run() {
    let start = Instant::now();
    // Bootstrap 50 paths of recentered synthetic returns, killed at the exit
    // of K = {0.1 <= p_1 <= 0.3}.
    let history = recenter_returns(&synthetic_history(120, 0.057, 1111));
    let mu0 = SimplexPoint::new(vec![0.1819, 0.8181]).unwrap();
    let region = RegionK::two_asset(0.1, 0.3).unwrap();
    let killed = bootstrap_paths(&history, &mu0, &region, 50, 2000, 1111).unwrap();
    let paths: Vec<MarketPath> = killed.into_iter().map(|k| k.path).collect();
    let sample = collect_pairs(
        &paths,
        3,
        Some(&region),
        SampleProvenance {
            seed: Some(1111),
            path_count: Some(50),
            description: "criterion 11 bootstrap".into(),
        },
    )
    .unwrap();
    assert!(
        sample.len() >= 500,
        "expected thousands of pairs, got {}",
        sample.len()
    );

    let grid = Grid::uniform(0.100, 0.300, 0.001).unwrap();
    assert_eq!(grid.m(), 201);
    let constraints = ConstraintSet {
        ratio_bounds: Some((0.5, 2.0)),
        box_bounds: None,
        monotone: true,
        tracking: None,
    };
    let config = SolverConfig {
        seed: 1111,
        ..SolverConfig::default()
    };
    let problem = build_problem(&sample, grid.clone(), constraints.clone(), config).unwrap();
    let sol = solve(&problem).unwrap();
    assert!(sol.converged, "solver did not converge");
    assert!(sol.residuals.max() <= 1e-8, "residuals {:?}", sol.residuals);
    assert!(
        sol.vars.z.windows(2).all(|w| w[1] >= w[0] - 1e-8),
        "z not nondecreasing"
    );
    let slopes = sol.vars.slopes(&grid);
    assert!(
        slopes.windows(2).all(|w| w[1] <= w[0] + 1e-8),
        "phi not concave"
    );
    // The solution must not lose to any feasible canonical start.
    for (label, start_vars) in [
        ("market", market_start(&grid)),
        ("equal", equal_weight_start(&grid)),
    ] {
        let res = feasibility_residuals(&start_vars, &grid, &constraints).unwrap();
        if res.max() <= 1e-8 {
            let (obj, _) = objective_and_gradient(&problem, &start_vars).unwrap();
            assert!(
                sol.objective >= obj - 1e-9,
                "lost to {label} start: {} vs {obj}",
                sol.objective
            );
        }
    }

    // Polyhedral extension reproduces z exactly at grid points.
    let pair = polyhedral_extension(&sol, &grid).unwrap();
    for (i, &x) in grid.xs().iter().enumerate() {
        let p = SimplexPoint::two_asset(x).unwrap();
        assert_eq!(pair.portfolio.weights(&p).unwrap()[0], sol.vars.z[i]);
    }

    // Backtest on a held-out synthetic path inside K: decomposition identity.
    let held_out = recenter_returns(&synthetic_history(60, 0.05, 2222));
    let test_path = bootstrap_paths(&held_out, &mu0, &region, 1, 60, 2222)
        .unwrap()
        .remove(0)
        .path;
    assert!(test_path.len() >= 2, "held-out path too short");
    let series = decompose_lenient(&pair, &test_path).unwrap();
    let defect = series.identity_defect();
    assert!(defect <= 1e-10, "backtest identity defect {defect:e}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "took {elapsed:.2} s (limit 5 min)");
    println!(
        "[acceptance 11] PASS: N = {} pairs, m = 201, objective {:.6e} (start {}), residuals {:.1e}, extension exact at grid, backtest identity defect {defect:.1e}, {elapsed:.1} s",
        sample.len(),
        sol.objective,
        sol.start_label,
        sol.residuals.max()
    );
}

#[test]
fn criterion_12_consistency_trend() {
    let start = Instant::now();
    // Seeded ergodic random-walk sampler on the 3-decimal grid inside
    // [0.102, 0.298].
    let sampler = |p: &SimplexPoint, rng: &mut ChaCha8Rng| {
        let step = (rng.gen::<f64>() - 0.5) * 0.03;
        let x = ((p.coords()[0] + step).clamp(0.102, 0.298) * 1000.0).round() / 1000.0;
        vec![x, 1.0 - x]
    };
    let mu0 = SimplexPoint::two_asset(0.2).unwrap();
    let sample = pairs_from_markov(sampler, &mu0, 100, 8000, 1212).unwrap();
    let grid = Grid::uniform(0.100, 0.300, 0.001).unwrap();
    let constraints = ConstraintSet {
        ratio_bounds: Some((0.5, 2.0)),
        box_bounds: None,
        monotone: true,
        tracking: None,
    };
    let report = consistency_experiment(
        &sample,
        &[500, 2000, 8000],
        &grid,
        &constraints,
        &SolverConfig {
            seed: 1212,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    let d1 = report.distances[0];
    let d2 = report.distances[1];
    // Loose trend check, documented heuristic: not theorem-exact at finite N.
    assert!(
        d2 <= 2.0 * d1,
        "distance trend violated: {d1:.4e} then {d2:.4e}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "[acceptance 12] PASS: solution distances N500->2000 = {d1:.4e}, N2000->8000 = {d2:.4e} (trend d2 <= 2 d1), {elapsed:.1} s"
    );
}
