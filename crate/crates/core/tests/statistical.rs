//! Seeded Monte-Carlo checks: fixed seeds, so these are deterministic, but the
//! thresholds are statistical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pego_core::benchmarks::{GpSampleOptions, GpSampledObjective, Synthetic};
use pego_core::ego::{run_practical_ego, KernelSetting, RunConfig};
use pego_core::gp::{default_length_scale_grid, select_length_scale, LazyGpOracle};
use pego_core::kernels::{KernelParams, Smoothness};

#[test]
fn lazy_draws_have_unit_variance_and_decorrelate_far_apart() {
    let params = KernelParams::squared_exponential(0.05).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for seed in 0..500 {
        let mut oracle = LazyGpOracle::new(params, 1e-12, seed);
        a.push(oracle.sample(&[0.1, 0.1]));
        b.push(oracle.sample(&[0.9, 0.8]));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let var_a = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / 499.0;
    let var_b = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / 499.0;
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / 499.0;
    let rho = cov / (var_a * var_b).sqrt();
    assert!((0.8..=1.2).contains(&var_a), "variance {var_a}");
    assert!(rho.abs() < 0.15, "correlation {rho}");
}

#[test]
fn close_draws_are_strongly_correlated() {
    let params = KernelParams::squared_exponential(0.5).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for seed in 0..500 {
        let mut oracle = LazyGpOracle::new(params, 1e-12, seed);
        a.push(oracle.sample(&[0.5]));
        b.push(oracle.sample(&[0.55]));
    }
    // corr = k(0.05) = exp(-0.005)
    let num: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let den = (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()).sqrt();
    assert!(num / den > 0.98);
}

#[test]
fn likelihood_selection_recovers_the_sampling_length_scale() {
    let grid = default_length_scale_grid();
    let truth_idx = 10;
    let truth = grid[truth_idx];
    let template = KernelParams::matern(Smoothness::FiveHalves, 1.0).unwrap();
    let sampler = template.with_length_scale(truth).unwrap();
    let mut hits = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let mut oracle = LazyGpOracle::new(sampler, 1e-12, seed);
        let ys: Vec<f64> = pts.iter().map(|x| oracle.sample(x)).collect();
        let chosen = select_length_scale(&pts, &ys, &template, 1e-6, &grid).unwrap();
        let idx = grid.iter().position(|&l| l == chosen.length_scale()).unwrap();
        if idx.abs_diff(truth_idx) <= 1 {
            hits += 1;
        }
    }
    assert!(hits >= 40, "{hits}/50 within one grid step");
}

#[test]
fn ego_finds_the_branin_minimum() {
    let bench = Synthetic::Branin;
    let template = KernelParams::matern(Smoothness::FiveHalves, 1.0).unwrap();
    let mut good = 0;
    for seed in 0..10 {
        let mut cfg = RunConfig::new(
            bench.domain(),
            KernelSetting::Select {
                template,
                grid: default_length_scale_grid(),
            },
        );
        cfg.n_init = 5;
        cfg.n_iter = 50;
        cfg.nugget = 1e-4;
        cfg.seed = seed;
        cfg.standardize_outputs = true;
        cfg.f_star = pego_core::ego::FStar::Known(bench.f_star());
        let mut obj = bench;
        let trace = run_practical_ego(&mut obj, &cfg).unwrap();
        if trace.min_observed() - bench.f_star() <= 0.05 {
            good += 1;
        }
    }
    assert!(good >= 8, "{good}/10 runs within 0.05");
}

#[test]
fn estimated_gp_minimum_is_not_beaten_by_much() {
    let params = KernelParams::squared_exponential(0.2).unwrap();
    for seed in 0..20 {
        let mut obj = GpSampledObjective::new(params, 2, seed, GpSampleOptions::default()).unwrap();
        let estimate = obj.f_star();
        let mut cfg = RunConfig::new(pego_core::domain::Domain::unit_cube(2).unwrap(), KernelSetting::Fixed(params));
        cfg.n_init = 20;
        cfg.n_iter = 40;
        cfg.seed = seed;
        cfg.acquisition_budget = Some(1024);
        cfg.f_star = pego_core::ego::FStar::Known(estimate);
        let trace = run_practical_ego(&mut obj, &cfg).unwrap();
        assert!(estimate <= trace.min_observed() + 0.02, "seed {seed}: {estimate} vs {}", trace.min_observed());
    }
}
