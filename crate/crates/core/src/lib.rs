//! Noise-free Bayesian optimization with a nugget-regularized Gaussian process
//! and expected improvement, plus executable regret bounds and a benchmark
//! harness.

pub mod acquisition;
pub mod benchmarks;
pub mod bounds;
pub mod domain;
pub mod ego;
pub mod ei_grid;
pub mod experiment;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod plot;
pub mod search;
pub mod special;
