//! Noise-free Gaussian-process surrogate with a nugget.
//!
//! Observations are treated as exact function values; the nugget `ε` enters
//! only through the regularized system `(K + εI)`. Consequently the posterior
//! variance never falls below `ε/(n + ε)`.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::kernels::{cross_vector_into, kernel_matrix, KernelError, KernelParams};
use crate::linalg::PackedLower;
use crate::special::LN_2PI;

/// Nugget used when none is configured.
pub const DEFAULT_NUGGET: f64 = 1e-6;

/// Jitter used by [`LazyGpOracle`] for its conditional draws.
pub const DEFAULT_SAMPLE_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("nugget must be positive and finite, got {0}")]
    InvalidNugget(f64),
    #[error("{points} training points but {values} observations")]
    LengthMismatch { points: usize, values: usize },
    #[error("non-finite training data at index {0}")]
    NonFinite(usize),
    #[error("covariance matrix is ill-conditioned even with nugget {nugget:e}: pivot {pivot} is {value:e}")]
    IllConditioned { pivot: usize, value: f64, nugget: f64 },
    #[error("length-scale grid is empty")]
    EmptyGrid,
    #[error("no length scale in the grid produced a usable fit")]
    NoUsableLengthScale,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorStats {
    pub mean: f64,
    pub std: f64,
}

/// Fitted surrogate; immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    nugget: f64,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    chol: PackedLower,
    alpha: Vec<f64>,
}

fn validate_nugget(nugget: f64) -> Result<(), GpError> {
    if nugget > 0.0 && nugget.is_finite() {
        Ok(())
    } else {
        Err(GpError::InvalidNugget(nugget))
    }
}

fn regularized_factor(
    params: &KernelParams,
    points: &[Vec<f64>],
    nugget: f64,
) -> Result<(Vec<f64>, PackedLower), GpError> {
    let n = points.len();
    let mut k = kernel_matrix(params, points)?;
    for i in 0..n {
        k[i * n + i] += nugget;
    }
    let chol = PackedLower::factor(&k, n).map_err(|e| GpError::IllConditioned {
        pivot: e.pivot,
        value: e.value,
        nugget,
    })?;
    Ok((k, chol))
}

/// `A⁻¹b` with one step of iterative refinement. With a small nugget the
/// plain triangular solves lose enough digits to shift the log-likelihood.
fn refined_solve(a: &[f64], chol: &PackedLower, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = chol.solve(b);
    let residual: Vec<f64> = (0..n)
        .map(|i| b[i] - a[i * n..(i + 1) * n].iter().zip(&x).map(|(a, x)| a * x).sum::<f64>())
        .collect();
    for (x, dx) in x.iter_mut().zip(chol.solve(&residual)) {
        *x += dx;
    }
    x
}

impl GpModel {
    /// Condition on `(points, values)` through the Cholesky factor of `K + εI`.
    pub fn fit(
        points: &[Vec<f64>],
        values: &[f64],
        params: KernelParams,
        nugget: f64,
    ) -> Result<Self, GpError> {
        validate_nugget(nugget)?;
        if points.len() != values.len() {
            return Err(GpError::LengthMismatch {
                points: points.len(),
                values: values.len(),
            });
        }
        for (i, (p, v)) in points.iter().zip(values).enumerate() {
            if !v.is_finite() || p.iter().any(|c| !c.is_finite()) {
                return Err(GpError::NonFinite(i));
            }
        }
        let (k, chol) = regularized_factor(&params, points, nugget)?;
        let alpha = refined_solve(&k, &chol, values);
        Ok(Self {
            params,
            nugget,
            points: points.to_vec(),
            values: values.to_vec(),
            chol,
            alpha,
        })
    }

    /// Model with no observations: posterior equals the prior everywhere.
    pub fn prior(params: KernelParams, nugget: f64) -> Result<Self, GpError> {
        Self::fit(&[], &[], params, nugget)
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(K + εI)⁻¹ y`
    pub fn weights(&self) -> &[f64] {
        &self.alpha
    }

    /// Dense row-major copy of `L` with `L Lᵀ = K + εI`.
    pub fn cholesky_factor(&self) -> Vec<f64> {
        self.chol.to_dense()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorStats, GpError> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(KernelError::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                }
                .into());
            }
        }
        let mut scratch = PosteriorScratch::new(self.len());
        Ok(self.posterior_with(x, &mut scratch))
    }

    /// Allocation-free posterior for hot loops; `x` must have the model's dimension.
    pub(crate) fn posterior_with(&self, x: &[f64], scratch: &mut PosteriorScratch) -> PosteriorStats {
        let n = self.len();
        if n == 0 {
            return PosteriorStats { mean: 0.0, std: 1.0 };
        }
        scratch.resize(n);
        cross_vector_into(&self.params, &self.points, x, &mut scratch.k);
        let mean = scratch.k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        self.chol.forward_solve_into(&scratch.k, &mut scratch.w);
        let explained: f64 = scratch.w.iter().map(|v| v * v).sum();
        // round-off can push the variance slightly negative
        let var = (1.0 - explained).max(0.0);
        PosteriorStats {
            mean,
            std: var.sqrt(),
        }
    }

    /// `-½ yᵀα - Σ log L_ii - (n/2) log 2π`
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len() as f64;
        let fit: f64 = self.values.iter().zip(&self.alpha).map(|(y, a)| y * a).sum();
        -0.5 * fit - self.chol.half_log_det() - 0.5 * n * LN_2PI
    }
}

#[derive(Debug, Default)]
pub(crate) struct PosteriorScratch {
    k: Vec<f64>,
    w: Vec<f64>,
}

impl PosteriorScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    fn resize(&mut self, n: usize) {
        if self.k.len() != n {
            self.k.resize(n, 0.0);
            self.w.resize(n, 0.0);
        }
    }
}

/// `½ log det(I + K/ε)` for the sample set `points`, in nats.
pub fn realized_info_gain(
    params: &KernelParams,
    nugget: f64,
    points: &[Vec<f64>],
) -> Result<f64, GpError> {
    validate_nugget(nugget)?;
    let n = points.len();
    let mut k = kernel_matrix(params, points)?;
    for v in k.iter_mut() {
        *v /= nugget;
    }
    for i in 0..n {
        k[i * n + i] += 1.0;
    }
    let chol = PackedLower::factor(&k, n).map_err(|e| GpError::IllConditioned {
        pivot: e.pivot,
        value: e.value,
        nugget,
    })?;
    Ok(chol.half_log_det())
}

/// 25 log-spaced length scales on [1e-2, 1e1], in unit-cube coordinates.
pub fn default_length_scale_grid() -> Vec<f64> {
    log_spaced(1e-2, 1e1, 25)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Pick the grid length scale with the largest log marginal likelihood;
/// ties go to the smallest length scale. Grid points whose fit fails are skipped.
pub fn select_length_scale(
    points: &[Vec<f64>],
    values: &[f64],
    template: &KernelParams,
    nugget: f64,
    grid: &[f64],
) -> Result<KernelParams, GpError> {
    if grid.is_empty() {
        return Err(GpError::EmptyGrid);
    }
    let mut best: Option<(f64, KernelParams)> = None;
    for &l in grid {
        let params = template.with_length_scale(l)?;
        let model = match GpModel::fit(points, values, params, nugget) {
            Ok(m) => m,
            Err(GpError::IllConditioned { .. }) => continue,
            Err(e) => return Err(e),
        };
        let lml = model.log_marginal_likelihood();
        if !lml.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, p)) => lml > *b || (lml == *b && l < p.length_scale()),
        };
        if better {
            best = Some((lml, params));
        }
    }
    best.map(|(_, p)| p).ok_or(GpError::NoUsableLengthScale)
}

/// A GP sample path realized on demand.
///
/// Each new query is drawn from the GP conditioned on every earlier draw, so
/// the collection of cached values is always a joint sample from
/// `N(0, K + jitter·I)`. Internally the sample is kept as `f = L z` with `L`
/// the growing Cholesky factor and `z` i.i.d. standard normals.
#[derive(Debug, Clone)]
pub struct LazyGpOracle {
    params: KernelParams,
    jitter: f64,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    innovations: Vec<f64>,
    chol: PackedLower,
    index: HashMap<Vec<u64>, usize>,
    rng: ChaCha8Rng,
    weights: Option<Vec<f64>>,
}

impl LazyGpOracle {
    pub fn new(params: KernelParams, jitter: f64, seed: u64) -> Self {
        assert!(jitter > 0.0, "sampling jitter must be positive");
        Self {
            params,
            jitter,
            points: Vec::new(),
            values: Vec::new(),
            innovations: Vec::new(),
            chol: PackedLower::empty(),
            index: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            weights: None,
        }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn key(x: &[f64]) -> Vec<u64> {
        x.iter().map(|v| v.to_bits()).collect()
    }

    /// f(x): the cached value if `x` was drawn before, otherwise a fresh
    /// conditional draw. Panics if `x` has a different dimension than earlier
    /// queries.
    pub fn sample(&mut self, x: &[f64]) -> f64 {
        if let Some(&i) = self.index.get(&Self::key(x)) {
            return self.values[i];
        }
        if let Some(first) = self.points.first() {
            assert_eq!(first.len(), x.len(), "query dimension changed");
        }
        let n = self.len();
        let mut k = vec![0.0; n];
        cross_vector_into(&self.params, &self.points, x, &mut k);
        let mut row = self.chol.forward_solve(&k);
        let explained: f64 = row.iter().map(|v| v * v).sum();
        let pivot = (1.0 + self.jitter - explained).max(self.jitter).sqrt();
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let value = row.iter().zip(&self.innovations).map(|(a, b)| a * b).sum::<f64>() + pivot * z;
        row.push(pivot);
        self.chol.push_row(&row);
        self.innovations.push(z);
        self.index.insert(Self::key(x), n);
        self.points.push(x.to_vec());
        self.values.push(value);
        self.weights = None;
        value
    }

    /// Conditional mean at `x` given every cached draw, without drawing.
    pub fn conditional_mean(&mut self, x: &[f64]) -> f64 {
        if let Some(&i) = self.index.get(&Self::key(x)) {
            return self.values[i];
        }
        if self.weights.is_none() {
            let mut w = self.innovations.clone();
            self.chol.backward_solve_in_place(&mut w);
            self.weights = Some(w);
        }
        let w = self.weights.as_ref().expect("weights computed above");
        self.points
            .iter()
            .zip(w)
            .map(|(p, a)| self.params.eval_unchecked(p, x) * a)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Smoothness;

    fn se(l: f64) -> KernelParams {
        KernelParams::squared_exponential(l).unwrap()
    }

    #[test]
    fn prior_model_returns_prior() {
        let m = GpModel::prior(se(0.3), 1e-6).unwrap();
        let s = m.posterior(&[0.4, 0.1]).unwrap();
        assert_eq!(s, PosteriorStats { mean: 0.0, std: 1.0 });
    }

    #[test]
    fn single_point_mean() {
        let eps = 0.01;
        let m = GpModel::fit(&[vec![0.5]], &[2.0], se(0.2), eps).unwrap();
        let s = m.posterior(&[0.5]).unwrap();
        assert!((s.mean - 2.0 / (1.0 + eps)).abs() < 1e-14);
    }

    #[test]
    fn stacked_duplicates_hit_the_floor() {
        for &eps in &[1e-8, 1e-4, 0.3] {
            for t in 1..12 {
                let pts = vec![vec![0.2, 0.7]; t];
                let ys = vec![1.0; t];
                let m = GpModel::fit(&pts, &ys, se(0.5), eps).unwrap();
                let s = m.posterior(&[0.2, 0.7]).unwrap();
                let floor = (eps / (t as f64 + eps)).sqrt();
                assert!((s.std - floor).abs() < 1e-10, "eps={eps} t={t}");
            }
        }
    }

    #[test]
    fn far_queries_recover_prior() {
        let pts = vec![vec![0.0, 0.0], vec![0.1, 0.05]];
        let m = GpModel::fit(&pts, &[1.0, -2.0], se(0.05), 1e-6).unwrap();
        let s = m.posterior(&[5.0, 5.0]).unwrap();
        assert!(s.mean.abs() < 1e-6);
        assert!((s.std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        let p = se(1.0);
        assert_eq!(GpModel::fit(&[], &[], p, 0.0).unwrap_err(), GpError::InvalidNugget(0.0));
        assert!(matches!(
            GpModel::fit(&[vec![0.0]], &[], p, 1e-6),
            Err(GpError::LengthMismatch { .. })
        ));
        assert_eq!(
            GpModel::fit(&[vec![0.0], vec![f64::NAN]], &[0.0, 1.0], p, 1e-6).unwrap_err(),
            GpError::NonFinite(1)
        );
        let m = GpModel::fit(&[vec![0.0, 1.0]], &[0.0], p, 1e-6).unwrap();
        assert!(m.posterior(&[0.0]).is_err());
        assert_eq!(
            select_length_scale(&[vec![0.0]], &[0.0], &p, 1e-6, &[]).unwrap_err(),
            GpError::EmptyGrid
        );
    }

    #[test]
    fn breakdown_reports_pivot() {
        // The nugget is below round-off for a block of identical points.
        let pts = vec![vec![0.3]; 4];
        let err = GpModel::fit(&pts, &[0.0; 4], se(1.0), 1e-300).unwrap_err();
        match err {
            GpError::IllConditioned { pivot, .. } => assert!(pivot >= 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lml_single_point_closed_form() {
        let eps = 0.05;
        let m = GpModel::fit(&[vec![0.1]], &[0.0], se(1.0), eps).unwrap();
        let expected = -0.5 * (1.0 + eps).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_marginal_likelihood() - expected).abs() < 1e-14);
    }

    #[test]
    fn lml_is_permutation_invariant() {
        let pts = vec![vec![0.1, 0.2], vec![0.7, 0.3], vec![0.4, 0.9], vec![0.5, 0.5]];
        let ys = vec![0.3, -1.0, 2.0, 0.1];
        let p = KernelParams::matern(Smoothness::FiveHalves, 0.4).unwrap();
        let a = GpModel::fit(&pts, &ys, p, 1e-6).unwrap().log_marginal_likelihood();
        let order = [2, 0, 3, 1];
        let pts2: Vec<_> = order.iter().map(|&i| pts[i].clone()).collect();
        let ys2: Vec<_> = order.iter().map(|&i| ys[i]).collect();
        let b = GpModel::fit(&pts2, &ys2, p, 1e-6).unwrap().log_marginal_likelihood();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn info_gain_single_point_and_monotonicity() {
        let p = se(0.3);
        let eps = 1e-3;
        let g1 = realized_info_gain(&p, eps, &[vec![0.5, 0.5]]).unwrap();
        assert!((g1 - 0.5 * (1.0 + 1.0 / eps).ln()).abs() < 1e-12);
        let mut pts = vec![vec![0.5, 0.5]];
        let mut prev = g1;
        for i in 0..10 {
            pts.push(vec![0.1 * i as f64, 0.5]);
            let g = realized_info_gain(&p, eps, &pts).unwrap();
            assert!(g >= prev - 1e-12);
            prev = g;
        }
        let mut prev = f64::INFINITY;
        for e in [1e-6, 1e-3, 1.0, 1e3, 1e6] {
            let g = realized_info_gain(&p, e, &pts).unwrap();
            assert!(g < prev && g >= 0.0);
            prev = g;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn selection_grid_rules() {
        let pts = vec![vec![0.1], vec![0.5], vec![0.8]];
        let p = se(1.0);
        let chosen = select_length_scale(&pts, &[1.0, 0.0, -1.0], &p, 1e-6, &[0.37]).unwrap();
        assert_eq!(chosen.length_scale(), 0.37);
        let grid = default_length_scale_grid();
        assert_eq!(grid.len(), 25);
        assert!((grid[0] - 1e-2).abs() < 1e-15 && (grid[24] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_caches_and_is_deterministic() {
        let p = se(0.2);
        let mut a = LazyGpOracle::new(p, DEFAULT_SAMPLE_JITTER, 9);
        let mut b = LazyGpOracle::new(p, DEFAULT_SAMPLE_JITTER, 9);
        let xs = [vec![0.1, 0.2], vec![0.15, 0.2], vec![0.9, 0.9]];
        let va: Vec<f64> = xs.iter().map(|x| a.sample(x)).collect();
        let vb: Vec<f64> = xs.iter().map(|x| b.sample(x)).collect();
        assert_eq!(va, vb);
        assert_eq!(a.sample(&xs[1]), va[1]);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn oracle_mean_interpolates_draws() {
        let p = se(0.3);
        let mut o = LazyGpOracle::new(p, DEFAULT_SAMPLE_JITTER, 4);
        for i in 0..30 {
            let x = vec![(i as f64 * 0.618).fract(), (i as f64 * 0.414).fract()];
            o.sample(&x);
        }
        let probe = vec![0.333, 0.777];
        let m = o.conditional_mean(&probe);
        let drawn = o.sample(&probe);
        // the conditional spread at a well-covered point is tiny
        assert!((m - drawn).abs() < 0.2);
    }
}
