//! Independent reference computations shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use pego_core::kernels::{KernelFamily, KernelParams, Smoothness};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Dense `K` with the kernel evaluated entry by entry.
pub fn dense_kernel(params: &KernelParams, pts: &[Vec<f64>]) -> DMatrix<f64> {
    let n = pts.len();
    DMatrix::from_fn(n, n, |i, j| params.eval(&pts[i], &pts[j]).unwrap())
}

pub struct DenseGp {
    pub inv: DMatrix<f64>,
    pub y: DVector<f64>,
    pub log_det: f64,
    pub params: KernelParams,
    pub pts: Vec<Vec<f64>>,
}

impl DenseGp {
    /// Explicit inverse and log-determinant of `K + εI`, via LU.
    pub fn new(params: KernelParams, pts: &[Vec<f64>], ys: &[f64], eps: f64) -> Self {
        let n = pts.len();
        let a = dense_kernel(&params, pts) + DMatrix::identity(n, n) * eps;
        let lu = a.clone().lu();
        let log_det = lu.determinant().ln();
        let inv = lu.try_inverse().expect("K + εI is invertible");
        Self {
            inv,
            y: DVector::from_column_slice(ys),
            log_det,
            params,
            pts: pts.to_vec(),
        }
    }

    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.pts.len(), self.pts.iter().map(|p| self.params.eval(p, x).unwrap()));
        let mean = (k.transpose() * &self.inv * &self.y)[(0, 0)];
        let var = 1.0 - (k.transpose() * &self.inv * &k)[(0, 0)];
        (mean, var)
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.pts.len() as f64;
        -0.5 * (self.y.transpose() * &self.inv * &self.y)[(0, 0)] - 0.5 * self.log_det - 0.5 * n * LN_2PI
    }
}

/// `½ log det(I + K/ε)` from the eigenvalues of `K`.
pub fn dense_info_gain(params: &KernelParams, pts: &[Vec<f64>], eps: f64) -> f64 {
    let eig = dense_kernel(params, pts).symmetric_eigen().eigenvalues;
    eig.iter().map(|l| 0.5 * (1.0 + l / eps).ln()).sum()
}

pub fn random_params<R: Rng>(rng: &mut R) -> KernelParams {
    let family = match rng.gen_range(0..4) {
        0 => KernelFamily::SquaredExponential,
        1 => KernelFamily::Matern(Smoothness::Half),
        2 => KernelFamily::Matern(Smoothness::ThreeHalves),
        _ => KernelFamily::Matern(Smoothness::FiveHalves),
    };
    KernelParams::new(family, 10f64.powf(rng.gen_range(-1.0..0.5))).unwrap()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// `K_ν(x)` from `∫₀^∞ exp(−x cosh t) cosh(νt) dt` by the trapezoid rule, which
/// converges geometrically for this analytic, doubly decaying integrand.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    let upper = (750.0 / x).max(1.0).acosh() + 1.0;
    let h = 1e-3;
    let n = (upper / h).ceil() as usize;
    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    let mut sum = 0.5 * (f(0.0) + f(n as f64 * h));
    for i in 1..n {
        sum += f(i as f64 * h);
    }
    sum * h
}

/// Γ(ν) for half-integer ν.
pub fn gamma_half_integer(nu: f64) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    let mut v = 0.5;
    while v < nu - 1e-9 {
        g *= v;
        v += 1.0;
    }
    g
}

/// The general Matérn covariance `2^{1−ν}/Γ(ν) · u^ν K_ν(u)`, `u = √(2ν) r / l`.
pub fn matern_general(nu: f64, l: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let u = (2.0 * nu).sqrt() * r / l;
    2f64.powf(1.0 - nu) / gamma_half_integer(nu) * u.powf(nu) * bessel_k(nu, u)
}
