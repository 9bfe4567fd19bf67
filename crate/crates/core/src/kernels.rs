//! Isotropic stationary covariance functions with unit variance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("length scale must be positive and finite, got {0}")]
    InvalidLengthScale(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported Matérn smoothness {0}; supported values are 0.5, 1.5 and 2.5")]
    UnsupportedSmoothness(f64),
}

/// Half-integer Matérn smoothness values with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Smoothness {
    #[serde(rename = "0.5")]
    Half,
    #[serde(rename = "1.5")]
    ThreeHalves,
    #[serde(rename = "2.5")]
    FiveHalves,
}

impl Smoothness {
    pub fn nu(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    pub fn from_nu(nu: f64) -> Result<Self, KernelError> {
        match nu {
            v if v == 0.5 => Ok(Smoothness::Half),
            v if v == 1.5 => Ok(Smoothness::ThreeHalves),
            v if v == 2.5 => Ok(Smoothness::FiveHalves),
            other => Err(KernelError::UnsupportedSmoothness(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    SquaredExponential,
    Matern(Smoothness),
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::SquaredExponential => write!(f, "SE"),
            KernelFamily::Matern(s) => write!(f, "Matern{}", s.nu()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    family: KernelFamily,
    length_scale: f64,
}

impl KernelParams {
    pub fn new(family: KernelFamily, length_scale: f64) -> Result<Self, KernelError> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(KernelError::InvalidLengthScale(length_scale));
        }
        Ok(Self {
            family,
            length_scale,
        })
    }

    pub fn squared_exponential(length_scale: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::SquaredExponential, length_scale)
    }

    pub fn matern(smoothness: Smoothness, length_scale: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Matern(smoothness), length_scale)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn with_length_scale(&self, length_scale: f64) -> Result<Self, KernelError> {
        Self::new(self.family, length_scale)
    }

    /// Covariance as a function of the Euclidean distance `r`.
    #[inline]
    pub fn of_distance(&self, r: f64) -> f64 {
        let s = r / self.length_scale;
        match self.family {
            KernelFamily::SquaredExponential => (-0.5 * s * s).exp(),
            KernelFamily::Matern(Smoothness::Half) => (-s).exp(),
            KernelFamily::Matern(Smoothness::ThreeHalves) => {
                let u = 3f64.sqrt() * s;
                (1.0 + u) * (-u).exp()
            }
            KernelFamily::Matern(Smoothness::FiveHalves) => {
                let u = 5f64.sqrt() * s;
                (1.0 + u + u * u / 3.0) * (-u).exp()
            }
        }
    }

    /// k(x, x2)
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64, KernelError> {
        if x.len() != x2.len() {
            return Err(KernelError::DimensionMismatch {
                expected: x.len(),
                found: x2.len(),
            });
        }
        Ok(self.eval_unchecked(x, x2))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        if let KernelFamily::SquaredExponential = self.family {
            let d2 = squared_distance(x, x2);
            return (-0.5 * d2 / (self.length_scale * self.length_scale)).exp();
        }
        self.of_distance(squared_distance(x, x2).sqrt())
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn check_dims(points: &[Vec<f64>], dim: usize) -> Result<(), KernelError> {
    for p in points {
        if p.len() != dim {
            return Err(KernelError::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
    }
    Ok(())
}

/// Dense row-major kernel matrix of `points`.
pub fn kernel_matrix(params: &KernelParams, points: &[Vec<f64>]) -> Result<Vec<f64>, KernelError> {
    let n = points.len();
    if let Some(first) = points.first() {
        check_dims(points, first.len())?;
    }
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = params.eval_unchecked(&points[i], &points[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(k)
}

/// `[k(x_1, x), ..., k(x_n, x)]`
pub fn cross_vector(
    params: &KernelParams,
    points: &[Vec<f64>],
    x: &[f64],
) -> Result<Vec<f64>, KernelError> {
    check_dims(points, x.len())?;
    Ok(points.iter().map(|p| params.eval_unchecked(p, x)).collect())
}

#[inline]
pub(crate) fn cross_vector_into(params: &KernelParams, points: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    for (o, p) in out.iter_mut().zip(points) {
        *o = params.eval_unchecked(p, x);
    }
}
