//! Axis-aligned boxes and the unit-cube normalization used by the optimizer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("domain needs at least one dimension")]
    Empty,
    #[error("invalid bounds in dimension {dim}: [{lo}, {hi}]")]
    InvalidBounds { dim: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, DomainError> {
        if bounds.is_empty() {
            return Err(DomainError::Empty);
        }
        for (dim, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(DomainError::InvalidBounds { dim, lo, hi });
            }
        }
        Ok(Self { bounds })
    }

    pub fn unit_cube(d: usize) -> Result<Self, DomainError> {
        Self::new(vec![(0.0, 1.0); d])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Map unit-cube coordinates back; results are clamped to the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| (lo + v * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// First `n` points of the Halton sequence in `[0,1)^d`, skipping index 0.
pub fn halton(n: usize, d: usize) -> Vec<Vec<f64>> {
    assert!(d <= PRIMES.len(), "Halton points are limited to {} dimensions", PRIMES.len());
    (1..=n as u64)
        .map(|i| PRIMES[..d].iter().map(|&b| radical_inverse(i, b)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_boxes() {
        assert_eq!(Domain::new(vec![]), Err(DomainError::Empty));
        assert!(Domain::new(vec![(0.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(Domain::new(vec![(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn unit_round_trip() {
        let b = Domain::new(vec![(-5.0, 10.0), (0.0, 15.0)]).unwrap();
        let x = [3.0, 7.5];
        let u = b.to_unit(&x);
        assert_eq!(u, vec![8.0 / 15.0, 0.5]);
        let back = b.from_unit(&u);
        assert!((back[0] - 3.0).abs() < 1e-14 && back[1] == 7.5);
        assert_eq!(b.from_unit(&[1.0 + 1e-15, -1e-16]), vec![10.0, 0.0]);
    }

    #[test]
    fn halton_prefix() {
        let h = halton(4, 2);
        assert_eq!(h[0], vec![0.5, 1.0 / 3.0]);
        assert_eq!(h[1], vec![0.25, 2.0 / 3.0]);
        assert_eq!(h[2], vec![0.75, 1.0 / 9.0]);
        assert!(h.iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }
}
