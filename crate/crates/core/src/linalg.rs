//! Packed lower-triangular Cholesky factors.
//!
//! Row `i` of the factor is stored contiguously at `i(i+1)/2 .. (i+1)(i+2)/2`,
//! which keeps forward substitution cache friendly and lets a factor grow one
//! row at a time.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("non-positive pivot {value:e} at index {pivot}")]
pub struct CholeskyError {
    pub pivot: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedLower {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Factor a dense symmetric row-major `n × n` matrix.
    pub fn factor(a: &[f64], n: usize) -> Result<Self, CholeskyError> {
        assert_eq!(a.len(), n * n, "matrix storage does not match its order");
        let mut data = vec![0.0; row_start(n)];
        for i in 0..n {
            let ri = row_start(i);
            for j in 0..=i {
                let rj = row_start(j);
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(CholeskyError { pivot: i, value: s });
                    }
                    data[ri + i] = s.sqrt();
                } else {
                    data[ri + j] = s / data[rj + j];
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i && i < self.n);
        self.data[row_start(i) + j]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i + 1)]
    }

    /// Solve `L w = b` into `out`.
    pub fn forward_solve_into(&self, b: &[f64], out: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut s = b[i];
            for (l, w) in row[..i].iter().zip(out[..i].iter()) {
                s -= l * w;
            }
            out[i] = s / row[i];
        }
    }

    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.forward_solve_into(b, &mut out);
        out
    }

    /// Solve `Lᵀ x = b` in place.
    pub fn backward_solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xk, l) in x[..i].iter_mut().zip(row[..i].iter()) {
                *xk -= l * xi;
            }
        }
    }

    /// Solve `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward_solve(b);
        self.backward_solve_in_place(&mut x);
        x
    }

    /// Σ log L_ii, i.e. half the log-determinant of `L Lᵀ`.
    pub fn half_log_det(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i).ln()).sum()
    }

    /// Append one row `[l_0, ..., l_{n-1}, l_nn]`.
    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n + 1, "appended row has the wrong length");
        self.data.extend_from_slice(row);
        self.n += 1;
    }

    /// Dense row-major copy of the factor.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            out[i * n..i * n + i + 1].copy_from_slice(self.row(i));
        }
        out
    }
}
