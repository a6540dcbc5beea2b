//! Tiny dense linear systems used by the conditional-expectation recursions
//! and the 4-state stationary solve.

use crate::error::{Error, Result};

/// `A x = b` with a 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear2 {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl Linear2 {
    /// Build from a fixed-point recursion `x = c + M x`, i.e. `(I - M) x = c`.
    pub fn from_fixed_point(c: [f64; 2], m: [[f64; 2]; 2]) -> Self {
        Linear2 {
            a: [[1.0 - m[0][0], -m[0][1]], [-m[1][0], 1.0 - m[1][1]]],
            b: c,
        }
    }

    pub fn solve(&self) -> Result<[f64; 2]> {
        let [[a, b], [c, d]] = self.a;
        let det = a * d - b * c;
        if !det.is_finite() || det.abs() <= 1e-300 {
            return Err(Error::Numerical(format!("singular 2x2 system (det = {det})")));
        }
        Ok([
            (self.b[0] * d - b * self.b[1]) / det,
            (a * self.b[1] - c * self.b[0]) / det,
        ])
    }

    /// Max-norm residual `|A x - b|`.
    pub fn residual(&self, x: [f64; 2]) -> f64 {
        (0..2)
            .map(|i| (self.a[i][0] * x[0] + self.a[i][1] * x[1] - self.b[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Solve a 4x4 system by Gaussian elimination with partial pivoting.
pub fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Result<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Numerical("singular 4x4 system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (pivot_row, pivot_b) = (a[col], b[col]);
        for row in col + 1..4 {
            let f = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * pivot_b;
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}
