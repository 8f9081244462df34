//! Dense linear-algebra helpers: extreme singular values and condition
//! numbers.
//!
//! Matrices up to [`SVD_LIMIT`] rows use a full SVD. Larger matrices use
//! power iteration on `A^T A` for the largest singular value and inverse
//! iteration with an LU factorization for the smallest one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest dimension handled by a full SVD.
pub const SVD_LIMIT: usize = 512;

const ITERATIONS: usize = 300;
const ITERATION_TOL: f64 = 1e-10;

/// Largest and smallest singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub max: f64,
    pub min: f64,
}

impl Extremes {
    /// `max / min`, infinite when `min` vanishes.
    pub fn condition(&self) -> f64 {
        if self.min > 0.0 {
            self.max / self.min
        } else {
            f64::INFINITY
        }
    }
}

/// All singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Extreme singular values of a square matrix.
pub fn extreme_singular_values(a: &DMatrix<f64>) -> Extremes {
    let n = a.nrows();
    if n == 0 {
        return Extremes { max: 0.0, min: 0.0 };
    }
    if n <= SVD_LIMIT {
        let s = singular_values(a);
        return Extremes { max: s[0], min: s[s.len() - 1] };
    }
    let max = power_iteration(a);
    let min = inverse_power_iteration(a).unwrap_or(0.0);
    Extremes { max, min }
}

/// Two-norm condition number of a square matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    extreme_singular_values(a).condition()
}

/// Fails with [`Error::IllConditioned`] when `cond(a) >= limit`.
pub fn check_condition(a: &DMatrix<f64>, limit: f64) -> Result<f64> {
    let cond = condition_number(a);
    if !(cond < limit) {
        return Err(Error::IllConditioned { cond, limit });
    }
    Ok(cond)
}

fn start_vector(n: usize) -> DVector<f64> {
    // deterministic and not orthogonal to any structured vector in practice
    DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i as f64) * 0.618_033_988_75).sin())
}

fn power_iteration(a: &DMatrix<f64>) -> f64 {
    let at = a.transpose();
    let mut v = start_vector(a.ncols());
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..ITERATIONS {
        let w = &at * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = w / norm;
        if (next - sigma).abs() <= ITERATION_TOL * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

fn inverse_power_iteration(a: &DMatrix<f64>) -> Option<f64> {
    let lu = a.clone().lu();
    let lut = a.transpose().lu();
    let mut v = start_vector(a.ncols());
    v /= v.norm();
    let mut sigma = f64::INFINITY;
    for _ in 0..ITERATIONS {
        let y = lut.solve(&v)?;
        let w = lu.solve(&y)?;
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        let next = 1.0 / norm.sqrt();
        v = w / norm;
        if (next - sigma).abs() <= ITERATION_TOL * next {
            return Some(next);
        }
        sigma = next;
    }
    Some(sigma)
}

/// Solves `a x = b` by LU, failing on a singular factorization.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::SolveFailure("singular matrix in LU solve".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_condition() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, -2.0, 0.5]));
        let e = extreme_singular_values(&a);
        assert!((e.max - 4.0).abs() < 1e-14);
        assert!((e.min - 0.5).abs() < 1e-14);
        assert!((e.condition() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_path_matches_svd() {
        let n = 600;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { if i == 7 { 0.05 } else { 2.0 + (i as f64) / n as f64 } } else { 0.0 };
            d + 0.05 / (1.0 + (i as f64 - j as f64).abs()).powi(3)
        });
        let e = extreme_singular_values(&a);
        let s = singular_values(&a);
        // the top of the spectrum is clustered, so only a few digits are expected
        assert!((e.max - s[0]).abs() < 1e-2 * s[0]);
        assert!((e.min - s[n - 1]).abs() < 1e-7 * s[0]);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(check_condition(&a, 1e10), Err(Error::IllConditioned { .. })));
    }
}
