//! Small dense linear algebra on row-major `Vec<T>` storage.
//!
//! Sizes in this crate are modest (species counts, radial basis sizes, ridge
//! systems of at most a few thousand rows), so plain loops are sufficient.

use thiserror::Error;

use crate::scalar::{dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("system stayed singular after the full jitter ladder")]
    SingularAfterJitter,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Lower Cholesky factor of a symmetric positive definite `n x n` matrix.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>, LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::Dimension(format!("expected {} entries, got {}", n * n, a.len())));
    }
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                let pivot = a[i * n + i] - s;
                if !(pivot > T::zero()) || !pivot.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite { row: i, pivot: pivot.to_f64_lossy() });
                }
                l[i * n + i] = pivot.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the lower factor.
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &y[..i]);
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = T::zero();
        for k in i + 1..n {
            s += l[k * n + i] * x[k];
        }
        x[i] = (y[i] - s) / l[i * n + i];
    }
    x
}

/// Outcome of a jittered symmetric solve.
#[derive(Debug, Clone)]
pub struct JitteredSolution<T> {
    pub x: Vec<T>,
    /// Absolute diagonal shift that made the factorization succeed.
    pub jitter: T,
}

/// Solves `A x = b` for symmetric `A`, retrying with diagonal shifts
/// `ladder[k] * trace(A) / n` until the Cholesky factorization succeeds.
pub fn solve_spd_with_jitter<T: Scalar>(
    a: &[T],
    n: usize,
    b: &[T],
    ladder: &[T],
) -> Result<JitteredSolution<T>, LinalgError> {
    if b.len() != n {
        return Err(LinalgError::Dimension(format!("rhs has {} entries, expected {n}", b.len())));
    }
    let mut trace = T::zero();
    for i in 0..n {
        trace += a[i * n + i];
    }
    let scale = if n > 0 && trace > T::zero() { trace / T::from_usize_lossy(n) } else { T::one() };
    let mut shifted = a.to_vec();
    for &step in ladder {
        let jitter = step * scale;
        for i in 0..n {
            shifted[i * n + i] = a[i * n + i] + jitter;
        }
        match cholesky(&shifted, n) {
            Ok(l) => {
                let x = cholesky_solve(&l, n, b);
                if x.iter().all(|v| v.is_finite()) {
                    return Ok(JitteredSolution { x, jitter });
                }
            }
            Err(LinalgError::NotPositiveDefinite { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(LinalgError::SingularAfterJitter)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of a row-major `n x n` matrix.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[i * n + i] * m[i * n + i];
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + col] = v[k * n + src];
        }
    }
    (values, vectors)
}

/// `A^{-1/2}` of a symmetric positive semi-definite matrix, with eigenvalues
/// clamped from below at `floor`.
pub fn inverse_sqrt_psd<T: Scalar>(a: &[T], n: usize, floor: T) -> Vec<T> {
    let (values, vectors) = symmetric_eigen(a, n);
    let mut out = vec![T::zero(); n * n];
    for (k, &lambda) in values.iter().enumerate() {
        let inv = T::one() / lambda.max(floor).sqrt();
        for i in 0..n {
            let vik = vectors[i * n + k] * inv;
            for j in 0..n {
                out[i * n + j] += vik * vectors[j * n + k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_small_system() {
        let a = [4.0f64, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let x = cholesky_solve(&l, 2, &[2.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert!(x[1].abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_needs_jitter() {
        let a = [1.0f64, 1.0, 1.0, 1.0];
        assert!(matches!(cholesky(&a, 2), Err(LinalgError::NotPositiveDefinite { .. })));
        let sol = solve_spd_with_jitter(&a, 2, &[1.0, 1.0], &[0.0, 1e-10, 1e-8]).unwrap();
        assert!(sol.jitter > 0.0);
        assert!((sol.x[0] - sol.x[1]).abs() < 1e-6);
    }

    #[test]
    fn negative_definite_exhausts_ladder() {
        let a = [-1.0, 0.0, 0.0, -1.0];
        let err = solve_spd_with_jitter(&a, 2, &[1.0, 1.0], &[0.0, 1e-10]).unwrap_err();
        assert_eq!(err, LinalgError::SingularAfterJitter);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let (vals, vecs) = symmetric_eigen(&a, 3);
        let s2 = std::f64::consts::SQRT_2;
        let expected = [2.0 - s2, 2.0, 2.0 + s2];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-13);
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut r = 0.0;
                for k in 0..3 {
                    r += vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k];
                }
                assert!((r - a[i * 3 + j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_sqrt_whitens() {
        let a = [4.0f64, 1.0, 1.0, 3.0];
        let w = inverse_sqrt_psd(&a, 2, 1e-12);
        // W A W = I
        let mut wa = [0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    wa[i * 2 + j] += w[i * 2 + k] * a[k * 2 + j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let mut r = 0.0;
                for k in 0..2 {
                    r += wa[i * 2 + k] * w[k * 2 + j];
                }
                let e: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((r - e).abs() < 1e-13);
            }
        }
    }
}
