//! Scaled symmetric vectorization.
//!
//! A symmetric matrix of order n maps to a vector of length n(n+1)/2 taking
//! the upper triangle row-major with off-diagonal entries multiplied by
//! sqrt(2), so that `<svec(A), svec(B)> = trace(AB)` exactly.

use nalgebra::DMatrix;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// svec length for a matrix of order n.
#[inline]
pub fn svec_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry (i, j), i <= j, in the svec layout.
#[inline]
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i.wrapping_sub(1)) / 2 + (j - i)
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(svec_dim(n));
    for i in 0..n {
        for j in i..n {
            out.push(if i == j { m[(i, i)] } else { SQRT2 * m[(i, j)] });
        }
    }
    out
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_dim(n));
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let val = if i == j { v[idx] } else { v[idx] / SQRT2 };
            m[(i, j)] = val;
            m[(j, i)] = val;
            idx += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_product_preserved() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 4.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, -2.0, 5.0, 1.5, 0.0, 1.5, 2.0]);
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        let trace = (&a * &b).trace();
        assert!((dot - trace).abs() < 1e-12);
    }

    #[test]
    fn smat_roundtrip() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, -3.0]);
        let v = svec(&a);
        let back = smat(&v, 2);
        assert!((&a - &back).norm() < 1e-15);
    }
}
