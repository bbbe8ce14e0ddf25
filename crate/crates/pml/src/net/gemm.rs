//! Small dense kernels the conv and dense layers are built on. Row-major
//! everywhere. The axpy/dot inner loops are written so the compiler can
//! vectorize them; that is where nearly all training time goes.

use crate::net::Scalar;

/// y += a * x
#[inline]
pub fn axpy<T: Scalar>(y: &mut [T], x: &[T], a: T) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// Dot product with four independent accumulators so the reduction
/// pipelines. Summation order is fixed, so results are reproducible.
#[inline]
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [T::zero(); 4];
    let chunks = x.len() / 4;
    for i in 0..chunks {
        let b = i * 4;
        acc[0] += x[b] * y[b];
        acc[1] += x[b + 1] * y[b + 1];
        acc[2] += x[b + 2] * y[b + 2];
        acc[3] += x[b + 3] * y[b + 3];
    }
    let mut tail = T::zero();
    for i in chunks * 4..x.len() {
        tail += x[i] * y[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// c[m][n] += a[m][k] * b[k][n]
pub fn gemm_nn<T: Scalar>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(c.len(), m * n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip != T::zero() {
                axpy(c_row, &b[p * n..(p + 1) * n], aip);
            }
        }
    }
}

/// c[m][n] += a[m][k] * b[n][k]^T  (contraction over each row pair)
pub fn gemm_nt<T: Scalar>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(c.len(), m * n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            c[i * n + j] += dot(a_row, &b[j * k..(j + 1) * k]);
        }
    }
}

/// c[m][n] += a[k][m]^T * b[k][n]
pub fn gemm_tn<T: Scalar>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(c.len(), m * n);
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    for p in 0..k {
        let b_row = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let val = a[p * m + i];
            if val != T::zero() {
                axpy(&mut c[i * n..(i + 1) * n], b_row, val);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_gemm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut t = vec![0.0; x.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = x[r * cols + c];
            }
        }
        t
    }

    #[test]
    fn all_variants_agree_with_reference() {
        let (m, k, n) = (3, 5, 4);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 1.3).cos()).collect();
        let want = reference_gemm(&a, &b, m, k, n);

        let mut c = vec![0.0; m * n];
        gemm_nn(&mut c, &a, &b, m, k, n);
        for (got, want) in c.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }

        let bt = transpose(&b, k, n);
        let mut c = vec![0.0; m * n];
        gemm_nt(&mut c, &a, &bt, m, k, n);
        for (got, want) in c.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }

        let at = transpose(&a, m, k);
        let mut c = vec![0.0; m * n];
        gemm_tn(&mut c, &at, &b, m, k, n);
        for (got, want) in c.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_accumulates_into_existing_values() {
        let mut c = vec![1.0f64; 4];
        gemm_nn(&mut c, &[2.0, 3.0], &[1.0, 0.0, 0.0, 1.0], 1, 2, 2);
        // hand multiply: [2 3] * I_2-ish rows => row0 [1,0], row1 [0,1]
        assert_eq!(c[0], 1.0 + 2.0);
        assert_eq!(c[1], 1.0 + 3.0);
    }

    #[test]
    fn dot_matches_simple_sum() {
        let x: Vec<f64> = (0..13).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..13).map(|i| (i as f64) * 0.5).collect();
        let simple: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((dot(&x, &y) - simple).abs() < 1e-12);
    }
}
