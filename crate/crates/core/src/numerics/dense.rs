use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{axpy, dot, Tensor};
use crate::error::{shape_err, Result};

/// Matrix product of an `M×K` and a `K×N` tensor.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = match a.shape() {
        [m, k] => (*m, *k),
        s => return Err(shape_err("matmul", "2-D left operand", s)),
    };
    let (k2, n) = match b.shape() {
        [k2, n] => (*k2, *n),
        s => return Err(shape_err("matmul", "2-D right operand", s)),
    };
    if k != k2 {
        return Err(shape_err("matmul", k, k2));
    }
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let v = ad[i * k + p];
            if v != 0.0 {
                axpy(v, &bd[p * n..(p + 1) * n], row);
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// `out[j] += Σ_i w[j, i] · x[i]` for a row-major `rows × x.len()` matrix.
///
/// Only nonzero entries of `x` are visited; spike vectors are mostly zero.
pub fn matvec_acc(weights: &[f64], x: &[f64], out: &mut [f64], scratch: &mut Vec<usize>) {
    let cols = x.len();
    debug_assert_eq!(weights.len(), cols * out.len());
    scratch.clear();
    scratch.extend(
        x.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i),
    );
    if scratch.len() * 2 > cols {
        for (j, o) in out.iter_mut().enumerate() {
            *o += dot(&weights[j * cols..(j + 1) * cols], x);
        }
        return;
    }
    for (j, o) in out.iter_mut().enumerate() {
        let row = &weights[j * cols..(j + 1) * cols];
        let mut sum = 0.0;
        for &i in scratch.iter() {
            sum += row[i] * x[i];
        }
        *o += sum;
    }
}

/// `out[i] += Σ_j w[j, i] · d[j]` (transpose product).
pub fn matvec_transpose_acc(weights: &[f64], d: &[f64], out: &mut [f64]) {
    let cols = out.len();
    debug_assert_eq!(weights.len(), cols * d.len());
    for (j, &dj) in d.iter().enumerate() {
        if dj != 0.0 {
            axpy(dj, &weights[j * cols..(j + 1) * cols], out);
        }
    }
}

/// `grad[j, i] += d[j] · x[i]`
pub fn outer_acc(d: &[f64], x: &[f64], grad: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(grad.len(), cols * d.len());
    for (j, &dj) in d.iter().enumerate() {
        if dj != 0.0 {
            axpy(dj, x, &mut grad[j * cols..(j + 1) * cols]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn identity_times_column() {
        let out = matmul(&t(&[2, 2], &[1., 0., 0., 1.]), &t(&[2, 1], &[3., 4.])).unwrap();
        assert_eq!(out, t(&[2, 1], &[3., 4.]));
    }

    #[test]
    fn row_times_column() {
        let out = matmul(&t(&[1, 2], &[1., 2.]), &t(&[2, 1], &[3., 4.])).unwrap();
        assert_eq!(out.data(), &[11.0]);
    }

    #[test]
    fn zero_matrix_annihilates() {
        let out = matmul(
            &Tensor::zeros(&[2, 3]),
            &t(&[3, 2], &[1., 2., 3., 4., 5., 6.]),
        )
        .unwrap();
        assert!(out.data().iter().all(|v| *v == 0.0));
        assert_eq!(out.shape(), &[2, 2]);
    }

    #[test]
    fn inner_dimension_mismatch() {
        assert!(matmul(&Tensor::zeros(&[2, 3]), &Tensor::zeros(&[2, 2])).is_err());
    }

    #[test]
    fn sparse_and_dense_matvec_agree() {
        let w: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 2.0).collect();
        let mut scratch = Vec::new();
        let sparse = [0.0, 1.0, 0.0, 0.0];
        let dense = [0.3, 1.0, 0.7, 0.2];
        for x in [sparse, dense] {
            let mut out = [0.0; 3];
            matvec_acc(&w, &x, &mut out, &mut scratch);
            for j in 0..3 {
                let expect: f64 = (0..4).map(|i| w[j * 4 + i] * x[i]).sum();
                assert!((out[j] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let w: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let x = [0.2, -0.4];
        let d = [1.0, 0.5, -2.0];
        let mut wx = [0.0; 3];
        matvec_acc(&w, &x, &mut wx, &mut Vec::new());
        let mut wtd = [0.0; 2];
        matvec_transpose_acc(&w, &d, &mut wtd);
        assert!((dot(&wx, &d) - dot(&x, &wtd)).abs() < 1e-14);
    }
}
