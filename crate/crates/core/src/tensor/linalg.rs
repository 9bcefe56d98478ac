//! Small dense linear algebra used by the decompositions: column-major
//! matrix products, a cyclic Jacobi symmetric eigensolver, Householder QR,
//! LU solves with partial pivoting, and power iteration.
//!
//! Everything here is deterministic: no randomized pivoting, no
//! parallel reductions, so repeated runs produce bit-identical results.

use super::{dot, Matrix};
use crate::error::{CoreError, Result};

/// `a * b` for a (m x k) and b (k x n).
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows(), "matmul: inner dimensions differ");
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    for j in 0..n {
        let out_col = &mut out[j * m..(j + 1) * m];
        for l in 0..k {
            let s = b.get(l, j);
            if s == 0.0 {
                continue;
            }
            let a_col = a.col(l);
            for i in 0..m {
                out_col[i] += s * a_col[i];
            }
        }
    }
    Matrix::from_vec_unchecked(m, n, out)
}

/// `a^T * b` for a (m x k) and b (m x n).
pub fn matmul_transpose_a(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.rows(), b.rows(), "matmul_transpose_a: row counts differ");
    let (k, n) = (a.cols(), b.cols());
    let mut out = vec![0.0; k * n];
    for j in 0..n {
        let b_col = b.col(j);
        for i in 0..k {
            out[i + j * k] = dot(a.col(i), b_col);
        }
    }
    Matrix::from_vec_unchecked(k, n, out)
}

/// `a * b^T` for a (m x k) and b (n x k).
pub fn matmul_transpose_b(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.cols(), "matmul_transpose_b: col counts differ");
    let (m, n, k) = (a.rows(), b.rows(), a.cols());
    let mut out = vec![0.0; m * n];
    for l in 0..k {
        let a_col = a.col(l);
        let b_col = b.col(l);
        for j in 0..n {
            let s = b_col[j];
            if s == 0.0 {
                continue;
            }
            let out_col = &mut out[j * m..(j + 1) * m];
            for i in 0..m {
                out_col[i] += s * a_col[i];
            }
        }
    }
    Matrix::from_vec_unchecked(m, n, out)
}

/// Gram matrix `a^T a`.
pub fn gram(a: &Matrix) -> Matrix {
    matmul_transpose_a(a, a)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as columns. Iterates until the off-diagonal Frobenius mass
/// falls below `1e-12` relative to the matrix norm.
pub fn sym_eig_desc(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if s.rows() != s.cols() {
        return Err(CoreError::ShapeMismatch(format!(
            "sym_eig_desc: {}x{} is not square",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let mut a = s.clone();
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * norm;
    const MAX_SWEEPS: usize = 100;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                off += 2.0 * apq * apq;
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // A <- J^T A J on rows/cols p, q.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.col_mut(dst).copy_from_slice(v.col(src));
    }
    Ok((vals, vecs))
}

/// Thin Q factor of a Householder QR of `m` (rows >= cols required).
pub fn householder_q(m: &Matrix) -> Result<Matrix> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows < cols {
        return Err(CoreError::ShapeMismatch(format!(
            "householder_q: {rows}x{cols} has more columns than rows"
        )));
    }
    let mut r = m.clone();
    // Householder vectors stored per column.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let mut v = vec![0.0; rows - k];
        for i in k..rows {
            v[i - k] = r.get(i, k);
        }
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha > 0.0 {
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                for x in v.iter_mut() {
                    *x /= vnorm;
                }
                // Apply reflector to trailing columns of r.
                for j in k..cols {
                    let mut proj = 0.0;
                    for i in k..rows {
                        proj += v[i - k] * r.get(i, j);
                    }
                    proj *= 2.0;
                    for i in k..rows {
                        let cur = r.get(i, j);
                        r.set(i, j, cur - proj * v[i - k]);
                    }
                }
            } else {
                v.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        vs.push(v);
    }
    // Q = H_0 H_1 ... H_{c-1} applied to the first `cols` identity columns.
    let mut q = Matrix::zeros(rows, cols);
    for j in 0..cols {
        q.set(j, j, 1.0);
    }
    for k in (0..cols).rev() {
        let v = &vs[k];
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        for j in 0..cols {
            let mut proj = 0.0;
            for i in k..rows {
                proj += v[i - k] * q.get(i, j);
            }
            proj *= 2.0;
            for i in k..rows {
                let cur = q.get(i, j);
                q.set(i, j, cur - proj * v[i - k]);
            }
        }
    }
    Ok(q)
}

/// Solves `a x = b` by LU with partial pivoting; `a` is square.
///
/// Fails with [`CoreError::Singular`] when a pivot falls below
/// `1e-13 * ||a||_F`, leaving regularization policy to the caller.
pub fn solve_lu(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != a.cols() {
        return Err(CoreError::ShapeMismatch(format!(
            "solve_lu: {}x{} is not square",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(CoreError::ShapeMismatch(format!(
            "solve_lu: a is {}x{} but b has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let pivot_floor = 1e-13 * a.frobenius_norm().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut piv = k;
        let mut best = lu.get(k, k).abs();
        for i in (k + 1)..n {
            let v = lu.get(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= pivot_floor {
            return Err(CoreError::Singular { pivot: best });
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu.get(k, j);
                lu.set(k, j, lu.get(piv, j));
                lu.set(piv, j, tmp);
            }
            for j in 0..x.cols() {
                let tmp = x.get(k, j);
                x.set(k, j, x.get(piv, j));
                x.set(piv, j, tmp);
            }
        }
        let d = lu.get(k, k);
        for i in (k + 1)..n {
            let f = lu.get(i, k) / d;
            if f == 0.0 {
                continue;
            }
            lu.set(i, k, f);
            for j in (k + 1)..n {
                let cur = lu.get(i, j);
                lu.set(i, j, cur - f * lu.get(k, j));
            }
            for j in 0..x.cols() {
                let cur = x.get(i, j);
                x.set(i, j, cur - f * x.get(k, j));
            }
        }
    }
    // Back substitution.
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x.get(i, j);
            for l in (i + 1)..n {
                s -= lu.get(i, l) * x.get(l, j);
            }
            x.set(i, j, s / lu.get(i, i));
        }
    }
    Ok(x)
}

/// Largest singular triplet `(u, sigma, v)` of `m` by power iteration on
/// `m^T m`. Starts from the coordinate direction of largest image norm; a
/// zero matrix yields `sigma = 0`.
pub fn top_singular_triplet(m: &Matrix, tol: f64, max_iters: usize) -> (Vec<f64>, f64, Vec<f64>) {
    let (rows, cols) = (m.rows(), m.cols());
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; rows];
        for j in 0..cols {
            let s = v[j];
            if s == 0.0 {
                continue;
            }
            let col = m.col(j);
            for i in 0..rows {
                out[i] += s * col[i];
            }
        }
        out
    };
    let mut start = 0;
    let mut best = -1.0;
    for j in 0..cols {
        let norm = dot(m.col(j), m.col(j));
        if norm > best {
            best = norm;
            start = j;
        }
    }
    if best <= 0.0 {
        return (vec![0.0; rows], 0.0, vec![0.0; cols]);
    }
    let mut v = vec![0.0; cols];
    v[start] = 1.0;
    let mut mv = apply(&v);
    let mut sigma = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..max_iters {
        // w = m^T (m v), normalized.
        let mut w = vec![0.0; cols];
        for j in 0..cols {
            w[j] = dot(m.col(j), &mv);
        }
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wn == 0.0 {
            break;
        }
        for x in w.iter_mut() {
            *x /= wn;
        }
        v = w;
        mv = apply(&v);
        let new_sigma = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let done = (new_sigma - sigma).abs() <= tol * new_sigma.max(1.0);
        sigma = new_sigma;
        if done {
            break;
        }
    }
    let u = if sigma > 0.0 {
        mv.iter().map(|x| x / sigma).collect()
    } else {
        vec![0.0; rows]
    };
    (u, sigma, v)
}

/// Extends `cols` orthonormal columns of length `dim` to `target` columns by
/// Gram-Schmidt against canonical basis vectors. Deterministic.
pub fn orthonormal_completion(basis: &mut Vec<Vec<f64>>, dim: usize, target: usize) {
    let mut candidate = 0;
    while basis.len() < target && candidate < dim {
        let mut v = vec![0.0; dim];
        v[candidate] = 1.0;
        candidate += 1;
        // Two rounds of classical Gram-Schmidt for stability.
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = dot(&v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    assert!(
        basis.len() >= target,
        "orthonormal completion failed: {} < {target}",
        basis.len()
    );
}
