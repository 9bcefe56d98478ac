//! Multilinear kernels: unfolding/folding, mode products, Kronecker and
//! Khatri-Rao products, and nearest-Kronecker-product factorization.
//!
//! The mode-n unfolding Y_(n) is the I_n x prod_{p!=n} I_p matrix whose
//! columns are the mode-n fibers of Y, with the remaining indices enumerated
//! first-index-fastest. Under this convention, for
//! Y = G x_1 A(1) ... x_N A(N),
//!
//! ```text
//! Y_(n) = A(n) G_(n) (A(N) kron ... kron A(n+1) kron A(n-1) kron ... kron A(1))^T
//! ```
//!
//! i.e. the Kronecker factors run over the other modes in inverse index
//! order. Modes are 0-based throughout.

use super::{dot, linalg, DenseTensor, Matrix};
use crate::error::{CoreError, Result};

fn check_mode(order: usize, mode: usize) -> Result<()> {
    if mode >= order {
        return Err(CoreError::InvalidMode { mode, order });
    }
    Ok(())
}

/// Mode-n unfolding (matricization) of a tensor.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    check_mode(t.order(), mode)?;
    let shape = t.shape();
    let i_n = shape[mode];
    let pre: usize = shape[..mode].iter().product();
    let post: usize = shape[mode + 1..].iter().product();
    let cols = pre * post;
    if mode == 0 {
        // Mode-0 unfolding is a pure reshape of the flat storage.
        return Ok(Matrix::from_vec_unchecked(i_n, cols, t.data().to_vec()));
    }
    let mut out = vec![0.0; i_n * cols];
    let src = t.data();
    for b in 0..post {
        for i in 0..i_n {
            let src_base = pre * (i + i_n * b);
            let dst_col_base = pre * b;
            for a in 0..pre {
                out[i + i_n * (a + dst_col_base)] = src[a + src_base];
            }
        }
    }
    Ok(Matrix::from_vec_unchecked(i_n, cols, out))
}

/// Inverse of [`unfold`]: `fold(unfold(t, n), n, t.shape()) == t` exactly.
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    if shape.is_empty() || shape.iter().any(|&e| e == 0) {
        return Err(CoreError::EmptyShape);
    }
    check_mode(shape.len(), mode)?;
    let i_n = shape[mode];
    let pre: usize = shape[..mode].iter().product();
    let post: usize = shape[mode + 1..].iter().product();
    if m.rows() != i_n || m.cols() != pre * post {
        return Err(CoreError::ShapeMismatch(format!(
            "fold: matrix {}x{} does not match mode-{mode} unfolding of {:?}",
            m.rows(),
            m.cols(),
            shape
        )));
    }
    if mode == 0 {
        return Ok(DenseTensor::from_vec_unchecked(
            shape.to_vec(),
            m.data().to_vec(),
        ));
    }
    let mut out = vec![0.0; i_n * pre * post];
    let src = m.data();
    for b in 0..post {
        for i in 0..i_n {
            let dst_base = pre * (i + i_n * b);
            let src_col_base = pre * b;
            for a in 0..pre {
                out[a + dst_base] = src[i + i_n * (a + src_col_base)];
            }
        }
    }
    Ok(DenseTensor::from_vec_unchecked(shape.to_vec(), out))
}

/// Mode-n product `t x_n a`: contracts mode `n` of `t` against the columns
/// of `a`, replacing extent I_n by `a.rows()`.
pub fn mode_product(t: &DenseTensor, a: &Matrix, mode: usize) -> Result<DenseTensor> {
    check_mode(t.order(), mode)?;
    if a.cols() != t.shape()[mode] {
        return Err(CoreError::ShapeMismatch(format!(
            "mode_product: matrix has {} cols, mode {mode} extent is {}",
            a.cols(),
            t.shape()[mode]
        )));
    }
    let unfolded = unfold(t, mode)?;
    let product = linalg::matmul(a, &unfolded);
    let mut shape = t.shape().to_vec();
    shape[mode] = a.rows();
    fold(&product, mode, &shape)
}

/// Applies `mats[n]` along mode `n` for every supplied entry. Products on
/// distinct modes commute, so evaluation order does not affect the result.
pub fn multi_mode_product(t: &DenseTensor, mats: &[Option<&Matrix>]) -> Result<DenseTensor> {
    if mats.len() != t.order() {
        return Err(CoreError::ShapeMismatch(format!(
            "multi_mode_product: {} matrices for order-{} tensor",
            mats.len(),
            t.order()
        )));
    }
    let mut out = t.clone();
    for (mode, mat) in mats.iter().enumerate() {
        if let Some(a) = mat {
            out = mode_product(&out, a, mode)?;
        }
    }
    Ok(out)
}

/// Kronecker product `a kron b` with entries
/// `c[(i1*Ib + i2, j1*Jb + j2)] = a[i1,j1] * b[i2,j2]`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (ia, ja) = (a.rows(), a.cols());
    let (ib, jb) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(ia * ib, ja * jb);
    for j1 in 0..ja {
        for j2 in 0..jb {
            let col = j1 * jb + j2;
            for i1 in 0..ia {
                let s = a.get(i1, j1);
                for i2 in 0..ib {
                    out.set(i1 * ib + i2, col, s * b.get(i2, j2));
                }
            }
        }
    }
    out
}

/// Khatri-Rao (columnwise Kronecker) product of two matrices with the same
/// column count.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(CoreError::ShapeMismatch(format!(
            "khatri_rao: {} vs {} columns",
            a.cols(),
            b.cols()
        )));
    }
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols());
    for j in 0..a.cols() {
        let col = out.col_mut(j);
        for i1 in 0..a.rows() {
            let s = a.get(i1, j);
            for i2 in 0..b.rows() {
                col[i1 * b.rows() + i2] = s * b.get(i2, j);
            }
        }
    }
    Ok(out)
}

/// Kronecker factors over all modes except `skip`, taken in inverse index
/// order. This is the matrix R(n) appearing in the unfolding identity above.
pub fn kronecker_skip_inverse(mats: &[&Matrix], skip: usize) -> Result<Matrix> {
    check_mode(mats.len(), skip)?;
    let mut result: Option<Matrix> = None;
    for p in (0..mats.len()).rev() {
        if p == skip {
            continue;
        }
        result = Some(match result {
            None => mats[p].clone(),
            Some(acc) => kronecker(&acc, mats[p]),
        });
    }
    result.ok_or_else(|| CoreError::InvalidArgument("need at least two modes".into()))
}

/// Closest Kronecker factorization: finds `(a1, a2)` with shapes `shape1`,
/// `shape2` minimizing `||k - a1 kron a2||_F`.
///
/// The entries of `k` are rearranged into a matrix whose rank-one structure
/// corresponds to Kronecker structure of `k` (`k == a1 kron a2` iff the
/// rearrangement equals `vec(a1) vec(a2)^T`), and the best rank-one
/// approximation of the rearrangement is read back off as the two factors.
pub fn nearest_kronecker_factorize(
    k: &Matrix,
    shape1: (usize, usize),
    shape2: (usize, usize),
) -> Result<(Matrix, Matrix)> {
    let (i1, j1) = shape1;
    let (i2, j2) = shape2;
    if i1 == 0 || j1 == 0 || i2 == 0 || j2 == 0 {
        return Err(CoreError::EmptyShape);
    }
    if k.rows() != i1 * i2 || k.cols() != j1 * j2 {
        return Err(CoreError::ShapeMismatch(format!(
            "nearest_kronecker_factorize: k is {}x{}, expected {}x{}",
            k.rows(),
            k.cols(),
            i1 * i2,
            j1 * j2
        )));
    }
    // Rearrangement: row (i1 + I1*j1) indexes vec(a1), col (i2 + I2*j2)
    // indexes vec(a2).
    let mut r = Matrix::zeros(i1 * j1, i2 * j2);
    for c1 in 0..j1 {
        for c2 in 0..j2 {
            for r1 in 0..i1 {
                for r2 in 0..i2 {
                    let v = k.get(r1 * i2 + r2, c1 * j2 + c2);
                    r.set(r1 + i1 * c1, r2 + i2 * c2, v);
                }
            }
        }
    }
    let (u, sigma, v) = linalg::top_singular_triplet(&r, 1e-12, 1000);
    let s = sigma.sqrt();
    let mut a1_data: Vec<f64> = u.iter().map(|x| x * s).collect();
    let mut a2_data: Vec<f64> = v.iter().map(|x| x * s).collect();
    // Fix the sign pair so a1's largest-magnitude entry is nonnegative.
    let lead = a1_data
        .iter()
        .cloned()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        for x in a1_data.iter_mut() {
            *x = -*x;
        }
        for x in a2_data.iter_mut() {
            *x = -*x;
        }
    }
    Ok((
        Matrix::from_vec_unchecked(i1, j1, a1_data),
        Matrix::from_vec_unchecked(i2, j2, a2_data),
    ))
}

/// Inner product of two equally shaped matrices viewed as vectors.
pub fn matrix_dot(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(CoreError::ShapeMismatch(format!(
            "matrix_dot: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(dot(a.data(), b.data()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::linalg::matmul;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.random::<f64>() - 0.5).collect();
        DenseTensor::new(shape.to_vec(), data).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random::<f64>() - 0.5).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn unfold_enumerates_mode_fibers() {
        // 2x2x2 tensor holding 1..8 in storage order.
        let t = DenseTensor::new(vec![2, 2, 2], (1..=8).map(|v| v as f64).collect()).unwrap();
        let m0 = unfold(&t, 0).unwrap();
        assert_eq!(m0.rows(), 2);
        assert_eq!(m0.cols(), 4);
        assert_eq!(
            m0,
            Matrix::from_rows(&[&[1.0, 3.0, 5.0, 7.0], &[2.0, 4.0, 6.0, 8.0]]).unwrap()
        );
        let m1 = unfold(&t, 1).unwrap();
        assert_eq!(
            m1,
            Matrix::from_rows(&[&[1.0, 2.0, 5.0, 6.0], &[3.0, 4.0, 7.0, 8.0]]).unwrap()
        );
        let m2 = unfold(&t, 2).unwrap();
        assert_eq!(
            m2,
            Matrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]]).unwrap()
        );
    }

    #[test]
    fn unfold_zero_tensor_and_matrix_identity() {
        let z = DenseTensor::zeros(vec![3, 4, 2]);
        for n in 0..3 {
            assert_eq!(unfold(&z, n).unwrap().frobenius_norm(), 0.0);
        }
        // Mode-0 unfolding of an order-2 tensor is the matrix itself.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(&mut rng, 3, 5);
        let t = m.to_tensor();
        assert_eq!(unfold(&t, 0).unwrap(), m);
    }

    #[test]
    fn unfold_rejects_invalid_mode() {
        let t = DenseTensor::zeros(vec![2, 2]);
        assert!(matches!(
            unfold(&t, 2),
            Err(CoreError::InvalidMode { mode: 2, order: 2 })
        ));
    }

    #[test]
    fn fold_roundtrips_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for shape in [vec![3, 4, 5], vec![2, 2, 2], vec![4, 1, 3, 2]] {
            let t = random_tensor(&mut rng, &shape);
            for n in 0..shape.len() {
                let back = fold(&unfold(&t, n).unwrap(), n, &shape).unwrap();
                assert_eq!(back, t, "mode {n} shape {shape:?}");
            }
        }
        let z = Matrix::zeros(2, 6);
        assert_eq!(
            fold(&z, 1, &[3, 2, 2]).unwrap(),
            DenseTensor::zeros(vec![3, 2, 2])
        );
    }

    #[test]
    fn fold_rejects_dimension_mismatch() {
        let m = Matrix::zeros(2, 5);
        assert!(matches!(
            fold(&m, 0, &[2, 4]),
            Err(CoreError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn mode_product_identity_and_unfolding_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(&mut rng, &[3, 4, 5]);
        for n in 0..3 {
            let id = Matrix::identity(t.shape()[n]);
            assert_eq!(mode_product(&t, &id, n).unwrap(), t);
        }
        // unfold(t x_n a, n) == a * unfold(t, n)
        for n in 0..3 {
            let a = random_matrix(&mut rng, 2, t.shape()[n]);
            let prod = mode_product(&t, &a, n).unwrap();
            let lhs = unfold(&prod, n).unwrap();
            let rhs = matmul(&a, &unfold(&t, n).unwrap());
            assert!(max_abs_diff(lhs.data(), rhs.data()) < 1e-12);
        }
    }

    #[test]
    fn mode_product_matches_direct_summation() {
        // 2x2 core times [[1,0],[1,1]] along mode 0: rows add per definition.
        let g = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap().to_tensor();
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0]]).unwrap();
        let y = mode_product(&g, &a, 0).unwrap();
        // y[i, j] = sum_k a[i, k] g[k, j]
        assert_eq!(y.get(&[0, 0]), 1.0);
        assert_eq!(y.get(&[1, 0]), 4.0);
        assert_eq!(y.get(&[0, 1]), 2.0);
        assert_eq!(y.get(&[1, 1]), 6.0);
    }

    #[test]
    fn mode_products_compose_and_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let t = random_tensor(&mut rng, &[3, 3, 3]);
            let a = random_matrix(&mut rng, 3, 3);
            let b = random_matrix(&mut rng, 2, 3);
            // (t x_n a) x_n b == t x_n (b a)
            let lhs = mode_product(&mode_product(&t, &a, 1).unwrap(), &b, 1).unwrap();
            let rhs = mode_product(&t, &matmul(&b, &a), 1).unwrap();
            let scale = rhs.frobenius_norm().max(1.0);
            assert!(max_abs_diff(lhs.data(), rhs.data()) / scale < 1e-12);
            // Distinct modes commute.
            let c = random_matrix(&mut rng, 4, 3);
            let one = mode_product(&mode_product(&t, &b, 0).unwrap(), &c, 2).unwrap();
            let two = mode_product(&mode_product(&t, &c, 2).unwrap(), &b, 0).unwrap();
            assert!(max_abs_diff(one.data(), two.data()) / scale < 1e-12);
        }
    }

    #[test]
    fn multi_mode_product_matches_kronecker_unfolding() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = random_tensor(&mut rng, &[2, 2, 2]);
        let mats: Vec<Matrix> = vec![
            random_matrix(&mut rng, 2, 2),
            random_matrix(&mut rng, 3, 2),
            random_matrix(&mut rng, 4, 2),
        ];
        let refs: Vec<Option<&Matrix>> = mats.iter().map(Some).collect();
        let y = multi_mode_product(&g, &refs).unwrap();
        assert_eq!(y.shape(), &[2, 3, 4]);
        let all: Vec<&Matrix> = mats.iter().collect();
        for n in 0..3 {
            let r = kronecker_skip_inverse(&all, n).unwrap();
            let expected = matmul(
                &matmul(&mats[n], &unfold(&g, n).unwrap()),
                &r.transpose(),
            );
            let lhs = unfold(&y, n).unwrap();
            let scale = expected.frobenius_norm().max(1.0);
            assert!(max_abs_diff(lhs.data(), expected.data()) / scale < 1e-10);
        }
        // All identities leave the tensor untouched.
        let ids: Vec<Matrix> = g.shape().iter().map(|&e| Matrix::identity(e)).collect();
        let id_refs: Vec<Option<&Matrix>> = ids.iter().map(Some).collect();
        assert_eq!(multi_mode_product(&g, &id_refs).unwrap(), g);
        // Skipping a mode matches applying the remaining products only.
        let skip: Vec<Option<&Matrix>> = vec![Some(&mats[0]), None, Some(&mats[2])];
        let partial = multi_mode_product(&g, &skip).unwrap();
        let manual =
            mode_product(&mode_product(&g, &mats[0], 0).unwrap(), &mats[2], 2).unwrap();
        assert_eq!(partial, manual);
    }

    #[test]
    fn kronecker_examples() {
        let i2 = Matrix::identity(2);
        assert_eq!(kronecker(&i2, &i2), Matrix::identity(4));
        let a = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let b = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(
            kronecker(&a, &b),
            Matrix::new(4, 1, vec![0.0, 1.0, 0.0, 0.0]).unwrap()
        );
    }

    #[test]
    fn khatri_rao_is_columnwise_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = random_matrix(&mut rng, 3, 2);
        let b = random_matrix(&mut rng, 2, 2);
        let kr = khatri_rao(&a, &b).unwrap();
        for j in 0..2 {
            let aj = Matrix::new(3, 1, a.col(j).to_vec()).unwrap();
            let bj = Matrix::new(2, 1, b.col(j).to_vec()).unwrap();
            assert_eq!(kr.col(j), kronecker(&aj, &bj).col(0));
        }
        // Single-column case reduces to the Kronecker product.
        let a1 = Matrix::new(3, 1, a.col(0).to_vec()).unwrap();
        let b1 = Matrix::new(2, 1, b.col(0).to_vec()).unwrap();
        assert_eq!(khatri_rao(&a1, &b1).unwrap(), kronecker(&a1, &b1));
        let bad = random_matrix(&mut rng, 2, 3);
        assert!(khatri_rao(&a, &bad).is_err());
    }

    #[test]
    fn khatri_rao_with_identity_selects_scaled_copies() {
        let id = Matrix::identity(2);
        let b = Matrix::from_rows(&[&[2.0, 3.0], &[4.0, 5.0]]).unwrap();
        let kr = khatri_rao(&id, &b).unwrap();
        // Column j holds e_j kron b_j: b_j in block j, zeros elsewhere.
        assert_eq!(kr.col(0), &[2.0, 4.0, 0.0, 0.0]);
        assert_eq!(kr.col(1), &[0.0, 0.0, 3.0, 5.0]);
    }

    #[test]
    fn nearest_kronecker_recovers_exact_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let a = Matrix::new(3, 2, (0..6).map(|_| rng.random::<f64>()).collect()).unwrap();
            let b = Matrix::new(2, 4, (0..8).map(|_| rng.random::<f64>()).collect()).unwrap();
            let k = kronecker(&a, &b);
            let (a_hat, b_hat) = nearest_kronecker_factorize(&k, (3, 2), (2, 4)).unwrap();
            let k_hat = kronecker(&a_hat, &b_hat);
            let rel = k.sub(&k_hat).unwrap().frobenius_norm() / k.frobenius_norm();
            assert!(rel < 1e-10, "rel = {rel:e}");
            // Factors agree up to a scalar.
            let ratio = a_hat.get(0, 0) / a.get(0, 0);
            for i in 0..3 {
                for j in 0..2 {
                    assert_relative_eq!(a_hat.get(i, j), ratio * a.get(i, j), epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn nearest_kronecker_identity_blocks() {
        let k = Matrix::identity(4);
        let (a1, a2) = nearest_kronecker_factorize(&k, (2, 2), (2, 2)).unwrap();
        // I4 = I2 kron I2, so both factors are proportional to I2.
        let s1 = a1.get(0, 0);
        let s2 = a2.get(0, 0);
        assert!(s1 > 0.0 && s2 > 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(a1.get(i, j), s1 * e, epsilon = 1e-10);
                assert_relative_eq!(a2.get(i, j), s2 * e, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn nearest_kronecker_residual_is_second_singular_value() {
        // A rank-one perturbation of an exact Kronecker product leaves a
        // rank-two rearrangement; the fit error is its second singular value.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = Matrix::new(2, 2, (0..4).map(|_| rng.random::<f64>() + 0.5).collect()).unwrap();
        let b = Matrix::new(2, 2, (0..4).map(|_| rng.random::<f64>() + 0.5).collect()).unwrap();
        let c = Matrix::new(2, 2, vec![0.05, -0.02, 0.03, 0.01]).unwrap();
        let d = Matrix::new(2, 2, vec![0.02, 0.04, -0.01, 0.03]).unwrap();
        let k = kronecker(&a, &b).add(&kronecker(&c, &d)).unwrap();
        let (a_hat, b_hat) = nearest_kronecker_factorize(&k, (2, 2), (2, 2)).unwrap();
        let resid = k
            .sub(&kronecker(&a_hat, &b_hat))
            .unwrap()
            .frobenius_norm();
        // Second singular value of the rearrangement via deflation.
        let mut r = Matrix::zeros(4, 4);
        for c1 in 0..2 {
            for c2 in 0..2 {
                for r1 in 0..2 {
                    for r2 in 0..2 {
                        r.set(r1 + 2 * c1, r2 + 2 * c2, k.get(r1 * 2 + r2, c1 * 2 + c2));
                    }
                }
            }
        }
        let (u, s1, v) = linalg::top_singular_triplet(&r, 1e-14, 2000);
        let mut deflated = r.clone();
        for i in 0..4 {
            for j in 0..4 {
                deflated.set(i, j, deflated.get(i, j) - s1 * u[i] * v[j]);
            }
        }
        let (_, s2, _) = linalg::top_singular_triplet(&deflated, 1e-14, 2000);
        assert_relative_eq!(resid, s2, max_relative = 1e-6);
    }

    #[test]
    fn nearest_kronecker_rejects_bad_shapes() {
        let k = Matrix::zeros(4, 4);
        assert!(nearest_kronecker_factorize(&k, (2, 2), (3, 2)).is_err());
    }
}
