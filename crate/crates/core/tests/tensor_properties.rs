//! Property suite for the multilinear kernels: unfold/fold roundtrips and
//! the four mode-product identities, over random tensors up to order 5.

mod common;

use common::{max_rel_diff, random_matrix, random_tensor, rng};
use ntd_core::tensor::kernels::{
    fold, kronecker, kronecker_skip_inverse, mode_product, multi_mode_product, unfold,
};
use ntd_core::tensor::linalg::matmul;
use ntd_core::tensor::{DenseTensor, Matrix};
use proptest::prelude::*;

fn shapes_up_to_order_5() -> Vec<Vec<usize>> {
    vec![
        vec![6],
        vec![4, 5],
        vec![3, 4, 5],
        vec![2, 3, 1, 4],
        vec![3, 2, 2, 3, 2],
    ]
}

#[test]
fn fold_unfold_roundtrip_is_bit_exact_up_to_order_5() {
    let mut rng = rng(1001);
    for shape in shapes_up_to_order_5() {
        let t = random_tensor(&mut rng, &shape);
        for mode in 0..shape.len() {
            let back = fold(&unfold(&t, mode).unwrap(), mode, &shape).unwrap();
            assert_eq!(back, t, "shape {shape:?} mode {mode}");
        }
    }
}

#[test]
fn unfolding_commutes_with_mode_product() {
    // unfold(t x_n a, n) == a * unfold(t, n), relative 1e-12.
    let mut rng = rng(1002);
    for shape in shapes_up_to_order_5() {
        let t = random_tensor(&mut rng, &shape);
        for mode in 0..shape.len() {
            let a = random_matrix(&mut rng, shape[mode] + 1, shape[mode]);
            let lhs = unfold(&mode_product(&t, &a, mode).unwrap(), mode).unwrap();
            let rhs = matmul(&a, &unfold(&t, mode).unwrap());
            assert!(
                max_rel_diff(lhs.data(), rhs.data()) < 1e-12,
                "shape {shape:?} mode {mode}"
            );
        }
    }
}

#[test]
fn same_mode_products_compose() {
    // (t x_n a) x_n b == t x_n (b a), relative 1e-12.
    let mut rng = rng(1003);
    for shape in shapes_up_to_order_5() {
        let t = random_tensor(&mut rng, &shape);
        for mode in 0..shape.len() {
            let a = random_matrix(&mut rng, 3, shape[mode]);
            let b = random_matrix(&mut rng, 2, 3);
            let lhs = mode_product(&mode_product(&t, &a, mode).unwrap(), &b, mode).unwrap();
            let rhs = mode_product(&t, &matmul(&b, &a), mode).unwrap();
            assert!(
                max_rel_diff(lhs.data(), rhs.data()) < 1e-12,
                "shape {shape:?} mode {mode}"
            );
        }
    }
}

#[test]
fn distinct_mode_products_commute() {
    let mut rng = rng(1004);
    for shape in shapes_up_to_order_5() {
        if shape.len() < 2 {
            continue;
        }
        let t = random_tensor(&mut rng, &shape);
        for m1 in 0..shape.len() {
            for m2 in (m1 + 1)..shape.len() {
                let a = random_matrix(&mut rng, 2, shape[m1]);
                let b = random_matrix(&mut rng, 3, shape[m2]);
                let lhs = mode_product(&mode_product(&t, &a, m1).unwrap(), &b, m2).unwrap();
                let rhs = mode_product(&mode_product(&t, &b, m2).unwrap(), &a, m1).unwrap();
                assert!(
                    max_rel_diff(lhs.data(), rhs.data()) < 1e-12,
                    "shape {shape:?} modes ({m1},{m2})"
                );
            }
        }
    }
}

#[test]
fn full_product_unfolds_to_inverse_order_kronecker() {
    // unfold(g x_1 a1 ... x_N aN, n)
    //   == a_n G_(n) (a_N kron ... kron a_{n+1} kron a_{n-1} ... kron a_1)^T
    let mut rng = rng(1005);
    for core_shape in [vec![2, 3], vec![2, 2, 3], vec![2, 2, 2, 2], vec![2, 1, 2, 2, 2]] {
        let g = random_tensor(&mut rng, &core_shape);
        let mats: Vec<Matrix> = core_shape
            .iter()
            .map(|&r| random_matrix(&mut rng, r + 2, r))
            .collect();
        let refs: Vec<Option<&Matrix>> = mats.iter().map(Some).collect();
        let y = multi_mode_product(&g, &refs).unwrap();
        let all: Vec<&Matrix> = mats.iter().collect();
        for mode in 0..core_shape.len() {
            if core_shape.len() < 2 {
                continue;
            }
            let r = kronecker_skip_inverse(&all, mode).unwrap();
            let expected = matmul(
                &matmul(&mats[mode], &unfold(&g, mode).unwrap()),
                &r.transpose(),
            );
            let lhs = unfold(&y, mode).unwrap();
            assert!(
                max_rel_diff(lhs.data(), expected.data()) < 1e-10,
                "core {core_shape:?} mode {mode}"
            );
        }
    }
}

#[test]
fn skipping_one_mode_matches_partial_product() {
    // Leaving one factor out of the multi-mode product equals applying the
    // remaining products one by one.
    let mut rng = rng(1006);
    let g = random_tensor(&mut rng, &[2, 3, 2, 2]);
    let mats: Vec<Matrix> = g
        .shape()
        .iter()
        .map(|&r| random_matrix(&mut rng, r + 1, r))
        .collect();
    for skip in 0..4 {
        let refs: Vec<Option<&Matrix>> = mats
            .iter()
            .enumerate()
            .map(|(p, m)| if p == skip { None } else { Some(m) })
            .collect();
        let partial = multi_mode_product(&g, &refs).unwrap();
        let mut manual = g.clone();
        for (p, m) in mats.iter().enumerate() {
            if p != skip {
                manual = mode_product(&manual, m, p).unwrap();
            }
        }
        assert_eq!(partial, manual);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_holds_for_arbitrary_shapes(
        shape in prop::collection::vec(1usize..5, 1..5),
        mode_pick in 0usize..4,
        seed in 0u64..1u64 << 32,
    ) {
        let mode = mode_pick % shape.len();
        let mut r = rng(seed);
        let t = random_tensor(&mut r, &shape);
        let back = fold(&unfold(&t, mode).unwrap(), mode, &shape).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn projection_is_idempotent_and_dominates(
        data in prop::collection::vec(-1.0f64..1.0, 1..40),
    ) {
        let t = DenseTensor::new(vec![data.len()], data).unwrap();
        let p = t.project_nonneg();
        prop_assert!(p.is_nonnegative());
        prop_assert_eq!(p.project_nonneg(), p.clone());
        for (x, y) in t.data().iter().zip(p.data()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn kronecker_entry_formula(
        a_rows in 1usize..4, a_cols in 1usize..4,
        b_rows in 1usize..4, b_cols in 1usize..4,
        seed in 0u64..1u64 << 32,
    ) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, a_rows, a_cols);
        let b = random_matrix(&mut r, b_rows, b_cols);
        let k = kronecker(&a, &b);
        prop_assert_eq!(k.rows(), a_rows * b_rows);
        prop_assert_eq!(k.cols(), a_cols * b_cols);
        for i1 in 0..a_rows {
            for j1 in 0..a_cols {
                for i2 in 0..b_rows {
                    for j2 in 0..b_cols {
                        let lhs = k.get(i1 * b_rows + i2, j1 * b_cols + j2);
                        prop_assert_eq!(lhs, a.get(i1, j1) * b.get(i2, j2));
                    }
                }
            }
        }
    }
}
