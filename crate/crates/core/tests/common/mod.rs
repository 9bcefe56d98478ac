//! Shared fixtures for the integration suites.

use ntd_core::lra::TuckerModel;
use ntd_core::tensor::{DenseTensor, Matrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.random::<f64>() - 0.5).collect();
    DenseTensor::new(shape.to_vec(), data).unwrap()
}

pub fn random_nonneg_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.random::<f64>()).collect();
    DenseTensor::new(shape.to_vec(), data).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random::<f64>() - 0.5).collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// Model with entries in (0.1, 1.1): strictly positive, away from the l1
/// kink, so finite differences of the penalized cost stay valid.
pub fn random_positive_model(
    rng: &mut ChaCha8Rng,
    extents: &[usize],
    ranks: &[usize],
) -> TuckerModel {
    let factors = extents
        .iter()
        .zip(ranks)
        .map(|(&i, &r)| {
            Matrix::new(i, r, (0..i * r).map(|_| rng.random::<f64>() + 0.1).collect()).unwrap()
        })
        .collect();
    let core_len: usize = ranks.iter().product();
    let core = DenseTensor::new(
        ranks.to_vec(),
        (0..core_len).map(|_| rng.random::<f64>() + 0.1).collect(),
    )
    .unwrap();
    TuckerModel::new(core, factors).unwrap()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    diff / scale
}
