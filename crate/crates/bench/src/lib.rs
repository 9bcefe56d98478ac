//! Shared fixtures for the criterion benchmarks.

use ntd_core::lra::{reconstruct, TuckerModel};
use ntd_core::tensor::{DenseTensor, Matrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_nonneg_tensor(seed: u64, shape: &[usize]) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = shape.iter().product();
    DenseTensor::new(
        shape.to_vec(),
        (0..len).map(|_| rng.random::<f64>()).collect(),
    )
    .unwrap()
}

pub fn random_model(seed: u64, extents: &[usize], ranks: &[usize]) -> TuckerModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = extents
        .iter()
        .zip(ranks)
        .map(|(&i, &r)| {
            Matrix::new(i, r, (0..i * r).map(|_| rng.random::<f64>() + 0.05).collect()).unwrap()
        })
        .collect();
    let core_len: usize = ranks.iter().product();
    let core = DenseTensor::new(
        ranks.to_vec(),
        (0..core_len).map(|_| rng.random::<f64>() + 0.05).collect(),
    )
    .unwrap();
    TuckerModel::new(core, factors).unwrap()
}

/// Exact low-rank data tensor for compression benchmarks.
pub fn exact_rank_tensor(seed: u64, extents: &[usize], ranks: &[usize]) -> DenseTensor {
    reconstruct(&random_model(seed, extents, ranks))
}
