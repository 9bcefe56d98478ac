//! Weighted Tucker completion by EM-style imputation.
//!
//! Minimizes `||W (.) (Y - Yhat)||_F` for a weight tensor with entries in
//! `[0, 1]`: unobserved (or down-weighted) entries are filled from the
//! current model, the filled tensor is re-compressed by HOSVD, and the loop
//! repeats until the weighted fit stops changing.

use super::{hosvd, reconstruct, TuckerModel, WeightTensor};
use crate::error::{CoreError, Result};
use crate::tensor::DenseTensor;

/// Iteration policy for [`weighted_tucker_complete`].
#[derive(Debug, Clone, Copy)]
pub struct CompletionPolicy {
    pub max_iters: usize,
    /// Relative change of the weighted residual that counts as converged.
    pub tol: f64,
}

impl Default for CompletionPolicy {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

fn weighted_residual(y: &DenseTensor, w: &DenseTensor, yhat: &DenseTensor) -> f64 {
    y.data()
        .iter()
        .zip(w.data())
        .zip(yhat.data())
        .map(|((&yv, &wv), &hv)| {
            let d = wv * (yv - hv);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Blend of data and model: `w (.) y + (1 - w) (.) fill`.
fn blend(y: &DenseTensor, w: &DenseTensor, fill: &DenseTensor) -> DenseTensor {
    let data = y
        .data()
        .iter()
        .zip(w.data())
        .zip(fill.data())
        .map(|((&yv, &wv), &fv)| wv * yv + (1.0 - wv) * fv)
        .collect();
    DenseTensor::from_vec_unchecked(y.shape().to_vec(), data)
}

/// Completes a partially observed tensor with a rank-constrained Tucker
/// model. Missing entries start at the weighted mean of the observed ones.
/// Returns the fitted model; reconstruct it to read off imputed values.
pub fn weighted_tucker_complete(
    t: &DenseTensor,
    w: &WeightTensor,
    ranks: &[usize],
    policy: CompletionPolicy,
) -> Result<TuckerModel> {
    let wt = w.tensor();
    if wt.shape() != t.shape() {
        return Err(CoreError::ShapeMismatch(format!(
            "weights {:?} vs data {:?}",
            wt.shape(),
            t.shape()
        )));
    }
    let weight_mass: f64 = wt.data().iter().sum();
    let observed_mean = t
        .data()
        .iter()
        .zip(wt.data())
        .map(|(&yv, &wv)| wv * yv)
        .sum::<f64>()
        / weight_mass;

    let mean_fill = DenseTensor::from_vec_unchecked(t.shape().to_vec(), vec![observed_mean; t.len()]);
    let mut filled = blend(t, wt, &mean_fill);
    let mut model = hosvd(&filled, ranks)?;
    let mut prev = weighted_residual(t, wt, &reconstruct(&model));

    for _ in 1..policy.max_iters {
        filled = blend(t, wt, &reconstruct(&model));
        model = hosvd(&filled, ranks)?;
        let cur = weighted_residual(t, wt, &reconstruct(&model));
        if (prev - cur).abs() <= policy.tol * prev.max(f64::MIN_POSITIVE) {
            return Ok(model);
        }
        prev = cur;
    }
    Ok(model)
}
