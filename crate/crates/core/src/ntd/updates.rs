//! Block update rules: multiplicative updates, HALS column sweeps,
//! accelerated projected gradient, and (projected) least squares.
//!
//! Every rule consumes the precomputed [`BlockTerms`]/[`CoreTerms`], which
//! stay constant while a block is iterated, so repeated inner updates cost
//! only small-matrix arithmetic.

use crate::error::{CoreError, Result};
use crate::tensor::kernels::{fold, unfold};
use crate::tensor::linalg::{matmul, solve_lu};
use crate::tensor::{DenseTensor, Matrix, EPS_DIV};

use super::gradients::{BlockTerms, CoreTerms};

/// Diagonal floor below which a HALS column update is skipped.
pub const EPS_DIAG: f64 = 1e-12;

/// Multiplicative update of one factor:
/// `A <- A (.) P+(Q) (/) (A T + lambda_n A + eps)`.
///
/// Zero entries are absorbing and nonnegativity is preserved exactly.
pub(crate) fn mu_factor_step(a: &Matrix, terms: &BlockTerms, fro_penalty: f64) -> Matrix {
    let mut denom = matmul(a, &terms.t);
    if fro_penalty != 0.0 {
        denom = denom
            .add(&a.scale(fro_penalty))
            .expect("same shape by construction");
    }
    let mut out = a.clone();
    let num = terms.q.data();
    let den = denom.data();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let n = num[i].max(0.0);
        let d = (den[i] + EPS_DIV).max(EPS_DIV);
        *v *= n / d;
    }
    out
}

/// Multiplicative update of the core:
/// `G <- G (.) P+(numerator) (/) (G x_p Gram_p + lambda + eps)`.
///
/// The sparsity weight enters the denominator, which keeps the update
/// nonnegative and the penalized cost non-increasing.
pub(crate) fn mu_core_step(g: &DenseTensor, terms: &CoreTerms, l1_penalty: f64) -> DenseTensor {
    let denom = terms.apply_grams(g);
    let mut out = g.clone();
    let num = terms.numerator.data();
    let den = denom.data();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let n = num[i].max(0.0);
        let d = (den[i] + l1_penalty + EPS_DIV).max(EPS_DIV);
        *v *= n / d;
    }
    out
}

/// One HALS sweep over the columns of a factor.
///
/// Column r moves to `P+(a_r + (q_r - A t_r) / t_rr)`, the exact minimizer
/// of the column subproblem. With `project_increment` the projection wraps
/// only the increment, matching the update in its originally printed form.
/// Columns whose diagonal `t_rr` falls below [`EPS_DIAG`] are skipped and
/// counted in the returned tally.
pub(crate) fn hals_factor_step(
    a: &Matrix,
    terms: &BlockTerms,
    fro_penalty: f64,
    project_increment: bool,
) -> (Matrix, u32) {
    let rank = a.cols();
    let rows = a.rows();
    let mut out = a.clone();
    let mut skipped = 0u32;
    for r in 0..rank {
        let t_rr = terms.t.get(r, r) + fro_penalty;
        if t_rr < EPS_DIAG {
            skipped += 1;
            continue;
        }
        // v = q_r - A t_r, using the live columns updated so far.
        let mut v = terms.q.col(r).to_vec();
        for l in 0..rank {
            let mut coeff = terms.t.get(l, r);
            if l == r {
                coeff += fro_penalty;
            }
            if coeff == 0.0 {
                continue;
            }
            let col = out.col(l);
            for i in 0..rows {
                v[i] -= coeff * col[i];
            }
        }
        let col = out.col_mut(r);
        if project_increment {
            for i in 0..rows {
                col[i] += v[i].max(0.0) / t_rr;
            }
        } else {
            for i in 0..rows {
                col[i] = (col[i] + v[i] / t_rr).max(0.0);
            }
        }
    }
    (out, skipped)
}

/// State of the accelerated projected-gradient recursion on one block.
#[derive(Debug, Clone)]
pub struct ApgState {
    extrapolation: Vec<f64>,
    alpha: f64,
    lipschitz: f64,
}

impl ApgState {
    pub fn new(block: &[f64], lipschitz: f64) -> Result<Self> {
        if lipschitz <= 0.0 || !lipschitz.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "nonpositive Lipschitz constant {lipschitz}"
            )));
        }
        Ok(Self {
            extrapolation: block.to_vec(),
            alpha: 1.0,
            lipschitz,
        })
    }

    /// Momentum scalar `alpha_k`; starts at 1 and never decreases.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn extrapolation(&self) -> &[f64] {
        &self.extrapolation
    }
}

/// Runs the accelerated projected-gradient recursion on a flat block:
///
/// ```text
/// G_k     = P+(E_k - grad(E_k) / L)          (projection optional)
/// a_{k+1} = (1 + sqrt(4 a_k^2 + 1)) / 2
/// E_{k+1} = G_k + (a_k - 1)/a_{k+1} (G_k - G_{k-1})
/// ```
///
/// for `iters` steps, with an optional early exit once the relative squared
/// change of the iterate drops below `early_exit_sq`. Returns the final
/// iterate and the recursion state.
pub fn apg_update_block<F>(
    block: &[f64],
    mut grad_at: F,
    lipschitz: f64,
    iters: usize,
    project: bool,
    early_exit_sq: f64,
) -> Result<(Vec<f64>, ApgState)>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut state = ApgState::new(block, lipschitz)?;
    let mut current = block.to_vec();
    for _ in 0..iters {
        let grad = grad_at(&state.extrapolation);
        debug_assert_eq!(grad.len(), current.len());
        let mut next: Vec<f64> = state
            .extrapolation
            .iter()
            .zip(&grad)
            .map(|(e, g)| e - g / state.lipschitz)
            .collect();
        if project {
            for x in next.iter_mut() {
                *x = x.max(0.0);
            }
        }
        let alpha_next = 0.5 * (1.0 + (4.0 * state.alpha * state.alpha + 1.0).sqrt());
        let momentum = (state.alpha - 1.0) / alpha_next;
        let mut change = 0.0;
        let mut scale = 0.0;
        state.extrapolation = next
            .iter()
            .zip(&current)
            .map(|(n, c)| {
                let d = n - c;
                change += d * d;
                scale += c * c;
                n + momentum * d
            })
            .collect();
        state.alpha = alpha_next;
        current = next;
        if change < early_exit_sq * scale.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((current, state))
}

/// Ridge weight for near-singular least-squares systems:
/// `1e-10 * trace / size`, with an absolute fallback for a zero trace.
fn ridge_eps(t: &Matrix) -> f64 {
    let tr = t.trace();
    if tr > 0.0 {
        1e-10 * tr / t.rows() as f64
    } else {
        1e-10
    }
}

/// Least-squares factor update `A = Q T^{-1}` with optional nonnegative
/// projection. A singular system falls back to a ridge-regularized solve;
/// the flag in the result reports whether that happened.
pub(crate) fn als_factor_step(
    terms: &BlockTerms,
    fro_penalty: f64,
    project: bool,
) -> Result<(Matrix, bool)> {
    let mut t = terms.t.clone();
    if fro_penalty != 0.0 {
        for i in 0..t.rows() {
            let v = t.get(i, i);
            t.set(i, i, v + fro_penalty);
        }
    }
    let qt = terms.q.transpose();
    let (solution, ridged) = match solve_lu(&t, &qt) {
        Ok(x) => (x, false),
        Err(CoreError::Singular { .. }) => {
            let eps = ridge_eps(&t);
            let mut reg = t.clone();
            for i in 0..reg.rows() {
                let v = reg.get(i, i);
                reg.set(i, i, v + eps);
            }
            (solve_lu(&reg, &qt)?, true)
        }
        Err(e) => return Err(e),
    };
    let mut a = solution.transpose();
    if project {
        a = a.project_nonneg();
    }
    Ok((a, ridged))
}

/// Least-squares core update `G = numerator x_p Gram_p^{-1}` (all modes),
/// with optional nonnegative projection. The sparsity weight shifts the
/// numerator before the solves.
pub(crate) fn als_core_step(
    terms: &CoreTerms,
    l1_penalty: f64,
    project: bool,
) -> Result<(DenseTensor, bool)> {
    let mut g = if l1_penalty != 0.0 {
        let data: Vec<f64> = terms
            .numerator
            .data()
            .iter()
            .map(|v| v - l1_penalty)
            .collect();
        DenseTensor::from_vec_unchecked(terms.numerator.shape().to_vec(), data)
    } else {
        terms.numerator.clone()
    };
    let mut ridged = false;
    for (p, gram) in terms.grams.iter().enumerate() {
        let unfolded = unfold(&g, p)?;
        let solved = match solve_lu(gram, &unfolded) {
            Ok(x) => x,
            Err(CoreError::Singular { .. }) => {
                ridged = true;
                let eps = ridge_eps(gram);
                let mut reg = gram.clone();
                for i in 0..reg.rows() {
                    let v = reg.get(i, i);
                    reg.set(i, i, v + eps);
                }
                solve_lu(&reg, &unfolded)?
            }
            Err(e) => return Err(e),
        };
        g = fold(&solved, p, g.shape())?;
    }
    if project {
        g = g.project_nonneg();
    }
    Ok((g, ridged))
}
