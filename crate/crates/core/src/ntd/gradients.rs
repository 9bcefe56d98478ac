//! Gradient arithmetic for the NTD cost `D = 1/2 ||Y - Yhat||_F^2` with
//! `Yhat = G x_1 A(1) ... x_N A(N)`, in two evaluation routes.
//!
//! Direct route: the data-dependent term contracts the full tensor,
//! `Q(n) = unfold(Y x_{p!=n} A(p)^T, n) G_(n)^T`, at a cost that scales with
//! the number of data entries.
//!
//! Compressed route: with the data replaced by a Tucker model
//! `(G~, A~(p))`, every term collapses to products of R_p x R_p Gram and
//! cross matrices with the small cores,
//!
//! ```text
//! X  = G  x_{p!=n} (A(p)^T A(p)),    X~ = G~ x_{p!=n} (A(p)^T A~(p)),
//! dD/dA(n) = A(n) (X_(n) G_(n)^T) - A~(n) (X~_(n) G_(n)^T),
//! dD/dG    = X x_n (A(n)^T A(n)) - X~ x_n (A(n)^T A~(n)),
//! ```
//!
//! so no intermediate ever grows past the factor matrices themselves.
//! [`GradientWorkspace`] caches the Gram/cross matrices and the two small
//! tensors for one block and tallies the floating-point multiplies it
//! performs, which the flop model in [`gradient_flop_estimate`] predicts.

use std::cell::Cell;

use crate::error::{CoreError, Result};
use crate::lra::TuckerModel;
use crate::tensor::kernels::{fold, unfold};
use crate::tensor::linalg::{matmul, matmul_transpose_a, matmul_transpose_b};
use crate::tensor::{DenseTensor, Matrix};

use super::SolverConfig;

/// The tensor being fitted: either the raw data or its low-rank surrogate.
#[derive(Debug, Clone, Copy)]
pub enum NtdData<'a> {
    Dense(&'a DenseTensor),
    Compressed(&'a TuckerModel),
}

impl<'a> NtdData<'a> {
    pub fn extents(&self) -> Vec<usize> {
        match self {
            NtdData::Dense(t) => t.shape().to_vec(),
            NtdData::Compressed(m) => m.extents(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            NtdData::Dense(t) => t.order(),
            NtdData::Compressed(m) => m.order(),
        }
    }

    /// `||Y||_F^2`, evaluated through the factor Gram matrices in the
    /// compressed case so the full tensor is never formed.
    pub fn squared_norm(&self) -> f64 {
        match self {
            NtdData::Dense(t) => t.squared_norm(),
            NtdData::Compressed(m) => {
                let mut acc = m.core().clone();
                for (p, f) in m.factors().iter().enumerate() {
                    let g = matmul_transpose_a(f, f);
                    acc = apply_matrix_along_mode(&acc, &g, p);
                }
                acc.dot(m.core()).expect("shapes match by construction")
            }
        }
    }
}

/// `t x_mode a` without materializing transposes; plain mode product.
fn apply_matrix_along_mode(t: &DenseTensor, a: &Matrix, mode: usize) -> DenseTensor {
    let unfolded = unfold(t, mode).expect("mode checked by callers");
    let product = matmul(a, &unfolded);
    let mut shape = t.shape().to_vec();
    shape[mode] = a.rows();
    fold(&product, mode, &shape).expect("shapes consistent")
}

/// `t x_mode a^T` for a factor `a` with `a.rows() == extent(mode)`.
fn apply_transposed_along_mode(t: &DenseTensor, a: &Matrix, mode: usize) -> DenseTensor {
    let unfolded = unfold(t, mode).expect("mode checked by callers");
    let product = matmul_transpose_a(a, &unfolded);
    let mut shape = t.shape().to_vec();
    shape[mode] = a.cols();
    fold(&product, mode, &shape).expect("shapes consistent")
}

/// Per-block quantities every update rule consumes: `t = B^T B` expressed as
/// `X_(n) G_(n)^T`, and the data term `q` (`Y_(n) B` or its compressed form).
#[derive(Debug, Clone)]
pub(crate) struct BlockTerms {
    /// `R_n x R_n` Gram of the fixed-block design matrix.
    pub t: Matrix,
    /// `I_n x R_n` data term.
    pub q: Matrix,
}

/// Core-block quantities: the data term `Y x_p A(p)^T` (or compressed
/// counterpart) plus all factor Gram matrices.
#[derive(Debug, Clone)]
pub(crate) struct CoreTerms {
    pub numerator: DenseTensor,
    pub grams: Vec<Matrix>,
}

impl CoreTerms {
    /// `g x_p (A(p)^T A(p))` over all modes.
    pub fn apply_grams(&self, g: &DenseTensor) -> DenseTensor {
        let mut out = g.clone();
        for (p, gram) in self.grams.iter().enumerate() {
            out = apply_matrix_along_mode(&out, gram, p);
        }
        out
    }
}

fn check_conformable(data: &NtdData, model: &TuckerModel) -> Result<()> {
    let extents = data.extents();
    if extents != model.extents() {
        return Err(CoreError::ShapeMismatch(format!(
            "data extents {:?} vs model extents {:?}",
            extents,
            model.extents()
        )));
    }
    if let NtdData::Compressed(lra) = data {
        if lra.order() != model.order() {
            return Err(CoreError::ShapeMismatch(format!(
                "lra order {} vs model order {}",
                lra.order(),
                model.order()
            )));
        }
    }
    Ok(())
}

/// `X = G x_{p != skip} (A(p)^T A(p))` for the current model.
fn x_tensor(model: &TuckerModel, skip: usize) -> DenseTensor {
    let mut x = model.core().clone();
    for (p, f) in model.factors().iter().enumerate() {
        if p == skip {
            continue;
        }
        let gram = matmul_transpose_a(f, f);
        x = apply_matrix_along_mode(&x, &gram, p);
    }
    x
}

pub(crate) fn factor_terms(
    data: &NtdData,
    model: &TuckerModel,
    mode: usize,
) -> Result<BlockTerms> {
    check_conformable(data, model)?;
    if mode >= model.order() {
        return Err(CoreError::InvalidMode {
            mode,
            order: model.order(),
        });
    }
    match data {
        NtdData::Dense(y) => {
            let x = x_tensor(model, mode);
            let core_unf = unfold(model.core(), mode)?;
            let t = matmul_transpose_b(&unfold(&x, mode)?, &core_unf);
            // Y x_{p != mode} A(p)^T, contracted mode by mode.
            let mut yx: DenseTensor = (*y).clone();
            for (p, f) in model.factors().iter().enumerate() {
                if p == mode {
                    continue;
                }
                yx = apply_transposed_along_mode(&yx, f, p);
            }
            let q = matmul_transpose_b(&unfold(&yx, mode)?, &core_unf);
            Ok(BlockTerms { t, q })
        }
        NtdData::Compressed(lra) => {
            let ws = build_workspace(lra, model, mode)?;
            ws.block_terms(lra, model)
        }
    }
}

pub(crate) fn core_terms(data: &NtdData, model: &TuckerModel) -> Result<CoreTerms> {
    check_conformable(data, model)?;
    let grams: Vec<Matrix> = model
        .factors()
        .iter()
        .map(|f| matmul_transpose_a(f, f))
        .collect();
    let numerator = match data {
        NtdData::Dense(y) => {
            let mut acc: DenseTensor = (*y).clone();
            for (p, f) in model.factors().iter().enumerate() {
                acc = apply_transposed_along_mode(&acc, f, p);
            }
            acc
        }
        NtdData::Compressed(lra) => {
            let mut acc = lra.core().clone();
            for p in 0..model.order() {
                let cross = matmul_transpose_a(model.factor(p), lra.factor(p));
                acc = apply_matrix_along_mode(&acc, &cross, p);
            }
            acc
        }
    };
    Ok(CoreTerms { numerator, grams })
}

/// Cached per-block quantities for the compressed gradient route, with a
/// tally of scalar multiplies performed through it.
#[derive(Debug)]
pub struct GradientWorkspace {
    mode: usize,
    /// `A(p)^T A(p)`, all modes.
    grams: Vec<Matrix>,
    /// `A(p)^T A~(p)`, all modes.
    cross: Vec<Matrix>,
    /// `G x_{p != mode} grams[p]`; mode `mode` stays at rank R_mode.
    x: DenseTensor,
    /// `G~ x_{p != mode} cross[p]`.
    x_tilde: DenseTensor,
    multiplies: Cell<u64>,
}

impl GradientWorkspace {
    pub fn mode(&self) -> usize {
        self.mode
    }

    /// Scalar multiplies tallied by workspace construction and every
    /// gradient/term evaluation routed through it.
    pub fn multiply_count(&self) -> u64 {
        self.multiplies.get()
    }

    /// `G x_{p != mode} (A(p)^T A(p))`.
    pub fn x(&self) -> &DenseTensor {
        &self.x
    }

    /// `G~ x_{p != mode} (A(p)^T A~(p))`.
    pub fn x_tilde(&self) -> &DenseTensor {
        &self.x_tilde
    }

    pub fn reset_multiply_count(&self) {
        self.multiplies.set(0);
    }

    fn tally(&self, count: u64) {
        self.multiplies.set(self.multiplies.get() + count);
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode != self.mode {
            return Err(CoreError::InvalidArgument(format!(
                "stale workspace: built for mode {}, asked for mode {mode}",
                self.mode
            )));
        }
        Ok(())
    }

    /// `t = X_(n) G_(n)^T` and `q = A~(n) (X~_(n) G_(n)^T)` for the block
    /// this workspace was built for.
    pub(crate) fn block_terms(&self, lra: &TuckerModel, model: &TuckerModel) -> Result<BlockTerms> {
        let n = self.mode;
        let core_unf = unfold(model.core(), n)?;
        let x_unf = unfold(&self.x, n)?;
        let t = matmul_transpose_b(&x_unf, &core_unf);
        self.tally((x_unf.rows() * x_unf.cols() * core_unf.rows()) as u64);
        let xt_unf = unfold(&self.x_tilde, n)?;
        let small = matmul_transpose_b(&xt_unf, &core_unf);
        self.tally((xt_unf.rows() * xt_unf.cols() * core_unf.rows()) as u64);
        let q = matmul(lra.factor(n), &small);
        self.tally((lra.factor(n).rows() * lra.factor(n).cols() * small.cols()) as u64);
        Ok(BlockTerms { t, q })
    }
}

/// Builds the Gram/cross matrices and the tensors `X`, `X~` for updates of
/// block `mode`, using only products against the small cores.
pub fn build_workspace(
    lra: &TuckerModel,
    model: &TuckerModel,
    mode: usize,
) -> Result<GradientWorkspace> {
    if lra.extents() != model.extents() {
        return Err(CoreError::ShapeMismatch(format!(
            "lra extents {:?} vs model extents {:?}",
            lra.extents(),
            model.extents()
        )));
    }
    if mode >= model.order() {
        return Err(CoreError::InvalidMode {
            mode,
            order: model.order(),
        });
    }
    let multiplies = Cell::new(0u64);
    let tally = |c: usize| multiplies.set(multiplies.get() + c as u64);
    let mut grams = Vec::with_capacity(model.order());
    let mut cross = Vec::with_capacity(model.order());
    for p in 0..model.order() {
        let a = model.factor(p);
        let at = lra.factor(p);
        grams.push(matmul_transpose_a(a, a));
        tally(a.rows() * a.cols() * a.cols());
        cross.push(matmul_transpose_a(a, at));
        tally(a.rows() * a.cols() * at.cols());
    }
    let mut x = model.core().clone();
    let mut x_tilde = lra.core().clone();
    for p in 0..model.order() {
        if p == mode {
            continue;
        }
        tally(grams[p].rows() * grams[p].cols() * (x.len() / x.shape()[p]));
        x = apply_matrix_along_mode(&x, &grams[p], p);
        tally(cross[p].rows() * cross[p].cols() * (x_tilde.len() / x_tilde.shape()[p]));
        x_tilde = apply_matrix_along_mode(&x_tilde, &cross[p], p);
    }
    Ok(GradientWorkspace {
        mode,
        grams,
        cross,
        x,
        x_tilde,
        multiplies,
    })
}

/// Gradient of the cost with respect to factor `mode`, direct route.
/// `fro_penalty` adds the Tikhonov term `lambda_n A(n)`.
pub fn grad_factor_direct(
    data: &DenseTensor,
    model: &TuckerModel,
    mode: usize,
    fro_penalty: f64,
) -> Result<Matrix> {
    let terms = factor_terms(&NtdData::Dense(data), model, mode)?;
    gradient_from_terms(model.factor(mode), &terms, fro_penalty)
}

/// Gradient of the cost with respect to the core, direct route.
/// `l1_penalty` shifts every entry by the sparsity weight.
pub fn grad_core_direct(
    data: &DenseTensor,
    model: &TuckerModel,
    l1_penalty: f64,
) -> Result<DenseTensor> {
    let terms = core_terms(&NtdData::Dense(data), model)?;
    core_gradient_from_terms(model.core(), &terms, l1_penalty)
}

/// Factor gradient through the compressed route.
pub fn grad_factor_lra(
    ws: &GradientWorkspace,
    lra: &TuckerModel,
    model: &TuckerModel,
    mode: usize,
    fro_penalty: f64,
) -> Result<Matrix> {
    ws.check_mode(mode)?;
    let terms = ws.block_terms(lra, model)?;
    let a = model.factor(mode);
    ws.tally((a.rows() * a.cols() * terms.t.cols()) as u64);
    gradient_from_terms(a, &terms, fro_penalty)
}

/// Core gradient through the compressed route:
/// `X x_n (A^T A) - X~ x_n (A^T A~)`.
///
/// The data term is cached in the workspace; the model term is rebuilt from
/// the live core so the gradient stays valid across core inner iterations.
pub fn grad_core_lra(
    ws: &GradientWorkspace,
    model: &TuckerModel,
    l1_penalty: f64,
) -> Result<DenseTensor> {
    if model.core().shape() != ws.x.shape() {
        return Err(CoreError::ShapeMismatch(format!(
            "workspace built for core {:?}, model core is {:?}",
            ws.x.shape(),
            model.core().shape()
        )));
    }
    let n = ws.mode;
    let mut first = model.core().clone();
    for (p, gram) in ws.grams.iter().enumerate() {
        ws.tally((gram.rows() * gram.cols() * (first.len() / first.shape()[p])) as u64);
        first = apply_matrix_along_mode(&first, gram, p);
    }
    let cross_n = &ws.cross[n];
    ws.tally((cross_n.rows() * cross_n.cols() * (ws.x_tilde.len() / ws.x_tilde.shape()[n])) as u64);
    let second = apply_matrix_along_mode(&ws.x_tilde, cross_n, n);
    let mut grad = first.sub(&second)?;
    if l1_penalty != 0.0 {
        let data: Vec<f64> = grad.data().iter().map(|v| v + l1_penalty).collect();
        grad = DenseTensor::from_vec_unchecked(grad.shape().to_vec(), data);
    }
    Ok(grad)
}

fn gradient_from_terms(a: &Matrix, terms: &BlockTerms, fro_penalty: f64) -> Result<Matrix> {
    let mut grad = matmul(a, &terms.t).sub(&terms.q)?;
    if fro_penalty != 0.0 {
        grad = grad.add(&a.scale(fro_penalty))?;
    }
    Ok(grad)
}

fn core_gradient_from_terms(
    g: &DenseTensor,
    terms: &CoreTerms,
    l1_penalty: f64,
) -> Result<DenseTensor> {
    let mut grad = terms.apply_grams(g).sub(&terms.numerator)?;
    if l1_penalty != 0.0 {
        let data: Vec<f64> = grad.data().iter().map(|v| v + l1_penalty).collect();
        grad = DenseTensor::from_vec_unchecked(grad.shape().to_vec(), data);
    }
    Ok(grad)
}

/// Cost `1/2 ||Y - Yhat||^2 + lambda ||G||_1 + sum_n lambda_n/2 ||A(n)||_F^2`.
///
/// With compressed data the residual is expanded through Gram and cross
/// matrices, so evaluation never touches full-size tensors.
pub fn cost(data: &NtdData, model: &TuckerModel, cfg: &SolverConfig) -> Result<f64> {
    let terms = core_terms(data, model)?;
    let residual_sq = residual_sq_from_terms(data.squared_norm(), &terms, model.core());
    Ok(0.5 * residual_sq + penalty_value(model, cfg))
}

pub(crate) fn residual_sq_from_terms(
    data_sq: f64,
    terms: &CoreTerms,
    core: &DenseTensor,
) -> f64 {
    let cross = terms
        .numerator
        .dot(core)
        .expect("core terms conform to the core");
    let model_sq = terms
        .apply_grams(core)
        .dot(core)
        .expect("core terms conform to the core");
    (data_sq - 2.0 * cross + model_sq).max(0.0)
}

pub(crate) fn penalty_value(model: &TuckerModel, cfg: &SolverConfig) -> f64 {
    let mut p = 0.0;
    if cfg.l1_core != 0.0 {
        p += cfg.l1_core * model.core().l1_norm();
    }
    for (n, f) in model.factors().iter().enumerate() {
        let lambda = cfg.fro(n);
        if lambda != 0.0 {
            let norm = f.frobenius_norm();
            p += 0.5 * lambda * norm * norm;
        }
    }
    p
}

/// Step-size bound for factor blocks: `||X_(n) G_(n)^T||_F`, an upper bound
/// on the spectral norm of the block Hessian `B^T B`.
pub fn lipschitz_factor(model: &TuckerModel, mode: usize) -> Result<f64> {
    if mode >= model.order() {
        return Err(CoreError::InvalidMode {
            mode,
            order: model.order(),
        });
    }
    let x = x_tensor(model, mode);
    let t = matmul_transpose_b(&unfold(&x, mode)?, &unfold(model.core(), mode)?);
    Ok(t.frobenius_norm())
}

/// Step-size bound for the core block: `prod_n ||A(n)^T A(n)||_F`, the
/// Frobenius norm of the Kronecker-structured Hessian `F^T F`.
pub fn lipschitz_core(model: &TuckerModel) -> f64 {
    model
        .factors()
        .iter()
        .map(|f| matmul_transpose_a(f, f).frobenius_norm())
        .product()
}

pub(crate) fn lipschitz_factor_from_terms(terms: &BlockTerms) -> f64 {
    terms.t.frobenius_norm()
}

pub(crate) fn lipschitz_core_from_terms(terms: &CoreTerms) -> f64 {
    terms.grams.iter().map(|g| g.frobenius_norm()).product()
}

/// Scalar multiply count of one gradient evaluation under the cubical sizing
/// `I_n = I`, `R_n = R~_n = R`:
///
/// - compressed route: `2 I R^2 + 2 R^(N+1)`
/// - direct route: `I R^2 + R^(N+1) + sum_{k=1}^{N} R^k I^(N+1-k)`
pub fn gradient_flop_estimate(order: u32, extent: u64, rank: u64, with_lra: bool) -> u128 {
    let i = extent as u128;
    let r = rank as u128;
    let n = order;
    let r_pow_n1 = r.pow(n + 1);
    if with_lra {
        2 * i * r * r + 2 * r_pow_n1
    } else {
        let mut chain = 0u128;
        for k in 1..=n {
            chain += r.pow(k) * i.pow(n + 1 - k);
        }
        i * r * r + r_pow_n1 + chain
    }
}
