//! Low multilinear-rank approximation: truncated HOSVD, randomized range
//! compression, weighted Tucker completion, and reconstruction.
//!
//! The compression step produces a [`TuckerModel`] `(G~, A~(n))` with
//! orthonormal factor columns; the subsequent nonnegative solvers in
//! [`crate::ntd`] consume that model instead of the raw tensor.

pub mod completion;
pub mod io;

pub use completion::{weighted_tucker_complete, CompletionPolicy};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::rng::derive_seed;
use crate::tensor::kernels::{fold, mode_product, multi_mode_product, unfold};
use crate::tensor::linalg::{
    gram, householder_q, matmul, matmul_transpose_a, matmul_transpose_b, orthonormal_completion,
    sym_eig_desc,
};
use crate::tensor::{DenseTensor, Matrix};

/// Tucker model: a core tensor plus one factor matrix per mode.
///
/// Serves both as the LRA output and as the nonnegative estimate produced by
/// the solvers. A mode may be flagged identity-fixed, in which case its
/// factor is a square identity that solvers never touch.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    core: DenseTensor,
    factors: Vec<Matrix>,
    identity_fixed: Vec<bool>,
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        let identity_fixed = vec![false; factors.len()];
        Self::with_identity_modes(core, factors, identity_fixed)
    }

    pub fn with_identity_modes(
        core: DenseTensor,
        factors: Vec<Matrix>,
        identity_fixed: Vec<bool>,
    ) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        if identity_fixed.len() != factors.len() {
            return Err(CoreError::ShapeMismatch(
                "identity flag count does not match mode count".into(),
            ));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[n] {
                return Err(CoreError::ShapeMismatch(format!(
                    "factor {n} has {} columns but core extent is {}",
                    f.cols(),
                    core.shape()[n]
                )));
            }
            if identity_fixed[n] {
                if f.rows() != f.cols() {
                    return Err(CoreError::ShapeMismatch(format!(
                        "identity-fixed factor {n} is {}x{}, must be square",
                        f.rows(),
                        f.cols()
                    )));
                }
                let expected = Matrix::identity(f.rows());
                if f != &expected {
                    return Err(CoreError::InvalidArgument(format!(
                        "identity-fixed factor {n} is not the identity"
                    )));
                }
            }
        }
        Ok(Self {
            core,
            factors,
            identity_fixed,
        })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Matrix {
        &self.factors[mode]
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    /// Per-mode column counts of the factors (the core extents).
    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    /// Per-mode row counts of the factors (the data extents).
    pub fn extents(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn is_identity_fixed(&self, mode: usize) -> bool {
        self.identity_fixed[mode]
    }

    pub fn identity_flags(&self) -> &[bool] {
        &self.identity_fixed
    }

    pub(crate) fn set_factor(&mut self, mode: usize, factor: Matrix) {
        debug_assert_eq!(factor.cols(), self.core.shape()[mode]);
        debug_assert!(!self.identity_fixed[mode]);
        self.factors[mode] = factor;
    }

    pub(crate) fn set_core(&mut self, core: DenseTensor) {
        debug_assert_eq!(core.shape(), self.core.shape());
        self.core = core;
    }

    /// Swaps in a new factor after checking shape and the identity flag.
    pub fn replace_factor(&mut self, mode: usize, factor: Matrix) -> Result<()> {
        if mode >= self.order() {
            return Err(CoreError::InvalidMode {
                mode,
                order: self.order(),
            });
        }
        if self.identity_fixed[mode] {
            return Err(CoreError::InvalidArgument(format!(
                "mode {mode} is identity-fixed"
            )));
        }
        let old = &self.factors[mode];
        if factor.rows() != old.rows() || factor.cols() != old.cols() {
            return Err(CoreError::ShapeMismatch(format!(
                "factor {mode}: {}x{} vs expected {}x{}",
                factor.rows(),
                factor.cols(),
                old.rows(),
                old.cols()
            )));
        }
        self.factors[mode] = factor;
        Ok(())
    }

    /// Swaps in a new core after checking its shape.
    pub fn replace_core(&mut self, core: DenseTensor) -> Result<()> {
        if core.shape() != self.core.shape() {
            return Err(CoreError::ShapeMismatch(format!(
                "core {:?} vs expected {:?}",
                core.shape(),
                self.core.shape()
            )));
        }
        self.core = core;
        Ok(())
    }
}

/// Weight tensor with entries in `[0, 1]`; binary 0/1 weights encode missing
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor(DenseTensor);

impl WeightTensor {
    pub fn new(t: DenseTensor) -> Result<Self> {
        for &v in t.data() {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::WeightOutOfRange { value: v });
            }
        }
        if t.data().iter().all(|&v| v == 0.0) {
            return Err(CoreError::AllZeroWeights);
        }
        Ok(Self(t))
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.0
    }

    pub fn is_binary(&self) -> bool {
        self.0.data().iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

fn check_ranks(shape: &[usize], ranks: &[usize], slack: usize) -> Result<()> {
    if ranks.len() != shape.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "{} ranks for order-{} tensor",
            ranks.len(),
            shape.len()
        )));
    }
    for (mode, (&r, &e)) in ranks.iter().zip(shape).enumerate() {
        if r == 0 {
            return Err(CoreError::InvalidArgument(format!("rank 0 in mode {mode}")));
        }
        if r + slack > e {
            return Err(CoreError::RankExceedsExtent {
                mode,
                rank: r + slack,
                extent: e,
            });
        }
    }
    Ok(())
}

/// Makes the largest-magnitude entry of every column nonnegative. SVD signs
/// are arbitrary; this pins them so decompositions are reproducible.
fn fix_column_signs(m: &mut Matrix) {
    for j in 0..m.cols() {
        let col = m.col_mut(j);
        let mut lead = 0.0f64;
        for &x in col.iter() {
            if x.abs() > lead.abs() {
                lead = x;
            }
        }
        if lead < 0.0 {
            for x in col.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Leading left singular vectors of `m`, via the eigendecomposition of
/// whichever Gram matrix is smaller. Columns beyond the numerical rank are
/// filled with a deterministic orthonormal completion.
fn leading_left_singular_vectors(m: &Matrix, count: usize) -> Result<Matrix> {
    let (rows, cols) = (m.rows(), m.cols());
    debug_assert!(count <= rows);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    if rows <= cols {
        let g = matmul_transpose_b(m, m); // m m^T, rows x rows
        let (_, vecs) = sym_eig_desc(&g)?;
        for j in 0..count {
            basis.push(vecs.col(j).to_vec());
        }
    } else {
        let g = gram(m); // m^T m, cols x cols
        let (vals, vecs) = sym_eig_desc(&g)?;
        let scale = vals.first().cloned().unwrap_or(0.0).max(0.0);
        let floor = scale * 1e-28;
        for j in 0..count.min(cols) {
            let lambda = vals[j];
            if lambda <= floor || lambda <= 0.0 {
                break;
            }
            let sigma = lambda.sqrt();
            let vj = Matrix::from_vec_unchecked(cols, 1, vecs.col(j).to_vec());
            let uj = matmul(m, &vj);
            basis.push(uj.col(0).iter().map(|x| x / sigma).collect());
        }
        orthonormal_completion(&mut basis, rows, count);
    }
    let mut data = Vec::with_capacity(rows * count);
    for b in basis.iter().take(count) {
        data.extend_from_slice(b);
    }
    let mut out = Matrix::from_vec_unchecked(rows, count, data);
    fix_column_signs(&mut out);
    Ok(out)
}

/// Truncated higher-order SVD at the given per-mode ranks.
///
/// Factor `n` holds the leading `ranks[n]` left singular vectors of the
/// mode-n unfolding; the core is the data contracted by the transposed
/// factors. Factors have orthonormal columns.
pub fn hosvd(t: &DenseTensor, ranks: &[usize]) -> Result<TuckerModel> {
    check_ranks(t.shape(), ranks, 0)?;
    let mut factors = Vec::with_capacity(t.order());
    for (n, &r) in ranks.iter().enumerate() {
        let m = unfold(t, n)?;
        factors.push(leading_left_singular_vectors(&m, r)?);
    }
    let core = project_core(t, &factors)?;
    TuckerModel::new(core, factors)
}

/// Randomized range-sketch Tucker: per mode, a Gaussian sketch of the
/// unfolding is orthonormalized and refined to `ranks[n]` directions.
/// Deterministic for a fixed `seed`.
pub fn randomized_tucker(
    t: &DenseTensor,
    ranks: &[usize],
    oversampling: usize,
    seed: u64,
) -> Result<TuckerModel> {
    check_ranks(t.shape(), ranks, oversampling)?;
    let mut factors = Vec::with_capacity(t.order());
    for (n, &r) in ranks.iter().enumerate() {
        let m = unfold(t, n)?;
        let sketch_cols = r + oversampling;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, n as u64));
        let omega_data: Vec<f64> = (0..m.cols() * sketch_cols)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let omega = Matrix::from_vec_unchecked(m.cols(), sketch_cols, omega_data);
        let q = householder_q(&matmul(&m, &omega))?;
        // Refine inside the sketched range: top directions of q^T m.
        let w = matmul_transpose_a(&q, &m);
        let (_, vecs) = sym_eig_desc(&matmul_transpose_b(&w, &w))?;
        let mut top = Matrix::zeros(sketch_cols, r);
        for j in 0..r {
            top.col_mut(j).copy_from_slice(vecs.col(j));
        }
        let mut factor = matmul(&q, &top);
        fix_column_signs(&mut factor);
        factors.push(factor);
    }
    let core = project_core(t, &factors)?;
    TuckerModel::new(core, factors)
}

fn project_core(t: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let mut core = t.clone();
    for (n, f) in factors.iter().enumerate() {
        let unfolded = unfold(&core, n)?;
        let contracted = matmul_transpose_a(f, &unfolded);
        let mut shape = core.shape().to_vec();
        shape[n] = f.cols();
        core = fold(&contracted, n, &shape)?;
    }
    Ok(core)
}

/// Expands a Tucker model back to a dense tensor: `core x_n factor(n)` over
/// all modes.
pub fn reconstruct(m: &TuckerModel) -> DenseTensor {
    let mut out = m.core().clone();
    for (n, f) in m.factors().iter().enumerate() {
        out = mode_product(&out, f, n).expect("model invariants guarantee conformability");
    }
    out
}

/// Storage footprint of a Tucker model relative to the dense tensor:
/// `(sum_n R_n I_n + prod_n R_n) / prod_n I_n`.
pub fn lra_storage_ratio(extents: &[usize], ranks: &[usize]) -> Result<f64> {
    check_ranks(extents, ranks, 0)?;
    let factors: f64 = extents
        .iter()
        .zip(ranks)
        .map(|(&i, &r)| (i * r) as f64)
        .sum();
    let core: f64 = ranks.iter().map(|&r| r as f64).product();
    let dense: f64 = extents.iter().map(|&i| i as f64).product();
    Ok((factors + core) / dense)
}

/// Reconstruction helpers shared by tests: relative Frobenius error.
pub fn relative_error(y: &DenseTensor, yhat: &DenseTensor) -> Result<f64> {
    let denom = y.frobenius_norm();
    if denom == 0.0 {
        return Err(CoreError::InvalidArgument(
            "relative error of a zero tensor".into(),
        ));
    }
    Ok(y.sub(yhat)?.frobenius_norm() / denom)
}

/// Applies the multi-mode product path as an independent evaluation route for
/// [`reconstruct`].
pub fn reconstruct_via_multi_mode(m: &TuckerModel) -> Result<DenseTensor> {
    let refs: Vec<Option<&Matrix>> = m.factors().iter().map(Some).collect();
    multi_mode_product(m.core(), &refs)
}
