//! Nonnegative Tucker solvers.
//!
//! [`solve`] runs block coordinate descent over the factor matrices and the
//! core: modes 1..N in order, core last, each block updated `inner_iters`
//! times by the configured rule before moving on. With `use_lra` the data
//! is first compressed by truncated HOSVD and all gradient arithmetic runs
//! against the compressed model ([`solve_compressed`] accepts one directly).
//!
//! Blocks marked `Unconstrained` take their exact least-squares solution
//! regardless of the algorithm (semi-NTD); `FixedIdentity` modes are never
//! touched.

pub mod gradients;
pub mod updates;

pub use gradients::{
    build_workspace, cost, grad_core_direct, grad_core_lra, grad_factor_direct, grad_factor_lra,
    gradient_flop_estimate, lipschitz_core, lipschitz_factor, GradientWorkspace, NtdData,
};
pub use updates::{apg_update_block, ApgState, EPS_DIAG};

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::lra::{hosvd, reconstruct, TuckerModel};
use crate::tensor::{DenseTensor, Matrix};

use gradients::{
    core_terms, factor_terms, lipschitz_core_from_terms, lipschitz_factor_from_terms,
    penalty_value, residual_sq_from_terms, BlockTerms, CoreTerms,
};
use updates::{als_core_step, als_factor_step, hals_factor_step, mu_core_step, mu_factor_step};

/// Block update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Multiplicative updates.
    Mu,
    /// Hierarchical alternating least squares on factor columns
    /// (multiplicative updates on the core).
    Hals,
    /// Accelerated projected gradient with Lipschitz step sizes.
    Apg,
    /// Projected least squares.
    Als,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mu => "mu",
            Algorithm::Hals => "hals",
            Algorithm::Apg => "apg",
            Algorithm::Als => "als",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu" => Ok(Algorithm::Mu),
            "hals" => Ok(Algorithm::Hals),
            "apg" => Ok(Algorithm::Apg),
            "als" => Ok(Algorithm::Als),
            other => Err(CoreError::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected mu, hals, apg, or als)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Constraint on one factor matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeConstraint {
    Nonnegative,
    /// Updated by unprojected least squares (semi-NTD).
    Unconstrained,
    /// Pinned to the identity; requires rank == extent.
    FixedIdentity,
}

/// Constraint on the core tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreConstraint {
    Nonnegative,
    Unconstrained,
}

/// Solver configuration. `new` fills the defaults: 20 inner iterations,
/// 500 outer sweeps, tolerance 1e-6 on the squared block change, all blocks
/// nonnegative, no penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub use_lra: bool,
    /// Compression ranks; defaults to `ntd_ranks` when `None`.
    pub lra_ranks: Option<Vec<usize>>,
    pub ntd_ranks: Vec<usize>,
    pub mode_constraints: Vec<ModeConstraint>,
    pub core_constraint: CoreConstraint,
    /// l1 weight on the core (sparsity).
    pub l1_core: f64,
    /// Per-mode Frobenius (Tikhonov) weights on the factors.
    pub fro_factor: Vec<f64>,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Stop once the largest squared block change in a sweep falls below.
    pub tol: f64,
    pub seed: u64,
    /// Project only the HALS increment instead of the whole column.
    pub hals_project_increment: bool,
}

impl SolverConfig {
    pub fn new(ntd_ranks: Vec<usize>) -> Self {
        let n = ntd_ranks.len();
        Self {
            algorithm: Algorithm::Mu,
            use_lra: false,
            lra_ranks: None,
            ntd_ranks,
            mode_constraints: vec![ModeConstraint::Nonnegative; n],
            core_constraint: CoreConstraint::Nonnegative,
            l1_core: 0.0,
            fro_factor: vec![0.0; n],
            inner_iters: 20,
            outer_iters: 500,
            tol: 1e-6,
            seed: 0,
            hals_project_increment: false,
        }
    }

    pub(crate) fn fro(&self, mode: usize) -> f64 {
        self.fro_factor.get(mode).copied().unwrap_or(0.0)
    }

    fn all_nonnegative(&self) -> bool {
        self.core_constraint == CoreConstraint::Nonnegative
            && self
                .mode_constraints
                .iter()
                .all(|c| *c != ModeConstraint::Unconstrained)
    }

    fn validate(&self, extents: &[usize]) -> Result<()> {
        let order = extents.len();
        if self.ntd_ranks.len() != order {
            return Err(CoreError::ShapeMismatch(format!(
                "{} ranks for order-{order} data",
                self.ntd_ranks.len()
            )));
        }
        if self.mode_constraints.len() != order {
            return Err(CoreError::ShapeMismatch(format!(
                "{} mode constraints for order-{order} data",
                self.mode_constraints.len()
            )));
        }
        if self.fro_factor.len() != order {
            return Err(CoreError::ShapeMismatch(format!(
                "{} factor penalties for order-{order} data",
                self.fro_factor.len()
            )));
        }
        for (mode, (&r, &e)) in self.ntd_ranks.iter().zip(extents).enumerate() {
            if r == 0 {
                return Err(CoreError::InvalidArgument(format!("rank 0 in mode {mode}")));
            }
            if r > e {
                return Err(CoreError::RankExceedsExtent {
                    mode,
                    rank: r,
                    extent: e,
                });
            }
            if self.mode_constraints[mode] == ModeConstraint::FixedIdentity && r != e {
                return Err(CoreError::InvalidArgument(format!(
                    "identity-fixed mode {mode} needs rank {e} == extent, got {r}"
                )));
            }
        }
        if let Some(lr) = &self.lra_ranks {
            if lr.len() != order {
                return Err(CoreError::ShapeMismatch(format!(
                    "{} compression ranks for order-{order} data",
                    lr.len()
                )));
            }
            for (mode, (&r, &e)) in lr.iter().zip(extents).enumerate() {
                if r == 0 || r > e {
                    return Err(CoreError::RankExceedsExtent {
                        mode,
                        rank: r,
                        extent: e,
                    });
                }
            }
        }
        if self.inner_iters == 0 || self.outer_iters == 0 {
            return Err(CoreError::InvalidArgument(
                "inner_iters and outer_iters must be at least 1".into(),
            ));
        }
        if self.tol < 0.0 || self.l1_core < 0.0 || self.fro_factor.iter().any(|&l| l < 0.0) {
            return Err(CoreError::InvalidArgument(
                "tolerance and penalty weights must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Largest squared block change fell below the tolerance.
    Converged { sweeps: usize },
    MaxIterations,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged { sweeps } => write!(f, "converged@{sweeps}"),
            Termination::MaxIterations => f.write_str("max_iterations"),
        }
    }
}

/// Counters for numerical fallbacks taken during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NumericalFlags {
    /// Least-squares solves that needed ridge regularization.
    pub ridge_regularized: u32,
    /// HALS column updates skipped for a vanishing diagonal.
    pub hals_columns_skipped: u32,
}

/// Outcome of a solver run: the fitted model plus per-sweep traces.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub model: TuckerModel,
    /// Compression model when `solve` ran with `use_lra`.
    pub lra: Option<TuckerModel>,
    /// Penalized cost after each outer sweep.
    pub cost_trace: Vec<f64>,
    /// Fit (percent) of the model against the tensor the solver iterated on
    /// (the compressed surrogate when LRA is active).
    pub fit_trace: Vec<f64>,
    /// Wall-clock milliseconds from the start of the sweep loop, per sweep.
    pub iter_elapsed_ms: Vec<f64>,
    /// Fit (percent) against the input data tensor.
    pub final_fit: f64,
    pub lra_elapsed_ms: f64,
    pub ntd_elapsed_ms: f64,
    /// Outer sweeps executed.
    pub iterations: usize,
    pub termination: Termination,
    pub flags: NumericalFlags,
}

/// One multiplicative update of factor `mode` against dense or compressed
/// data. Preserves nonnegativity exactly; zero entries are absorbing.
pub fn mu_update_factor(
    data: &NtdData,
    model: &TuckerModel,
    mode: usize,
    fro_penalty: f64,
) -> Result<Matrix> {
    let terms = factor_terms(data, model, mode)?;
    Ok(mu_factor_step(model.factor(mode), &terms, fro_penalty))
}

/// One multiplicative update of the core.
pub fn mu_update_core(
    data: &NtdData,
    model: &TuckerModel,
    l1_penalty: f64,
) -> Result<DenseTensor> {
    let terms = core_terms(data, model)?;
    Ok(mu_core_step(model.core(), &terms, l1_penalty))
}

/// One HALS column sweep over factor `mode`. Returns the updated factor and
/// the number of columns skipped for a vanishing diagonal.
pub fn hals_update_factor(
    data: &NtdData,
    model: &TuckerModel,
    mode: usize,
    fro_penalty: f64,
    project_increment: bool,
) -> Result<(Matrix, u32)> {
    let terms = factor_terms(data, model, mode)?;
    Ok(hals_factor_step(
        model.factor(mode),
        &terms,
        fro_penalty,
        project_increment,
    ))
}

/// Least-squares update of factor `mode`, optionally projected. The flag in
/// the result reports a ridge-regularized (near-singular) solve.
pub fn als_update_factor(
    data: &NtdData,
    model: &TuckerModel,
    mode: usize,
    fro_penalty: f64,
    project: bool,
) -> Result<(Matrix, bool)> {
    let terms = factor_terms(data, model, mode)?;
    als_factor_step(&terms, fro_penalty, project)
}

/// Least-squares update of the core, optionally projected.
pub fn als_update_core(
    data: &NtdData,
    model: &TuckerModel,
    l1_penalty: f64,
    project: bool,
) -> Result<(DenseTensor, bool)> {
    let terms = core_terms(data, model)?;
    als_core_step(&terms, l1_penalty, project)
}

/// Fits a nonnegative Tucker model to a dense tensor.
///
/// With `cfg.use_lra` the tensor is first compressed by truncated HOSVD at
/// `cfg.lra_ranks` (default: the NTD ranks) and the solver never touches the
/// dense tensor again until the final fit evaluation. An optional `init`
/// model overrides the seeded random initialization.
pub fn solve(
    data: &DenseTensor,
    cfg: &SolverConfig,
    init: Option<&TuckerModel>,
) -> Result<DecompositionResult> {
    cfg.validate(data.shape())?;
    // The direct path consumes the tensor through the nonnegative update
    // rules, so fully constrained runs require nonnegative data. With LRA
    // the tensor only feeds an unconstrained compression, where negative
    // entries (e.g. noise on sparse data) are expected.
    if !cfg.use_lra && cfg.all_nonnegative() {
        if let Some((index, value)) = data.first_negative() {
            return Err(CoreError::NegativeData { index, value });
        }
    }
    if cfg.use_lra {
        let lra_start = Instant::now();
        let lra_ranks = cfg
            .lra_ranks
            .clone()
            .unwrap_or_else(|| cfg.ntd_ranks.clone());
        let lra = hosvd(data, &lra_ranks)?;
        let lra_elapsed_ms = lra_start.elapsed().as_secs_f64() * 1e3;
        let mut result = run_blocks(NtdData::Compressed(&lra), cfg, init)?;
        result.lra_elapsed_ms = lra_elapsed_ms;
        result.final_fit = fit_percent(data, &reconstruct(&result.model));
        result.lra = Some(lra);
        Ok(result)
    } else {
        run_blocks(NtdData::Dense(data), cfg, init)
    }
}

/// Fits a nonnegative Tucker model against an existing compressed model
/// (`cfg.use_lra` and `cfg.lra_ranks` are ignored). The reported final fit
/// is measured against the model's reconstruction.
pub fn solve_compressed(
    lra: &TuckerModel,
    cfg: &SolverConfig,
    init: Option<&TuckerModel>,
) -> Result<DecompositionResult> {
    cfg.validate(&lra.extents())?;
    run_blocks(NtdData::Compressed(lra), cfg, init)
}

fn fit_percent(y: &DenseTensor, yhat: &DenseTensor) -> f64 {
    let denom = y.frobenius_norm();
    if denom == 0.0 {
        return f64::NAN;
    }
    let res = y.sub(yhat).map(|d| d.frobenius_norm()).unwrap_or(f64::NAN);
    (1.0 - res / denom) * 100.0
}

fn frob_sq_diff_matrix(a: &Matrix, b: &Matrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn frob_sq_diff_tensor(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn initialize(data: &NtdData, cfg: &SolverConfig) -> Result<TuckerModel> {
    let extents = data.extents();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut factors = Vec::with_capacity(extents.len());
    let mut identity_flags = Vec::with_capacity(extents.len());
    for (n, &extent) in extents.iter().enumerate() {
        if cfg.mode_constraints[n] == ModeConstraint::FixedIdentity {
            factors.push(Matrix::identity(extent));
            identity_flags.push(true);
        } else {
            let rank = cfg.ntd_ranks[n];
            let data: Vec<f64> = (0..extent * rank).map(|_| rng.random::<f64>()).collect();
            factors.push(Matrix::from_vec_unchecked(extent, rank, data));
            identity_flags.push(false);
        }
    }
    let core_len: usize = cfg.ntd_ranks.iter().product();
    let core_data: Vec<f64> = (0..core_len).map(|_| rng.random::<f64>()).collect();
    let core = DenseTensor::from_vec_unchecked(cfg.ntd_ranks.clone(), core_data);
    let mut model = TuckerModel::with_identity_modes(core, factors, identity_flags)?;
    // One multiplicative core pass scales the random core to the data.
    let terms = core_terms(data, &model)?;
    let scaled = mu_core_step(model.core(), &terms, cfg.l1_core);
    model.set_core(scaled);
    Ok(model)
}

/// Relative squared-change threshold for leaving a block's inner loop early.
fn inner_exit_sq(cfg: &SolverConfig) -> f64 {
    0.1 * cfg.tol
}

fn update_factor_block(
    a: &Matrix,
    terms: &BlockTerms,
    cfg: &SolverConfig,
    mode: usize,
    flags: &mut NumericalFlags,
) -> Result<Matrix> {
    let fro = cfg.fro(mode);
    match cfg.mode_constraints[mode] {
        ModeConstraint::FixedIdentity => unreachable!("fixed modes are skipped"),
        ModeConstraint::Unconstrained => {
            let (out, ridged) = als_factor_step(terms, fro, false)?;
            if ridged {
                flags.ridge_regularized += 1;
            }
            Ok(out)
        }
        ModeConstraint::Nonnegative => match cfg.algorithm {
            Algorithm::Als => {
                let (out, ridged) = als_factor_step(terms, fro, true)?;
                if ridged {
                    flags.ridge_regularized += 1;
                }
                Ok(out)
            }
            Algorithm::Mu => {
                let exit_sq = inner_exit_sq(cfg);
                let mut cur = a.clone();
                for _ in 0..cfg.inner_iters {
                    let next = mu_factor_step(&cur, terms, fro);
                    let change = frob_sq_diff_matrix(&next, &cur);
                    let scale: f64 = cur.data().iter().map(|x| x * x).sum();
                    cur = next;
                    if change <= exit_sq * scale.max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                Ok(cur)
            }
            Algorithm::Hals => {
                let exit_sq = inner_exit_sq(cfg);
                let mut cur = a.clone();
                for _ in 0..cfg.inner_iters {
                    let (next, skipped) =
                        hals_factor_step(&cur, terms, fro, cfg.hals_project_increment);
                    flags.hals_columns_skipped += skipped;
                    let change = frob_sq_diff_matrix(&next, &cur);
                    let scale: f64 = cur.data().iter().map(|x| x * x).sum();
                    cur = next;
                    if change <= exit_sq * scale.max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                Ok(cur)
            }
            Algorithm::Apg => {
                let lipschitz = lipschitz_factor_from_terms(terms) + fro;
                let rows = a.rows();
                let cols = a.cols();
                let grad = |flat: &[f64]| -> Vec<f64> {
                    let e = Matrix::from_vec_unchecked(rows, cols, flat.to_vec());
                    let mut g = crate::tensor::linalg::matmul(&e, &terms.t)
                        .sub(&terms.q)
                        .expect("conformable by construction");
                    if fro != 0.0 {
                        g = g.add(&e.scale(fro)).expect("same shape");
                    }
                    g.into_data()
                };
                let (out, _) = apg_update_block(
                    a.data(),
                    grad,
                    lipschitz,
                    cfg.inner_iters,
                    true,
                    inner_exit_sq(cfg),
                )?;
                Ok(Matrix::from_vec_unchecked(rows, cols, out))
            }
        },
    }
}

fn update_core_block(
    g: &DenseTensor,
    terms: &CoreTerms,
    cfg: &SolverConfig,
    flags: &mut NumericalFlags,
) -> Result<DenseTensor> {
    match cfg.core_constraint {
        CoreConstraint::Unconstrained => {
            let (out, ridged) = als_core_step(terms, cfg.l1_core, false)?;
            if ridged {
                flags.ridge_regularized += 1;
            }
            Ok(out)
        }
        CoreConstraint::Nonnegative => match cfg.algorithm {
            Algorithm::Als => {
                let (out, ridged) = als_core_step(terms, cfg.l1_core, true)?;
                if ridged {
                    flags.ridge_regularized += 1;
                }
                Ok(out)
            }
            // HALS uses the multiplicative rule for the core.
            Algorithm::Mu | Algorithm::Hals => {
                let exit_sq = inner_exit_sq(cfg);
                let mut cur = g.clone();
                for _ in 0..cfg.inner_iters {
                    let next = mu_core_step(&cur, terms, cfg.l1_core);
                    let change = frob_sq_diff_tensor(&next, &cur);
                    let scale = cur.squared_norm();
                    cur = next;
                    if change <= exit_sq * scale.max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                Ok(cur)
            }
            Algorithm::Apg => {
                let lipschitz = lipschitz_core_from_terms(terms);
                let shape = g.shape().to_vec();
                let grad = |flat: &[f64]| -> Vec<f64> {
                    let e = DenseTensor::from_vec_unchecked(shape.clone(), flat.to_vec());
                    let mut grad = terms
                        .apply_grams(&e)
                        .sub(&terms.numerator)
                        .expect("conformable by construction");
                    if cfg.l1_core != 0.0 {
                        let data: Vec<f64> =
                            grad.data().iter().map(|v| v + cfg.l1_core).collect();
                        grad = DenseTensor::from_vec_unchecked(grad.shape().to_vec(), data);
                    }
                    grad.into_data()
                };
                let (out, _) = apg_update_block(
                    g.data(),
                    grad,
                    lipschitz,
                    cfg.inner_iters,
                    true,
                    inner_exit_sq(cfg),
                )?;
                Ok(DenseTensor::from_vec_unchecked(g.shape().to_vec(), out))
            }
        },
    }
}

fn run_blocks(
    data: NtdData,
    cfg: &SolverConfig,
    init: Option<&TuckerModel>,
) -> Result<DecompositionResult> {
    let extents = data.extents();
    cfg.validate(&extents)?;
    let order = extents.len();
    let mut model = match init {
        Some(m) => {
            if m.extents() != extents || m.ranks() != cfg.ntd_ranks {
                return Err(CoreError::ShapeMismatch(format!(
                    "init model extents {:?} ranks {:?} vs data extents {:?} ranks {:?}",
                    m.extents(),
                    m.ranks(),
                    extents,
                    cfg.ntd_ranks
                )));
            }
            m.clone()
        }
        None => initialize(&data, cfg)?,
    };

    let data_sq = data.squared_norm();
    let data_norm = data_sq.max(0.0).sqrt();
    let mut flags = NumericalFlags::default();
    let mut cost_trace = Vec::new();
    let mut fit_trace = Vec::new();
    let mut iter_elapsed_ms = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut sweeps = 0;
    let start = Instant::now();

    for sweep in 1..=cfg.outer_iters {
        let mut max_change_sq = 0.0f64;
        for mode in 0..order {
            if cfg.mode_constraints[mode] == ModeConstraint::FixedIdentity {
                continue;
            }
            let terms = factor_terms(&data, &model, mode)?;
            let updated = update_factor_block(model.factor(mode), &terms, cfg, mode, &mut flags)?;
            max_change_sq = max_change_sq.max(frob_sq_diff_matrix(&updated, model.factor(mode)));
            model.set_factor(mode, updated);
        }
        let terms = core_terms(&data, &model)?;
        let updated_core = update_core_block(model.core(), &terms, cfg, &mut flags)?;
        max_change_sq = max_change_sq.max(frob_sq_diff_tensor(&updated_core, model.core()));
        model.set_core(updated_core);

        // The core terms were built with this sweep's final factors, so the
        // residual can be read off without touching the data again.
        let residual_sq = residual_sq_from_terms(data_sq, &terms, model.core());
        cost_trace.push(0.5 * residual_sq + penalty_value(&model, cfg));
        fit_trace.push(if data_norm > 0.0 {
            (1.0 - residual_sq.sqrt() / data_norm) * 100.0
        } else {
            f64::NAN
        });
        iter_elapsed_ms.push(start.elapsed().as_secs_f64() * 1e3);
        sweeps = sweep;
        if max_change_sq < cfg.tol {
            termination = Termination::Converged { sweeps: sweep };
            break;
        }
    }

    let ntd_elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let final_fit = match &data {
        NtdData::Dense(y) => fit_percent(y, &reconstruct(&model)),
        NtdData::Compressed(lra) => fit_percent(&reconstruct(lra), &reconstruct(&model)),
    };
    Ok(DecompositionResult {
        model,
        lra: None,
        cost_trace,
        fit_trace,
        iter_elapsed_ms,
        final_fit,
        lra_elapsed_ms: 0.0,
        ntd_elapsed_ms,
        iterations: sweeps,
        termination,
        flags,
    })
}
