//! Nonnegative Tucker decomposition (NTD) with LRA-accelerated first-order
//! solvers.
//!
//! A data tensor `Y` is approximated as a nonnegative core tensor times
//! nonnegative factor matrices, `Y ~ G x_1 A(1) x_2 A(2) ... x_N A(N)`.
//! Fitting proceeds in two steps: first an unconstrained low multilinear-rank
//! approximation (truncated HOSVD or a randomized variant) compresses the
//! data, then block-coordinate solvers (MU, HALS, APG, ALS) run their
//! gradient arithmetic against the compressed representation, which never
//! touches the full tensor again.
//!
//! Modules:
//! - [`tensor`]: dense tensors/matrices and the multilinear kernels.
//! - [`lra`]: truncated HOSVD, randomized Tucker, weighted completion.
//! - [`ntd`]: solver configuration, gradients, update rules, the outer loop.
//! - [`eval`]: synthetic data generation and recovery metrics.

pub mod error;
pub mod eval;
pub mod lra;
pub mod ntd;
pub mod rng;
pub mod tensor;

pub use error::{CoreError, Result};
pub use eval::{ExperimentReport, SolverRecord, SyntheticData, SyntheticSpec};
pub use lra::{TuckerModel, WeightTensor};
pub use ntd::{
    Algorithm, CoreConstraint, DecompositionResult, ModeConstraint, SolverConfig, Termination,
};
pub use tensor::{DenseTensor, Matrix};
