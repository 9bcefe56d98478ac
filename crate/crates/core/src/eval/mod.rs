//! Synthetic experiment support: ground-truth generation, the Fit and mSIR
//! recovery metrics, sparsity accounting, and serializable reports.

pub mod matching;

pub use matching::{match_components, msir, Msir, MSIR_CAP_DB};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::lra::{reconstruct, TuckerModel};
use crate::tensor::{DenseTensor, Matrix};

/// Recipe for a synthetic nonnegative Tucker data set.
///
/// Factor and core entries are i.i.d. exponential with mean `mean`;
/// `factor_sparsity`/`core_sparsity` give the exact fraction of entries
/// zeroed at uniformly sampled positions. `snr_db: None` means no noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub extents: Vec<usize>,
    pub ranks: Vec<usize>,
    pub factor_sparsity: f64,
    pub core_sparsity: f64,
    pub mean: f64,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.extents.is_empty() || self.extents.len() != self.ranks.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} extents vs {} ranks",
                self.extents.len(),
                self.ranks.len()
            )));
        }
        for (mode, (&r, &e)) in self.ranks.iter().zip(&self.extents).enumerate() {
            if r == 0 || e == 0 {
                return Err(CoreError::EmptyShape);
            }
            if r > e {
                return Err(CoreError::RankExceedsExtent {
                    mode,
                    rank: r,
                    extent: e,
                });
            }
        }
        for s in [self.factor_sparsity, self.core_sparsity] {
            if !(0.0..1.0).contains(&s) {
                return Err(CoreError::InvalidArgument(format!(
                    "sparsity {s} outside [0, 1)"
                )));
            }
        }
        if self.mean <= 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "exponential mean {} must be positive",
                self.mean
            )));
        }
        Ok(())
    }
}

/// Ground truth plus its clean and noisy observations.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub clean: DenseTensor,
    pub truth: TuckerModel,
    pub noisy: DenseTensor,
}

const ZERO_COLUMN_RETRIES: usize = 100;

fn draw_positive(rng: &mut ChaCha8Rng, exp: &Exp<f64>) -> f64 {
    loop {
        let x: f64 = exp.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// Zeroes exactly `count` entries of `data` at positions sampled uniformly
/// without replacement (partial Fisher-Yates over the index range).
fn zero_entries(rng: &mut ChaCha8Rng, data: &mut [f64], count: usize) {
    let len = data.len();
    debug_assert!(count <= len);
    let mut indices: Vec<usize> = (0..len).collect();
    for k in 0..count {
        let pick = k + rng.random_range(0..len - k);
        indices.swap(k, pick);
        data[indices[k]] = 0.0;
    }
}

fn has_zero_column(rows: usize, cols: usize, data: &[f64]) -> bool {
    (0..cols).any(|j| data[j * rows..(j + 1) * rows].iter().all(|&v| v == 0.0))
}

/// Generates ground truth and observations for `spec`. Deterministic per
/// seed: identical spec and seed give bit-identical tensors.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exp = Exp::new(1.0 / spec.mean)
        .map_err(|e| CoreError::InvalidArgument(format!("exponential rate: {e}")))?;

    let mut factors = Vec::with_capacity(spec.extents.len());
    for (&extent, &rank) in spec.extents.iter().zip(&spec.ranks) {
        let len = extent * rank;
        let zeros = (spec.factor_sparsity * len as f64).floor() as usize;
        let mut attempts = 0;
        let data = loop {
            let mut data: Vec<f64> = (0..len).map(|_| draw_positive(&mut rng, &exp)).collect();
            zero_entries(&mut rng, &mut data, zeros);
            if !has_zero_column(extent, rank, &data) {
                break data;
            }
            attempts += 1;
            if attempts >= ZERO_COLUMN_RETRIES {
                return Err(CoreError::ZeroColumnRetry {
                    retries: ZERO_COLUMN_RETRIES,
                });
            }
        };
        factors.push(Matrix::from_vec_unchecked(extent, rank, data));
    }

    let core_len: usize = spec.ranks.iter().product();
    let core_zeros = (spec.core_sparsity * core_len as f64).floor() as usize;
    let mut core_data: Vec<f64> = (0..core_len).map(|_| draw_positive(&mut rng, &exp)).collect();
    zero_entries(&mut rng, &mut core_data, core_zeros);
    let core = DenseTensor::from_vec_unchecked(spec.ranks.clone(), core_data);

    let truth = TuckerModel::new(core, factors)?;
    let clean = reconstruct(&truth);
    let noisy = match spec.snr_db {
        None => clean.clone(),
        Some(snr) => {
            let raw: Vec<f64> = (0..clean.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let raw_norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            // Scale so 10 log10(||clean||^2 / ||noise||^2) == snr exactly.
            let scale = clean.frobenius_norm() / (raw_norm * 10f64.powf(snr / 20.0));
            let data: Vec<f64> = clean
                .data()
                .iter()
                .zip(&raw)
                .map(|(c, n)| c + scale * n)
                .collect();
            DenseTensor::from_vec_unchecked(clean.shape().to_vec(), data)
        }
    };
    Ok(SyntheticData {
        clean,
        truth,
        noisy,
    })
}

/// Fit index `(1 - ||y - yhat|| / ||y||) * 100`.
pub fn fit_index(y: &DenseTensor, yhat: &DenseTensor) -> Result<f64> {
    let denom = y.frobenius_norm();
    if denom == 0.0 {
        return Err(CoreError::InvalidArgument(
            "fit index of a zero tensor".into(),
        ));
    }
    let res = y.sub(yhat)?.frobenius_norm();
    Ok((1.0 - res / denom) * 100.0)
}

/// Fraction of exactly zero entries.
pub fn sparsity(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| v == 0.0).count() as f64 / values.len() as f64
}

/// Sparsity of a Kronecker product from the factor sparsities:
/// `s1 + s2 - s1*s2`, which always dominates `max(s1, s2)`.
pub fn kronecker_sparsity_predict(s1: f64, s2: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&s1) && (0.0..=1.0).contains(&s2));
    s1 + s2 - s1 * s2
}

/// Residual bookkeeping for an LRA-then-NTD run next to its direct
/// counterpart. `bound_slack = 2*lra_residual + direct_residual -
/// lra_ntd_residual` is reported, not asserted: the inequality it reflects
/// holds for globally optimal decompositions, while solvers return local
/// optima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundDiagnostic {
    /// `||Y - Y~||` of the compression step.
    pub lra_residual: f64,
    /// `||Y - Yhat_direct||`.
    pub direct_residual: f64,
    /// `||Y - Yhat_lra||`.
    pub lra_ntd_residual: f64,
    pub bound_slack: f64,
}

pub fn error_bound_diagnostic(
    y: &DenseTensor,
    lra: &TuckerModel,
    ntd_lra: &TuckerModel,
    ntd_direct: &TuckerModel,
) -> Result<ErrorBoundDiagnostic> {
    let sigma = y.sub(&reconstruct(lra))?.frobenius_norm();
    let direct_residual = y.sub(&reconstruct(ntd_direct))?.frobenius_norm();
    let lra_ntd_residual = y.sub(&reconstruct(ntd_lra))?.frobenius_norm();
    Ok(ErrorBoundDiagnostic {
        lra_residual: sigma,
        direct_residual,
        lra_ntd_residual,
        bound_slack: 2.0 * sigma + direct_residual - lra_ntd_residual,
    })
}

/// One solver's outcome on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub algorithm: String,
    pub use_lra: bool,
    /// Fit against the latent clean tensor.
    pub fit_clean: f64,
    /// Fit against the observed (noisy) tensor.
    pub fit_data: f64,
    pub msir_db: Option<f64>,
    pub iterations: usize,
    pub termination: String,
    /// `||Y - Y~||` when LRA ran, else 0.
    pub lra_residual: f64,
    pub bound_slack: Option<f64>,
    pub lra_elapsed_ms: f64,
    pub ntd_elapsed_ms: f64,
}

/// Schema version stamped into every report this crate emits.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A full experiment: the generating spec plus per-solver records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub spec: SyntheticSpec,
    pub records: Vec<SolverRecord>,
}

impl ExperimentReport {
    pub fn new(spec: SyntheticSpec, records: Vec<SolverRecord>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            spec,
            records,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn csv_header() -> String {
        [
            "schema_version",
            "extents",
            "ranks",
            "factor_sparsity",
            "core_sparsity",
            "mean",
            "snr_db",
            "seed",
            "algorithm",
            "use_lra",
            "fit_clean",
            "fit_data",
            "msir_db",
            "iterations",
            "termination",
            "lra_residual",
            "bound_slack",
            "lra_elapsed_ms",
            "ntd_elapsed_ms",
        ]
        .join(",")
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let extents = join_usizes(&self.spec.extents);
        let ranks = join_usizes(&self.spec.ranks);
        let snr = self
            .spec
            .snr_db
            .map(|v| v.to_string())
            .unwrap_or_else(|| "clean".into());
        self.records
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.schema_version,
                    extents,
                    ranks,
                    self.spec.factor_sparsity,
                    self.spec.core_sparsity,
                    self.spec.mean,
                    snr,
                    self.spec.seed,
                    r.algorithm,
                    r.use_lra,
                    r.fit_clean,
                    r.fit_data,
                    r.msir_db.map(|v| v.to_string()).unwrap_or_default(),
                    r.iterations,
                    r.termination,
                    r.lra_residual,
                    r.bound_slack.map(|v| v.to_string()).unwrap_or_default(),
                    r.lra_elapsed_ms,
                    r.ntd_elapsed_ms,
                )
            })
            .collect()
    }
}

fn join_usizes(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("x")
}
