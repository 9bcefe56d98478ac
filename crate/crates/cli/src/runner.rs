//! Shared machinery: flag resolution into solver/synthesis configs, single
//! solver invocations with record building, and the sweep engine.

use anyhow::{bail, Context};

use ntd_core::eval::{
    error_bound_diagnostic, fit_index, generate, msir, ExperimentReport, SolverRecord,
    SyntheticData, SyntheticSpec,
};
use ntd_core::lra::reconstruct;
use ntd_core::ntd::{
    solve, Algorithm, CoreConstraint, DecompositionResult, ModeConstraint, SolverConfig,
};
use ntd_core::rng::derive_seed;
use ntd_core::DenseTensor;

use crate::args::{SolverFlags, SynthFlags};

/// Resolved solver options: the core config plus CLI-level behavior.
#[derive(Debug, Clone)]
pub struct ResolvedSolver {
    pub cfg: SolverConfig,
    pub clip_negatives: bool,
}

/// Turns overlaid flags into a validated `SolverConfig` for order-`N` data.
/// `extents` is needed for `--population` (the fixed mode's rank).
pub fn resolve_solver(flags: &SolverFlags, extents: &[usize]) -> anyhow::Result<ResolvedSolver> {
    let order = extents.len();
    let mut ranks = flags
        .ranks
        .clone()
        .context("--ranks is required (or `ranks` in the config file)")?;
    if ranks.len() != order {
        bail!("--ranks has {} entries for order-{order} data", ranks.len());
    }
    let population = flags.population.unwrap_or(false);
    if population {
        ranks[order - 1] = extents[order - 1];
    }
    let mut cfg = SolverConfig::new(ranks);
    if let Some(name) = &flags.algorithm {
        cfg.algorithm = name.parse::<Algorithm>()?;
    }
    cfg.use_lra = flags.use_lra.unwrap_or(false);
    cfg.lra_ranks = flags.lra_ranks.clone();
    if let Some(v) = flags.inner_iters {
        cfg.inner_iters = v;
    }
    if let Some(v) = flags.outer_iters {
        cfg.outer_iters = v;
    }
    if let Some(v) = flags.tol {
        cfg.tol = v;
    }
    if let Some(v) = flags.l1_core {
        cfg.l1_core = v;
    }
    if let Some(v) = &flags.fro_factor {
        if v.len() != order {
            bail!("--fro-factor has {} entries for order-{order} data", v.len());
        }
        cfg.fro_factor = v.clone();
    }
    if let Some(modes) = &flags.semi_modes {
        for &m in modes {
            if m >= order {
                bail!("--semi-modes: mode {m} out of range for order {order}");
            }
            cfg.mode_constraints[m] = ModeConstraint::Unconstrained;
        }
    }
    if flags.semi_core.unwrap_or(false) {
        cfg.core_constraint = CoreConstraint::Unconstrained;
    }
    if population {
        cfg.mode_constraints[order - 1] = ModeConstraint::FixedIdentity;
    }
    cfg.seed = flags.seed.unwrap_or(0);
    cfg.hals_project_increment = flags.hals_project_increment.unwrap_or(false);
    Ok(ResolvedSolver {
        cfg,
        clip_negatives: flags.clip_negatives.unwrap_or(false),
    })
}

/// Parses an SNR argument: a dB value or the word "clean".
pub fn parse_snr(text: &str) -> anyhow::Result<Option<f64>> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("clean") {
        return Ok(None);
    }
    let v: f64 = t
        .parse()
        .with_context(|| format!("--snr-db: expected a number or \"clean\", got {t:?}"))?;
    Ok(Some(v))
}

/// Builds a `SyntheticSpec` from overlaid flags.
pub fn resolve_synth(
    flags: &SynthFlags,
    ranks: &[usize],
    snr_db: Option<f64>,
    seed: u64,
) -> anyhow::Result<SyntheticSpec> {
    let extents = flags
        .extents
        .clone()
        .context("--extents is required (or `extents` in the config file)")?;
    let spec = SyntheticSpec {
        extents,
        ranks: ranks.to_vec(),
        factor_sparsity: flags.factor_sparsity.unwrap_or(0.0),
        core_sparsity: flags.core_sparsity.unwrap_or(0.0),
        mean: flags.mean.unwrap_or(10.0),
        snr_db,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Runs one solver on an observation, measuring fits against the observation
/// and (when available) the latent clean tensor and ground-truth components.
pub fn run_trial(
    observation: &DenseTensor,
    clean: Option<&DenseTensor>,
    truth: Option<&ntd_core::TuckerModel>,
    cfg: &SolverConfig,
    clip_negatives: bool,
    benchmark: bool,
) -> anyhow::Result<(SolverRecord, DecompositionResult)> {
    let clipped;
    let input: &DenseTensor = if !cfg.use_lra && clip_negatives {
        clipped = observation.project_nonneg();
        &clipped
    } else {
        observation
    };
    let result = solve(input, cfg, None)?;
    let estimate = reconstruct(&result.model);
    let fit_data = fit_index(observation, &estimate)?;
    let fit_clean = match clean {
        Some(c) => fit_index(c, &estimate)?,
        None => fit_data,
    };
    let msir_db = match truth {
        Some(t) => Some(msir(t, &result.model)?.msir_db),
        None => None,
    };
    let lra_residual = match &result.lra {
        Some(lra) => observation
            .sub(&reconstruct(lra))
            .map(|d| d.frobenius_norm())
            .unwrap_or(f64::NAN),
        None => 0.0,
    };
    let record = SolverRecord {
        algorithm: cfg.algorithm.name().to_string(),
        use_lra: cfg.use_lra,
        fit_clean,
        fit_data,
        msir_db,
        iterations: result.iterations,
        termination: result.termination.to_string(),
        lra_residual,
        bound_slack: None,
        lra_elapsed_ms: if benchmark { result.lra_elapsed_ms } else { 0.0 },
        ntd_elapsed_ms: if benchmark { result.ntd_elapsed_ms } else { 0.0 },
    };
    Ok((record, result))
}

/// Per-trial data seed: independent stream per (sweep point, trial).
pub fn trial_data_seed(master: u64, point: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, point as u64), trial as u64)
}

/// Solver seed derived from the data seed so initialization never shares a
/// stream with data generation.
pub fn solver_seed(data_seed: u64) -> u64 {
    derive_seed(data_seed, 1)
}

pub fn algorithms_from(names: &Option<Vec<String>>) -> anyhow::Result<Vec<Algorithm>> {
    let names = match names {
        Some(list) if !list.is_empty() => list.clone(),
        _ => vec!["mu".into(), "hals".into(), "apg".into()],
    };
    names
        .iter()
        .map(|n| n.parse::<Algorithm>().map_err(Into::into))
        .collect()
}

/// One sweep point: generated data plus the records of every solver run on
/// it, assembled into an `ExperimentReport`.
pub struct SweepPoint {
    pub spec: SyntheticSpec,
    pub data: SyntheticData,
}

pub fn generate_point(spec: SyntheticSpec) -> anyhow::Result<SweepPoint> {
    let data = generate(&spec)?;
    Ok(SweepPoint { spec, data })
}

/// Runs an algorithm with and without compression on the same observation
/// and attaches the error-bound slack to the compressed record.
pub fn run_paired_trial(
    point: &SweepPoint,
    base_cfg: &SolverConfig,
    benchmark: bool,
) -> anyhow::Result<Vec<SolverRecord>> {
    let mut direct_cfg = base_cfg.clone();
    direct_cfg.use_lra = false;
    let mut lra_cfg = base_cfg.clone();
    lra_cfg.use_lra = true;
    let (direct_record, direct_result) = run_trial(
        &point.data.noisy,
        Some(&point.data.clean),
        Some(&point.data.truth),
        &direct_cfg,
        true,
        benchmark,
    )?;
    let (mut lra_record, lra_result) = run_trial(
        &point.data.noisy,
        Some(&point.data.clean),
        Some(&point.data.truth),
        &lra_cfg,
        true,
        benchmark,
    )?;
    if let Some(lra) = &lra_result.lra {
        let diag = error_bound_diagnostic(
            &point.data.noisy,
            lra,
            &lra_result.model,
            &direct_result.model,
        )?;
        lra_record.bound_slack = Some(diag.bound_slack);
    }
    Ok(vec![direct_record, lra_record])
}

pub fn report_for(point: &SweepPoint, records: Vec<SolverRecord>) -> ExperimentReport {
    ExperimentReport::new(point.spec.clone(), records)
}
