//! Config-file overlay. The file is TOML whose keys mirror the long flag
//! names (underscores for hyphens); any key the command line also sets is
//! overridden by the flag.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use crate::args::{SolverFlags, SynthFlags};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ranks: Option<Vec<usize>>,
    pub lra_ranks: Option<Vec<usize>>,
    pub algorithm: Option<String>,
    pub use_lra: Option<bool>,
    pub inner_iters: Option<usize>,
    pub outer_iters: Option<usize>,
    pub tol: Option<f64>,
    pub l1_core: Option<f64>,
    pub fro_factor: Option<Vec<f64>>,
    pub semi_modes: Option<Vec<usize>>,
    pub semi_core: Option<bool>,
    pub population: Option<bool>,
    pub seed: Option<u64>,
    pub hals_project_increment: Option<bool>,
    pub clip_negatives: Option<bool>,
    pub extents: Option<Vec<usize>>,
    pub factor_sparsity: Option<f64>,
    pub core_sparsity: Option<f64>,
    pub mean: Option<f64>,
    pub trials: Option<usize>,
    pub snr_db: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    /// Fills unset solver flags from the file.
    pub fn overlay_solver(&self, flags: &SolverFlags) -> SolverFlags {
        SolverFlags {
            ranks: flags.ranks.clone().or_else(|| self.ranks.clone()),
            lra_ranks: flags.lra_ranks.clone().or_else(|| self.lra_ranks.clone()),
            algorithm: flags.algorithm.clone().or_else(|| self.algorithm.clone()),
            use_lra: flags.use_lra.or(self.use_lra),
            inner_iters: flags.inner_iters.or(self.inner_iters),
            outer_iters: flags.outer_iters.or(self.outer_iters),
            tol: flags.tol.or(self.tol),
            l1_core: flags.l1_core.or(self.l1_core),
            fro_factor: flags.fro_factor.clone().or_else(|| self.fro_factor.clone()),
            semi_modes: flags.semi_modes.clone().or_else(|| self.semi_modes.clone()),
            semi_core: flags.semi_core.or(self.semi_core),
            population: flags.population.or(self.population),
            seed: flags.seed.or(self.seed),
            hals_project_increment: flags.hals_project_increment.or(self.hals_project_increment),
            clip_negatives: flags.clip_negatives.or(self.clip_negatives),
        }
    }

    /// Fills unset synthesis flags from the file.
    pub fn overlay_synth(&self, flags: &SynthFlags) -> SynthFlags {
        SynthFlags {
            extents: flags.extents.clone().or_else(|| self.extents.clone()),
            factor_sparsity: flags.factor_sparsity.or(self.factor_sparsity),
            core_sparsity: flags.core_sparsity.or(self.core_sparsity),
            mean: flags.mean.or(self.mean),
            trials: flags.trials.or(self.trials),
        }
    }

    pub fn snr_db(&self) -> Option<&str> {
        self.snr_db.as_deref()
    }
}
