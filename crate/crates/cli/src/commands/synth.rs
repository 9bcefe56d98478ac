//! `ntd synth`: write a generated ground truth and its observations.

use anyhow::Context;

use ntd_core::eval::sparsity;
use ntd_core::lra::io::write_model;
use ntd_core::tensor::io::write_tensor_binary;

use crate::args::SynthArgs;
use crate::config::FileConfig;
use crate::output::OutputSet;
use crate::runner::{parse_snr, resolve_synth};

pub fn run(args: SynthArgs) -> anyhow::Result<()> {
    let file_cfg = FileConfig::load(args.output.config.as_deref())?;
    let synth = file_cfg.overlay_synth(&args.synth);
    let ranks = args
        .ranks
        .clone()
        .or_else(|| file_cfg.ranks.clone())
        .context("--ranks is required")?;
    let snr_text = args
        .snr_db
        .clone()
        .or_else(|| file_cfg.snr_db().map(String::from));
    let snr = match snr_text {
        Some(t) => parse_snr(&t)?,
        None => None,
    };
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let spec = resolve_synth(&synth, &ranks, snr, seed)?;
    let data = ntd_core::eval::generate(&spec)?;

    let mut out = OutputSet::new(&args.output.out_dir);
    let mut clean = Vec::new();
    write_tensor_binary(&mut clean, &data.clean)?;
    out.push("clean.nt", clean);
    let mut noisy = Vec::new();
    write_tensor_binary(&mut noisy, &data.noisy)?;
    out.push("noisy.nt", noisy);
    let mut truth = Vec::new();
    write_model(&mut truth, &data.truth)?;
    out.push("truth.ntm", truth);
    let written = out.commit()?;

    println!(
        "generated {:?} at ranks {:?}: factor sparsity {:.3}, core sparsity {:.3}, snr {}",
        spec.extents,
        spec.ranks,
        sparsity(data.truth.factor(0).data()),
        sparsity(data.truth.core().data()),
        spec.snr_db
            .map(|v| format!("{v} dB"))
            .unwrap_or_else(|| "clean".into()),
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
