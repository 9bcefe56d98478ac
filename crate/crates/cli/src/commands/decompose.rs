//! `ntd decompose`: fit one tensor file, write the model and its trace.

use anyhow::Context;

use ntd_core::eval::fit_index;
use ntd_core::lra::io::{read_model_file, write_model};
use ntd_core::lra::reconstruct;
use ntd_core::ntd::{solve, solve_compressed};
use ntd_core::tensor::io::read_tensor_file;

use crate::args::DecomposeArgs;
use crate::commands::trace_csv;
use crate::config::FileConfig;
use crate::output::OutputSet;
use crate::runner::resolve_solver;

pub fn run(args: DecomposeArgs) -> anyhow::Result<()> {
    let file_cfg = FileConfig::load(args.output.config.as_deref())?;
    let tensor = read_tensor_file(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let flags = file_cfg.overlay_solver(&args.solver);
    let resolved = resolve_solver(&flags, tensor.shape())?;
    let mut cfg = resolved.cfg;

    let clipped;
    let input = if !cfg.use_lra && resolved.clip_negatives {
        clipped = tensor.project_nonneg();
        &clipped
    } else {
        &tensor
    };

    // An LRA cache file short-circuits the compression step.
    let result = match (&args.lra_cache, cfg.use_lra) {
        (Some(cache), true) if cache.exists() => {
            let lra = read_model_file(cache)
                .with_context(|| format!("reading LRA cache {}", cache.display()))?;
            let mut r = solve_compressed(&lra, &cfg, None)?;
            r.final_fit = fit_index(input, &reconstruct(&r.model))?;
            r.lra = Some(lra);
            r
        }
        _ => {
            if args.lra_cache.is_some() && !cfg.use_lra {
                cfg.use_lra = true;
            }
            solve(input, &cfg, None)?
        }
    };

    let mut out = OutputSet::new(&args.output.out_dir);
    let mut model_bytes = Vec::new();
    write_model(&mut model_bytes, &result.model)?;
    out.push("model.ntm", model_bytes);
    out.push_text("trace.csv", trace_csv(&result, args.output.benchmark));
    if let (Some(cache), Some(lra)) = (&args.lra_cache, &result.lra) {
        if !cache.exists() {
            let mut lra_bytes = Vec::new();
            write_model(&mut lra_bytes, lra)?;
            std::fs::create_dir_all(cache.parent().unwrap_or(std::path::Path::new(".")))?;
            std::fs::write(cache, lra_bytes)
                .with_context(|| format!("writing LRA cache {}", cache.display()))?;
        }
    }
    let written = out.commit()?;

    println!(
        "fit = {:.4}%  iterations = {}  termination = {}  lra = {:.1} ms  ntd = {:.1} ms",
        result.final_fit,
        result.iterations,
        result.termination,
        result.lra_elapsed_ms,
        result.ntd_elapsed_ms
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
