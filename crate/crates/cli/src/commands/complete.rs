//! `ntd complete`: two-step handling of partially observed tensors — fill
//! the missing entries with a weighted Tucker completion, then run NTD on
//! the completed model.

use anyhow::Context;

use ntd_core::eval::{fit_index, REPORT_SCHEMA_VERSION};
use ntd_core::lra::io::write_model;
use ntd_core::lra::{reconstruct, weighted_tucker_complete, CompletionPolicy, WeightTensor};
use ntd_core::ntd::solve_compressed;
use ntd_core::tensor::io::read_tensor_file;

use crate::args::CompleteArgs;
use crate::commands::trace_csv;
use crate::config::FileConfig;
use crate::output::{csv_text, OutputSet};
use crate::runner::resolve_solver;

pub fn run(args: CompleteArgs) -> anyhow::Result<()> {
    let file_cfg = FileConfig::load(args.output.config.as_deref())?;
    let tensor = read_tensor_file(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mask_tensor = read_tensor_file(&args.mask)
        .with_context(|| format!("reading {}", args.mask.display()))?;
    let mask = WeightTensor::new(mask_tensor)?;
    let truth = match &args.truth {
        Some(p) => Some(read_tensor_file(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let flags = file_cfg.overlay_solver(&args.solver);
    let resolved = resolve_solver(&flags, tensor.shape())?;
    let cfg = resolved.cfg;

    let mut policy = CompletionPolicy::default();
    if let Some(v) = args.completion_iters {
        policy.max_iters = v;
    }
    if let Some(v) = args.completion_tol {
        policy.tol = v;
    }

    let completed = weighted_tucker_complete(&tensor, &mask, &cfg.ntd_ranks, policy)?;
    let filled = reconstruct(&completed);

    // Hidden-entry relative error where the mask is exactly zero.
    let masked: usize = mask.tensor().data().iter().filter(|&&w| w == 0.0).count();
    let hidden_rel_error = truth.as_ref().and_then(|t| {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&w, &tv), &fv) in mask
            .tensor()
            .data()
            .iter()
            .zip(t.data())
            .zip(filled.data())
        {
            if w == 0.0 {
                num += (tv - fv) * (tv - fv);
                den += tv * tv;
            }
        }
        (den > 0.0).then(|| (num / den).sqrt())
    });

    let result = solve_compressed(&completed, &cfg, None)?;
    let estimate = reconstruct(&result.model);
    let fit_observed = {
        // Fit over the observed entries only.
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&w, &tv), &ev) in mask
            .tensor()
            .data()
            .iter()
            .zip(tensor.data())
            .zip(estimate.data())
        {
            let d = w * (tv - ev);
            num += d * d;
            den += (w * tv) * (w * tv);
        }
        (1.0 - (num / den.max(f64::MIN_POSITIVE)).sqrt()) * 100.0
    };
    let fit_truth = match &truth {
        Some(t) => Some(fit_index(t, &estimate)?),
        None => None,
    };

    let mut out = OutputSet::new(&args.output.out_dir);
    let mut completed_bytes = Vec::new();
    write_model(&mut completed_bytes, &completed)?;
    out.push("completed.ntm", completed_bytes);
    let mut model_bytes = Vec::new();
    write_model(&mut model_bytes, &result.model)?;
    out.push("model.ntm", model_bytes);
    out.push_text("trace.csv", trace_csv(&result, args.output.benchmark));
    let header = "schema_version,masked_entries,masked_fraction,hidden_rel_error,fit_observed,fit_truth,ntd_iterations,ntd_termination";
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        REPORT_SCHEMA_VERSION,
        masked,
        masked as f64 / tensor.len() as f64,
        hidden_rel_error.map(|v| v.to_string()).unwrap_or_default(),
        fit_observed,
        fit_truth.map(|v| v.to_string()).unwrap_or_default(),
        result.iterations,
        result.termination,
    );
    out.push_text("completion.csv", csv_text(header, &[row]));
    let written = out.commit()?;

    println!(
        "masked {masked}/{} entries; hidden-entry error {}; fit(observed) {:.3}%{}",
        tensor.len(),
        hidden_rel_error
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "n/a".into()),
        fit_observed,
        fit_truth
            .map(|v| format!("; fit(truth) {v:.3}%"))
            .unwrap_or_default(),
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
