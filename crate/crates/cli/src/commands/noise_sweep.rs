//! `ntd noise-sweep`: fits and timings across noise levels. Every algorithm
//! runs twice per data set, with and without the compression step, and the
//! compressed record carries the error-bound slack against its direct twin.

use anyhow::bail;

use ntd_core::eval::ExperimentReport;

use crate::args::NoiseSweepArgs;
use crate::commands::push_reports;
use crate::config::FileConfig;
use crate::output::OutputSet;
use crate::runner::{
    algorithms_from, generate_point, parse_snr, report_for, resolve_solver, resolve_synth,
    run_paired_trial, solver_seed, trial_data_seed,
};

pub fn run(args: NoiseSweepArgs) -> anyhow::Result<()> {
    if args.snr_db.is_empty() || args.snr_db.iter().all(|s| s.trim().is_empty()) {
        bail!("--snr-db: the sweep grid must not be empty");
    }
    let levels: Vec<Option<f64>> = args
        .snr_db
        .iter()
        .map(|s| parse_snr(s))
        .collect::<anyhow::Result<_>>()?;
    let file_cfg = FileConfig::load(args.output.config.as_deref())?;
    let synth = file_cfg.overlay_synth(&args.synth);
    let solver_flags = file_cfg.overlay_solver(&args.solver);
    let algorithms = algorithms_from(&args.algorithms)?;
    let trials = synth.trials.unwrap_or(1);
    let master_seed = solver_flags.seed.unwrap_or(0);

    let mut reports: Vec<ExperimentReport> = Vec::new();
    for (point_idx, &snr) in levels.iter().enumerate() {
        for trial in 0..trials {
            let data_seed = trial_data_seed(master_seed, point_idx, trial);
            let ranks = solver_flags
                .ranks
                .clone()
                .ok_or_else(|| anyhow::anyhow!("--ranks is required"))?;
            let spec = resolve_synth(&synth, &ranks, snr, data_seed)?;
            let point = generate_point(spec)?;
            let resolved = resolve_solver(&solver_flags, &point.spec.extents)?;
            let mut records = Vec::new();
            for &algorithm in &algorithms {
                let mut cfg = resolved.cfg.clone();
                cfg.algorithm = algorithm;
                cfg.seed = solver_seed(data_seed);
                records.extend(run_paired_trial(&point, &cfg, args.output.benchmark)?);
            }
            reports.push(report_for(&point, records));
        }
    }

    let mut out = OutputSet::new(&args.output.out_dir);
    push_reports(&mut out, "noise_sweep", args.output.format, &reports);
    let written = out.commit()?;
    for report in &reports {
        for r in &report.records {
            println!(
                "snr {} trial-seed {} {:>4} lra={} fit_clean {:7.3}% ntd {:.1} ms",
                report
                    .spec
                    .snr_db
                    .map(|v| format!("{v} dB"))
                    .unwrap_or_else(|| "clean".into()),
                report.spec.seed,
                r.algorithm,
                r.use_lra,
                r.fit_clean,
                r.ntd_elapsed_ms,
            );
        }
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
