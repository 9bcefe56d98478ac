//! `ntd flops`: the gradient multiply-count model with and without LRA.

use anyhow::bail;

use ntd_core::eval::REPORT_SCHEMA_VERSION;
use ntd_core::ntd::gradient_flop_estimate;

use crate::args::FlopsArgs;
use crate::output::{csv_text, OutputSet};

pub fn run(args: FlopsArgs) -> anyhow::Result<()> {
    if args.order == 0 || args.extent == 0 || args.rank == 0 {
        bail!("--order, --extent, and --rank must be positive");
    }
    if args.rank > args.extent {
        bail!("--rank must not exceed --extent");
    }
    let extents: Vec<u64> = match &args.extent_sweep {
        Some(list) if !list.is_empty() => list.clone(),
        _ => vec![args.extent],
    };
    let mut rows = Vec::new();
    println!("{:>6} {:>8} {:>6} {:>16} {:>16} {:>10}", "order", "extent", "rank", "with_lra", "without_lra", "ratio");
    for &extent in &extents {
        if args.rank > extent {
            bail!("--rank {} exceeds extent {} in the sweep", args.rank, extent);
        }
        let with = gradient_flop_estimate(args.order, extent, args.rank, true);
        let without = gradient_flop_estimate(args.order, extent, args.rank, false);
        let ratio = without as f64 / with as f64;
        println!(
            "{:>6} {:>8} {:>6} {:>16} {:>16} {:>10.1}",
            args.order, extent, args.rank, with, without, ratio
        );
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            REPORT_SCHEMA_VERSION, args.order, extent, args.rank, with, without, ratio
        ));
    }
    if let Some(dir) = &args.out_dir {
        let mut out = OutputSet::new(dir);
        out.push_text(
            "flops.csv",
            csv_text(
                "schema_version,order,extent,rank,with_lra,without_lra,ratio",
                &rows,
            ),
        );
        for path in out.commit()? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
