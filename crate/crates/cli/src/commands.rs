pub mod complete;
pub mod decompose;
pub mod flops;
pub mod noise_sweep;
pub mod sparsity_sweep;
pub mod synth;

use ntd_core::eval::{ExperimentReport, REPORT_SCHEMA_VERSION};

use crate::args::ReportFormat;
use crate::output::{csv_text, OutputSet};

/// Serializes sweep reports in the selected format under `name.{csv,json}`.
pub fn push_reports(
    out: &mut OutputSet,
    name: &str,
    format: ReportFormat,
    reports: &[ExperimentReport],
) {
    match format {
        ReportFormat::Csv => {
            let rows: Vec<String> = reports.iter().flat_map(|r| r.csv_rows()).collect();
            out.push_text(
                &format!("{name}.csv"),
                csv_text(&ExperimentReport::csv_header(), &rows),
            );
        }
        ReportFormat::Json => {
            let wrapper = serde_json::json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "reports": reports,
            });
            let mut text =
                serde_json::to_string_pretty(&wrapper).expect("report serialization cannot fail");
            text.push('\n');
            out.push_text(&format!("{name}.json"), text);
        }
    }
}

/// Trace CSV for one solver run: `schema_version,iter,cost,fit,elapsed_ms`.
pub fn trace_csv(result: &ntd_core::ntd::DecompositionResult, benchmark: bool) -> String {
    let rows: Vec<String> = result
        .cost_trace
        .iter()
        .enumerate()
        .map(|(i, cost)| {
            let fit = result.fit_trace[i];
            let elapsed = if benchmark {
                result.iter_elapsed_ms[i]
            } else {
                0.0
            };
            format!("{},{},{},{},{}", REPORT_SCHEMA_VERSION, i + 1, cost, fit, elapsed)
        })
        .collect();
    csv_text("schema_version,iter,cost,fit,elapsed_ms", &rows)
}
