//! Report rows and CSV/markdown emission.
//!
//! Column order is fixed and time columns print in full-precision
//! scientific notation, so a (spec, config, seed) triple always produces
//! byte-identical files.

use std::fs;
use std::path::Path;

use crate::{BenchError, Result};

/// One benchmark point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub workload: &'static str,
    pub pool_size: u64,
    pub num_indices: u64,
    pub feature_bytes: u64,
    pub seed: u64,
    pub naive_transactions: u64,
    pub shifted_transactions: u64,
    pub ideal_s: f64,
    pub cpu_centric_s: f64,
    pub direct_access_s: f64,
    pub uvm_paging_s: f64,
    pub speedup_vs_cpu_centric: f64,
}

/// Ordered rows of one benchmark run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" => Ok(ReportFormat::Markdown),
            other => Err(BenchError::InvalidArgument(format!(
                "unknown report format '{other}' (expected csv or markdown)"
            ))),
        }
    }
}

const COLUMNS: [&str; 12] = [
    "workload",
    "pool_size",
    "num_indices",
    "feature_bytes",
    "seed",
    "naive_transactions",
    "shifted_transactions",
    "ideal_s",
    "cpu_centric_s",
    "direct_access_s",
    "uvm_paging_s",
    "speedup_vs_cpu_centric",
];

fn row_fields(row: &ReportRow) -> [String; 12] {
    [
        row.workload.to_string(),
        row.pool_size.to_string(),
        row.num_indices.to_string(),
        row.feature_bytes.to_string(),
        row.seed.to_string(),
        row.naive_transactions.to_string(),
        row.shifted_transactions.to_string(),
        format!("{:e}", row.ideal_s),
        format!("{:e}", row.cpu_centric_s),
        format!("{:e}", row.direct_access_s),
        format!("{:e}", row.uvm_paging_s),
        format!("{:e}", row.speedup_vs_cpu_centric),
    ]
}

/// Render a report to the requested format.
pub fn render(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = COLUMNS.join(",");
            out.push('\n');
            for row in &report.rows {
                out.push_str(&row_fields(row).join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = format!("| {} |\n", COLUMNS.join(" | "));
            out.push_str(&format!("|{}\n", " --- |".repeat(COLUMNS.len())));
            for row in &report.rows {
                out.push_str(&format!("| {} |\n", row_fields(row).join(" | ")));
            }
            out
        }
    }
}

/// Write a report to `path`, or to stdout when no path is given.
pub fn emit_report(report: &BenchReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let text = render(report, format);
    match path {
        Some(path) => fs::write(path, text).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
