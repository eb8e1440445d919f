//! CSV and aligned-text renderings of experiment reports.

use crate::coverage::format_rate;
use crate::error::{Error, Result};

use super::experiment::ExperimentReport;

pub const COLUMNS: [&str; 9] = [
    "Config",
    "DUT",
    "Trials",
    "Max coverage",
    "Rate",
    "Avg msg/trial",
    "Stdev msg/trial",
    "Avg cov/msg",
    "Tokens",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"))
}

pub fn row(report: &ExperimentReport) -> [String; 9] {
    let m = &report.metrics;
    [
        report.label.clone(),
        report.dut.clone(),
        m.trials.to_string(),
        m.max_coverage.to_string(),
        format_rate(m.max_rate),
        opt(m.avg_messages),
        opt(m.stdev_messages),
        opt(m.avg_cov_per_msg),
        report.tokens_used.to_string(),
    ]
}

pub fn to_csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Log(e.to_string());
    w.write_record(COLUMNS).map_err(err)?;
    for r in reports {
        w.write_record(row(r)).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Log(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

/// Space-padded table; text columns left-aligned, numbers right-aligned.
pub fn to_text_table(reports: &[ExperimentReport]) -> String {
    let rows: Vec<[String; 9]> = reports.iter().map(row).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([COLUMNS[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i < 2 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_owned()
    };
    let header: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut out = line(&header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}
