//! Comparison of combined path lengths across runs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::output::read_metrics;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Scenario name, or the target centre when unnamed.
    pub label: String,
    pub source: PathBuf,
    /// Combined length per column, metres.
    pub lengths: Vec<Option<f64>>,
}

/// Rows are runs (targets), columns are planner methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub methods: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Preferred column order; unknown methods follow alphabetically.
const ORDER: [&str; 3] = ["ls_beta0", "ls_beta400", "fg"];

pub fn compare_report(files: &[PathBuf]) -> Result<Report> {
    if files.is_empty() {
        return Err(CliError::Invalid("report needs at least one metrics file".into()));
    }
    let mut loaded = Vec::new();
    for file in files {
        let metrics = read_metrics(file).map_err(|e| match e {
            CliError::Parse { path, message } => CliError::Report { path, message },
            other => other,
        })?;
        if metrics.combined_length_m.is_none() {
            return Err(report_error(file, "combined_length_m is empty"));
        }
        for (method, m) in &metrics.per_method {
            if m.combined_length_m.is_none() {
                return Err(report_error(file, &format!("{method}: combined_length_m is empty")));
            }
        }
        loaded.push((file.clone(), metrics));
    }

    let present: BTreeSet<&String> = loaded.iter().flat_map(|(_, m)| m.per_method.keys()).collect();
    let mut methods: Vec<String> = ORDER.iter().filter(|m| present.iter().any(|p| p == *m)).map(|m| m.to_string()).collect();
    methods.extend(present.into_iter().filter(|p| !ORDER.contains(&p.as_str())).cloned());

    let rows = loaded
        .into_iter()
        .map(|(source, m)| {
            let label = if m.scenario.is_empty() {
                let [x, y, z] = m.target.center;
                format!("({x}, {y}, {z})")
            } else {
                m.scenario.clone()
            };
            let lengths = methods
                .iter()
                .map(|k| m.per_method.get(k).and_then(|x| x.combined_length_m))
                .collect();
            ReportRow { label, source, lengths }
        })
        .collect();
    Ok(Report { methods, rows })
}

fn report_error(file: &Path, message: &str) -> CliError {
    CliError::Report {
        path: file.to_path_buf(),
        message: message.to_string(),
    }
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

impl Report {
    pub fn to_text(&self) -> String {
        let label_width = self.rows.iter().map(|r| r.label.len()).chain([6]).max().unwrap_or(6);
        let col_width = self.methods.iter().map(|m| m.len()).chain([8]).max().unwrap_or(8);
        let mut out = format!("{:<label_width$}", "target");
        for m in &self.methods {
            out.push_str(&format!("  {m:>col_width$}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<label_width$}", row.label));
            for l in &row.lengths {
                out.push_str(&format!("  {:>col_width$}", cell(*l)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let fail = |e: csv::Error| CliError::Invalid(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["target".to_string()];
        header.extend(self.methods.iter().cloned());
        w.write_record(&header).map_err(fail)?;
        for row in &self.rows {
            let mut rec = vec![row.label.clone()];
            rec.extend(row.lengths.iter().map(|l| l.map_or(String::new(), |v| v.to_string())));
            w.write_record(&rec).map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::Invalid(format!("csv: {e}")))
    }
}
