use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::OutputColumn;
use super::run::{RunOutput, StepRecord};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(SimError::config(format!(
                "unknown output format '{other}' (expected csv or json)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cell(record: &StepRecord, column: OutputColumn) -> String {
    match column {
        OutputColumn::TS => record.t_s.to_string(),
        OutputColumn::UserXM => record.user_position.x.to_string(),
        OutputColumn::UserYM => record.user_position.y.to_string(),
        OutputColumn::UserZM => record.user_position.z.to_string(),
        OutputColumn::ServingBs => record.serving_bs.clone(),
        OutputColumn::RateDirectBps => record.rate_direct_bps().to_string(),
        OutputColumn::RateRelayBps => opt(record.rate_relay_bps()),
        OutputColumn::RateHotzoneBps => opt(record.rate_hotzone_bps),
        OutputColumn::SecrecyDirectBps => record.secrecy_direct_bps().to_string(),
        OutputColumn::SecrecyRelayBps => opt(record.secrecy_relay_bps()),
        OutputColumn::SecrecyHandoverBps => opt(record.secrecy_handover_bps()),
        OutputColumn::DetectFlags => record.detect_flags.join(";"),
        OutputColumn::MitigationState => record.mitigation_state.clone(),
    }
}

/// Selected columns in their fixed order, regardless of how the
/// selection was listed.
pub fn ordered_columns(selected: &[OutputColumn]) -> Vec<OutputColumn> {
    OutputColumn::ALL
        .into_iter()
        .filter(|c| selected.contains(c))
        .collect()
}

/// Writes the per-step table: a header row, then one row per record.
/// Empty cells mark metrics of disabled policies.
pub fn write_csv<W: Write>(records: &[StepRecord], selected: &[OutputColumn], out: W) -> csv::Result<()> {
    let columns = ordered_columns(selected);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns.iter().map(|c| c.name()))?;
    for r in records {
        w.write_record(columns.iter().map(|&c| cell(r, c)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[StepRecord], selected: &[OutputColumn]) -> String {
    let mut buf = Vec::new();
    write_csv(records, selected, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    summary: &'a super::run::RunSummary,
    jammer_localization: &'a Option<crate::detectloc::LocalizationEstimate>,
}

/// Writes `records.csv` or `records.json` plus `summary.json` into `dir`,
/// creating it if needed. Returns the written paths.
pub fn emit(
    output: &RunOutput,
    selected: &[OutputColumn],
    format: OutputFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let records_path = dir.join(format!("records.{format}"));
    let body = match format {
        OutputFormat::Csv => csv_string(&output.records, selected),
        OutputFormat::Json => serde_json::to_string_pretty(&output.records).expect("records serialize"),
    };
    std::fs::write(&records_path, body).map_err(|e| SimError::io(&records_path, e))?;
    let summary_path = dir.join("summary.json");
    let summary = SummaryFile {
        summary: &output.summary,
        jammer_localization: &output.jammer_localization,
    };
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, text).map_err(|e| SimError::io(&summary_path, e))?;
    Ok(vec![records_path, summary_path])
}
