//! Training reports as JSON and CSV.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tvscm_core::train::{EpochRecord, TrainConfig, TrainReport};

use crate::{io, Error, Result};

pub const TRAIN_REPORT_SCHEMA_VERSION: u32 = 1;
pub const TRAIN_CSV_HEADER: [&str; 5] = ["epoch", "loss", "train_acc", "test_acc", "seconds"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Usage(format!(
                "unknown report format `{other}` (expected `json` or `csv`)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

/// A training report with the identity of the run it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRunReport {
    pub schema_version: u32,
    pub dataset: String,
    pub arch: String,
    pub parameters: usize,
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
}

impl TrainRunReport {
    pub fn new(dataset: &str, arch: &str, parameters: usize, report: TrainReport) -> Self {
        TrainRunReport {
            schema_version: TRAIN_REPORT_SCHEMA_VERSION,
            dataset: dataset.to_string(),
            arch: arch.to_string(),
            parameters,
            config: report.config,
            epochs: report.records,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid train report: {e}")))
    }

    /// One row per epoch under [`TRAIN_CSV_HEADER`]; missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRAIN_CSV_HEADER).expect("in-memory write");
        for r in &self.epochs {
            w.serialize((r.epoch, r.loss, r.train_acc, r.test_acc, r.seconds))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<()> {
        let text = match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        };
        io::write(path, text.as_bytes())
    }
}
