use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::Summary;
use crate::state::Parity;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    #[default]
    Jsonl,
    Csv,
}

impl RecordFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            RecordFormat::Jsonl => "records.jsonl",
            RecordFormat::Csv => "records.csv",
        }
    }
}

/// One line per trial. Every field is always present (null or empty when it
/// does not apply) so the column set is fixed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecordLine {
    pub trial_index: u64,
    /// Which arm of a two-arm experiment the trial belongs to.
    pub arm: Option<String>,
    /// Bitstring (particle 0 first) or channel label.
    pub outcome: String,
    pub parity: Option<Parity>,
    pub q: Option<i8>,
    pub steps_to_absorption: Option<u64>,
    pub s_history_length: u64,
}

pub fn write_records<W: Write>(records: &[TrialRecordLine], format: RecordFormat, out: W) -> io::Result<()> {
    match format {
        RecordFormat::Jsonl => {
            let mut out = BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
        RecordFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
            if records.is_empty() {
                w.write_record([
                    "trial_index",
                    "arm",
                    "outcome",
                    "parity",
                    "q",
                    "steps_to_absorption",
                    "s_history_length",
                ])?;
            }
            for r in records {
                w.serialize(r).map_err(io::Error::other)?;
            }
            w.flush()
        }
    }
}

pub fn read_records(path: &Path, format: RecordFormat) -> io::Result<Vec<TrialRecordLine>> {
    match format {
        RecordFormat::Jsonl => fs::read_to_string(path)?
            .lines()
            .map(|l| serde_json::from_str(l).map_err(io::Error::other))
            .collect(),
        RecordFormat::Csv => csv::Reader::from_path(path)
            .map_err(io::Error::other)?
            .deserialize()
            .map(|r| r.map_err(io::Error::other))
            .collect(),
    }
}

pub fn summary_json(summary: &Summary) -> io::Result<String> {
    let mut text = serde_json::to_string_pretty(summary).map_err(io::Error::other)?;
    text.push('\n');
    Ok(text)
}

/// Paths written by [`write_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub summary: PathBuf,
    pub records: Option<PathBuf>,
}

/// Writes `summary.json` and, when there are trials, the record stream into
/// `out_dir`.
pub fn write_results(summary: &Summary, records: &[TrialRecordLine], out_dir: &Path, format: RecordFormat) -> io::Result<WrittenFiles> {
    fs::create_dir_all(out_dir)?;
    let summary_path = out_dir.join(SUMMARY_FILE);
    fs::write(&summary_path, summary_json(summary)?)?;
    let records_path = if records.is_empty() {
        None
    } else {
        let path = out_dir.join(format.file_name());
        write_records(records, format, File::create(&path)?)?;
        Some(path)
    };
    Ok(WrittenFiles {
        summary: summary_path,
        records: records_path,
    })
}

pub fn read_summary(path: &Path) -> io::Result<Summary> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
