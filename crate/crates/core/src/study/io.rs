//! JSON-lines logs and the SUS questionnaire CSV.

use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::concordance::ConcordanceCategory;
use super::sus::{SusResponse, SUS_ITEMS};
use super::StudyError;

/// Per-case concordance between the report and the model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcordanceRecord {
    pub case_id: String,
    pub classification: ConcordanceCategory,
    pub localization: ConcordanceCategory,
}

impl ConcordanceRecord {
    pub fn auto_accepted(&self) -> bool {
        self.classification == ConcordanceCategory::Agree && self.localization == ConcordanceCategory::Agree
    }
}

/// Cases that agree in both dimensions and skip manual review.
pub fn auto_accept_ids(records: &[ConcordanceRecord]) -> BTreeSet<String> {
    records.iter().filter(|r| r.auto_accepted()).map(|r| r.case_id.clone()).collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io { path: path.display().to_string(), source }
}

/// Reads a JSON-lines file; a missing file is an empty log. A final line
/// without its newline that fails to parse is treated as an interrupted
/// write and skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StudyError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(source) => return Err(StudyError::Parse { path: path.display().to_string(), line: i + 1, source }),
        }
    }
    Ok(out)
}

/// Appends one record and syncs it to disk before returning.
pub fn append_jsonl<T: Serialize>(path: &Path, record: &T) -> Result<(), StudyError> {
    let mut line = serde_json::to_string(record).expect("record serialises");
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    f.write_all(line.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))?;
    f.sync_data().map_err(io_err(path))
}

/// Replaces `path` with the given records, one per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), StudyError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("record serialises"));
        text.push('\n');
    }
    crate::fsutil::write_atomic(path, text.as_bytes()).map_err(io_err(path))
}

fn sus_header() -> Vec<String> {
    std::iter::once("participant_id".to_string()).chain((1..=SUS_ITEMS).map(|i| format!("q{i}"))).collect()
}

/// Reads responses from a CSV with a `participant_id` column followed by ten item columns.
pub fn read_sus_csv(path: &Path) -> Result<Vec<SusResponse>, StudyError> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| StudyError::Csv { path: path.display().to_string(), source: e })?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| StudyError::Csv { path: path.display().to_string(), source: e })?;
        let participant_id = row.get(0).unwrap_or_default().to_string();
        let items = row
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, v)| {
                v.trim().parse::<u8>().map_err(|_| StudyError::BadItemValue {
                    participant_id: participant_id.clone(),
                    item: i + 1,
                    value: 0,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let r = SusResponse { participant_id, items };
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_sus_csv(path: &Path, responses: &[SusResponse]) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e| StudyError::Csv { path: path.display().to_string(), source: e };
    w.write_record(sus_header()).map_err(csv_err)?;
    for r in responses {
        let row = std::iter::once(r.participant_id.clone()).chain(r.items.iter().map(|v| v.to_string()));
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().expect("in-memory writer");
    crate::fsutil::write_atomic(path, &bytes).map_err(io_err(path))
}
