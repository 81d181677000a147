use std::io::Read;

use super::{BrRecord, Defect, DefectSink, IngestError};
use crate::pid::{parse_pid, PidError, PidScheme};

/// Row-at-a-time reader over the source collection's CSV dump.
///
/// The `id` column holds space-separated `scheme:value` tokens, one of which
/// must be the omid. Bad tokens are reported and dropped; rows without an
/// omid are reported and skipped.
pub struct MetaCsvReader<'s, R: Read> {
    reader: csv::Reader<R>,
    record: csv::StringRecord,
    id_col: usize,
    type_col: usize,
    input_name: String,
    sink: &'s mut dyn DefectSink,
    rows_read: u64,
    rows_skipped: u64,
    done: bool,
}

pub fn read_meta_csv<'s, R: Read>(
    input: R,
    input_name: &str,
    sink: &'s mut dyn DefectSink,
) -> Result<MetaCsvReader<'s, R>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or(IngestError::MissingColumn(name))
    };
    let id_col = find("id")?;
    let type_col = find("type")?;
    Ok(MetaCsvReader {
        reader,
        record: csv::StringRecord::new(),
        id_col,
        type_col,
        input_name: input_name.to_string(),
        sink,
        rows_read: 0,
        rows_skipped: 0,
        done: false,
    })
}

impl<R: Read> MetaCsvReader<'_, R> {
    /// Data rows consumed so far (header excluded).
    pub fn rows_read(&self) -> u64 {
        self.rows_read
    }

    /// Rows that did not produce a record.
    pub fn rows_skipped(&self) -> u64 {
        self.rows_skipped
    }

    fn defect(&mut self, line_no: u64, reason: String) {
        self.sink.report(Defect {
            input: self.input_name.clone(),
            line_no,
            reason,
        });
    }

    fn parse_current(&mut self, line_no: u64) -> Option<BrRecord> {
        let ids = self.record.get(self.id_col).unwrap_or("").to_string();
        let br_type = self.record.get(self.type_col).unwrap_or("").trim().to_string();
        let mut omid = None;
        let mut pids = Vec::new();
        for token in ids.split_whitespace() {
            match parse_pid(token) {
                Ok(pid) if pid.scheme() == PidScheme::Omid => {
                    if omid.is_none() {
                        omid = Some(pid);
                    } else {
                        self.defect(line_no, format!("extra omid token {token:?} ignored"));
                    }
                }
                Ok(pid) => {
                    if !pids.contains(&pid) {
                        pids.push(pid);
                    }
                }
                Err(err @ PidError::UnknownScheme(_)) => self.defect(line_no, err.to_string()),
                Err(err) => self.defect(line_no, err.to_string()),
            }
        }
        match omid {
            Some(omid) => Some(BrRecord {
                omid,
                pids,
                br_type,
            }),
            None => {
                self.defect(line_no, "row skipped: no omid token".to_string());
                None
            }
        }
    }
}

impl<R: Read> Iterator for MetaCsvReader<'_, R> {
    type Item = Result<BrRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.reader.read_record(&mut self.record) {
                Ok(false) => self.done = true,
                Ok(true) => {
                    self.rows_read += 1;
                    let line_no = self.record.position().map(|p| p.line()).unwrap_or(0);
                    match self.parse_current(line_no) {
                        Some(rec) => return Some(Ok(rec)),
                        None => self.rows_skipped += 1,
                    }
                }
                Err(err) => {
                    if err.is_io_error() {
                        self.done = true;
                        return Some(Err(err.into()));
                    }
                    // Undecodable row (e.g. invalid UTF-8): skip it.
                    self.rows_read += 1;
                    self.rows_skipped += 1;
                    let line_no = err.position().map(|p| p.line()).unwrap_or(0);
                    self.defect(line_no, format!("row skipped: {err}"));
                }
            }
        }
        None
    }
}
