use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

pub const DEFECT_HEADER: [&str; 3] = ["input_file", "line_no", "reason"];

/// A record-level problem found while reading a dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defect {
    pub input: String,
    pub line_no: u64,
    pub reason: String,
}

pub trait DefectSink {
    fn report(&mut self, defect: Defect);
}

impl DefectSink for Vec<Defect> {
    fn report(&mut self, defect: Defect) {
        self.push(defect);
    }
}

/// Discards defects.
impl DefectSink for () {
    fn report(&mut self, _defect: Defect) {}
}

/// Streams defects to a CSV sidecar file.
pub struct DefectWriter {
    writer: csv::Writer<BufWriter<File>>,
    count: u64,
    error: Option<csv::Error>,
}

impl DefectWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        writer.write_record(DEFECT_HEADER).map_err(io::Error::other)?;
        Ok(DefectWriter {
            writer,
            count: 0,
            error: None,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> io::Result<u64> {
        if let Some(err) = self.error.take() {
            return Err(io::Error::other(err));
        }
        self.writer.flush()?;
        Ok(self.count)
    }
}

impl DefectSink for DefectWriter {
    fn report(&mut self, defect: Defect) {
        self.count += 1;
        if self.error.is_some() {
            return;
        }
        let line = defect.line_no.to_string();
        if let Err(err) = self
            .writer
            .write_record([defect.input.as_str(), line.as_str(), defect.reason.as_str()])
        {
            self.error = Some(err);
        }
    }
}
