//! Streaming readers for the two dump formats and the classifier lists.
//!
//! Readers never hold more than one row in memory. Record-level problems are
//! reported to a [`DefectSink`] and the row is skipped; only I/O failures and
//! missing mandatory columns abort a read.

mod config;
mod defects;
mod meta_csv;
mod openalex;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::pid::{Pid, PidScheme};

pub use config::{load_config, parse_indicator_list, parse_prefix_list, ClassifierConfig};
pub use defects::{Defect, DefectSink, DefectWriter, DEFECT_HEADER};
pub use meta_csv::{read_meta_csv, MetaCsvReader};
pub use openalex::{parse_openalex_line, read_openalex_lines, FieldMap, OpenAlexReader};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("CSV input lacks a {0:?} column")]
    MissingColumn(&'static str),
    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {reason}")]
    MalformedEntry {
        path: String,
        line: usize,
        reason: String,
    },
}

/// One bibliographic resource from the source collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrRecord {
    pub omid: Pid,
    /// External identifiers only; never contains the omid scheme.
    pub pids: Vec<Pid>,
    pub br_type: String,
}

impl BrRecord {
    pub fn eligible_pids(&self) -> impl Iterator<Item = &Pid> {
        self.pids.iter().filter(|p| p.scheme().is_mapping_eligible())
    }

    pub fn has_eligible_pid(&self) -> bool {
        self.eligible_pids().next().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OaKind {
    Work,
    Source,
}

impl OaKind {
    pub fn of_id(oa_id: &str) -> Option<OaKind> {
        match oa_id.as_bytes().first() {
            Some(b'W') => Some(OaKind::Work),
            Some(b'S') => Some(OaKind::Source),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OaKind::Work => "work",
            OaKind::Source => "source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkVersion {
    Submitted,
    Accepted,
    Published,
    #[default]
    Unknown,
}

impl WorkVersion {
    pub fn from_openalex(raw: &str) -> WorkVersion {
        match raw {
            "submittedVersion" => WorkVersion::Submitted,
            "acceptedVersion" => WorkVersion::Accepted,
            "publishedVersion" => WorkVersion::Published,
            _ => WorkVersion::Unknown,
        }
    }
}

/// One Work or Source from the target collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OaRecord {
    pub oa_id: Pid,
    pub kind: OaKind,
    /// External identifiers other than ISSNs.
    pub pids: Vec<Pid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_type: Option<String>,
    #[serde(default)]
    pub version: WorkVersion,
    /// Sources only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issns: Vec<Pid>,
}

impl OaRecord {
    /// Identifiers that are keyed in the lookup index. Work-kind records
    /// contribute DOI/PMID/PMCID, Source-kind records contribute ISSNs.
    pub fn eligible_pids(&self) -> Box<dyn Iterator<Item = &Pid> + '_> {
        match self.kind {
            OaKind::Work => Box::new(
                self.pids
                    .iter()
                    .filter(|p| p.scheme().is_work_mapping_scheme()),
            ),
            OaKind::Source => Box::new(self.issns.iter()),
        }
    }

    pub fn dois(&self) -> impl Iterator<Item = &str> {
        self.pids
            .iter()
            .filter(|p| p.scheme() == PidScheme::Doi)
            .map(|p| p.value())
    }

    pub fn id(&self) -> &str {
        self.oa_id.value()
    }
}

/// Opens `path` for buffered reading, transparently decompressing gzip
/// input (detected by magic bytes, not by extension).
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    wrap_input(file)
}

pub fn wrap_input<R: Read + Send + 'static>(inner: R) -> io::Result<Box<dyn BufRead + Send>> {
    let mut reader = BufReader::with_capacity(1 << 16, inner);
    let head = reader.fill_buf()?;
    if head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b {
        Ok(Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(reader),
        )))
    } else {
        Ok(Box::new(reader))
    }
}
