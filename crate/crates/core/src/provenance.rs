//! Primary-source attribution for non-mapped records.
//!
//! Provenance input is read one line at a time in either of two layouts:
//!
//! * JSON-Lines. Each line is walked recursively. Objects with an `omid` key
//!   use the simplified form (`sources` array or `primary_source` string);
//!   objects carrying `prov:specializationOf` and `prov:hadPrimarySource`
//!   (compact or expanded IRIs) are treated as snapshots of that entity.
//! * CSV with `omid` and `source_url` columns.
//!
//! Every `(omid, source)` contribution goes through an external sort, so
//! records come out grouped and ordered by omid. The join against
//! `non_mapped.csv` is a sorted merge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::UNSPECIFIED_TYPE;
use crate::extsort::{ExternalSorter, SortedLines};
use crate::ingest::{wrap_input, Defect, DefectSink};
use crate::mapper::{read_non_mapped_table, MapError};
use crate::pid::{Pid, PidScheme};

pub const PROVENANCE_MATRIX_FILE: &str = "provenance_matrix.csv";
/// `source_set` value of the bucket for records without provenance.
pub const UNKNOWN_BUCKET: &str = "unknown";

#[derive(Debug, thiserror::Error)]
pub enum ProvenanceError {
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("no primary source matches {0:?}")]
    UnknownSourceUrl(String),
    #[error("provenance input {0}: missing column {1:?}")]
    MissingColumn(String, &'static str),
    #[error("provenance records out of order: {0} after {1}")]
    Unsorted(String, String),
    #[error(transparent)]
    Table(#[from] MapError),
    #[error("matrix {path}: {reason}")]
    Matrix { path: String, reason: String },
}

impl From<csv::Error> for ProvenanceError {
    fn from(err: csv::Error) -> Self {
        ProvenanceError::Io(io::Error::other(err))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceLabel {
    Crossref,
    DataCite,
    JaLC,
    NIH,
    OpenAIRE,
    Zenodo,
}

impl SourceLabel {
    pub const ALL: [SourceLabel; 6] = [
        SourceLabel::Crossref,
        SourceLabel::DataCite,
        SourceLabel::JaLC,
        SourceLabel::NIH,
        SourceLabel::OpenAIRE,
        SourceLabel::Zenodo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceLabel::Crossref => "Crossref",
            SourceLabel::DataCite => "DataCite",
            SourceLabel::JaLC => "JaLC",
            SourceLabel::NIH => "NIH",
            SourceLabel::OpenAIRE => "OpenAIRE",
            SourceLabel::Zenodo => "Zenodo",
        }
    }
}

impl fmt::Display for SourceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceLabel {
    type Err = ProvenanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ProvenanceError::UnknownSourceUrl(s.to_string()))
    }
}

/// Substrings tried in order against the lowercased URL.
const SOURCE_PATTERNS: &[(&str, SourceLabel)] = &[
    ("crossref", SourceLabel::Crossref),
    ("datacite", SourceLabel::DataCite),
    ("nih.gov", SourceLabel::NIH),
    ("icite", SourceLabel::NIH),
    ("openaire", SourceLabel::OpenAIRE),
    ("japanlinkcenter", SourceLabel::JaLC),
    ("jalc", SourceLabel::JaLC),
    ("zenodo", SourceLabel::Zenodo),
];

pub fn source_label(url: &str) -> Result<SourceLabel, ProvenanceError> {
    let lower = url.to_ascii_lowercase();
    SOURCE_PATTERNS
        .iter()
        .find(|(pat, _)| lower.contains(pat))
        .map(|(_, label)| *label)
        .ok_or_else(|| ProvenanceError::UnknownSourceUrl(url.to_string()))
}

/// A canonical, sorted set of source labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSet(BTreeSet<SourceLabel>);

impl SourceSet {
    pub fn labels(&self) -> impl Iterator<Item = SourceLabel> + '_ {
        self.0.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, label: SourceLabel) {
        self.0.insert(label);
    }
}

impl FromIterator<SourceLabel> for SourceSet {
    fn from_iter<T: IntoIterator<Item = SourceLabel>>(iter: T) -> Self {
        SourceSet(iter.into_iter().collect())
    }
}

impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, label) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(label.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for SourceSet {
    type Err = ProvenanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split('+').map(SourceLabel::from_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceRecord {
    /// Bare omid, e.g. `br/0601`.
    pub omid: String,
    /// Never empty.
    pub sources: SourceSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    JsonLines,
    Csv,
}

fn sniff(reader: &mut dyn BufRead) -> io::Result<Layout> {
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            return Ok(Layout::JsonLines);
        }
        match buf.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(i) => {
                let first = buf[i];
                return Ok(if first == b'{' || first == b'[' {
                    Layout::JsonLines
                } else {
                    Layout::Csv
                });
            }
            None => {
                let n = buf.len();
                reader.consume(n);
            }
        }
    }
}

fn normalize_omid(raw: &str) -> Option<String> {
    let raw = raw.trim();
    let raw = raw.strip_prefix("omid:").unwrap_or(raw);
    Pid::new(PidScheme::Omid, raw).ok().map(|p| p.value().to_string())
}

/// Node IRIs of a JSON-LD property value: `{"@id": ..}`, a bare string, or
/// an array of either.
fn node_ids(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::String(s) => out.push(s.clone()),
        Value::Array(items) => items.iter().for_each(|v| node_ids(v, out)),
        Value::Object(map) => {
            if let Some(Value::String(id)) = map.get("@id").or_else(|| map.get("@value")) {
                out.push(id.clone());
            }
        }
        _ => {}
    }
}

fn property<'a>(map: &'a serde_json::Map<String, Value>, local: &str) -> Option<&'a Value> {
    map.iter()
        .find(|(k, _)| {
            k.as_str() == local
                || k.strip_suffix(local)
                    .is_some_and(|head| head.ends_with(':') || head.ends_with('#') || head.ends_with('/'))
        })
        .map(|(_, v)| v)
}

/// Collects raw `(entity, source_url)` pairs from one parsed JSON value.
fn walk(value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Array(items) => items.iter().for_each(|v| walk(v, out)),
        Value::Object(map) => {
            if let Some(Value::String(omid)) = map.get("omid") {
                let mut urls = Vec::new();
                if let Some(v) = map.get("sources") {
                    node_ids(v, &mut urls);
                }
                if let Some(v) = map.get("primary_source") {
                    node_ids(v, &mut urls);
                }
                out.extend(urls.into_iter().map(|u| (omid.clone(), u)));
                return;
            }
            if let (Some(entity), Some(source)) =
                (property(map, "specializationOf"), property(map, "hadPrimarySource"))
            {
                let (mut entities, mut urls) = (Vec::new(), Vec::new());
                node_ids(entity, &mut entities);
                node_ids(source, &mut urls);
                for e in &entities {
                    out.extend(urls.iter().map(|u| (e.clone(), u.clone())));
                }
                return;
            }
            map.values().for_each(|v| walk(v, out));
        }
        _ => {}
    }
}

/// Accumulates contributions from any number of inputs.
pub struct ProvenanceParser {
    sorter: ExternalSorter,
    contributions: u64,
}

impl ProvenanceParser {
    pub fn new(tmp_dir: &Path, sort_budget: usize) -> io::Result<Self> {
        Ok(ProvenanceParser {
            sorter: ExternalSorter::new(tmp_dir, sort_budget)?,
            contributions: 0,
        })
    }

    pub fn contributions(&self) -> u64 {
        self.contributions
    }

    fn contribute(
        &mut self,
        omid: &str,
        url: &str,
        name: &str,
        line_no: u64,
        sink: &mut dyn DefectSink,
    ) -> io::Result<()> {
        let Some(omid) = normalize_omid(omid) else {
            sink.report(Defect {
                input: name.to_string(),
                line_no,
                reason: format!("bad omid {omid:?}"),
            });
            return Ok(());
        };
        match source_label(url) {
            Ok(label) => {
                self.contributions += 1;
                self.sorter.push(format!("{omid}\t{label}"))
            }
            Err(e) => {
                sink.report(Defect {
                    input: name.to_string(),
                    line_no,
                    reason: e.to_string(),
                });
                Ok(())
            }
        }
    }

    /// Reads one input, plain or gzip-compressed.
    pub fn add_input<R: Read + Send + 'static>(
        &mut self,
        input: R,
        name: &str,
        sink: &mut dyn DefectSink,
    ) -> Result<(), ProvenanceError> {
        let mut reader = wrap_input(input)?;
        match sniff(&mut reader)? {
            Layout::JsonLines => self.add_json_lines(reader, name, sink),
            Layout::Csv => self.add_csv(reader, name, sink),
        }
    }

    fn add_json_lines(
        &mut self,
        mut reader: Box<dyn BufRead + Send>,
        name: &str,
        sink: &mut dyn DefectSink,
    ) -> Result<(), ProvenanceError> {
        let mut buf = Vec::new();
        let mut line_no = 0u64;
        let mut pairs = Vec::new();
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            if buf.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let value: Value = match serde_json::from_slice(&buf) {
                Ok(v) => v,
                Err(e) => {
                    sink.report(Defect {
                        input: name.to_string(),
                        line_no,
                        reason: format!("line skipped: {e}"),
                    });
                    continue;
                }
            };
            pairs.clear();
            walk(&value, &mut pairs);
            if pairs.is_empty() {
                sink.report(Defect {
                    input: name.to_string(),
                    line_no,
                    reason: "no primary source found".into(),
                });
            }
            for (omid, url) in &pairs {
                self.contribute(omid, url, name, line_no, sink)?;
            }
        }
        Ok(())
    }

    fn add_csv(
        &mut self,
        reader: Box<dyn BufRead + Send>,
        name: &str,
        sink: &mut dyn DefectSink,
    ) -> Result<(), ProvenanceError> {
        let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = csv.headers()?.clone();
        let col = |want: &'static str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(want))
                .ok_or_else(|| ProvenanceError::MissingColumn(name.to_string(), want))
        };
        let (omid_col, url_col) = (col("omid")?, col("source_url")?);
        for rec in csv.records() {
            let rec = rec?;
            let line_no = rec.position().map(|p| p.line()).unwrap_or(0);
            match (rec.get(omid_col), rec.get(url_col)) {
                (Some(omid), Some(url)) => self.contribute(omid, url.trim(), name, line_no, sink)?,
                _ => sink.report(Defect {
                    input: name.to_string(),
                    line_no,
                    reason: "row skipped: missing field".into(),
                }),
            }
        }
        Ok(())
    }

    pub fn finish(self) -> io::Result<ProvenanceRecords> {
        Ok(ProvenanceRecords {
            lines: self.sorter.finish()?,
            pending: None,
        })
    }
}

/// Parses a single input.
pub fn parse_provenance<R: Read + Send + 'static>(
    input: R,
    name: &str,
    sink: &mut dyn DefectSink,
    tmp_dir: &Path,
    sort_budget: usize,
) -> Result<ProvenanceRecords, ProvenanceError> {
    let mut parser = ProvenanceParser::new(tmp_dir, sort_budget)?;
    parser.add_input(input, name, sink)?;
    Ok(parser.finish()?)
}

/// One record per entity, ascending by omid.
pub struct ProvenanceRecords {
    lines: SortedLines,
    pending: Option<(String, SourceLabel)>,
}

fn split_contribution(line: &str) -> io::Result<(String, SourceLabel)> {
    let (omid, label) = line
        .split_once('\t')
        .ok_or_else(|| io::Error::other(format!("corrupt sort line {line:?}")))?;
    let label = SourceLabel::from_str(label).map_err(io::Error::other)?;
    Ok((omid.to_string(), label))
}

impl Iterator for ProvenanceRecords {
    type Item = io::Result<ProvenanceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let (omid, first) = match self.pending.take() {
            Some(p) => p,
            None => match self.lines.next()? {
                Ok(line) => match split_contribution(&line) {
                    Ok(p) => p,
                    Err(e) => return Some(Err(e)),
                },
                Err(e) => return Some(Err(e)),
            },
        };
        let mut sources = SourceSet::default();
        sources.insert(first);
        for line in self.lines.by_ref() {
            let next = match line.and_then(|l| split_contribution(&l)) {
                Ok(p) => p,
                Err(e) => return Some(Err(e)),
            };
            if next.0 != omid {
                self.pending = Some(next);
                break;
            }
            sources.insert(next.1);
        }
        Some(Ok(ProvenanceRecord { omid, sources }))
    }
}

fn pid_key(has_pid: bool) -> &'static str {
    if has_pid {
        "yes"
    } else {
        "no"
    }
}

fn type_label(br_type: &str) -> &str {
    if br_type.is_empty() {
        UNSPECIFIED_TYPE
    } else {
        br_type
    }
}

/// Counts keyed by source set, then `yes`/`no` for external PIDs, then type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceMatrix {
    pub cells: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
    /// Non-mapped rows with no provenance record, keyed like one cell row.
    pub unknown: BTreeMap<String, BTreeMap<String, u64>>,
}

impl ProvenanceMatrix {
    pub fn add(&mut self, sources: &SourceSet, has_pid: bool, br_type: &str, n: u64) {
        let row = self.cells.entry(sources.to_string()).or_default();
        *row.entry(pid_key(has_pid).into())
            .or_default()
            .entry(type_label(br_type).into())
            .or_default() += n;
    }

    pub fn add_unknown(&mut self, has_pid: bool, br_type: &str, n: u64) {
        *self
            .unknown
            .entry(pid_key(has_pid).into())
            .or_default()
            .entry(type_label(br_type).into())
            .or_default() += n;
    }

    pub fn get(&self, sources: &str, has_pid: bool, br_type: &str) -> u64 {
        self.cells
            .get(sources)
            .and_then(|r| r.get(pid_key(has_pid)))
            .and_then(|r| r.get(br_type))
            .copied()
            .unwrap_or(0)
    }

    pub fn get_unknown(&self, has_pid: bool, br_type: &str) -> u64 {
        self.unknown
            .get(pid_key(has_pid))
            .and_then(|r| r.get(br_type))
            .copied()
            .unwrap_or(0)
    }

    /// Rows attributed to at least one source.
    pub fn total(&self) -> u64 {
        self.cells
            .values()
            .flat_map(|r| r.values())
            .flat_map(|r| r.values())
            .sum()
    }

    pub fn unknown_total(&self) -> u64 {
        self.unknown.values().flat_map(|r| r.values()).sum()
    }

    /// Counts per `(has_pid, type)` over every row, unknown bucket included.
    pub fn margins(&self) -> BTreeMap<(bool, String), u64> {
        let mut out = BTreeMap::new();
        let rows = self.cells.values().chain(std::iter::once(&self.unknown));
        for row in rows {
            for (pid, types) in row {
                for (ty, n) in types {
                    *out.entry((pid == "yes", ty.clone())).or_default() += n;
                }
            }
        }
        out
    }

    pub fn merge(&mut self, other: &ProvenanceMatrix) {
        for (set, row) in &other.cells {
            let mine = self.cells.entry(set.clone()).or_default();
            for (pid, types) in row {
                let mine = mine.entry(pid.clone()).or_default();
                for (ty, n) in types {
                    *mine.entry(ty.clone()).or_default() += n;
                }
            }
        }
        for (pid, types) in &other.unknown {
            let mine = self.unknown.entry(pid.clone()).or_default();
            for (ty, n) in types {
                *mine.entry(ty.clone()).or_default() += n;
            }
        }
    }

    pub fn types(&self) -> BTreeSet<&str> {
        self.cells
            .values()
            .chain(std::iter::once(&self.unknown))
            .flat_map(|r| r.values())
            .flat_map(|t| t.keys().map(String::as_str))
            .collect()
    }

    /// One row per non-empty `(source_set, has_pid)` pair; the unknown
    /// bucket comes last.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let types: Vec<&str> = self.types().into_iter().collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["source_set", "has_pid"];
        header.extend(&types);
        w.write_record(&header)?;
        let rows = self
            .cells
            .iter()
            .map(|(set, row)| (set.as_str(), row))
            .chain(std::iter::once((UNKNOWN_BUCKET, &self.unknown)));
        for (set, row) in rows {
            for pid in ["yes", "no"] {
                let Some(counts) = row.get(pid) else { continue };
                let mut rec = vec![set.to_string(), pid.to_string()];
                rec.extend(types.iter().map(|t| counts.get(*t).copied().unwrap_or(0).to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()
    }

    pub fn read_csv(path: &Path) -> Result<ProvenanceMatrix, ProvenanceError> {
        let err = |reason: String| ProvenanceError::Matrix {
            path: path.display().to_string(),
            reason,
        };
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "source_set" || &header[1] != "has_pid" {
            return Err(err("unexpected header".into()));
        }
        let mut matrix = ProvenanceMatrix::default();
        for rec in r.records() {
            let rec = rec?;
            let has_pid = match &rec[1] {
                "yes" => true,
                "no" => false,
                other => return Err(err(format!("has_pid {other:?}"))),
            };
            for (ty, count) in header.iter().zip(rec.iter()).skip(2) {
                let n: u64 = count.parse().map_err(|_| err(format!("count {count:?}")))?;
                if n == 0 {
                    continue;
                }
                if &rec[0] == UNKNOWN_BUCKET {
                    matrix.add_unknown(has_pid, ty, n);
                } else {
                    let set = SourceSet::from_str(&rec[0])?;
                    matrix.add(&set, has_pid, ty, n);
                }
            }
        }
        Ok(matrix)
    }
}

/// Joins `non_mapped.csv` with `records`, which must be ascending by omid
/// with one record per omid (as [`ProvenanceRecords`] yields them).
pub fn aggregate<I>(
    non_mapped: &Path,
    records: I,
    tmp_dir: &Path,
    sort_budget: usize,
) -> Result<ProvenanceMatrix, ProvenanceError>
where
    I: IntoIterator<Item = io::Result<ProvenanceRecord>>,
{
    // Left side: non-mapped rows sorted by omid. The type is JSON-encoded so
    // the line stays tab- and newline-free.
    let mut sorter = ExternalSorter::new(tmp_dir, sort_budget)?;
    for row in read_non_mapped_table(non_mapped)? {
        let row = row?;
        let ty = serde_json::to_string(&row.br_type).map_err(io::Error::other)?;
        sorter.push(format!("{}\t{}\t{ty}", row.omid, pid_key(row.had_any_pid)))?;
    }

    let mut matrix = ProvenanceMatrix::default();
    let mut right = records.into_iter();
    let mut current: Option<ProvenanceRecord> = None;
    let mut exhausted = false;
    for line in sorter.finish()? {
        let line = line?;
        let mut parts = line.splitn(3, '\t');
        let (omid, pid, ty) = match (parts.next(), parts.next(), parts.next()) {
            (Some(o), Some(p), Some(t)) => (o, p == "yes", t),
            _ => return Err(io::Error::other(format!("corrupt sort line {line:?}")).into()),
        };
        let ty: String = serde_json::from_str(ty).map_err(io::Error::other)?;
        while !exhausted && current.as_ref().is_none_or(|r| r.omid.as_str() < omid) {
            match right.next() {
                Some(rec) => {
                    let rec = rec?;
                    if let Some(prev) = &current {
                        if rec.omid <= prev.omid {
                            return Err(ProvenanceError::Unsorted(rec.omid, prev.omid.clone()));
                        }
                    }
                    current = Some(rec);
                }
                None => {
                    exhausted = true;
                    current = None;
                }
            }
        }
        match &current {
            Some(rec) if rec.omid == omid => matrix.add(&rec.sources, pid, &ty, 1),
            _ => matrix.add_unknown(pid, &ty, 1),
        }
    }
    Ok(matrix)
}

/// Parses `inputs` and joins them with `non_mapped.csv`, writing the matrix
/// into `out_dir`.
pub fn run_provenance(
    inputs: &[&Path],
    out_dir: &Path,
    sort_budget: usize,
    sink: &mut dyn DefectSink,
) -> Result<ProvenanceMatrix, ProvenanceError> {
    let mut parser = ProvenanceParser::new(out_dir, sort_budget / 2)?;
    for path in inputs {
        parser.add_input(File::open(path)?, &path.display().to_string(), sink)?;
    }
    let records = parser.finish()?;
    let matrix = aggregate(
        &out_dir.join(crate::mapper::NON_MAPPED_FILE),
        records,
        out_dir,
        sort_budget / 2,
    )?;
    let mut w = BufWriter::new(File::create(out_dir.join(PROVENANCE_MATRIX_FILE))?);
    matrix.write_csv(&mut w)?;
    w.flush()?;
    Ok(matrix)
}
