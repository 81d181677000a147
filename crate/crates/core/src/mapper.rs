//! The mapping pass: every source record lands in exactly one of the
//! one-to-one, multi-mapped or non-mapped tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::extsort::{ExternalSorter, DEFAULT_SORT_BUDGET};
use crate::index::{IndexError, PidIndex};
use crate::ingest::{BrRecord, Defect, DefectSink, IngestError, OaKind};
use crate::pid::Pid;

pub const ONE_TO_ONE_FILE: &str = "one_to_one.csv";
pub const MULTI_MAPPED_FILE: &str = "multi_mapped.csv";
pub const NON_MAPPED_FILE: &str = "non_mapped.csv";
pub const STATS_FILE: &str = "stats.json";
pub const INVERTED_GROUPS_FILE: &str = "inverted_groups.csv";

const CHUNK: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("table {path}: {reason}")]
    Table { path: String, reason: String },
}

impl From<csv::Error> for MapError {
    fn from(err: csv::Error) -> Self {
        MapError::Io(io::Error::other(err))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    OneToOne(String),
    /// Sorted, deduplicated, at least two IDs.
    MultiMapped(Vec<String>),
    NonMapped { had_supported_pids: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingOutcome {
    pub omid: Pid,
    pub br_type: String,
    pub verdict: Verdict,
    /// Any external identifier at all, ISBN included.
    pub had_any_pid: bool,
}

impl MappingOutcome {
    /// A multi-mapped row that mixes Work and Source targets.
    pub fn is_mixed_kind(&self) -> bool {
        match &self.verdict {
            Verdict::MultiMapped(ids) => is_mixed_kind(ids),
            _ => false,
        }
    }
}

pub fn is_mixed_kind<S: AsRef<str>>(ids: &[S]) -> bool {
    let mut kinds = ids.iter().map(|id| OaKind::of_id(id.as_ref()));
    match kinds.next() {
        Some(first) => kinds.any(|k| k != first),
        None => false,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingStats {
    pub processed: u64,
    pub with_supported_pids: u64,
    pub one_to_one: u64,
    pub multi_mapped: u64,
    pub non_mapped_with_pids: u64,
    pub non_mapped_without_pids: u64,
    pub multiplicity_histogram: BTreeMap<usize, u64>,
    pub inverted_multi_omids: u64,
}

impl MappingStats {
    pub fn record(&mut self, outcome: &MappingOutcome) {
        self.processed += 1;
        match &outcome.verdict {
            Verdict::OneToOne(_) => {
                self.with_supported_pids += 1;
                self.one_to_one += 1;
            }
            Verdict::MultiMapped(ids) => {
                self.with_supported_pids += 1;
                self.multi_mapped += 1;
                *self.multiplicity_histogram.entry(ids.len()).or_default() += 1;
            }
            Verdict::NonMapped {
                had_supported_pids: true,
            } => {
                self.with_supported_pids += 1;
                self.non_mapped_with_pids += 1;
            }
            Verdict::NonMapped {
                had_supported_pids: false,
            } => self.non_mapped_without_pids += 1,
        }
    }

    /// Checks the three partition identities.
    pub fn check_identities(&self) -> Result<(), String> {
        let mapped = self.one_to_one + self.multi_mapped + self.non_mapped_with_pids;
        if mapped != self.with_supported_pids {
            return Err(format!(
                "one_to_one + multi_mapped + non_mapped_with_pids = {mapped}, with_supported_pids = {}",
                self.with_supported_pids
            ));
        }
        if self.with_supported_pids + self.non_mapped_without_pids != self.processed {
            return Err(format!(
                "with_supported_pids + non_mapped_without_pids != processed ({})",
                self.processed
            ));
        }
        let hist: u64 = self.multiplicity_histogram.values().sum();
        if hist != self.multi_mapped {
            return Err(format!("histogram sums to {hist}, multi_mapped = {}", self.multi_mapped));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &MappingStats) {
        self.processed += other.processed;
        self.with_supported_pids += other.with_supported_pids;
        self.one_to_one += other.one_to_one;
        self.multi_mapped += other.multi_mapped;
        self.non_mapped_with_pids += other.non_mapped_with_pids;
        self.non_mapped_without_pids += other.non_mapped_without_pids;
        for (n, c) in &other.multiplicity_histogram {
            *self.multiplicity_histogram.entry(*n).or_default() += c;
        }
        self.inverted_multi_omids += other.inverted_multi_omids;
    }
}

/// Looks up every mapping-eligible identifier of `br` and unions the hits.
pub fn map_record(br: &BrRecord, index: &PidIndex) -> Result<MappingOutcome, IndexError> {
    let mut hits = BTreeSet::new();
    let mut had_supported_pids = false;
    for pid in br.eligible_pids() {
        had_supported_pids = true;
        hits.extend(index.lookup(pid)?);
    }
    let verdict = match hits.len() {
        0 => Verdict::NonMapped { had_supported_pids },
        1 => Verdict::OneToOne(hits.into_iter().next().unwrap()),
        _ => Verdict::MultiMapped(hits.into_iter().collect()),
    };
    Ok(MappingOutcome {
        omid: br.omid.clone(),
        br_type: br.br_type.clone(),
        verdict,
        had_any_pid: !br.pids.is_empty(),
    })
}

#[derive(Debug, Clone)]
pub struct MapOptions {
    pub workers: usize,
    pub sort_budget: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            workers: 1,
            sort_budget: DEFAULT_SORT_BUDGET,
        }
    }
}

struct TableWriters {
    one: csv::Writer<BufWriter<File>>,
    multi: csv::Writer<BufWriter<File>>,
    non: csv::Writer<BufWriter<File>>,
}

impl TableWriters {
    fn create(out_dir: &Path) -> Result<Self, MapError> {
        let open = |name: &str, header: &[&str]| -> Result<_, MapError> {
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out_dir.join(name))?));
            w.write_record(header)?;
            Ok(w)
        };
        Ok(TableWriters {
            one: open(ONE_TO_ONE_FILE, &["omid", "openalex_id", "type"])?,
            multi: open(MULTI_MAPPED_FILE, &["omid", "openalex_id", "type"])?,
            non: open(
                NON_MAPPED_FILE,
                &["omid", "type", "had_supported_pids", "had_any_pid"],
            )?,
        })
    }

    fn write(&mut self, outcome: &MappingOutcome) -> Result<(), MapError> {
        let omid = outcome.omid.value();
        match &outcome.verdict {
            Verdict::OneToOne(id) => self.one.write_record([omid, id, &outcome.br_type])?,
            Verdict::MultiMapped(ids) => {
                self.multi
                    .write_record([omid, &ids.join(" "), &outcome.br_type])?
            }
            Verdict::NonMapped { had_supported_pids } => self.non.write_record([
                omid,
                &outcome.br_type,
                bool_str(*had_supported_pids),
                bool_str(outcome.had_any_pid),
            ])?,
        }
        Ok(())
    }

    fn finish(self) -> Result<(), MapError> {
        for w in [self.one, self.multi, self.non] {
            let mut inner = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
            inner.flush()?;
        }
        Ok(())
    }
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

/// Runs the mapping pass over `brs`, streaming the three outcome tables into
/// `out_dir`, then computes the inverted multi-mapping count from them and
/// writes `stats.json`. Duplicate omids are reported to `defects`.
pub fn run_mapping<I, E>(
    brs: I,
    index: &PidIndex,
    out_dir: &Path,
    opts: &MapOptions,
    defects: &mut dyn DefectSink,
) -> Result<MappingStats, MapError>
where
    I: IntoIterator<Item = Result<BrRecord, E>>,
    MapError: From<E>,
{
    std::fs::create_dir_all(out_dir)?;
    let mut writers = TableWriters::create(out_dir)?;
    let mut stats = MappingStats::default();
    let mut omids = ExternalSorter::new(out_dir, opts.sort_budget / 2)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(io::Error::other)?;

    let mut chunk: Vec<BrRecord> = Vec::with_capacity(CHUNK);
    let flush = |chunk: &mut Vec<BrRecord>,
                     writers: &mut TableWriters,
                     stats: &mut MappingStats,
                     omids: &mut ExternalSorter|
     -> Result<(), MapError> {
        let outcomes: Vec<Result<MappingOutcome, IndexError>> = if opts.workers > 1 {
            pool.install(|| chunk.par_iter().map(|br| map_record(br, index)).collect())
        } else {
            chunk.iter().map(|br| map_record(br, index)).collect()
        };
        for outcome in outcomes {
            let outcome = outcome?;
            stats.record(&outcome);
            writers.write(&outcome)?;
            omids.push(outcome.omid.value().to_string())?;
        }
        chunk.clear();
        Ok(())
    };

    for br in brs {
        chunk.push(br?);
        if chunk.len() == CHUNK {
            flush(&mut chunk, &mut writers, &mut stats, &mut omids)?;
        }
    }
    flush(&mut chunk, &mut writers, &mut stats, &mut omids)?;
    writers.finish()?;

    report_duplicate_omids(omids, defects)?;

    let mut groups = BufWriter::new(File::create(out_dir.join(INVERTED_GROUPS_FILE))?);
    stats.inverted_multi_omids = inverted_multimap_count(
        &out_dir.join(ONE_TO_ONE_FILE),
        &out_dir.join(MULTI_MAPPED_FILE),
        out_dir,
        opts.sort_budget,
        Some(&mut groups),
    )?;
    groups.flush()?;

    write_stats(&out_dir.join(STATS_FILE), &stats)?;
    Ok(stats)
}

fn report_duplicate_omids(
    omids: ExternalSorter,
    defects: &mut dyn DefectSink,
) -> Result<(), MapError> {
    let mut prev: Option<String> = None;
    let mut reported = false;
    for omid in omids.finish()? {
        let omid = omid?;
        if prev.as_deref() == Some(omid.as_str()) {
            if !reported {
                defects.report(Defect {
                    input: "mapping".into(),
                    line_no: 0,
                    reason: format!("duplicate omid {omid}"),
                });
                reported = true;
            }
        } else {
            reported = false;
            prev = Some(omid);
        }
    }
    Ok(())
}

pub fn write_stats(path: &Path, stats: &MappingStats) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(stats).map_err(io::Error::other)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)
}

pub fn read_stats(path: &Path) -> Result<MappingStats, MapError> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| MapError::Table {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// One row of `multi_mapped.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiRow {
    pub omid: String,
    pub oa_ids: Vec<String>,
    pub br_type: String,
}

/// One row of `non_mapped.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonMappedRow {
    pub omid: String,
    pub br_type: String,
    pub had_supported_pids: bool,
    pub had_any_pid: bool,
}

fn table_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>, MapError> {
    let file = File::open(path)?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::with_capacity(1 << 16, file)))
}

fn table_err(path: &Path, line: u64, reason: &str) -> MapError {
    MapError::Table {
        path: path.display().to_string(),
        reason: format!("line {line}: {reason}"),
    }
}

/// Streams `(omid, [openalex ids], type)` rows from a one-to-one or
/// multi-mapped table.
pub fn read_mapped_table(
    path: &Path,
) -> Result<impl Iterator<Item = Result<MultiRow, MapError>>, MapError> {
    let reader = table_reader(path)?;
    let path = path.to_path_buf();
    Ok(reader.into_records().map(move |rec| {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 3 {
            return Err(table_err(&path, line, "expected 3 columns"));
        }
        let oa_ids: Vec<String> = rec[1].split(' ').filter(|s| !s.is_empty()).map(String::from).collect();
        if oa_ids.is_empty() {
            return Err(table_err(&path, line, "empty openalex_id"));
        }
        Ok(MultiRow {
            omid: rec[0].to_string(),
            oa_ids,
            br_type: rec[2].to_string(),
        })
    }))
}

pub fn read_non_mapped_table(
    path: &Path,
) -> Result<impl Iterator<Item = Result<NonMappedRow, MapError>>, MapError> {
    let reader = table_reader(path)?;
    let path = path.to_path_buf();
    Ok(reader.into_records().map(move |rec| {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 4 {
            return Err(table_err(&path, line, "expected 4 columns"));
        }
        let flag = |i: usize| parse_bool(&rec[i]).ok_or_else(|| table_err(&path, line, "bad boolean"));
        Ok(NonMappedRow {
            omid: rec[0].to_string(),
            br_type: rec[1].to_string(),
            had_supported_pids: flag(2)?,
            had_any_pid: flag(3)?,
        })
    }))
}

/// Counts source records that share a target with at least one other
/// source record, reading `(omid, oa_id)` pairs from both mapped tables.
/// Groups with two or more distinct omids are written to `groups` as CSV.
pub fn inverted_multimap_count(
    one_to_one: &Path,
    multi: &Path,
    tmp_dir: &Path,
    sort_budget: usize,
    groups: Option<&mut dyn Write>,
) -> Result<u64, MapError> {
    let pairs = read_mapped_table(one_to_one)?
        .chain(read_mapped_table(multi)?)
        .flat_map(|row| -> Box<dyn Iterator<Item = Result<(String, String), MapError>>> {
            match row {
                Ok(row) => {
                    let omid = row.omid;
                    Box::new(row.oa_ids.into_iter().map(move |id| Ok((omid.clone(), id))))
                }
                Err(e) => Box::new(std::iter::once(Err(e))),
            }
        });
    inverted_from_pairs(pairs, tmp_dir, sort_budget, groups)
}

/// Core of [`inverted_multimap_count`] over arbitrary `(omid, oa_id)` pairs.
pub fn inverted_from_pairs<I>(
    pairs: I,
    tmp_dir: &Path,
    sort_budget: usize,
    mut groups: Option<&mut dyn Write>,
) -> Result<u64, MapError>
where
    I: IntoIterator<Item = Result<(String, String), MapError>>,
{
    let mut by_target = ExternalSorter::new(tmp_dir, sort_budget / 2)?;
    for pair in pairs {
        let (omid, oa_id) = pair?;
        by_target.push(format!("{oa_id}\t{omid}"))?;
    }

    let mut shared = ExternalSorter::new(tmp_dir, sort_budget / 2)?;
    let mut writer = groups.as_mut().map(csv::Writer::from_writer);
    if let Some(w) = writer.as_mut() {
        w.write_record(["openalex_id", "omids"])?;
    }

    let mut current: Option<String> = None;
    let mut members: Vec<String> = Vec::new();
    let mut close_group = |target: &str, members: &mut Vec<String>| -> Result<(), MapError> {
        if members.len() >= 2 {
            if let Some(w) = writer.as_mut() {
                w.write_record([target, &members.join(" ")])?;
            }
            for m in members.iter() {
                shared.push(m.clone())?;
            }
        }
        members.clear();
        Ok(())
    };

    for line in by_target.finish()? {
        let line = line?;
        let (target, omid) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        if current.as_deref() != Some(target) {
            if let Some(prev) = current.take() {
                close_group(&prev, &mut members)?;
            }
            current = Some(target.to_string());
        }
        // Input is sorted, so a repeated omid within a target is adjacent.
        if members.last().map(String::as_str) != Some(omid) {
            members.push(omid.to_string());
        }
    }
    if let Some(prev) = current.take() {
        close_group(&prev, &mut members)?;
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }

    let mut count = 0;
    let mut prev: Option<String> = None;
    for omid in shared.finish()? {
        let omid = omid?;
        if prev.as_deref() != Some(omid.as_str()) {
            count += 1;
            prev = Some(omid);
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::ingest::{OaRecord, WorkVersion};
    use crate::pid::PidScheme;

    fn pid(s: &str) -> Pid {
        crate::pid::parse_pid(s).unwrap()
    }

    fn br(omid: &str, pids: &[&str], ty: &str) -> BrRecord {
        BrRecord {
            omid: Pid::new(PidScheme::Omid, omid).unwrap(),
            pids: pids.iter().map(|p| pid(p)).collect(),
            br_type: ty.into(),
        }
    }

    fn oa(id: &str, pids: &[&str]) -> OaRecord {
        let kind = OaKind::of_id(id).unwrap();
        let (issns, pids): (Vec<Pid>, Vec<Pid>) =
            pids.iter().map(|p| pid(p)).partition(|p| p.scheme() == PidScheme::Issn);
        OaRecord {
            oa_id: Pid::new(PidScheme::Openalex, id).unwrap(),
            kind,
            pids,
            work_type: None,
            version: WorkVersion::Unknown,
            issns,
        }
    }

    fn pairs(list: &[(&str, &str)]) -> Vec<Result<(String, String), MapError>> {
        list.iter().map(|(o, w)| Ok((o.to_string(), w.to_string()))).collect()
    }

    #[test]
    fn map_record_examples() {
        let dir = tempfile::tempdir().unwrap();
        let (index, _) = build_index(
            vec![
                oa("W1", &["doi:10.1/d", "pmid:5"]),
                oa("S2764583335", &["issn:2088-0278"]),
                oa("S4210187171", &["issn:0378-5955"]),
            ],
            dir.path(),
        )
        .unwrap();

        let out = map_record(&br("br/1", &["doi:10.1/d", "pmid:5"], "journal article"), &index).unwrap();
        assert_eq!(out.verdict, Verdict::OneToOne("W1".into()));

        let journal = br("br/06602375171", &["issn:2088-0278", "issn:0378-5955"], "journal");
        let out = map_record(&journal, &index).unwrap();
        assert_eq!(
            out.verdict,
            Verdict::MultiMapped(vec!["S2764583335".into(), "S4210187171".into()])
        );
        assert!(!out.is_mixed_kind());

        let book = br("br/3", &["isbn:9783030624668"], "book");
        let out = map_record(&book, &index).unwrap();
        assert_eq!(out.verdict, Verdict::NonMapped { had_supported_pids: false });
        assert!(out.had_any_pid);

        let mixed = br("br/4", &["doi:10.1/d", "issn:0378-5955"], "journal");
        assert!(map_record(&mixed, &index).unwrap().is_mixed_kind());
    }

    #[test]
    fn pid_order_does_not_matter() {
        let dir = tempfile::tempdir().unwrap();
        let (index, _) =
            build_index(vec![oa("W1", &["doi:10.1/a"]), oa("W2", &["pmid:9"])], dir.path()).unwrap();
        let a = map_record(&br("br/1", &["doi:10.1/a", "pmid:9"], ""), &index).unwrap();
        let b = map_record(&br("br/1", &["pmid:9", "doi:10.1/a"], ""), &index).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverted_examples() {
        let dir = tempfile::tempdir().unwrap();
        let mut groups = Vec::new();
        let n = inverted_from_pairs(
            pairs(&[("o1", "W1"), ("o2", "W1"), ("o3", "W2")]),
            dir.path(),
            1 << 20,
            Some(&mut groups),
        )
        .unwrap();
        assert_eq!(n, 2);
        assert_eq!(String::from_utf8(groups).unwrap(), "openalex_id,omids\nW1,o1 o2\n");

        let n = inverted_from_pairs(pairs(&[("o1", "W1"), ("o2", "W2")]), dir.path(), 1 << 20, None)
            .unwrap();
        assert_eq!(n, 0);

        let n = inverted_from_pairs(
            pairs(&[("o1", "W1"), ("o1", "W2"), ("o2", "W2")]),
            dir.path(),
            1 << 20,
            None,
        )
        .unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn empty_run_writes_headers() {
        let dir = tempfile::tempdir().unwrap();
        let (index, _) = build_index(Vec::new(), &dir.path().join("idx")).unwrap();
        let out = dir.path().join("out");
        let stats = run_mapping(
            Vec::<Result<BrRecord, MapError>>::new(),
            &index,
            &out,
            &MapOptions::default(),
            &mut (),
        )
        .unwrap();
        assert_eq!(stats, MappingStats::default());
        assert_eq!(
            std::fs::read_to_string(out.join(ONE_TO_ONE_FILE)).unwrap(),
            "omid,openalex_id,type\n"
        );
        assert_eq!(
            std::fs::read_to_string(out.join(NON_MAPPED_FILE)).unwrap(),
            "omid,type,had_supported_pids,had_any_pid\n"
        );
        assert_eq!(read_stats(&out.join(STATS_FILE)).unwrap(), stats);
    }

    #[test]
    fn histogram_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let (index, _) = build_index(
            vec![
                oa("W1", &["doi:10.1/a"]),
                oa("W2", &["doi:10.1/b"]),
                oa("W3", &["doi:10.1/c"]),
            ],
            &dir.path().join("idx"),
        )
        .unwrap();
        let brs = vec![
            br("br/1", &["doi:10.1/a", "doi:10.1/b", "doi:10.1/c"], "journal article"),
            br("br/2", &["doi:10.1/a", "doi:10.1/b"], "book"),
            br("br/2", &[], "book"),
        ];
        let mut defects = Vec::new();
        let stats = run_mapping(
            brs.into_iter().map(Ok::<_, MapError>),
            &index,
            &dir.path().join("out"),
            &MapOptions { workers: 2, ..MapOptions::default() },
            &mut defects,
        )
        .unwrap();
        assert_eq!(stats.multiplicity_histogram, BTreeMap::from([(2, 1), (3, 1)]));
        assert_eq!(stats.inverted_multi_omids, 2);
        stats.check_identities().unwrap();
        assert_eq!(defects.len(), 1);
        assert!(defects[0].reason.contains("br/2"));
        let multi = std::fs::read_to_string(dir.path().join("out").join(MULTI_MAPPED_FILE)).unwrap();
        assert_eq!(
            multi,
            "omid,openalex_id,type\nbr/1,W1 W2 W3,journal article\nbr/2,W1 W2,book\n"
        );
    }
}
