//! Run summary: recounts every table in an output directory, checks the
//! recount against `stats.json` and the phase outputs, and renders the
//! result as `summary.json`, `report.txt` and `histogram.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{
    matrices_from_verdicts, Category, CategoryMatrix, SOURCES_MATRIX_FILE, UNSPECIFIED_TYPE, VERDICTS_FILE,
    WORKS_MATRIX_FILE,
};
use crate::extsort::DEFAULT_SORT_BUDGET;
use crate::ingest::OaKind;
use crate::mapper::{
    inverted_multimap_count, is_mixed_kind, read_mapped_table, read_non_mapped_table, read_stats, MapError,
    MappingStats, MULTI_MAPPED_FILE, NON_MAPPED_FILE, ONE_TO_ONE_FILE, STATS_FILE,
};
use crate::provenance::{ProvenanceMatrix, PROVENANCE_MATRIX_FILE};

pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.txt";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("outputs disagree with their recount:\n  {}", .0.join("\n  "))]
    InconsistentOutputs(Vec<String>),
    #[error("missing {missing}; run `{hint}` first")]
    MissingPhaseOutputs { missing: String, hint: &'static str },
    #[error(transparent)]
    Table(#[from] MapError),
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
}

/// Size and SHA-256 of a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub file: String,
    pub size: u64,
    pub sha256: String,
}

pub fn fingerprint_file(path: &Path) -> io::Result<Fingerprint> {
    let mut reader = BufReader::with_capacity(1 << 20, File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    let mut size = 0u64;
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        size += n as u64;
        hasher.update(&buf[..n]);
    }
    Ok(Fingerprint {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        size,
        sha256: hex::encode(hasher.finalize()),
    })
}

pub fn fingerprint_bytes(label: &str, bytes: &[u8]) -> Fingerprint {
    Fingerprint {
        file: label.to_string(),
        size: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

/// Written next to the tables by each phase; carries what the tables
/// themselves cannot tell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub inputs: BTreeMap<String, Fingerprint>,
    pub config: BTreeMap<String, Fingerprint>,
    pub phase_millis: BTreeMap<String, u64>,
}

impl RunManifest {
    /// Loads the manifest in `out_dir`, or an empty one.
    pub fn load(out_dir: &Path) -> Result<RunManifest, ReportError> {
        let path = out_dir.join(RUN_MANIFEST_FILE);
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| ReportError::Parse {
                path: path.display().to_string(),
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(RunManifest {
                tool_version: TOOL_VERSION.to_string(),
                ..RunManifest::default()
            }),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, out_dir: &Path) -> io::Result<()> {
        write_json(&out_dir.join(RUN_MANIFEST_FILE), self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub multiplicity: usize,
    pub count: u64,
    /// Share of multi-mapped rows, in percent.
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub stats: MappingStats,
    pub histogram: Vec<HistogramRow>,
    pub works: Option<CategoryMatrix>,
    pub sources: Option<CategoryMatrix>,
    pub mixed_kind_rows: u64,
    pub provenance: Option<ProvenanceMatrix>,
    pub inputs: BTreeMap<String, Fingerprint>,
    pub config: BTreeMap<String, Fingerprint>,
    pub phase_millis: BTreeMap<String, u64>,
    pub absent_phases: Vec<String>,
}

pub fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 * 100.0 / whole as f64
    }
}

pub fn histogram_rows(stats: &MappingStats) -> Vec<HistogramRow> {
    stats
        .multiplicity_histogram
        .iter()
        .map(|(m, n)| HistogramRow {
            multiplicity: *m,
            count: *n,
            percentage: percent(*n, stats.multi_mapped),
        })
        .collect()
}

struct Recount {
    stats: MappingStats,
    mixed_kind_rows: u64,
    non_mapped_margins: BTreeMap<(bool, String), u64>,
}

fn recount_tables(out_dir: &Path, sort_budget: usize) -> Result<Recount, ReportError> {
    let mut stats = MappingStats::default();
    for row in read_mapped_table(&out_dir.join(ONE_TO_ONE_FILE))? {
        let row = row?;
        if row.oa_ids.len() != 1 {
            return Err(ReportError::InconsistentOutputs(vec![format!(
                "{ONE_TO_ONE_FILE}: {} maps to {} IDs",
                row.omid,
                row.oa_ids.len()
            )]));
        }
        stats.one_to_one += 1;
    }
    let mut mixed_kind_rows = 0;
    for row in read_mapped_table(&out_dir.join(MULTI_MAPPED_FILE))? {
        let row = row?;
        if row.oa_ids.len() < 2 {
            return Err(ReportError::InconsistentOutputs(vec![format!(
                "{MULTI_MAPPED_FILE}: {} maps to a single ID",
                row.omid
            )]));
        }
        stats.multi_mapped += 1;
        *stats.multiplicity_histogram.entry(row.oa_ids.len()).or_default() += 1;
        if is_mixed_kind(&row.oa_ids) {
            mixed_kind_rows += 1;
        }
    }
    let mut non_mapped_margins = BTreeMap::new();
    for row in read_non_mapped_table(&out_dir.join(NON_MAPPED_FILE))? {
        let row = row?;
        if row.had_supported_pids {
            stats.non_mapped_with_pids += 1;
        } else {
            stats.non_mapped_without_pids += 1;
        }
        let ty = if row.br_type.is_empty() {
            UNSPECIFIED_TYPE.to_string()
        } else {
            row.br_type
        };
        *non_mapped_margins.entry((row.had_any_pid, ty)).or_default() += 1;
    }
    stats.with_supported_pids = stats.one_to_one + stats.multi_mapped + stats.non_mapped_with_pids;
    stats.processed = stats.with_supported_pids + stats.non_mapped_without_pids;
    stats.inverted_multi_omids = inverted_multimap_count(
        &out_dir.join(ONE_TO_ONE_FILE),
        &out_dir.join(MULTI_MAPPED_FILE),
        out_dir,
        sort_budget,
        None,
    )?;
    Ok(Recount {
        stats,
        mixed_kind_rows,
        non_mapped_margins,
    })
}

fn diff_stats(recount: &MappingStats, stored: &MappingStats, problems: &mut Vec<String>) {
    let fields = [
        ("processed", recount.processed, stored.processed),
        ("with_supported_pids", recount.with_supported_pids, stored.with_supported_pids),
        ("one_to_one", recount.one_to_one, stored.one_to_one),
        ("multi_mapped", recount.multi_mapped, stored.multi_mapped),
        ("non_mapped_with_pids", recount.non_mapped_with_pids, stored.non_mapped_with_pids),
        ("non_mapped_without_pids", recount.non_mapped_without_pids, stored.non_mapped_without_pids),
        ("inverted_multi_omids", recount.inverted_multi_omids, stored.inverted_multi_omids),
    ];
    for (name, got, want) in fields {
        if got != want {
            problems.push(format!("{STATS_FILE} {name} = {want}, tables give {got}"));
        }
    }
    if recount.multiplicity_histogram != stored.multiplicity_histogram {
        problems.push(format!("{STATS_FILE} multiplicity_histogram disagrees with {MULTI_MAPPED_FILE}"));
    }
}

fn read_matrix(path: &Path) -> Result<CategoryMatrix, ReportError> {
    CategoryMatrix::read_csv(path).map_err(|reason| ReportError::Parse {
        path: path.display().to_string(),
        reason,
    })
}

/// Recomputes every figure from the tables in `out_dir` and cross-checks it
/// against `stats.json` and the classifier and provenance outputs.
pub fn build_summary(out_dir: &Path) -> Result<RunSummary, ReportError> {
    build_summary_with_budget(out_dir, DEFAULT_SORT_BUDGET)
}

pub fn build_summary_with_budget(out_dir: &Path, sort_budget: usize) -> Result<RunSummary, ReportError> {
    for name in [ONE_TO_ONE_FILE, MULTI_MAPPED_FILE, NON_MAPPED_FILE, STATS_FILE] {
        if !out_dir.join(name).is_file() {
            return Err(ReportError::MissingPhaseOutputs {
                missing: name.to_string(),
                hint: "bibmap map",
            });
        }
    }
    let recount = recount_tables(out_dir, sort_budget)?;
    let stored = read_stats(&out_dir.join(STATS_FILE))?;
    let mut problems = Vec::new();
    diff_stats(&recount.stats, &stored, &mut problems);
    if let Err(e) = recount.stats.check_identities() {
        problems.push(e);
    }
    let mut absent = Vec::new();

    let (works, sources) = if out_dir.join(VERDICTS_FILE).is_file() {
        let (works, sources) = matrices_from_verdicts(&out_dir.join(VERDICTS_FILE)).map_err(|reason| {
            ReportError::Parse {
                path: out_dir.join(VERDICTS_FILE).display().to_string(),
                reason,
            }
        })?;
        for (file, recounted) in [(WORKS_MATRIX_FILE, &works), (SOURCES_MATRIX_FILE, &sources)] {
            let path = out_dir.join(file);
            if !path.is_file() {
                problems.push(format!("{file} missing although {VERDICTS_FILE} exists"));
            } else if read_matrix(&path)? != *recounted {
                problems.push(format!("{file} disagrees with {VERDICTS_FILE}"));
            }
        }
        let classified = works.total() + sources.total();
        if classified + recount.mixed_kind_rows != recount.stats.multi_mapped {
            problems.push(format!(
                "{VERDICTS_FILE} has {classified} rows and {} rows are mixed, but {MULTI_MAPPED_FILE} has {}",
                recount.mixed_kind_rows, recount.stats.multi_mapped
            ));
        }
        (Some(works), Some(sources))
    } else {
        absent.push("classify".to_string());
        (None, None)
    };

    let provenance = if out_dir.join(PROVENANCE_MATRIX_FILE).is_file() {
        let path = out_dir.join(PROVENANCE_MATRIX_FILE);
        let matrix = ProvenanceMatrix::read_csv(&path).map_err(|e| ReportError::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        if matrix.margins() != recount.non_mapped_margins {
            problems.push(format!(
                "{PROVENANCE_MATRIX_FILE} per-type totals disagree with {NON_MAPPED_FILE}"
            ));
        }
        Some(matrix)
    } else {
        absent.push("provenance".to_string());
        None
    };

    if !problems.is_empty() {
        return Err(ReportError::InconsistentOutputs(problems));
    }
    let manifest = RunManifest::load(out_dir)?;
    Ok(RunSummary {
        tool_version: TOOL_VERSION.to_string(),
        histogram: histogram_rows(&recount.stats),
        stats: recount.stats,
        works,
        sources,
        mixed_kind_rows: recount.mixed_kind_rows,
        provenance,
        inputs: manifest.inputs,
        config: manifest.config,
        phase_millis: manifest.phase_millis,
        absent_phases: absent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn render_report(summary: &RunSummary, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(summary).expect("summary serializes");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Text => render_text(summary).into_bytes(),
    }
}

fn share(part: u64, whole: u64) -> String {
    format!("{part} ({:.1}%)", percent(part, whole))
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let mut line = String::from(" ");
        for (i, (cell, w)) in row.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(line, " {cell:<w$}");
            } else {
                let _ = write!(line, " {cell:>w$}");
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn matrix_section(out: &mut String, title: &str, matrix: &CategoryMatrix, kind: OaKind) {
    let columns = Category::columns(kind);
    let _ = writeln!(out, "{title} ({} rows)", matrix.total());
    let mut header = vec!["type".to_string()];
    header.extend(columns.iter().map(|c| c.to_string()));
    let totals = matrix.category_totals();
    let mut rows = vec![std::iter::once("Total".to_string())
        .chain(columns.iter().map(|c| totals.get(c).copied().unwrap_or(0).to_string()))
        .collect::<Vec<_>>()];
    for ty in matrix.types_by_total() {
        rows.push(
            std::iter::once(ty.to_string())
                .chain(columns.iter().map(|c| matrix.get(ty, *c).to_string()))
                .collect(),
        );
    }
    table(out, &header, &rows);
    out.push('\n');
}

fn render_text(s: &RunSummary) -> String {
    let st = &s.stats;
    let mut out = String::new();
    let _ = writeln!(out, "bibmap {} mapping report\n", s.tool_version);
    out.push_str("Mapping\n");
    let lines = [
        ("processed", st.processed.to_string()),
        ("with supported PIDs", st.with_supported_pids.to_string()),
        ("one-to-one", share(st.one_to_one, st.with_supported_pids)),
        ("multi-mapped", share(st.multi_mapped, st.with_supported_pids)),
        ("non-mapped with PIDs", share(st.non_mapped_with_pids, st.with_supported_pids)),
        ("non-mapped without PIDs", st.non_mapped_without_pids.to_string()),
        ("inverted multi-mapped", st.inverted_multi_omids.to_string()),
    ];
    for (label, value) in lines {
        let _ = writeln!(out, "  {label}: {value}");
    }
    out.push('\n');

    out.push_str("Target IDs per multi-mapped record\n");
    if s.histogram.is_empty() {
        out.push_str("  (none)\n");
    }
    for row in &s.histogram {
        let _ = writeln!(out, "  {}: {} ({:.1}%)", row.multiplicity, row.count, row.percentage);
    }
    out.push('\n');

    match (&s.works, &s.sources) {
        (Some(works), Some(sources)) => {
            matrix_section(&mut out, "Work categories", works, OaKind::Work);
            matrix_section(&mut out, "Source categories", sources, OaKind::Source);
            let _ = writeln!(out, "Mixed Work/Source rows: {}\n", s.mixed_kind_rows);
        }
        _ => out.push_str("Categories: absent\n\n"),
    }

    match &s.provenance {
        Some(p) => {
            let _ = writeln!(
                out,
                "Non-mapped records by primary source ({} attributed, {} unknown)",
                p.total(),
                p.unknown_total()
            );
            let types: Vec<&str> = p.types().into_iter().collect();
            let mut header = vec!["source".to_string(), "PIDs".to_string()];
            header.extend(types.iter().map(|t| t.to_string()));
            let mut rows = Vec::new();
            let sets = p
                .cells
                .iter()
                .map(|(k, v)| (k.as_str(), v))
                .chain(std::iter::once((crate::provenance::UNKNOWN_BUCKET, &p.unknown)));
            for (set, row) in sets {
                for pid in ["yes", "no"] {
                    let Some(counts) = row.get(pid) else { continue };
                    let mut cells = vec![set.to_string(), pid.to_string()];
                    cells.extend(types.iter().map(|t| counts.get(*t).copied().unwrap_or(0).to_string()));
                    rows.push(cells);
                }
            }
            table(&mut out, &header, &rows);
            out.push('\n');
        }
        None => out.push_str("Provenance: absent\n\n"),
    }

    if !s.inputs.is_empty() || !s.config.is_empty() {
        out.push_str("Inputs\n");
        for (name, fp) in s.inputs.iter().chain(&s.config) {
            let _ = writeln!(out, "  {name}: {} {} bytes sha256:{}", fp.file, fp.size, fp.sha256);
        }
        out.push('\n');
    }
    if !s.absent_phases.is_empty() {
        let _ = writeln!(out, "Absent phases: {}", s.absent_phases.join(", "));
    }
    out
}

pub fn write_histogram_csv<W: Write>(rows: &[HistogramRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["multiplicity", "count", "percentage"])?;
    for row in rows {
        w.write_record([
            row.multiplicity.to_string(),
            row.count.to_string(),
            format!("{:.1}", row.percentage),
        ])?;
    }
    w.flush()
}

/// Builds the summary and writes `summary.json`, `report.txt` and
/// `histogram.csv` into `out_dir`.
pub fn write_report(out_dir: &Path) -> Result<RunSummary, ReportError> {
    let summary = build_summary(out_dir)?;
    std::fs::write(out_dir.join(SUMMARY_FILE), render_report(&summary, ReportFormat::Json))?;
    std::fs::write(out_dir.join(REPORT_FILE), render_report(&summary, ReportFormat::Text))?;
    let mut hist = Vec::new();
    write_histogram_csv(&summary.histogram, &mut hist)?;
    std::fs::write(out_dir.join(HISTOGRAM_FILE), hist)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::write_stats;

    fn summary(hist: &[(usize, u64)]) -> RunSummary {
        let multi: u64 = hist.iter().map(|(_, n)| n).sum();
        let stats = MappingStats {
            processed: 10,
            with_supported_pids: 8,
            one_to_one: 5,
            multi_mapped: multi,
            non_mapped_with_pids: 3u64.saturating_sub(multi),
            non_mapped_without_pids: 2,
            multiplicity_histogram: hist.iter().copied().collect(),
            inverted_multi_omids: 0,
        };
        RunSummary {
            tool_version: "0.0.0".into(),
            histogram: histogram_rows(&stats),
            stats,
            works: None,
            sources: None,
            mixed_kind_rows: 0,
            provenance: None,
            inputs: BTreeMap::new(),
            config: BTreeMap::new(),
            phase_millis: BTreeMap::new(),
            absent_phases: vec!["classify".into(), "provenance".into()],
        }
    }

    #[test]
    fn histogram_percentages() {
        let s = summary(&[(2, 3), (3, 1)]);
        let mut buf = Vec::new();
        write_histogram_csv(&s.histogram, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "multiplicity,count,percentage\n2,3,75.0\n3,1,25.0\n"
        );
    }

    #[test]
    fn text_golden() {
        let s = summary(&[(2, 2)]);
        let text = String::from_utf8(render_report(&s, ReportFormat::Text)).unwrap();
        assert_eq!(
            text,
            "bibmap 0.0.0 mapping report\n\
             \n\
             Mapping\n\
            \x20 processed: 10\n\
            \x20 with supported PIDs: 8\n\
            \x20 one-to-one: 5 (62.5%)\n\
            \x20 multi-mapped: 2 (25.0%)\n\
            \x20 non-mapped with PIDs: 1 (12.5%)\n\
            \x20 non-mapped without PIDs: 2\n\
            \x20 inverted multi-mapped: 0\n\
             \n\
             Target IDs per multi-mapped record\n\
            \x20 2: 2 (100.0%)\n\
             \n\
             Categories: absent\n\
             \n\
             Provenance: absent\n\
             \n\
             Absent phases: classify, provenance\n"
        );
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let mut s = summary(&[(2, 2), (5, 1)]);
        let mut works = CategoryMatrix::default();
        works.add("journal article", Category::A, 2);
        s.works = Some(works);
        s.sources = Some(CategoryMatrix::default());
        let json = render_report(&s, ReportFormat::Json);
        let back: RunSummary = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(render_report(&back, ReportFormat::Text), render_report(&s, ReportFormat::Text));
    }

    #[test]
    fn empty_run() {
        let s = RunSummary {
            histogram: vec![],
            stats: MappingStats::default(),
            ..summary(&[])
        };
        let text = String::from_utf8(render_report(&s, ReportFormat::Text)).unwrap();
        assert!(text.contains("processed: 0\n"));
        assert!(text.contains("multi-mapped: 0 (0.0%)\n"));
        assert!(text.contains("(none)"));
    }

    fn write_tables(dir: &Path) {
        std::fs::write(dir.join(ONE_TO_ONE_FILE), "omid,openalex_id,type\nbr/1,W1,book\n").unwrap();
        std::fs::write(
            dir.join(MULTI_MAPPED_FILE),
            "omid,openalex_id,type\nbr/2,W1 W2,journal article\n",
        )
        .unwrap();
        std::fs::write(
            dir.join(NON_MAPPED_FILE),
            "omid,type,had_supported_pids,had_any_pid\nbr/3,book,false,true\n",
        )
        .unwrap();
    }

    #[test]
    fn tampered_stats_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_tables(dir.path());
        let mut stats = MappingStats {
            processed: 3,
            with_supported_pids: 2,
            one_to_one: 1,
            multi_mapped: 1,
            non_mapped_with_pids: 0,
            non_mapped_without_pids: 1,
            multiplicity_histogram: [(2, 1)].into(),
            inverted_multi_omids: 2,
        };
        write_stats(&dir.path().join(STATS_FILE), &stats).unwrap();
        let s = build_summary(dir.path()).unwrap();
        assert_eq!(s.stats, stats);
        assert_eq!(s.absent_phases, ["classify", "provenance"]);

        stats.one_to_one += 1;
        write_stats(&dir.path().join(STATS_FILE), &stats).unwrap();
        match build_summary(dir.path()) {
            Err(ReportError::InconsistentOutputs(p)) => assert!(p[0].contains("one_to_one")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_mapping_outputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_summary(dir.path()),
            Err(ReportError::MissingPhaseOutputs { .. })
        ));
    }

    #[test]
    fn fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        std::fs::write(&p, "abc").unwrap();
        let fp = fingerprint_file(&p).unwrap();
        assert_eq!(fp.size, 3);
        assert_eq!(fp.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
