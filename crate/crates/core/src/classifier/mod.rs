//! Cause categories for multi-mapped rows.
//!
//! Work rows are checked against the rule chain A, D, B, E, F, C; Source rows
//! only against the duplicate-ISSN rule. Every rule is evaluated row-wide and
//! the first one that fires wins, so a row meeting several conditions always
//! gets the earliest category in the chain. Within a rule, Works are scanned
//! in ascending OpenAlex-ID order, which fixes the evidence text.

mod rules;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rules::{
    CategoryRule, RuleError, RuleRegistry, DEFAULT_SOURCE_CHAIN, DEFAULT_WORK_CHAIN,
};

use crate::index::{IndexError, MetaStore};
use crate::ingest::{ClassifierConfig, OaKind, OaRecord};
use crate::mapper::{is_mixed_kind, read_mapped_table, MapError, MultiRow};
use crate::pid::doi_prefix;

pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const WORKS_MATRIX_FILE: &str = "works_matrix.csv";
pub const SOURCES_MATRIX_FILE: &str = "sources_matrix.csv";
pub const VERDICT_HEADER: [&str; 6] = ["omid", "openalex_ids", "kind", "category", "evidence", "type"];

/// Label used for rows whose type is empty.
pub const UNSPECIFIED_TYPE: &str = "<unspecified>";

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("no stored metadata for {0}; index and mapping outputs disagree")]
    MetaMissing(String),
    #[error("row {0} mixes Work and Source targets")]
    MixedKindRow(String),
    #[error(transparent)]
    Index(IndexError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Table(#[from] MapError),
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
}

impl From<IndexError> for ClassifyError {
    fn from(err: IndexError) -> Self {
        match err {
            IndexError::NotFound(id) => ClassifyError::MetaMissing(id),
            other => ClassifyError::Index(other),
        }
    }
}

impl From<csv::Error> for ClassifyError {
    fn from(err: csv::Error) -> Self {
        ClassifyError::Io(io::Error::other(err))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
    D,
    E,
    F,
    Unclassified,
}

impl Category {
    pub const WORK_COLUMNS: [Category; 7] = [
        Category::A,
        Category::B,
        Category::C,
        Category::D,
        Category::E,
        Category::F,
        Category::Unclassified,
    ];
    pub const SOURCE_COLUMNS: [Category; 2] = [Category::A, Category::Unclassified];

    pub fn columns(kind: OaKind) -> &'static [Category] {
        match kind {
            OaKind::Work => &Self::WORK_COLUMNS,
            OaKind::Source => &Self::SOURCE_COLUMNS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::A => "A",
            Category::B => "B",
            Category::C => "C",
            Category::D => "D",
            Category::E => "E",
            Category::F => "F",
            Category::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::WORK_COLUMNS
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryVerdict {
    pub category: Category,
    /// Empty only for Unclassified.
    pub evidence: String,
}

/// A multi-mapped row with the metadata of its targets resolved.
pub struct RowContext<'a> {
    pub row: &'a MultiRow,
    pub kind: OaKind,
    /// Sorted by OpenAlex ID.
    pub records: Vec<OaRecord>,
    pub config: &'a ClassifierConfig,
}

impl RowContext<'_> {
    /// `(oa_id, doi)` for every DOI of the row, in ID order.
    pub fn dois(&self) -> impl Iterator<Item = (&str, &str)> {
        self.records
            .iter()
            .flat_map(|r| r.dois().map(move |d| (r.id(), d)))
    }

    /// The single registrant prefix shared by every DOI in the row; `None`
    /// when the row has no DOI or the DOIs span several prefixes.
    pub fn shared_doi_prefix(&self) -> Option<String> {
        let mut shared: Option<String> = None;
        for (_, doi) in self.dois() {
            let prefix = doi_prefix(doi).ok()?.prefix;
            match &shared {
                None => shared = Some(prefix),
                Some(p) if *p == prefix => {}
                Some(_) => return None,
            }
        }
        shared
    }
}

/// Rule chains for Work and Source rows plus the lists they consult.
#[derive(Clone)]
pub struct Classifier {
    config: ClassifierConfig,
    work_chain: Vec<Arc<dyn CategoryRule>>,
    source_chain: Vec<Arc<dyn CategoryRule>>,
}

impl Classifier {
    /// Built-in rules in the default order.
    pub fn new(config: ClassifierConfig) -> Self {
        Classifier::with_chains(config, &RuleRegistry::builtin(), &DEFAULT_WORK_CHAIN, &DEFAULT_SOURCE_CHAIN)
            .expect("default chains resolve")
    }

    pub fn with_chains<S: AsRef<str>>(
        config: ClassifierConfig,
        registry: &RuleRegistry,
        work_rules: &[S],
        source_rules: &[S],
    ) -> Result<Self, RuleError> {
        Ok(Classifier {
            work_chain: registry.chain(OaKind::Work, work_rules)?,
            source_chain: registry.chain(OaKind::Source, source_rules)?,
            config,
        })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn classify_row(&self, row: &MultiRow, store: &MetaStore) -> Result<CategoryVerdict, ClassifyError> {
        if is_mixed_kind(&row.oa_ids) {
            return Err(ClassifyError::MixedKindRow(row.omid.clone()));
        }
        let kind = row
            .oa_ids
            .first()
            .and_then(|id| OaKind::of_id(id))
            .ok_or_else(|| ClassifyError::MetaMissing(row.oa_ids.join(" ")))?;
        let mut ids: Vec<&String> = row.oa_ids.iter().collect();
        ids.sort();
        ids.dedup();
        let records = ids
            .into_iter()
            .map(|id| store.get_meta(id))
            .collect::<Result<Vec<_>, _>>()?;
        let ctx = RowContext {
            row,
            kind,
            records,
            config: &self.config,
        };
        let chain = match kind {
            OaKind::Work => &self.work_chain,
            OaKind::Source => &self.source_chain,
        };
        Ok(chain
            .iter()
            .find_map(|rule| {
                rule.check(&ctx).map(|evidence| CategoryVerdict {
                    category: rule.category(),
                    evidence: format!("{}: {evidence}", rule.name()),
                })
            })
            .unwrap_or(CategoryVerdict {
                category: Category::Unclassified,
                evidence: String::new(),
            }))
    }
}

/// Classifies one row with the default rule chains.
pub fn classify_row(
    row: &MultiRow,
    store: &MetaStore,
    cfg: &ClassifierConfig,
) -> Result<CategoryVerdict, ClassifyError> {
    Classifier::new(cfg.clone()).classify_row(row, store)
}

/// Counts per (BR type, category).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMatrix {
    pub cells: BTreeMap<String, BTreeMap<Category, u64>>,
}

impl CategoryMatrix {
    pub fn add(&mut self, br_type: &str, category: Category, n: u64) {
        let label = if br_type.is_empty() { UNSPECIFIED_TYPE } else { br_type };
        *self
            .cells
            .entry(label.to_string())
            .or_default()
            .entry(category)
            .or_default() += n;
    }

    pub fn get(&self, br_type: &str, category: Category) -> u64 {
        self.cells
            .get(br_type)
            .and_then(|row| row.get(&category))
            .copied()
            .unwrap_or(0)
    }

    pub fn category_totals(&self) -> BTreeMap<Category, u64> {
        let mut totals = BTreeMap::new();
        for row in self.cells.values() {
            for (cat, n) in row {
                *totals.entry(*cat).or_default() += n;
            }
        }
        totals
    }

    pub fn type_total(&self, br_type: &str) -> u64 {
        self.cells.get(br_type).map(|r| r.values().sum()).unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.cells.values().flat_map(|r| r.values()).sum()
    }

    pub fn merge(&mut self, other: &CategoryMatrix) {
        for (ty, row) in &other.cells {
            for (cat, n) in row {
                self.add(ty, *cat, *n);
            }
        }
    }

    /// Types ordered by descending row total, then by name.
    pub fn types_by_total(&self) -> Vec<&str> {
        let mut types: Vec<&str> = self.cells.keys().map(String::as_str).collect();
        types.sort_by(|a, b| self.type_total(b).cmp(&self.type_total(a)).then(a.cmp(b)));
        types
    }

    /// CSV with a leading `Total` row, then one row per type.
    pub fn write_csv<W: Write>(&self, kind: OaKind, out: W) -> io::Result<()> {
        let columns = Category::columns(kind);
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = std::iter::once("br_type")
            .chain(columns.iter().map(|c| c.as_str()))
            .collect();
        w.write_record(&header)?;
        let totals = self.category_totals();
        let mut row = vec!["Total".to_string()];
        row.extend(columns.iter().map(|c| totals.get(c).copied().unwrap_or(0).to_string()));
        w.write_record(&row)?;
        for ty in self.types_by_total() {
            let mut row = vec![ty.to_string()];
            row.extend(columns.iter().map(|c| self.get(ty, *c).to_string()));
            w.write_record(&row)?;
        }
        w.flush()
    }

    /// Reads a matrix written by [`CategoryMatrix::write_csv`]. The `Total`
    /// row is checked against the cells rather than stored.
    pub fn read_csv(path: &Path) -> Result<CategoryMatrix, String> {
        let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
        let header = r.headers().map_err(|e| e.to_string())?.clone();
        let columns: Vec<Category> = header
            .iter()
            .skip(1)
            .map(Category::from_str)
            .collect::<Result<_, _>>()?;
        let mut matrix = CategoryMatrix::default();
        let mut declared_totals = None;
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let counts: Vec<u64> = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<u64>().map_err(|e| format!("{v:?}: {e}")))
                .collect::<Result<_, _>>()?;
            if &rec[0] == "Total" && declared_totals.is_none() {
                declared_totals = Some(counts);
                continue;
            }
            for (cat, n) in columns.iter().zip(counts) {
                if n > 0 {
                    matrix.add(&rec[0], *cat, n);
                }
            }
        }
        let totals = matrix.category_totals();
        let recount: Vec<u64> = columns.iter().map(|c| totals.get(c).copied().unwrap_or(0)).collect();
        match declared_totals {
            Some(declared) if declared != recount => Err(format!(
                "Total row {declared:?} disagrees with cell sums {recount:?}"
            )),
            _ => Ok(matrix),
        }
    }
}

/// Result of classifying a whole multi-mapped table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classification {
    pub works: CategoryMatrix,
    pub sources: CategoryMatrix,
    pub mixed_kind_rows: u64,
}

const CHUNK: usize = 1024;

/// Classifies every row of `multi_table`, writing `verdicts.csv` and the two
/// matrices into `out_dir`. Mixed-kind rows are counted, not classified.
pub fn classify_all(
    multi_table: &Path,
    store: &MetaStore,
    classifier: &Classifier,
    out_dir: &Path,
    workers: usize,
) -> Result<Classification, ClassifyError> {
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(io::Error::other)?;
    let mut verdicts = csv::Writer::from_writer(BufWriter::new(File::create(out_dir.join(VERDICTS_FILE))?));
    verdicts.write_record(VERDICT_HEADER)?;
    let mut result = Classification::default();

    let mut chunk: Vec<MultiRow> = Vec::with_capacity(CHUNK);
    let flush = |chunk: &mut Vec<MultiRow>,
                     verdicts: &mut csv::Writer<BufWriter<File>>,
                     result: &mut Classification|
     -> Result<(), ClassifyError> {
        let classify = |row: &MultiRow| match classifier.classify_row(row, store) {
            Err(ClassifyError::MixedKindRow(_)) => Ok(None),
            other => other.map(Some),
        };
        let outcomes: Vec<Result<Option<CategoryVerdict>, ClassifyError>> = if workers > 1 {
            pool.install(|| chunk.par_iter().map(classify).collect())
        } else {
            chunk.iter().map(classify).collect()
        };
        for (row, outcome) in chunk.iter().zip(outcomes) {
            let Some(verdict) = outcome? else {
                result.mixed_kind_rows += 1;
                continue;
            };
            let kind = OaKind::of_id(&row.oa_ids[0]).expect("kind checked by classify_row");
            let matrix = match kind {
                OaKind::Work => &mut result.works,
                OaKind::Source => &mut result.sources,
            };
            matrix.add(&row.br_type, verdict.category, 1);
            verdicts.write_record([
                row.omid.as_str(),
                &row.oa_ids.join(" "),
                kind.as_str(),
                verdict.category.as_str(),
                &verdict.evidence,
                &row.br_type,
            ])?;
        }
        chunk.clear();
        Ok(())
    };

    for row in read_mapped_table(multi_table)? {
        chunk.push(row?);
        if chunk.len() == CHUNK {
            flush(&mut chunk, &mut verdicts, &mut result)?;
        }
    }
    flush(&mut chunk, &mut verdicts, &mut result)?;
    verdicts.flush()?;

    let mut w = BufWriter::new(File::create(out_dir.join(WORKS_MATRIX_FILE))?);
    result.works.write_csv(OaKind::Work, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(out_dir.join(SOURCES_MATRIX_FILE))?);
    result.sources.write_csv(OaKind::Source, &mut w)?;
    w.flush()?;
    Ok(result)
}

/// Rebuilds both matrices from a verdicts table.
pub fn matrices_from_verdicts(path: &Path) -> Result<(CategoryMatrix, CategoryMatrix), String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut works = CategoryMatrix::default();
    let mut sources = CategoryMatrix::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != VERDICT_HEADER.len() {
            return Err(format!("verdict row has {} columns", rec.len()));
        }
        let category = Category::from_str(&rec[3])?;
        match &rec[2] {
            "work" => works.add(&rec[5], category, 1),
            "source" => sources.add(&rec[5], category, 1),
            other => return Err(format!("unknown kind {other:?}")),
        }
    }
    Ok((works, sources))
}
