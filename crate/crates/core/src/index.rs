//! Persistent PID → OpenAlex-ID lookup index and the metadata side-store.
//!
//! Both live in one embedded redb file inside the index directory. Keys of
//! the PID table are `scheme:value` renderings, so identifiers of different
//! schemes can never collide. The PID table is a multimap: one identifier may
//! legitimately point at several target entities, and those duplicates are
//! exactly what the classifier's duplicate-PID rule looks for.
//!
//! A build writes `index.redb.partial` and only renames it to `index.redb`
//! (plus a `COMPLETE` manifest) once every record is in. Anything else found
//! in the directory is a partial build and gets discarded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use redb::{
    Database, Durability, MultimapTableDefinition, ReadOnlyDatabase, ReadOnlyMultimapTable,
    ReadOnlyTable, ReadableDatabase, ReadableMultimapTable, ReadableTableMetadata, TableDefinition,
};
use serde::{Deserialize, Serialize};

use crate::ingest::OaRecord;
use crate::pid::Pid;

const PID_TABLE: MultimapTableDefinition<&str, &str> = MultimapTableDefinition::new("pid_openalex");
const META_TABLE: TableDefinition<&str, &[u8]> = TableDefinition::new("openalex_meta");

pub const DB_FILE: &str = "index.redb";
const PARTIAL_FILE: &str = "index.redb.partial";
pub const COMPLETE_FILE: &str = "COMPLETE";
const CACHE_BYTES: usize = 32 << 20;
const RECORDS_PER_COMMIT: u64 = 50_000;

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("disk full while writing the index")]
    DiskFull,
    #[error("index store failure: {0}")]
    Store(String),
    #[error("a finalized index already exists in {0}")]
    AlreadyExists(PathBuf),
    #[error("no finalized index in {0}")]
    NotFinalized(PathBuf),
    #[error("{0} has no stored metadata")]
    NotFound(String),
    #[error("stored metadata for {0} is corrupt: {1}")]
    CorruptMeta(String, String),
}

impl From<redb::Error> for IndexError {
    fn from(err: redb::Error) -> Self {
        match err {
            redb::Error::Io(e) if e.kind() == io::ErrorKind::StorageFull => IndexError::DiskFull,
            other => IndexError::Store(other.to_string()),
        }
    }
}

macro_rules! redb_errors {
    ($($ty:ty),*) => {$(
        impl From<$ty> for IndexError {
            fn from(err: $ty) -> Self {
                IndexError::from(redb::Error::from(err))
            }
        }
    )*};
}
redb_errors!(
    redb::DatabaseError,
    redb::TransactionError,
    redb::TableError,
    redb::StorageError,
    redb::CommitError,
    redb::SetDurabilityError
);

/// Written next to a finalized index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub records: u64,
    pub pid_entries: u64,
}

pub fn is_finalized(dir: &Path) -> bool {
    dir.join(COMPLETE_FILE).is_file() && dir.join(DB_FILE).is_file()
}

/// Streams records into a new index directory.
pub struct IndexBuilder {
    dir: PathBuf,
    db: Option<Database>,
    pending: Vec<OaRecord>,
    records: u64,
    pid_entries: u64,
}

impl IndexBuilder {
    /// Prepares `dir` for a fresh build. A finalized index is replaced only
    /// when `overwrite` is set; leftovers of an interrupted build are removed.
    pub fn create(dir: &Path, overwrite: bool) -> Result<Self, IndexError> {
        if is_finalized(dir) && !overwrite {
            return Err(IndexError::AlreadyExists(dir.to_path_buf()));
        }
        fs::create_dir_all(dir)?;
        for stale in [COMPLETE_FILE, DB_FILE, PARTIAL_FILE] {
            match fs::remove_file(dir.join(stale)) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
        let db = Database::builder()
            .set_cache_size(CACHE_BYTES)
            .create(dir.join(PARTIAL_FILE))?;
        Ok(IndexBuilder {
            dir: dir.to_path_buf(),
            db: Some(db),
            pending: Vec::new(),
            records: 0,
            pid_entries: 0,
        })
    }

    /// Records without any mapping-eligible identifier are not stored.
    pub fn add(&mut self, record: OaRecord) -> Result<(), IndexError> {
        if record.eligible_pids().next().is_none() {
            return Ok(());
        }
        self.pending.push(record);
        if self.pending.len() as u64 >= RECORDS_PER_COMMIT {
            self.commit(Durability::None)?;
        }
        Ok(())
    }

    fn commit(&mut self, durability: Durability) -> Result<(), IndexError> {
        let db = self.db.as_ref().expect("builder already finished");
        let mut txn = db.begin_write()?;
        txn.set_durability(durability)?;
        {
            let mut pids = txn.open_multimap_table(PID_TABLE)?;
            let mut meta = txn.open_table(META_TABLE)?;
            for record in self.pending.drain(..) {
                for pid in record.eligible_pids() {
                    let key = pid.render();
                    if !pids.insert(key.as_str(), record.id())? {
                        self.pid_entries += 1;
                    }
                }
                let encoded = serde_json::to_vec(&record).map_err(io::Error::other)?;
                meta.insert(record.id(), encoded.as_slice())?;
                self.records += 1;
            }
        }
        txn.commit()?;
        Ok(())
    }

    /// Commits, renames the database into place and writes the manifest.
    pub fn finish(mut self) -> Result<(PidIndex, MetaStore), IndexError> {
        self.commit(Durability::Immediate)?;
        drop(self.db.take());
        fs::rename(self.dir.join(PARTIAL_FILE), self.dir.join(DB_FILE))?;
        let manifest = IndexManifest {
            records: self.records,
            pid_entries: self.pid_entries,
        };
        let mut f = fs::File::create(self.dir.join(COMPLETE_FILE))?;
        f.write_all(&serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?)?;
        f.sync_all()?;
        open_index(&self.dir)
    }
}

impl Drop for IndexBuilder {
    fn drop(&mut self) {
        if self.db.take().is_some() {
            let _ = fs::remove_file(self.dir.join(PARTIAL_FILE));
        }
    }
}

/// Builds an index from `records` into `dir`, replacing any previous one.
pub fn build_index<I>(records: I, dir: &Path) -> Result<(PidIndex, MetaStore), IndexError>
where
    I: IntoIterator<Item = OaRecord>,
{
    let mut builder = IndexBuilder::create(dir, true)?;
    for record in records {
        builder.add(record)?;
    }
    builder.finish()
}

/// Read-only view of the PID table.
pub struct PidIndex {
    table: ReadOnlyMultimapTable<&'static str, &'static str>,
}

/// Read-only view of the metadata table.
pub struct MetaStore {
    table: ReadOnlyTable<&'static str, &'static [u8]>,
}

pub fn open_index(dir: &Path) -> Result<(PidIndex, MetaStore), IndexError> {
    if !is_finalized(dir) {
        return Err(IndexError::NotFinalized(dir.to_path_buf()));
    }
    let db: ReadOnlyDatabase = Database::builder()
        .set_cache_size(CACHE_BYTES)
        .open_read_only(dir.join(DB_FILE))?;
    let txn = db.begin_read()?;
    let pids = txn.open_multimap_table(PID_TABLE)?;
    let meta = txn.open_table(META_TABLE)?;
    Ok((PidIndex { table: pids }, MetaStore { table: meta }))
}

pub fn read_manifest(dir: &Path) -> Result<IndexManifest, IndexError> {
    let bytes = fs::read(dir.join(COMPLETE_FILE))?;
    serde_json::from_slice(&bytes).map_err(|e| IndexError::Store(e.to_string()))
}

impl PidIndex {
    /// Target IDs keyed under `pid`, sorted; empty when absent.
    pub fn lookup(&self, pid: &Pid) -> Result<Vec<String>, IndexError> {
        let key = pid.render();
        let mut out = Vec::new();
        for value in self.table.get(key.as_str())? {
            out.push(value?.value().to_string());
        }
        Ok(out)
    }

    /// Calls `f(key, oa_id)` for every entry in key order.
    pub fn for_each_entry<F>(&self, mut f: F) -> Result<(), IndexError>
    where
        F: FnMut(&str, &str) -> Result<(), IndexError>,
    {
        for entry in self.table.iter()? {
            let (key, values) = entry?;
            for value in values {
                f(key.value(), value?.value())?;
            }
        }
        Ok(())
    }
}

impl MetaStore {
    pub fn get_meta(&self, oa_id: &str) -> Result<OaRecord, IndexError> {
        let guard = self
            .table
            .get(oa_id)?
            .ok_or_else(|| IndexError::NotFound(oa_id.to_string()))?;
        serde_json::from_slice(guard.value())
            .map_err(|e| IndexError::CorruptMeta(oa_id.to_string(), e.to_string()))
    }

    pub fn len(&self) -> Result<u64, IndexError> {
        Ok(self.table.len()?)
    }

    pub fn is_empty(&self) -> Result<bool, IndexError> {
        Ok(self.len()? == 0)
    }
}

/// Emits `(scheme, value, openalex_id)` triples as CSV, in key order.
pub fn dump_index<W: io::Write>(index: &PidIndex, out: W) -> Result<u64, IndexError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "value", "openalex_id"])
        .map_err(io::Error::other)?;
    let mut rows = 0;
    index.for_each_entry(|key, oa_id| {
        let (scheme, value) = key.split_once(':').unwrap_or((key, ""));
        w.write_record([scheme, value, oa_id]).map_err(io::Error::other)?;
        rows += 1;
        Ok(())
    })?;
    w.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{OaKind, WorkVersion};
    use crate::pid::PidScheme;

    pub(crate) fn work(id: &str, pids: &[(PidScheme, &str)]) -> OaRecord {
        OaRecord {
            oa_id: Pid::new(PidScheme::Openalex, id).unwrap(),
            kind: OaKind::Work,
            pids: pids.iter().map(|(s, v)| Pid::new(*s, v).unwrap()).collect(),
            work_type: Some("article".into()),
            version: WorkVersion::Unknown,
            issns: vec![],
        }
    }

    fn source(id: &str, issns: &[&str]) -> OaRecord {
        OaRecord {
            oa_id: Pid::new(PidScheme::Openalex, id).unwrap(),
            kind: OaKind::Source,
            pids: vec![],
            work_type: None,
            version: WorkVersion::Unknown,
            issns: issns.iter().map(|v| Pid::new(PidScheme::Issn, v).unwrap()).collect(),
        }
    }

    fn doi(v: &str) -> Pid {
        Pid::new(PidScheme::Doi, v).unwrap()
    }

    #[test]
    fn duplicates_across_records_are_kept() {
        let dir = tempfile::tempdir().unwrap();
        let (index, store) = build_index(
            vec![
                work("W2", &[(PidScheme::Doi, "10.1/d1")]),
                work("W1", &[(PidScheme::Doi, "10.1/d1")]),
                source("S1", &["0378-5955", "2088-0278"]),
            ],
            dir.path(),
        )
        .unwrap();
        assert_eq!(index.lookup(&doi("10.1/d1")).unwrap(), ["W1", "W2"]);
        assert!(index.lookup(&doi("10.1/absent")).unwrap().is_empty());
        let i2 = Pid::new(PidScheme::Issn, "2088-0278").unwrap();
        assert_eq!(index.lookup(&i2).unwrap(), ["S1"]);
        assert_eq!(store.get_meta("W1").unwrap().id(), "W1");
        assert!(matches!(store.get_meta("W999"), Err(IndexError::NotFound(_))));
        assert_eq!(read_manifest(dir.path()).unwrap(), IndexManifest { records: 3, pid_entries: 4 });
    }

    #[test]
    fn same_pair_counted_once() {
        let dir = tempfile::tempdir().unwrap();
        let w = work("W1", &[(PidScheme::Doi, "10.1/d1")]);
        let (index, _) = build_index(vec![w.clone(), w], dir.path()).unwrap();
        assert_eq!(index.lookup(&doi("10.1/d1")).unwrap(), ["W1"]);
    }

    #[test]
    fn empty_build() {
        let dir = tempfile::tempdir().unwrap();
        let (index, store) = build_index(Vec::new(), dir.path()).unwrap();
        assert!(store.is_empty().unwrap());
        let mut n = 0;
        index.for_each_entry(|_, _| { n += 1; Ok(()) }).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn mag_and_unsupported_ids_not_keyed() {
        let dir = tempfile::tempdir().unwrap();
        let (index, _) =
            build_index(vec![work("W1", &[(PidScheme::Mag, "123")])], dir.path()).unwrap();
        assert!(index.lookup(&Pid::new(PidScheme::Mag, "123").unwrap()).unwrap().is_empty());
    }

    #[test]
    fn refuses_overwrite_and_discards_partials() {
        let dir = tempfile::tempdir().unwrap();
        build_index(vec![work("W1", &[(PidScheme::Doi, "10.1/a")])], dir.path()).unwrap();
        assert!(matches!(
            IndexBuilder::create(dir.path(), false),
            Err(IndexError::AlreadyExists(_))
        ));

        // An interrupted build leaves nothing finalized behind.
        {
            let mut b = IndexBuilder::create(dir.path(), true).unwrap();
            b.add(work("W2", &[(PidScheme::Doi, "10.1/b")])).unwrap();
        }
        assert!(!is_finalized(dir.path()));
        assert!(!dir.path().join(PARTIAL_FILE).exists());
        assert!(matches!(open_index(dir.path()), Err(IndexError::NotFinalized(_))));
    }

    #[test]
    fn dump_lists_triples() {
        let dir = tempfile::tempdir().unwrap();
        let (index, _) = build_index(
            vec![work("W1", &[(PidScheme::Doi, "10.1/a"), (PidScheme::Pmid, "7")])],
            dir.path(),
        )
        .unwrap();
        let mut out = Vec::new();
        assert_eq!(dump_index(&index, &mut out).unwrap(), 2);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "scheme,value,openalex_id\ndoi,10.1/a,W1\npmid,7,W1\n"
        );
    }
}
