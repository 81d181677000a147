//! Spot checks of classified rows against registrant metadata.
//!
//! A [`Resolver`] turns a DOI into the registrant's metadata record. The
//! pipeline never depends on one; `verify-sample` draws a seeded sample of
//! verdicts and writes the stored target records next to what the resolver
//! returned, for a person to compare.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::index::{IndexError, MetaStore};

#[derive(Debug, thiserror::Error)]
pub enum ResolverError {
    #[error("resolver unavailable: {0}")]
    Unavailable(String),
    #[error("no resolver named {0:?}")]
    Unknown(String),
    #[error("resolver {0:?} needs a fixture file")]
    MissingFixture(String),
    #[error("fixture {path}: {reason}")]
    BadFixture { path: String, reason: String },
}

pub trait Resolver: Send + Sync {
    fn name(&self) -> &'static str;
    /// `Ok(None)` when the registrant has no record for `doi`.
    fn resolve(&self, doi: &str) -> Result<Option<Value>, ResolverError>;
}

/// Answers from a JSON object keyed by lowercase DOI.
pub struct FixtureResolver {
    records: BTreeMap<String, Value>,
}

impl FixtureResolver {
    pub fn from_records(records: BTreeMap<String, Value>) -> Self {
        FixtureResolver {
            records: records
                .into_iter()
                .map(|(k, v)| (k.to_ascii_lowercase(), v))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ResolverError> {
        let bad = |reason: String| ResolverError::BadFixture {
            path: path.display().to_string(),
            reason,
        };
        let bytes = std::fs::read(path).map_err(|e| bad(e.to_string()))?;
        let records = serde_json::from_slice(&bytes).map_err(|e| bad(e.to_string()))?;
        Ok(FixtureResolver::from_records(records))
    }
}

impl Resolver for FixtureResolver {
    fn name(&self) -> &'static str {
        "fixture"
    }

    fn resolve(&self, doi: &str) -> Result<Option<Value>, ResolverError> {
        Ok(self.records.get(&doi.to_ascii_lowercase()).cloned())
    }
}

/// Never reaches anything.
pub struct OfflineResolver;

impl Resolver for OfflineResolver {
    fn name(&self) -> &'static str {
        "offline"
    }

    fn resolve(&self, _doi: &str) -> Result<Option<Value>, ResolverError> {
        Err(ResolverError::Unavailable("offline resolver".into()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResolverOptions {
    pub fixture: Option<PathBuf>,
}

type Factory = Arc<dyn Fn(&ResolverOptions) -> Result<Arc<dyn Resolver>, ResolverError> + Send + Sync>;

/// Resolver constructors by name.
#[derive(Clone)]
pub struct ResolverRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl ResolverRegistry {
    pub fn builtin() -> Self {
        let mut reg = ResolverRegistry {
            factories: BTreeMap::new(),
        };
        reg.register("offline", Arc::new(|_| Ok(Arc::new(OfflineResolver) as Arc<dyn Resolver>)));
        reg.register(
            "fixture",
            Arc::new(|opts: &ResolverOptions| {
                let path = opts
                    .fixture
                    .as_deref()
                    .ok_or_else(|| ResolverError::MissingFixture("fixture".into()))?;
                Ok(Arc::new(FixtureResolver::load(path)?) as Arc<dyn Resolver>)
            }),
        );
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, opts: &ResolverOptions) -> Result<Arc<dyn Resolver>, ResolverError> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| ResolverError::Unknown(name.to_string()))?;
        factory(opts)
    }
}

impl Default for ResolverRegistry {
    fn default() -> Self {
        ResolverRegistry::builtin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LookupStatus {
    Resolved,
    Unresolved,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoiCheck {
    pub doi: String,
    pub status: LookupStatus,
    pub registrant: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetAudit {
    pub openalex_id: String,
    pub stored: Value,
    pub dois: Vec<DoiCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub omid: String,
    pub category: String,
    pub evidence: String,
    pub targets: Vec<TargetAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub resolver: String,
    pub seed: u64,
    pub requested: usize,
    /// False when any lookup could not reach the registrant.
    pub complete: bool,
    pub entries: Vec<AuditEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("{path}: {reason}")]
    Verdicts { path: String, reason: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

struct VerdictRow {
    omid: String,
    oa_ids: Vec<String>,
    category: String,
    evidence: String,
}

/// Samples `n` verdict rows with a seeded reservoir and checks every DOI of
/// their targets through `resolver`. Rows keep their table order.
pub fn verify_sample(
    verdicts: &Path,
    store: &MetaStore,
    resolver: &dyn Resolver,
    n: usize,
    seed: u64,
) -> Result<Audit, VerifyError> {
    let bad = |reason: String| VerifyError::Verdicts {
        path: verdicts.display().to_string(),
        reason,
    };
    let mut reader = csv::Reader::from_path(verdicts).map_err(|e| bad(e.to_string()))?;
    let mut read_error = None;
    let rows = reader.records().enumerate().map_while(|(i, rec)| match rec {
        Ok(rec) if rec.len() >= 5 => Some((i, rec)),
        Ok(rec) => {
            read_error = Some(format!("row {} has {} columns", i + 1, rec.len()));
            None
        }
        Err(e) => {
            read_error = Some(e.to_string());
            None
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rows.sample(&mut rng, n);
    if let Some(reason) = read_error {
        return Err(bad(reason));
    }
    picked.sort_by_key(|(i, _)| *i);

    let mut complete = true;
    let mut entries = Vec::with_capacity(picked.len());
    for (_, rec) in picked {
        let row = VerdictRow {
            omid: rec[0].to_string(),
            oa_ids: rec[1].split(' ').filter(|s| !s.is_empty()).map(String::from).collect(),
            category: rec[3].to_string(),
            evidence: rec[4].to_string(),
        };
        let mut targets = Vec::with_capacity(row.oa_ids.len());
        for id in &row.oa_ids {
            let record = store.get_meta(id)?;
            let dois = record
                .dois()
                .map(|doi| {
                    let (status, registrant) = match resolver.resolve(doi) {
                        Ok(Some(v)) => (LookupStatus::Resolved, Some(v)),
                        Ok(None) => (LookupStatus::Unresolved, None),
                        Err(_) => {
                            complete = false;
                            (LookupStatus::Unavailable, None)
                        }
                    };
                    DoiCheck {
                        doi: doi.to_string(),
                        status,
                        registrant,
                    }
                })
                .collect();
            targets.push(TargetAudit {
                openalex_id: id.clone(),
                stored: serde_json::to_value(&record).expect("record serializes"),
                dois,
            });
        }
        entries.push(AuditEntry {
            omid: row.omid,
            category: row.category,
            evidence: row.evidence,
            targets,
        });
    }
    Ok(Audit {
        resolver: resolver.name().to_string(),
        seed,
        requested: n,
        complete,
        entries,
    })
}
