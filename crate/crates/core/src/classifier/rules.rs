//! Category rules and the registry they are selected from.
//!
//! Each rule inspects one multi-mapped row and either fires (returning the
//! evidence text) or passes. A classifier evaluates a chain of rules in order
//! and the first rule that fires decides the category. Rules are registered
//! by name so that chains can be assembled from configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Category, RowContext};
use crate::ingest::{OaKind, WorkVersion};
use crate::pid::{contains_preprint_indicator, doi_prefix, has_version_suffix};

pub trait CategoryRule: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;
    fn category(&self) -> Category;
    /// Which rows the rule applies to.
    fn kind(&self) -> OaKind;
    /// Evidence when the rule fires.
    fn check(&self, row: &RowContext<'_>) -> Option<String>;
}

pub const DEFAULT_WORK_CHAIN: [&str; 6] = [
    "duplicate-pid",
    "versioned-doi",
    "preprint-prefix",
    "preprint-indicator",
    "companion-type",
    "two-works-same-prefix",
];

pub const DEFAULT_SOURCE_CHAIN: [&str; 1] = ["duplicate-issn"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("no category rule named {0:?}")]
    Unknown(String),
    #[error("rule {name:?} applies to {rule_kind} rows, not {chain_kind} rows")]
    WrongKind {
        name: String,
        rule_kind: &'static str,
        chain_kind: &'static str,
    },
}

#[derive(Clone)]
pub struct RuleRegistry {
    rules: BTreeMap<&'static str, Arc<dyn CategoryRule>>,
}

impl RuleRegistry {
    pub fn empty() -> Self {
        RuleRegistry {
            rules: BTreeMap::new(),
        }
    }

    /// All built-in rules.
    pub fn builtin() -> Self {
        let mut reg = RuleRegistry::empty();
        reg.register(Arc::new(DuplicatePid));
        reg.register(Arc::new(VersionedDoi));
        reg.register(Arc::new(PreprintPrefix));
        reg.register(Arc::new(PreprintIndicator));
        reg.register(Arc::new(CompanionType));
        reg.register(Arc::new(TwoWorksSamePrefix));
        reg.register(Arc::new(DuplicateIssn));
        reg
    }

    /// Registers `rule`, replacing any rule of the same name.
    pub fn register(&mut self, rule: Arc<dyn CategoryRule>) {
        self.rules.insert(rule.name(), rule);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn CategoryRule>> {
        self.rules.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.rules.keys().copied()
    }

    /// Resolves `names` into an ordered chain for rows of `kind`.
    pub fn chain<S: AsRef<str>>(
        &self,
        kind: OaKind,
        names: &[S],
    ) -> Result<Vec<Arc<dyn CategoryRule>>, RuleError> {
        names
            .iter()
            .map(|name| {
                let name = name.as_ref();
                let rule = self
                    .get(name)
                    .ok_or_else(|| RuleError::Unknown(name.to_string()))?;
                if rule.kind() != kind {
                    return Err(RuleError::WrongKind {
                        name: name.to_string(),
                        rule_kind: rule.kind().as_str(),
                        chain_kind: kind.as_str(),
                    });
                }
                Ok(rule)
            })
            .collect()
    }
}

impl Default for RuleRegistry {
    fn default() -> Self {
        RuleRegistry::builtin()
    }
}

/// Returns the first identifier shared by two or more records, with holders.
fn first_shared<'a, I>(items: I) -> Option<(String, Vec<&'a str>)>
where
    I: IntoIterator<Item = (String, &'a str)>,
{
    let mut holders: BTreeMap<String, BTreeSet<&'a str>> = BTreeMap::new();
    for (key, id) in items {
        holders.entry(key).or_default().insert(id);
    }
    holders
        .into_iter()
        .find(|(_, ids)| ids.len() >= 2)
        .map(|(key, ids)| (key, ids.into_iter().collect()))
}

/// A: two or more Works of the row share an external identifier.
pub struct DuplicatePid;

impl CategoryRule for DuplicatePid {
    fn name(&self) -> &'static str {
        "duplicate-pid"
    }
    fn category(&self) -> Category {
        Category::A
    }
    fn kind(&self) -> OaKind {
        OaKind::Work
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        let items = row
            .records
            .iter()
            .flat_map(|r| r.pids.iter().map(move |p| (p.render(), r.id())));
        first_shared(items).map(|(pid, ids)| format!("{pid} shared by {}", ids.join(" ")))
    }
}

/// D: a Work DOI ends in a version marker.
pub struct VersionedDoi;

impl CategoryRule for VersionedDoi {
    fn name(&self) -> &'static str {
        "versioned-doi"
    }
    fn category(&self) -> Category {
        Category::D
    }
    fn kind(&self) -> OaKind {
        OaKind::Work
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        row.dois()
            .find(|(_, doi)| has_version_suffix(doi))
            .map(|(id, doi)| format!("{id} doi {doi} carries a version marker"))
    }
}

/// B: a submitted or accepted Work whose DOI prefix belongs to a preprint
/// server or repository.
pub struct PreprintPrefix;

impl CategoryRule for PreprintPrefix {
    fn name(&self) -> &'static str {
        "preprint-prefix"
    }
    fn category(&self) -> Category {
        Category::B
    }
    fn kind(&self) -> OaKind {
        OaKind::Work
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        row.records
            .iter()
            .filter(|r| matches!(r.version, WorkVersion::Submitted | WorkVersion::Accepted))
            .find_map(|r| {
                r.dois().find_map(|doi| {
                    let prefix = doi_prefix(doi).ok()?.prefix;
                    row.config.preprint_prefixes.contains(&prefix).then(|| {
                        let version = match r.version {
                            WorkVersion::Submitted => "submitted",
                            _ => "accepted",
                        };
                        format!("{} doi {doi} has preprint prefix {prefix}, {version} version", r.id())
                    })
                })
            })
    }
}

/// E: a Work DOI contains a preprint-server indicator.
pub struct PreprintIndicator;

impl CategoryRule for PreprintIndicator {
    fn name(&self) -> &'static str {
        "preprint-indicator"
    }
    fn category(&self) -> Category {
        Category::E
    }
    fn kind(&self) -> OaKind {
        OaKind::Work
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        let indicators = &row.config.preprint_indicators;
        row.dois()
            .find(|(_, doi)| contains_preprint_indicator(doi, indicators))
            .map(|(id, doi)| format!("{id} doi {doi} contains a preprint indicator"))
    }
}

/// F: all DOIs share one prefix and a Work with a DOI is a review,
/// editorial, erratum or letter.
pub struct CompanionType;

impl CategoryRule for CompanionType {
    fn name(&self) -> &'static str {
        "companion-type"
    }
    fn category(&self) -> Category {
        Category::F
    }
    fn kind(&self) -> OaKind {
        OaKind::Work
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        let prefix = row.shared_doi_prefix()?;
        row.records
            .iter()
            .filter(|r| r.dois().next().is_some())
            .find_map(|r| {
                let ty = r.work_type.as_deref()?;
                row.config
                    .companion_types
                    .contains(ty)
                    .then(|| format!("{} is a {ty}, all DOIs under {prefix}", r.id()))
            })
    }
}

/// C: exactly two Works whose DOIs share one prefix.
pub struct TwoWorksSamePrefix;

impl CategoryRule for TwoWorksSamePrefix {
    fn name(&self) -> &'static str {
        "two-works-same-prefix"
    }
    fn category(&self) -> Category {
        Category::C
    }
    fn kind(&self) -> OaKind {
        OaKind::Work
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        if row.records.len() != 2 {
            return None;
        }
        let prefix = row.shared_doi_prefix()?;
        Some(format!("2 works, all DOIs under {prefix}"))
    }
}

/// A (Sources): two or more Sources of the row share an ISSN.
pub struct DuplicateIssn;

impl CategoryRule for DuplicateIssn {
    fn name(&self) -> &'static str {
        "duplicate-issn"
    }
    fn category(&self) -> Category {
        Category::A
    }
    fn kind(&self) -> OaKind {
        OaKind::Source
    }
    fn check(&self, row: &RowContext<'_>) -> Option<String> {
        let items = row
            .records
            .iter()
            .flat_map(|r| r.issns.iter().map(move |p| (p.render(), r.id())));
        first_shared(items).map(|(issn, ids)| format!("{issn} shared by {}", ids.join(" ")))
    }
}
