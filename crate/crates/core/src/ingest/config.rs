use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Work types that mark a review/erratum companion of a version of record.
pub const DEFAULT_COMPANION_TYPES: [&str; 4] = ["peer-review", "editorial", "erratum", "letter"];

/// Lists driving the multi-mapping classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// DOI registrant prefixes of preprint servers and repositories.
    pub preprint_prefixes: BTreeSet<String>,
    /// Lower-case substrings that tie a DOI to a preprint server.
    pub preprint_indicators: Vec<String>,
    /// Work types accepted as review/erratum companions.
    pub companion_types: BTreeSet<String>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            preprint_prefixes: BTreeSet::new(),
            preprint_indicators: Vec::new(),
            companion_types: DEFAULT_COMPANION_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn entries<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    input.lines().enumerate().filter_map(move |(i, line)| match line {
        Err(e) => Some(Err(IngestError::Io(e))),
        Ok(line) => {
            let entry = line.trim();
            if entry.is_empty() || entry.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, entry.to_lowercase())))
            }
        }
    })
}

pub fn parse_prefix_list<R: BufRead>(input: R, name: &str) -> Result<BTreeSet<String>, IngestError> {
    let mut out = BTreeSet::new();
    for entry in entries(input) {
        let (line, prefix) = entry?;
        let valid = prefix.starts_with("10.")
            && prefix.len() > 3
            && !prefix.contains('/')
            && !prefix.contains(char::is_whitespace);
        if !valid {
            return Err(IngestError::MalformedEntry {
                path: name.to_string(),
                line,
                reason: format!("{prefix:?} is not a DOI prefix"),
            });
        }
        out.insert(prefix);
    }
    Ok(out)
}

/// Indicators keep file order; later duplicates are dropped.
pub fn parse_indicator_list<R: BufRead>(input: R, _name: &str) -> Result<Vec<String>, IngestError> {
    let mut out: Vec<String> = Vec::new();
    for entry in entries(input) {
        let (_, indicator) = entry?;
        if !out.contains(&indicator) {
            out.push(indicator);
        }
    }
    Ok(out)
}

pub fn load_config(prefix_path: &Path, indicator_path: &Path) -> Result<ClassifierConfig, IngestError> {
    let prefixes = parse_prefix_list(
        BufReader::new(File::open(prefix_path)?),
        &prefix_path.display().to_string(),
    )?;
    let indicators = parse_indicator_list(
        BufReader::new(File::open(indicator_path)?),
        &indicator_path.display().to_string(),
    )?;
    Ok(ClassifierConfig {
        preprint_prefixes: prefixes,
        preprint_indicators: indicators,
        ..ClassifierConfig::default()
    })
}
