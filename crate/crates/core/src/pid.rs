//! Persistent identifiers.
//!
//! Every identifier that crosses a module boundary is a [`Pid`]: a scheme tag
//! plus a value in the scheme's canonical form. Canonical forms are what make
//! identifiers from the two collections comparable with plain string equality:
//!
//! - DOIs are lower-cased and stripped of resolver prefixes.
//! - ISSNs are `DDDD-DDDC` with a valid mod-11 check character.
//! - PMIDs are decimal strings without leading zeros, PMCIDs are `PMC` + digits.
//! - OpenAlex IDs are the bare `W…` / `S…` key without the `https://openalex.org/` prefix.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PidError {
    #[error("identifier token {0:?} has no scheme separator")]
    MissingSeparator(String),
    #[error("unknown identifier scheme {0:?}")]
    UnknownScheme(String),
    #[error("malformed {scheme} value {value:?}: {reason}")]
    MalformedValue {
        scheme: PidScheme,
        value: String,
        reason: &'static str,
    },
}

impl PidError {
    fn malformed(scheme: PidScheme, value: &str, reason: &'static str) -> Self {
        PidError::MalformedValue {
            scheme,
            value: value.to_string(),
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PidScheme {
    Doi,
    Pmid,
    Pmcid,
    Issn,
    Isbn,
    Omid,
    Openalex,
    Mag,
    Wikidata,
    Fatcat,
}

impl PidScheme {
    pub const ALL: [PidScheme; 10] = [
        PidScheme::Doi,
        PidScheme::Pmid,
        PidScheme::Pmcid,
        PidScheme::Issn,
        PidScheme::Isbn,
        PidScheme::Omid,
        PidScheme::Openalex,
        PidScheme::Mag,
        PidScheme::Wikidata,
        PidScheme::Fatcat,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PidScheme::Doi => "doi",
            PidScheme::Pmid => "pmid",
            PidScheme::Pmcid => "pmcid",
            PidScheme::Issn => "issn",
            PidScheme::Isbn => "isbn",
            PidScheme::Omid => "omid",
            PidScheme::Openalex => "openalex",
            PidScheme::Mag => "mag",
            PidScheme::Wikidata => "wikidata",
            PidScheme::Fatcat => "fatcat",
        }
    }

    /// Schemes that join a source record to a target Work.
    pub fn is_work_mapping_scheme(self) -> bool {
        matches!(self, PidScheme::Doi | PidScheme::Pmid | PidScheme::Pmcid)
    }

    /// Schemes that join a source record to a target Source.
    pub fn is_source_mapping_scheme(self) -> bool {
        self == PidScheme::Issn
    }

    /// Whether an identifier of this scheme can take part in mapping at all.
    /// ISBNs are never eligible: the target collection does not carry them.
    pub fn is_mapping_eligible(self) -> bool {
        self.is_work_mapping_scheme() || self.is_source_mapping_scheme()
    }
}

impl fmt::Display for PidScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PidScheme {
    type Err = PidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        PidScheme::ALL
            .into_iter()
            .find(|scheme| scheme.tag() == lower)
            .ok_or_else(|| PidError::UnknownScheme(s.to_string()))
    }
}

/// A normalized persistent identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid {
    scheme: PidScheme,
    value: String,
}

impl Pid {
    /// Normalizes `raw` for `scheme` and wraps the result.
    pub fn new(scheme: PidScheme, raw: &str) -> Result<Self, PidError> {
        let value = normalize_external_id(scheme, raw)?;
        Ok(Pid { scheme, value })
    }

    pub fn scheme(&self) -> PidScheme {
        self.scheme
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    /// `scheme:value`, the rendering used in dumps and as index key.
    pub fn render(&self) -> String {
        format!("{}:{}", self.scheme.tag(), self.value)
    }
}

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme.tag(), self.value)
    }
}

impl FromStr for Pid {
    type Err = PidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_pid(s)
    }
}

impl Serialize for Pid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_pid(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a `scheme:value` token, splitting at the first colon.
pub fn parse_pid(token: &str) -> Result<Pid, PidError> {
    let (scheme, value) = token
        .split_once(':')
        .ok_or_else(|| PidError::MissingSeparator(token.to_string()))?;
    let scheme: PidScheme = scheme.parse()?;
    Pid::new(scheme, value)
}

const DOI_PREFIXES: &[&str] = &[
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi:",
];
const PMID_PREFIXES: &[&str] = &[
    "https://pubmed.ncbi.nlm.nih.gov/",
    "http://pubmed.ncbi.nlm.nih.gov/",
];
const PMCID_PREFIXES: &[&str] = &[
    "https://www.ncbi.nlm.nih.gov/pmc/articles/",
    "http://www.ncbi.nlm.nih.gov/pmc/articles/",
];
const OPENALEX_PREFIXES: &[&str] = &["https://openalex.org/", "http://openalex.org/"];
const OMID_PREFIXES: &[&str] = &["https://w3id.org/oc/meta/", "http://w3id.org/oc/meta/"];

fn strip_any_prefix<'a>(raw: &'a str, prefixes: &[&str]) -> &'a str {
    for prefix in prefixes {
        if raw.len() >= prefix.len()
            && raw.is_char_boundary(prefix.len())
            && raw[..prefix.len()].eq_ignore_ascii_case(prefix)
        {
            return &raw[prefix.len()..];
        }
    }
    raw
}

/// Brings an identifier of `scheme` into canonical form.
///
/// Accepts both bare values and the resolver-URL form the target dump uses.
/// The result is a fixed point: normalizing it again returns it unchanged.
pub fn normalize_external_id(scheme: PidScheme, raw: &str) -> Result<String, PidError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(PidError::malformed(scheme, raw, "empty value"));
    }
    match scheme {
        PidScheme::Doi => normalize_doi(trimmed),
        PidScheme::Pmid => normalize_pmid(trimmed),
        PidScheme::Pmcid => normalize_pmcid(trimmed),
        PidScheme::Issn => normalize_issn(trimmed),
        PidScheme::Isbn => normalize_isbn(trimmed),
        PidScheme::Omid => normalize_omid(trimmed),
        PidScheme::Openalex => normalize_openalex(trimmed),
        PidScheme::Mag | PidScheme::Wikidata | PidScheme::Fatcat => Ok(trimmed.to_string()),
    }
}

fn normalize_doi(raw: &str) -> Result<String, PidError> {
    let value = strip_any_prefix(raw, DOI_PREFIXES).trim().to_lowercase();
    doi_prefix(&value)?;
    Ok(value)
}

fn normalize_pmid(raw: &str) -> Result<String, PidError> {
    let value = strip_any_prefix(raw, PMID_PREFIXES).trim_end_matches('/');
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(PidError::malformed(PidScheme::Pmid, raw, "not a decimal number"));
    }
    let stripped = value.trim_start_matches('0');
    if stripped.is_empty() {
        return Err(PidError::malformed(PidScheme::Pmid, raw, "zero is not a PMID"));
    }
    Ok(stripped.to_string())
}

fn normalize_pmcid(raw: &str) -> Result<String, PidError> {
    let value = strip_any_prefix(raw, PMCID_PREFIXES).trim_end_matches('/');
    let digits = match value.get(..3) {
        Some(head) if head.eq_ignore_ascii_case("pmc") => &value[3..],
        _ => value,
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(PidError::malformed(PidScheme::Pmcid, raw, "expected PMC followed by digits"));
    }
    Ok(format!("PMC{digits}"))
}

/// Check character for the first seven ISSN digits (weights 8 down to 2).
pub(crate) fn issn_check_char(body: &[u8; 7]) -> char {
    let sum: u32 = body
        .iter()
        .zip((2..=8).rev())
        .map(|(&d, w)| u32::from(d) * w)
        .sum();
    match (11 - sum % 11) % 11 {
        10 => 'X',
        d => char::from(b'0' + d as u8),
    }
}

fn normalize_issn(raw: &str) -> Result<String, PidError> {
    let upper = raw.to_ascii_uppercase();
    let chars: Vec<char> = upper.chars().collect();
    let compact: Vec<char> = match chars.len() {
        9 if chars[4] == '-' => chars[..4].iter().chain(&chars[5..]).copied().collect(),
        8 => chars,
        _ => return Err(PidError::malformed(PidScheme::Issn, raw, "expected DDDD-DDDC")),
    };
    let mut body = [0u8; 7];
    for (slot, c) in body.iter_mut().zip(&compact[..7]) {
        *slot = c
            .to_digit(10)
            .ok_or_else(|| PidError::malformed(PidScheme::Issn, raw, "non-digit in ISSN body"))?
            as u8;
    }
    let check = compact[7];
    if !(check.is_ascii_digit() || check == 'X') {
        return Err(PidError::malformed(PidScheme::Issn, raw, "invalid check character"));
    }
    if issn_check_char(&body) != check {
        return Err(PidError::malformed(PidScheme::Issn, raw, "check digit mismatch"));
    }
    let rendered: String = compact[..4]
        .iter()
        .chain(std::iter::once(&'-'))
        .chain(&compact[4..])
        .collect();
    Ok(rendered)
}

fn normalize_isbn(raw: &str) -> Result<String, PidError> {
    let compact: String = raw
        .chars()
        .filter(|c| !matches!(c, '-' | ' '))
        .map(|c| c.to_ascii_uppercase())
        .collect();
    let ok = match compact.len() {
        10 => {
            compact[..9].bytes().all(|b| b.is_ascii_digit())
                && matches!(compact.as_bytes()[9], b'0'..=b'9' | b'X')
        }
        13 => compact.bytes().all(|b| b.is_ascii_digit()),
        _ => false,
    };
    if !ok {
        return Err(PidError::malformed(PidScheme::Isbn, raw, "expected ISBN-10 or ISBN-13"));
    }
    Ok(compact)
}

static OMID_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-z]{2}/[0-9]+$").unwrap());

fn normalize_omid(raw: &str) -> Result<String, PidError> {
    let value = strip_any_prefix(raw, OMID_PREFIXES);
    let value = match value.split_once('/') {
        Some((kind, rest)) => format!("{}/{}", kind.to_ascii_lowercase(), rest),
        None => value.to_string(),
    };
    if !OMID_RE.is_match(&value) {
        return Err(PidError::malformed(PidScheme::Omid, raw, "expected <kind>/<digits>"));
    }
    Ok(value)
}

fn normalize_openalex(raw: &str) -> Result<String, PidError> {
    let value = strip_any_prefix(raw, OPENALEX_PREFIXES);
    let mut chars = value.chars();
    let letter = chars.next().map(|c| c.to_ascii_uppercase());
    let digits = chars.as_str();
    match letter {
        Some(letter @ ('W' | 'S')) if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => {
            Ok(format!("{letter}{digits}"))
        }
        _ => Err(PidError::malformed(
            PidScheme::Openalex,
            raw,
            "expected W or S followed by digits",
        )),
    }
}

/// Registrant prefix and suffix of a DOI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoiStructure {
    pub prefix: String,
    pub suffix: String,
}

/// Splits a normalized DOI at its first slash.
pub fn doi_prefix(doi: &str) -> Result<DoiStructure, PidError> {
    let (prefix, suffix) = doi
        .split_once('/')
        .ok_or_else(|| PidError::malformed(PidScheme::Doi, doi, "no suffix"))?;
    if !prefix.starts_with("10.") || prefix.len() == 3 {
        return Err(PidError::malformed(PidScheme::Doi, doi, "prefix must start with 10."));
    }
    if suffix.is_empty() {
        return Err(PidError::malformed(PidScheme::Doi, doi, "empty suffix"));
    }
    Ok(DoiStructure {
        prefix: prefix.to_string(),
        suffix: suffix.to_string(),
    })
}

static VERSION_SUFFIX_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[/.]v[0-9]+$").unwrap());

/// True when the DOI ends in a version marker such as `/v2` or `.v3`.
pub fn has_version_suffix(doi: &str) -> bool {
    VERSION_SUFFIX_RE.is_match(doi)
}

/// True when any of the (lower-case) indicators occurs inside the DOI.
pub fn contains_preprint_indicator<S: AsRef<str>>(doi: &str, indicators: &[S]) -> bool {
    indicators.iter().any(|ind| doi.contains(ind.as_ref()))
}
