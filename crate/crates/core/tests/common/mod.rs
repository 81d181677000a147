//! Shared helpers: fixture paths, a seeded random corpus generator and
//! brute-force oracles that avoid the library's own lookup machinery.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use bibmap::ingest::{BrRecord, OaKind, OaRecord, WorkVersion};
use bibmap::pid::{Pid, PidScheme};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

pub fn pid(scheme: PidScheme, raw: &str) -> Pid {
    Pid::new(scheme, raw).unwrap()
}

/// ISSN check character computed independently: the weighted sum of all
/// eight positions (weights 8..1, X = 10) must be divisible by 11.
pub fn oracle_issn_check(body: &str) -> char {
    let digits: Vec<u32> = body.chars().map(|c| c.to_digit(10).unwrap()).collect();
    (0..=10u32)
        .find(|check| {
            let sum: u32 = digits.iter().zip((2..=8).rev()).map(|(d, w)| d * w).sum::<u32>() + check;
            sum.is_multiple_of(11)
        })
        .map(|c| if c == 10 { 'X' } else { char::from_digit(c, 10).unwrap() })
        .unwrap()
}

pub fn oracle_issn(body: &str) -> String {
    format!("{}-{}{}", &body[..4], &body[4..], oracle_issn_check(body))
}

/// A generated corpus; IDs and identifiers collide often on purpose.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub brs: Vec<BrRecord>,
    pub oas: Vec<OaRecord>,
}

pub fn random_corpus(seed: u64, max_rows: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_br = rng.random_range(0..=max_rows);
    let n_oa = rng.random_range(0..=max_rows);
    let pool = (n_br.max(n_oa) / 2).max(4);

    let doi = |rng: &mut ChaCha8Rng| {
        pid(
            PidScheme::Doi,
            &format!("10.{}/x{}", rng.random_range(1000..1004), rng.random_range(0..pool)),
        )
    };
    let pmid = |rng: &mut ChaCha8Rng| pid(PidScheme::Pmid, &rng.random_range(1..=pool as u64).to_string());
    let pmcid = |rng: &mut ChaCha8Rng| pid(PidScheme::Pmcid, &format!("PMC{}", rng.random_range(1..=pool)));
    let issn = |rng: &mut ChaCha8Rng| {
        let body = format!("{:07}", rng.random_range(0..pool as u32 / 2 + 2) * 7919);
        pid(PidScheme::Issn, &oracle_issn(&body))
    };
    let isbn = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(0..pool as u64);
        pid(PidScheme::Isbn, &format!("978{:010}", n))
    };

    let mut oas = Vec::with_capacity(n_oa);
    for i in 0..n_oa {
        if rng.random_bool(0.8) {
            let mut pids = Vec::new();
            for _ in 0..rng.random_range(0..=3) {
                pids.push(match rng.random_range(0..4) {
                    0 | 1 => doi(&mut rng),
                    2 => pmid(&mut rng),
                    _ => pmcid(&mut rng),
                });
            }
            if rng.random_bool(0.2) {
                pids.push(pid(PidScheme::Mag, &i.to_string()));
            }
            pids.sort();
            pids.dedup();
            oas.push(OaRecord {
                oa_id: pid(PidScheme::Openalex, &format!("W{}", i + 1)),
                kind: OaKind::Work,
                pids,
                work_type: Some("article".into()),
                version: WorkVersion::Unknown,
                issns: vec![],
            });
        } else {
            let mut issns: Vec<Pid> = (0..rng.random_range(0..=2)).map(|_| issn(&mut rng)).collect();
            issns.sort();
            issns.dedup();
            oas.push(OaRecord {
                oa_id: pid(PidScheme::Openalex, &format!("S{}", i + 1)),
                kind: OaKind::Source,
                pids: vec![],
                work_type: None,
                version: WorkVersion::Unknown,
                issns,
            });
        }
    }

    let types = ["journal article", "book", "journal", "", "dataset"];
    let mut brs = Vec::with_capacity(n_br);
    for i in 0..n_br {
        let mut pids = Vec::new();
        for _ in 0..rng.random_range(0..=4) {
            pids.push(match rng.random_range(0..6) {
                0 | 1 => doi(&mut rng),
                2 => pmid(&mut rng),
                3 => pmcid(&mut rng),
                4 => issn(&mut rng),
                _ => isbn(&mut rng),
            });
        }
        pids.sort();
        pids.dedup();
        brs.push(BrRecord {
            omid: pid(PidScheme::Omid, &format!("br/{}", 60 + i)),
            pids,
            br_type: types[rng.random_range(0..types.len())].to_string(),
        });
    }
    Corpus { brs, oas }
}

fn oracle_eligible_br(p: &Pid) -> bool {
    matches!(p.render().split(':').next(), Some("doi" | "pmid" | "pmcid" | "issn"))
}

fn oracle_eligible_oa(oa: &OaRecord) -> Vec<String> {
    if oa.oa_id.value().starts_with('W') {
        oa.pids
            .iter()
            .map(Pid::render)
            .filter(|r| r.starts_with("doi:") || r.starts_with("pmid:") || r.starts_with("pmcid:"))
            .collect()
    } else {
        oa.issns.iter().map(Pid::render).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    One(String),
    Multi(Vec<String>),
    NonMapped { supported: bool, any: bool },
}

/// Nested-loop mapping: every eligible identifier of every source record
/// compared against every identifier of every target.
pub fn oracle_map(corpus: &Corpus) -> Vec<(String, String, OracleVerdict)> {
    let targets: Vec<(String, Vec<String>)> = corpus
        .oas
        .iter()
        .map(|oa| (oa.oa_id.value().to_string(), oracle_eligible_oa(oa)))
        .collect();
    corpus
        .brs
        .iter()
        .map(|br| {
            let eligible: Vec<String> = br.pids.iter().filter(|p| oracle_eligible_br(p)).map(Pid::render).collect();
            let mut hits = BTreeSet::new();
            for p in &eligible {
                for (id, pids) in &targets {
                    if pids.contains(p) {
                        hits.insert(id.clone());
                    }
                }
            }
            let verdict = match hits.len() {
                0 => OracleVerdict::NonMapped {
                    supported: !eligible.is_empty(),
                    any: !br.pids.is_empty(),
                },
                1 => OracleVerdict::One(hits.into_iter().next().unwrap()),
                _ => OracleVerdict::Multi(hits.into_iter().collect()),
            };
            (br.omid.value().to_string(), br.br_type.clone(), verdict)
        })
        .collect()
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub processed: u64,
    pub with_supported_pids: u64,
    pub one_to_one: u64,
    pub multi_mapped: u64,
    pub non_mapped_with_pids: u64,
    pub non_mapped_without_pids: u64,
    pub histogram: BTreeMap<usize, u64>,
}

pub fn oracle_stats(rows: &[(String, String, OracleVerdict)]) -> OracleStats {
    let mut s = OracleStats::default();
    for (_, _, v) in rows {
        s.processed += 1;
        match v {
            OracleVerdict::One(_) => s.one_to_one += 1,
            OracleVerdict::Multi(ids) => {
                s.multi_mapped += 1;
                *s.histogram.entry(ids.len()).or_default() += 1;
            }
            OracleVerdict::NonMapped { supported: true, .. } => s.non_mapped_with_pids += 1,
            OracleVerdict::NonMapped { supported: false, .. } => s.non_mapped_without_pids += 1,
        }
    }
    s.with_supported_pids = s.processed - s.non_mapped_without_pids;
    s
}

/// Quadratic count of source records sharing a target with another one.
pub fn oracle_inverted(rows: &[(String, String, OracleVerdict)]) -> u64 {
    let targets: Vec<(&str, Vec<&str>)> = rows
        .iter()
        .map(|(omid, _, v)| {
            let ids: Vec<&str> = match v {
                OracleVerdict::One(id) => vec![id.as_str()],
                OracleVerdict::Multi(ids) => ids.iter().map(String::as_str).collect(),
                OracleVerdict::NonMapped { .. } => vec![],
            };
            (omid.as_str(), ids)
        })
        .collect();
    let mut counted = BTreeSet::new();
    for (i, (a, ta)) in targets.iter().enumerate() {
        for (j, (b, tb)) in targets.iter().enumerate() {
            if i != j && a != b && ta.iter().any(|t| tb.contains(t)) {
                counted.insert(*a);
            }
        }
    }
    counted.len() as u64
}
