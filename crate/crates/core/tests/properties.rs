mod common;

use std::collections::BTreeMap;
use std::io::Write;

use bibmap::classifier::Classifier;
use bibmap::index::build_index;
use bibmap::ingest::{ClassifierConfig, OaKind, OaRecord, WorkVersion};
use bibmap::mapper::{read_mapped_table, run_mapping, MapError, MapOptions, MULTI_MAPPED_FILE, ONE_TO_ONE_FILE};
use bibmap::pid::{Pid, PidScheme};
use bibmap::provenance::{aggregate, ProvenanceRecord, SourceLabel, SourceSet};
use proptest::prelude::*;

use common::{oracle_inverted, oracle_map, oracle_stats, pid, random_corpus, OracleVerdict};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mapping_agrees_with_nested_loops(seed in any::<u64>(), workers in 1usize..4) {
        let corpus = random_corpus(seed, 80);
        let dir = tempfile::tempdir().unwrap();
        let (index, _) = build_index(corpus.oas.clone(), &dir.path().join("index")).unwrap();
        let out = dir.path().join("out");
        let stats = run_mapping(
            corpus.brs.iter().cloned().map(Ok::<_, MapError>),
            &index,
            &out,
            &MapOptions { workers, sort_budget: 512 },
            &mut Vec::new(),
        )
        .unwrap();
        let rows = oracle_map(&corpus);
        let oracle = oracle_stats(&rows);
        prop_assert_eq!(stats.processed, oracle.processed);
        prop_assert_eq!(stats.with_supported_pids, oracle.with_supported_pids);
        prop_assert_eq!(stats.one_to_one, oracle.one_to_one);
        prop_assert_eq!(stats.multi_mapped, oracle.multi_mapped);
        prop_assert_eq!(stats.non_mapped_with_pids, oracle.non_mapped_with_pids);
        prop_assert_eq!(stats.non_mapped_without_pids, oracle.non_mapped_without_pids);
        prop_assert_eq!(&stats.multiplicity_histogram, &oracle.histogram);
        prop_assert_eq!(stats.inverted_multi_omids, oracle_inverted(&rows));
        prop_assert!(stats.check_identities().is_ok());

        let mut got: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for file in [ONE_TO_ONE_FILE, MULTI_MAPPED_FILE] {
            for row in read_mapped_table(&out.join(file)).unwrap() {
                let row = row.unwrap();
                got.insert(row.omid, row.oa_ids);
            }
        }
        let want: BTreeMap<String, Vec<String>> = rows
            .into_iter()
            .filter_map(|(omid, _, v)| match v {
                OracleVerdict::One(id) => Some((omid, vec![id])),
                OracleVerdict::Multi(ids) => Some((omid, ids)),
                OracleVerdict::NonMapped { .. } => None,
            })
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn issn_acceptance_matches_check_oracle(n in 0u32..10_000_000, check in 0u32..11) {
        let body = format!("{n:07}");
        let c = if check == 10 { 'X' } else { char::from_digit(check, 10).unwrap() };
        let raw = format!("{}-{}{}", &body[..4], &body[4..], c);
        let valid = c == common::oracle_issn_check(&body);
        prop_assert_eq!(Pid::new(PidScheme::Issn, &raw).is_ok(), valid, "{}", raw);
    }

    #[test]
    fn provenance_aggregate_agrees_with_nested_loops(
        rows in prop::collection::btree_map(0u32..400, (0usize..3, any::<bool>()), 0..60),
        records in prop::collection::btree_map(0u32..400, prop::collection::btree_set(0usize..6, 1..3), 0..60),
    ) {
        const TYPES: [&str; 3] = ["book", "dataset", "journal article"];
        const LABELS: [SourceLabel; 6] = [
            SourceLabel::Crossref,
            SourceLabel::DataCite,
            SourceLabel::JaLC,
            SourceLabel::NIH,
            SourceLabel::OpenAIRE,
            SourceLabel::Zenodo,
        ];
        let omid = |n: &u32| format!("br/06{n:04}");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("non_mapped.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "omid,type,had_supported_pids,had_any_pid").unwrap();
        for (n, (t, any)) in &rows {
            writeln!(f, "{},{},false,{}", omid(n), TYPES[*t], any).unwrap();
        }
        drop(f);
        let recs: Vec<ProvenanceRecord> = records
            .iter()
            .map(|(n, labels)| ProvenanceRecord {
                omid: omid(n),
                sources: labels.iter().map(|i| LABELS[*i]).collect::<SourceSet>(),
            })
            .collect();

        let matrix = aggregate(&path, recs.iter().cloned().map(Ok), dir.path(), 256).unwrap();

        let mut known: BTreeMap<(String, bool, &str), u64> = BTreeMap::new();
        let mut unknown: BTreeMap<(bool, &str), u64> = BTreeMap::new();
        for (n, (t, any)) in &rows {
            let hit = recs.iter().find(|r| r.omid == omid(n));
            match hit {
                Some(r) => *known.entry((r.sources.to_string(), *any, TYPES[*t])).or_default() += 1,
                None => *unknown.entry((*any, TYPES[*t])).or_default() += 1,
            }
        }
        for ((set, any, t), count) in &known {
            prop_assert_eq!(matrix.get(set, *any, t), *count);
        }
        for ((any, t), count) in &unknown {
            prop_assert_eq!(matrix.get_unknown(*any, t), *count);
        }
        prop_assert_eq!(matrix.total(), known.values().sum::<u64>());
        prop_assert_eq!(matrix.unknown_total(), unknown.values().sum::<u64>());
    }

    #[test]
    fn verdicts_ignore_record_and_target_order(
        works in prop::collection::vec((0usize..6, 0usize..5, 0usize..4, 0usize..4), 2..7),
        shuffle_seed in any::<u64>(),
    ) {
        const DOIS: [&str; 6] = [
            "10.1000/a",
            "10.1000/a.v2",
            "10.48550/arxiv.1",
            "10.5555/osf.io/x",
            "10.1000/b",
            "10.2000/c",
        ];
        const TYPES: [&str; 5] = ["article", "preprint", "peer-review", "erratum", "book-chapter"];
        const VERSIONS: [WorkVersion; 4] =
            [WorkVersion::Submitted, WorkVersion::Accepted, WorkVersion::Published, WorkVersion::Unknown];
        let records: Vec<OaRecord> = works
            .iter()
            .enumerate()
            .map(|(i, (d, t, v, extra))| {
                let mut pids = vec![pid(PidScheme::Doi, DOIS[*d])];
                if *extra == 0 {
                    pids.push(pid(PidScheme::Pmid, &(i as u64 + 1).to_string()));
                }
                OaRecord {
                    oa_id: pid(PidScheme::Openalex, &format!("W{}", i + 1)),
                    kind: OaKind::Work,
                    pids,
                    work_type: Some(TYPES[*t].into()),
                    version: VERSIONS[*v],
                    issns: vec![],
                }
            })
            .collect();
        let mut ids: Vec<String> = (1..=works.len()).map(|i| format!("W{i}")).collect();
        ids.sort();
        let config = ClassifierConfig {
            preprint_prefixes: ["10.48550".to_string()].into(),
            preprint_indicators: vec!["/osf.io".into()],
            ..ClassifierConfig::default()
        };
        let classifier = Classifier::new(config);

        let dir = tempfile::tempdir().unwrap();
        let (_, store_a) = build_index(records.clone(), &dir.path().join("a")).unwrap();
        let mut shuffled = records.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(shuffle_seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let (_, store_b) = build_index(shuffled, &dir.path().join("b")).unwrap();

        let row = bibmap::mapper::MultiRow { omid: "br/1".into(), oa_ids: ids.clone(), br_type: "journal article".into() };
        let mut reversed = row.clone();
        reversed.oa_ids.reverse();
        let a = classifier.classify_row(&row, &store_a).unwrap();
        let b = classifier.classify_row(&reversed, &store_b).unwrap();
        prop_assert_eq!(a, b);
    }
}
