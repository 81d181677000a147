use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Defect, DefectSink, IngestError, OaKind, OaRecord, WorkVersion};
use crate::pid::{Pid, PidScheme};

/// Where to find each attribute in a JSON-Lines object. Dotted paths walk
/// nested objects; list-valued entries are tried in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMap {
    pub id: String,
    pub ids: String,
    pub work_type: Vec<String>,
    pub version: Vec<String>,
    pub issn: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            id: "id".into(),
            ids: "ids".into(),
            work_type: vec!["type".into()],
            version: vec![
                "best_oa_location.version".into(),
                "primary_location.version".into(),
            ],
            issn: "issn".into(),
        }
    }
}

fn lookup<'v>(value: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.')
        .try_fold(value, |v, key| v.get(key))
        .filter(|v| !v.is_null())
}

fn as_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

const WORK_ID_KEYS: [(&str, PidScheme); 4] = [
    ("doi", PidScheme::Doi),
    ("pmid", PidScheme::Pmid),
    ("pmcid", PidScheme::Pmcid),
    ("mag", PidScheme::Mag),
];

const SOURCE_ID_KEYS: [(&str, PidScheme); 3] = [
    ("wikidata", PidScheme::Wikidata),
    ("mag", PidScheme::Mag),
    ("fatcat", PidScheme::Fatcat),
];

/// Max ISSNs a Source may carry in the target data model.
const MAX_SOURCE_ISSNS: usize = 2;

/// Parses one JSON-Lines entry. `Err` means the line yields no record;
/// problems with individual identifiers are pushed to `notes` instead.
pub fn parse_openalex_line(
    line: &str,
    kind: OaKind,
    fields: &FieldMap,
    notes: &mut Vec<String>,
) -> Result<OaRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let raw_id = lookup(&value, &fields.id)
        .and_then(as_text)
        .ok_or_else(|| "missing id".to_string())?;
    let oa_id = Pid::new(PidScheme::Openalex, &raw_id).map_err(|e| e.to_string())?;
    if OaKind::of_id(oa_id.value()) != Some(kind) {
        return Err(format!("{} is not a {} id", oa_id.value(), kind.as_str()));
    }

    let keys: &[(&str, PidScheme)] = match kind {
        OaKind::Work => &WORK_ID_KEYS,
        OaKind::Source => &SOURCE_ID_KEYS,
    };
    let mut pids = Vec::new();
    if let Some(ids) = lookup(&value, &fields.ids) {
        for (key, scheme) in keys {
            let Some(raw) = ids.get(*key).and_then(as_text) else {
                continue;
            };
            match Pid::new(*scheme, &raw) {
                Ok(pid) => pids.push(pid),
                Err(e) => notes.push(e.to_string()),
            }
        }
    }

    let mut issns: Vec<Pid> = Vec::new();
    if kind == OaKind::Source {
        if let Some(Value::Array(list)) = lookup(&value, &fields.issn) {
            for raw in list.iter().filter_map(as_text) {
                match Pid::new(PidScheme::Issn, &raw) {
                    Ok(pid) if issns.contains(&pid) => {}
                    Ok(pid) if issns.len() >= MAX_SOURCE_ISSNS => {
                        notes.push(format!("ISSN {} beyond the two-ISSN limit dropped", pid.value()))
                    }
                    Ok(pid) => issns.push(pid),
                    Err(e) => notes.push(e.to_string()),
                }
            }
        }
    }

    let (work_type, version) = match kind {
        OaKind::Work => {
            let work_type = fields
                .work_type
                .iter()
                .find_map(|p| lookup(&value, p).and_then(as_text));
            let version = fields
                .version
                .iter()
                .find_map(|p| lookup(&value, p).and_then(as_text))
                .map(|v| WorkVersion::from_openalex(&v))
                .unwrap_or_default();
            (work_type, version)
        }
        OaKind::Source => (None, WorkVersion::Unknown),
    };

    Ok(OaRecord {
        oa_id,
        kind,
        pids,
        work_type,
        version,
        issns,
    })
}

/// Line-at-a-time reader over a JSON-Lines dump of Works or Sources.
pub struct OpenAlexReader<'s, R: BufRead> {
    input: R,
    kind: OaKind,
    fields: FieldMap,
    input_name: String,
    sink: &'s mut dyn DefectSink,
    buf: Vec<u8>,
    notes: Vec<String>,
    line_no: u64,
    lines_read: u64,
    lines_skipped: u64,
    done: bool,
}

pub fn read_openalex_lines<'s, R: BufRead>(
    input: R,
    kind: OaKind,
    fields: FieldMap,
    input_name: &str,
    sink: &'s mut dyn DefectSink,
) -> OpenAlexReader<'s, R> {
    OpenAlexReader {
        input,
        kind,
        fields,
        input_name: input_name.to_string(),
        sink,
        buf: Vec::new(),
        notes: Vec::new(),
        line_no: 0,
        lines_read: 0,
        lines_skipped: 0,
        done: false,
    }
}

impl<R: BufRead> OpenAlexReader<'_, R> {
    /// Non-blank lines consumed so far.
    pub fn lines_read(&self) -> u64 {
        self.lines_read
    }

    pub fn lines_skipped(&self) -> u64 {
        self.lines_skipped
    }

    fn defect(&mut self, reason: String) {
        self.sink.report(Defect {
            input: self.input_name.clone(),
            line_no: self.line_no,
            reason,
        });
    }
}

impl<R: BufRead> Iterator for OpenAlexReader<'_, R> {
    type Item = Result<OaRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.input.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    break;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            self.line_no += 1;
            let buf = std::mem::take(&mut self.buf);
            let text = match std::str::from_utf8(&buf) {
                Ok(t) => t.trim(),
                Err(_) => {
                    self.lines_read += 1;
                    self.lines_skipped += 1;
                    self.defect("line skipped: invalid UTF-8".into());
                    continue;
                }
            };
            if text.is_empty() {
                continue;
            }
            self.lines_read += 1;
            self.notes.clear();
            let parsed = parse_openalex_line(text, self.kind, &self.fields, &mut self.notes);
            for note in std::mem::take(&mut self.notes) {
                self.defect(note);
            }
            match parsed {
                Ok(rec) => return Some(Ok(rec)),
                Err(reason) => {
                    self.lines_skipped += 1;
                    self.defect(format!("line skipped: {reason}"));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(input: &str, kind: OaKind) -> (Vec<OaRecord>, Vec<Defect>, u64, u64) {
        let mut defects = Vec::new();
        let mut reader =
            read_openalex_lines(input.as_bytes(), kind, FieldMap::default(), "oa", &mut defects);
        let records: Vec<_> = reader.by_ref().map(Result::unwrap).collect();
        let counts = (reader.lines_read(), reader.lines_skipped());
        drop(reader);
        (records, defects, counts.0, counts.1)
    }

    #[test]
    fn source_line() {
        let (recs, defects, _, _) = read(
            r#"{"id":"https://openalex.org/S2764583335","issn":["2088-0278"]}"#,
            OaKind::Source,
        );
        assert!(defects.is_empty());
        assert_eq!(recs[0].id(), "S2764583335");
        assert_eq!(recs[0].kind, OaKind::Source);
        assert_eq!(recs[0].issns, vec![Pid::new(PidScheme::Issn, "2088-0278").unwrap()]);
    }

    #[test]
    fn work_line() {
        let (recs, _, _, _) = read(
            r#"{"id":"https://openalex.org/W1","ids":{"doi":"https://doi.org/10.1/A"},"type":"article"}"#,
            OaKind::Work,
        );
        assert_eq!(recs[0].id(), "W1");
        assert_eq!(recs[0].pids, vec![Pid::new(PidScheme::Doi, "10.1/a").unwrap()]);
        assert_eq!(recs[0].work_type.as_deref(), Some("article"));
        assert_eq!(recs[0].version, WorkVersion::Unknown);
    }

    #[test]
    fn work_ids_and_version() {
        let line = r#"{"id":"W9","ids":{"openalex":"https://openalex.org/W9","pmid":"https://pubmed.ncbi.nlm.nih.gov/42","pmcid":"https://www.ncbi.nlm.nih.gov/pmc/articles/777","mag":2038},"best_oa_location":null,"primary_location":{"version":"submittedVersion"}}"#;
        let (recs, _, _, _) = read(line, OaKind::Work);
        let rendered: Vec<_> = recs[0].pids.iter().map(Pid::render).collect();
        assert_eq!(rendered, ["pmid:42", "pmcid:PMC777", "mag:2038"]);
        assert_eq!(recs[0].version, WorkVersion::Submitted);
    }

    #[test]
    fn malformed_and_blank_lines() {
        let input = "{\n\n{\"id\":\"W2\"}\n{\"id\":\"S3\"}\n";
        let (recs, defects, read_n, skipped) = read(input, OaKind::Work);
        assert_eq!(recs.len(), 1);
        assert_eq!(read_n, 3);
        assert_eq!(skipped, 2);
        assert_eq!(defects.len(), 2);
        assert_eq!(defects[0].line_no, 1);
        assert_eq!(defects[1].line_no, 4);
    }

    #[test]
    fn third_issn_dropped() {
        let (recs, defects, _, _) = read(
            r#"{"id":"S1","issn":["0378-5955","2088-0278","0378-5955","1234-5679"]}"#,
            OaKind::Source,
        );
        assert_eq!(recs[0].issns.len(), 2);
        assert_eq!(defects.len(), 1);
    }

    #[test]
    fn adapter_paths() {
        let fields = FieldMap {
            id: "meta.key".into(),
            work_type: vec!["type_crossref".into()],
            ..FieldMap::default()
        };
        let mut notes = Vec::new();
        let rec = parse_openalex_line(
            r#"{"meta":{"key":"W5"},"type_crossref":"journal-article"}"#,
            OaKind::Work,
            &fields,
            &mut notes,
        )
        .unwrap();
        assert_eq!(rec.id(), "W5");
        assert_eq!(rec.work_type.as_deref(), Some("journal-article"));
    }
}
