//! Phase runners behind the subcommands.

use std::cell::RefCell;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{CliError, Format, Phase, RunConfig};
use crate::classifier::{
    classify_all, Classifier, RuleRegistry, SOURCES_MATRIX_FILE, VERDICTS_FILE, WORKS_MATRIX_FILE,
};
use crate::index::{dump_index, is_finalized, open_index, IndexBuilder};
use crate::ingest::{
    open_input, parse_indicator_list, parse_prefix_list, read_meta_csv, read_openalex_lines, BrRecord,
    ClassifierConfig, Defect, DefectSink, DefectWriter, OaKind,
};
use crate::mapper::{run_mapping, MapError, MapOptions, MULTI_MAPPED_FILE, NON_MAPPED_FILE};
use crate::provenance::{run_provenance, PROVENANCE_MATRIX_FILE};
use crate::report::{
    fingerprint_bytes, fingerprint_file, render_report, write_report, ReportFormat, RunManifest, RunSummary,
    HISTOGRAM_FILE, REPORT_FILE, SUMMARY_FILE, TOOL_VERSION,
};
use crate::resolver::{verify_sample, ResolverOptions, ResolverRegistry};

pub const INDEX_DEFECTS_FILE: &str = "defects_index.csv";
pub const MAP_DEFECTS_FILE: &str = "defects_map.csv";
pub const PROVENANCE_DEFECTS_FILE: &str = "defects_provenance.csv";
pub const AUDIT_FILE: &str = "audit.json";

const BUILTIN_PREFIXES: &str = include_str!("../../../../config/preprint_prefixes.txt");
const BUILTIN_INDICATORS: &str = include_str!("../../../../config/preprint_indicators.txt");
const PROGRESS_EVERY: u64 = 250_000;

/// Files under each path, directories walked recursively in name order.
/// Hidden files and OpenAlex `manifest` files are skipped.
pub fn expand_inputs(paths: &[PathBuf]) -> io::Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        entries.sort();
        for path in entries {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if name.starts_with('.') || name == "manifest" {
                continue;
            }
            if path.is_dir() {
                walk(&path, out)?;
            } else {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            walk(path, &mut out)?;
        } else {
            out.push(path.clone());
        }
    }
    Ok(out)
}

fn require_inputs(flag: &str, paths: &[PathBuf]) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::Config(format!("{flag} is required")));
    }
    for p in paths {
        if !p.exists() {
            return Err(CliError::Config(format!("{flag}: {} does not exist", p.display())));
        }
    }
    Ok(())
}

fn require_optional(flag: &str, path: &Option<PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) if !p.is_file() => Err(CliError::Config(format!("{flag}: {} does not exist", p.display()))),
        _ => Ok(()),
    }
}

/// Checks every input the selected phases will read, before any of them
/// starts writing.
pub fn validate(cfg: &RunConfig, phases: &[Phase]) -> Result<(), CliError> {
    for phase in phases {
        match phase {
            Phase::BuildIndex => {
                if cfg.oa_works.is_empty() && cfg.oa_sources.is_empty() {
                    return Err(CliError::Config("--oa-works or --oa-sources is required".into()));
                }
                if !cfg.oa_works.is_empty() {
                    require_inputs("--oa-works", &cfg.oa_works)?;
                }
                if !cfg.oa_sources.is_empty() {
                    require_inputs("--oa-sources", &cfg.oa_sources)?;
                }
                if !cfg.force && is_finalized(&cfg.index_dir) {
                    return Err(CliError::Config(format!(
                        "an index already exists in {}; pass --force to rebuild it",
                        cfg.index_dir.display()
                    )));
                }
            }
            Phase::Map => require_inputs("--meta-csv", &cfg.meta_csv)?,
            Phase::Classify => {
                require_optional("--prefixes", &cfg.prefixes)?;
                require_optional("--indicators", &cfg.indicators)?;
                RuleRegistry::builtin()
                    .chain(OaKind::Work, &cfg.work_rules)
                    .and_then(|_| RuleRegistry::builtin().chain(OaKind::Source, &cfg.source_rules))
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            Phase::Provenance => require_inputs("--provenance", &cfg.provenance)?,
            Phase::Report => {}
        }
    }
    Ok(())
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::BuildIndex => "build-index",
        Phase::Map => "map",
        Phase::Classify => "classify",
        Phase::Provenance => "provenance",
        Phase::Report => "report",
    }
}

/// Validates, then runs `phases` in pipeline order.
pub fn run_phases(cfg: &RunConfig, phases: &[Phase]) -> Result<(), CliError> {
    let mut phases = phases.to_vec();
    phases.sort();
    phases.dedup();
    validate(cfg, &phases)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    for phase in phases {
        let started = Instant::now();
        eprintln!("[{}] started", phase_name(phase));
        let mut manifest = if phase == Phase::BuildIndex {
            RunManifest {
                tool_version: TOOL_VERSION.to_string(),
                ..RunManifest::default()
            }
        } else {
            RunManifest::load(&cfg.out_dir)?
        };
        match phase {
            Phase::BuildIndex => build_index(cfg, &mut manifest)?,
            Phase::Map => map(cfg, &mut manifest)?,
            Phase::Classify => classify(cfg, &mut manifest)?,
            Phase::Provenance => provenance(cfg, &mut manifest)?,
            Phase::Report => {}
        }
        let millis = started.elapsed().as_millis() as u64;
        manifest.phase_millis.insert(phase_name(phase).to_string(), millis);
        manifest.save(&cfg.out_dir)?;
        if phase == Phase::Report {
            // Built last so the summary carries this phase's timing too.
            write_report(&cfg.out_dir)?;
        }
        eprintln!("[{}] done in {millis} ms", phase_name(phase));
    }
    Ok(())
}

fn fingerprint_inputs(manifest: &mut RunManifest, key: &str, files: &[PathBuf]) -> Result<(), CliError> {
    manifest.inputs.retain(|k, _| !k.starts_with(&format!("{key}[")));
    for (i, f) in files.iter().enumerate() {
        manifest.inputs.insert(format!("{key}[{i}]"), fingerprint_file(f)?);
    }
    Ok(())
}

struct Progress {
    label: &'static str,
    count: u64,
}

impl Progress {
    fn new(label: &'static str) -> Self {
        Progress { label, count: 0 }
    }

    fn tick(&mut self) {
        self.count += 1;
        if self.count.is_multiple_of(PROGRESS_EVERY) {
            eprintln!("[{}] {} records", self.label, self.count);
        }
    }
}

fn build_index(cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let works = expand_inputs(&cfg.oa_works)?;
    let sources = expand_inputs(&cfg.oa_sources)?;
    let mut defects = DefectWriter::create(&cfg.out_dir.join(INDEX_DEFECTS_FILE))?;
    let mut builder = IndexBuilder::create(&cfg.index_dir, cfg.force)?;
    let mut progress = Progress::new("build-index");
    for (kind, files) in [(OaKind::Work, &works), (OaKind::Source, &sources)] {
        for file in files {
            let input = open_input(file)?;
            let name = file.display().to_string();
            for record in read_openalex_lines(input, kind, cfg.openalex_fields.clone(), &name, &mut defects) {
                builder.add(record?)?;
                progress.tick();
            }
        }
    }
    builder.finish()?;
    let skipped = defects.finish()?;
    eprintln!("[build-index] {} records read, {skipped} defects", progress.count);
    manifest.inputs.clear();
    fingerprint_inputs(manifest, "oa_works", &works)?;
    fingerprint_inputs(manifest, "oa_sources", &sources)?;
    Ok(())
}

/// Shares one defect file between several readers.
struct SharedSink<'a>(&'a RefCell<DefectWriter>);

impl DefectSink for SharedSink<'_> {
    fn report(&mut self, defect: Defect) {
        self.0.borrow_mut().report(defect);
    }
}

fn remove_if_present(path: &Path) -> io::Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

fn map(cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    if !is_finalized(&cfg.index_dir) {
        return Err(CliError::prerequisite(
            format!("no finalized index in {}", cfg.index_dir.display()),
            "build-index",
        ));
    }
    let (index, _) = open_index(&cfg.index_dir)?;
    // Downstream outputs describe the previous mapping; drop them.
    for name in [
        VERDICTS_FILE,
        WORKS_MATRIX_FILE,
        SOURCES_MATRIX_FILE,
        PROVENANCE_MATRIX_FILE,
        SUMMARY_FILE,
        REPORT_FILE,
        HISTOGRAM_FILE,
    ] {
        remove_if_present(&cfg.out_dir.join(name))?;
    }
    let files = expand_inputs(&cfg.meta_csv)?;
    let writer = RefCell::new(DefectWriter::create(&cfg.out_dir.join(MAP_DEFECTS_FILE))?);
    let mut sinks: Vec<SharedSink> = files.iter().map(|_| SharedSink(&writer)).collect();
    let mut progress = Progress::new("map");
    let records = files.iter().zip(sinks.iter_mut()).flat_map(
        |(file, sink)| -> Box<dyn Iterator<Item = Result<BrRecord, MapError>> + '_> {
            let name = file.display().to_string();
            match open_input(file)
                .map_err(MapError::Io)
                .and_then(|input| read_meta_csv(input, &name, sink).map_err(MapError::from))
            {
                Ok(reader) => Box::new(reader.map(|r| r.map_err(MapError::from))),
                Err(e) => Box::new(std::iter::once(Err(e))),
            }
        },
    );
    let records = records.inspect(|_| progress.tick());
    let mut mapping_defects: Vec<Defect> = Vec::new();
    let opts = MapOptions {
        workers: cfg.workers,
        sort_budget: cfg.sort_budget(),
    };
    let stats = run_mapping(records, &index, &cfg.out_dir, &opts, &mut mapping_defects)?;
    drop(sinks);
    let mut writer = writer.into_inner();
    for d in mapping_defects {
        writer.report(d);
    }
    let defects = writer.finish()?;
    eprintln!(
        "[map] {} processed, {} one-to-one, {} multi-mapped, {} non-mapped, {defects} defects",
        stats.processed,
        stats.one_to_one,
        stats.multi_mapped,
        stats.non_mapped_with_pids + stats.non_mapped_without_pids
    );
    fingerprint_inputs(manifest, "meta_csv", &files)?;
    Ok(())
}

fn read_list<T>(
    path: &Option<PathBuf>,
    builtin: &'static str,
    builtin_label: &str,
    parse: impl Fn(&mut dyn BufRead, &str) -> Result<T, crate::ingest::IngestError>,
) -> Result<(T, crate::report::Fingerprint), CliError> {
    match path {
        Some(p) => {
            let mut reader = io::BufReader::new(File::open(p)?);
            let value = parse(&mut reader, &p.display().to_string()).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((value, fingerprint_file(p)?))
        }
        None => {
            let value = parse(&mut builtin.as_bytes(), builtin_label).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((value, fingerprint_bytes(builtin_label, builtin.as_bytes())))
        }
    }
}

pub fn classifier_config(cfg: &RunConfig, manifest: Option<&mut RunManifest>) -> Result<ClassifierConfig, CliError> {
    let (prefixes, prefix_fp) = read_list(&cfg.prefixes, BUILTIN_PREFIXES, "builtin:preprint_prefixes.txt", |r, n| {
        parse_prefix_list(r, n)
    })?;
    let (indicators, indicator_fp) =
        read_list(&cfg.indicators, BUILTIN_INDICATORS, "builtin:preprint_indicators.txt", |r, n| {
            parse_indicator_list(r, n)
        })?;
    if let Some(m) = manifest {
        m.config.insert("prefixes".into(), prefix_fp);
        m.config.insert("indicators".into(), indicator_fp);
    }
    let mut config = ClassifierConfig {
        preprint_prefixes: prefixes,
        preprint_indicators: indicators,
        ..ClassifierConfig::default()
    };
    if let Some(types) = &cfg.companion_types {
        config.companion_types = types.clone();
    }
    Ok(config)
}

fn classify(cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let multi = cfg.out_dir.join(MULTI_MAPPED_FILE);
    if !multi.is_file() {
        return Err(CliError::prerequisite(format!("missing {}", multi.display()), "map"));
    }
    if !is_finalized(&cfg.index_dir) {
        return Err(CliError::prerequisite(
            format!("no finalized index in {}", cfg.index_dir.display()),
            "build-index",
        ));
    }
    let config = classifier_config(cfg, Some(manifest))?;
    let classifier = Classifier::with_chains(config, &RuleRegistry::builtin(), &cfg.work_rules, &cfg.source_rules)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (_, store) = open_index(&cfg.index_dir)?;
    let result = classify_all(&multi, &store, &classifier, &cfg.out_dir, cfg.workers)?;
    eprintln!(
        "[classify] {} work rows, {} source rows, {} mixed rows",
        result.works.total(),
        result.sources.total(),
        result.mixed_kind_rows
    );
    Ok(())
}

fn provenance(cfg: &RunConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    if !cfg.out_dir.join(NON_MAPPED_FILE).is_file() {
        return Err(CliError::prerequisite(format!("missing {NON_MAPPED_FILE}"), "map"));
    }
    let files = expand_inputs(&cfg.provenance)?;
    let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let mut defects = DefectWriter::create(&cfg.out_dir.join(PROVENANCE_DEFECTS_FILE))?;
    let matrix = run_provenance(&refs, &cfg.out_dir, cfg.sort_budget(), &mut defects)?;
    let n = defects.finish()?;
    eprintln!(
        "[provenance] {} attributed, {} unknown, {n} defects",
        matrix.total(),
        matrix.unknown_total()
    );
    fingerprint_inputs(manifest, "provenance", &files)?;
    Ok(())
}

pub fn print_report(cfg: &RunConfig, format: Format) -> Result<(), CliError> {
    let path = cfg.out_dir.join(SUMMARY_FILE);
    let summary: RunSummary = serde_json::from_slice(&std::fs::read(&path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let format = match format {
        Format::Text => ReportFormat::Text,
        Format::Json => ReportFormat::Json,
    };
    io::stdout().write_all(&render_report(&summary, format))?;
    Ok(())
}

pub fn dump(cfg: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    if !is_finalized(&cfg.index_dir) {
        return Err(CliError::prerequisite(
            format!("no finalized index in {}", cfg.index_dir.display()),
            "build-index",
        ));
    }
    let (index, _) = open_index(&cfg.index_dir)?;
    let n = match output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let n = dump_index(&index, &mut w)?;
            w.flush()?;
            n
        }
        None => dump_index(&index, io::stdout().lock())?,
    };
    eprintln!("[dump-index] {n} entries");
    Ok(())
}

pub fn verify(cfg: &RunConfig, n: usize, seed: u64, resolver: &str, fixture: Option<PathBuf>) -> Result<(), CliError> {
    let verdicts = cfg.out_dir.join(VERDICTS_FILE);
    if !verdicts.is_file() {
        return Err(CliError::prerequisite(format!("missing {}", verdicts.display()), "classify"));
    }
    let resolver = ResolverRegistry::builtin().create(resolver, &ResolverOptions { fixture })?;
    if !is_finalized(&cfg.index_dir) {
        return Err(CliError::prerequisite(
            format!("no finalized index in {}", cfg.index_dir.display()),
            "build-index",
        ));
    }
    let (_, store) = open_index(&cfg.index_dir)?;
    let audit = verify_sample(&verdicts, &store, resolver.as_ref(), n, seed)?;
    let mut bytes = serde_json::to_vec_pretty(&audit).map_err(|e| CliError::Other(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(cfg.out_dir.join(AUDIT_FILE), bytes)?;
    eprintln!(
        "[verify-sample] {} entries{}",
        audit.entries.len(),
        if audit.complete { "" } else { ", incomplete: resolver unavailable" }
    );
    Ok(())
}
