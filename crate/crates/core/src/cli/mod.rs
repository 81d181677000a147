//! Command-line interface: argument parsing, configuration layering and
//! exit codes. The phases themselves live in [`phases`].
//!
//! Settings resolve in three layers: built-in defaults, then a JSON config
//! file (`--config` or `BIBMAP_CONFIG`), then flags.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
//! error, 3 I/O failure, 4 fatal data problem, 5 missing prerequisite phase.

pub mod phases;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::classifier::{ClassifyError, DEFAULT_SOURCE_CHAIN, DEFAULT_WORK_CHAIN};
use crate::index::IndexError;
use crate::ingest::{FieldMap, IngestError};
use crate::mapper::MapError;
use crate::provenance::ProvenanceError;
use crate::report::ReportError;
use crate::resolver::{ResolverError, VerifyError};

pub const CONFIG_ENV: &str = "BIBMAP_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "bibmap", version, about = "Map bibliographic records between two collections by shared identifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Source collection CSV files or directories.
    #[arg(long, global = true, value_delimiter = ',')]
    pub meta_csv: Vec<PathBuf>,
    /// OpenAlex Works JSON-Lines files or directories (gzip allowed).
    #[arg(long, global = true, value_delimiter = ',')]
    pub oa_works: Vec<PathBuf>,
    /// OpenAlex Sources JSON-Lines files or directories (gzip allowed).
    #[arg(long, global = true, value_delimiter = ',')]
    pub oa_sources: Vec<PathBuf>,
    /// Provenance files or directories.
    #[arg(long, global = true, value_delimiter = ',')]
    pub provenance: Vec<PathBuf>,
    /// Preprint DOI prefix list.
    #[arg(long, global = true)]
    pub prefixes: Option<PathBuf>,
    /// Preprint indicator list.
    #[arg(long, global = true)]
    pub indicators: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Index directory; defaults to `<out>/index`.
    #[arg(long, global = true)]
    pub index: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Rough memory budget for sort buffers, in MiB.
    #[arg(long, global = true)]
    pub memory_mb: Option<usize>,
    /// Replace an existing index.
    #[arg(long, global = true)]
    pub force: bool,
    /// Phases for `run-all`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub phase: Vec<Phase>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Ingest OpenAlex Works and Sources into the identifier index.
    BuildIndex,
    /// Map source records through the index.
    Map,
    /// Classify multi-mapped rows.
    Classify,
    /// Aggregate non-mapped records by primary source.
    Provenance,
    /// Recount outputs and write the summary.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the selected phases in order.
    RunAll,
    /// Write every index entry as CSV.
    DumpIndex {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a sample of verdicts against registrant metadata.
    VerifySample {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        resolver: Option<String>,
        #[arg(long)]
        resolver_fixture: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    BuildIndex,
    Map,
    Classify,
    Provenance,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Contents of the JSON config file. Relative paths are taken relative to
/// the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub meta_csv: Vec<PathBuf>,
    pub oa_works: Vec<PathBuf>,
    pub oa_sources: Vec<PathBuf>,
    pub provenance: Vec<PathBuf>,
    pub prefixes: Option<PathBuf>,
    pub indicators: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub workers: Option<usize>,
    pub memory_mb: Option<usize>,
    pub phases: Vec<Phase>,
    pub work_rules: Option<Vec<String>>,
    pub source_rules: Option<Vec<String>>,
    pub companion_types: Option<BTreeSet<String>>,
    pub openalex_fields: Option<FieldMap>,
    pub resolver: Option<String>,
    pub resolver_fixture: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for list in [&mut cfg.meta_csv, &mut cfg.oa_works, &mut cfg.oa_sources, &mut cfg.provenance] {
            list.iter_mut().for_each(rebase);
        }
        for p in [
            &mut cfg.prefixes,
            &mut cfg.indicators,
            &mut cfg.out,
            &mut cfg.index,
            &mut cfg.resolver_fixture,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub meta_csv: Vec<PathBuf>,
    pub oa_works: Vec<PathBuf>,
    pub oa_sources: Vec<PathBuf>,
    pub provenance: Vec<PathBuf>,
    pub prefixes: Option<PathBuf>,
    pub indicators: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub index_dir: PathBuf,
    pub workers: usize,
    pub memory_mb: usize,
    pub force: bool,
    pub phases: BTreeSet<Phase>,
    pub work_rules: Vec<String>,
    pub source_rules: Vec<String>,
    pub companion_types: Option<BTreeSet<String>>,
    pub openalex_fields: FieldMap,
    pub resolver: String,
    pub resolver_fixture: Option<PathBuf>,
}

pub const DEFAULT_OUT: &str = "bibmap-out";
pub const DEFAULT_MEMORY_MB: usize = 256;

fn pick<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

impl RunConfig {
    pub fn resolve(args: CommonArgs) -> Result<RunConfig, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let out_dir = args.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let index_dir = args.index.or(file.index).unwrap_or_else(|| out_dir.join("index"));
        let workers = args
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get().min(8)));
        if workers == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        let memory_mb = args.memory_mb.or(file.memory_mb).unwrap_or(DEFAULT_MEMORY_MB);
        if memory_mb < 16 {
            return Err(CliError::Config("--memory-mb must be at least 16".into()));
        }
        let mut phases: BTreeSet<Phase> = pick(args.phase, file.phases).into_iter().collect();
        if phases.is_empty() {
            phases = Phase::value_variants().iter().copied().collect();
        }
        let owned = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Ok(RunConfig {
            meta_csv: pick(args.meta_csv, file.meta_csv),
            oa_works: pick(args.oa_works, file.oa_works),
            oa_sources: pick(args.oa_sources, file.oa_sources),
            provenance: pick(args.provenance, file.provenance),
            prefixes: args.prefixes.or(file.prefixes),
            indicators: args.indicators.or(file.indicators),
            out_dir,
            index_dir,
            workers,
            memory_mb,
            force: args.force,
            phases,
            work_rules: file.work_rules.unwrap_or_else(|| owned(&DEFAULT_WORK_CHAIN)),
            source_rules: file.source_rules.unwrap_or_else(|| owned(&DEFAULT_SOURCE_CHAIN)),
            companion_types: file.companion_types,
            openalex_fields: file.openalex_fields.unwrap_or_default(),
            resolver: file.resolver.unwrap_or_else(|| "offline".into()),
            resolver_fixture: file.resolver_fixture,
        })
    }

    /// Byte budget for each external sort.
    pub fn sort_budget(&self) -> usize {
        (self.memory_mb << 20) / 4
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Data(String),
    #[error("{missing}; run `bibmap {hint}` first")]
    Prerequisite { missing: String, hint: String },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Data(_) => 4,
            CliError::Prerequisite { .. } => 5,
        }
    }

    pub fn prerequisite(missing: impl Into<String>, hint: &str) -> Self {
        CliError::Prerequisite {
            missing: missing.into(),
            hint: hint.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        let msg = e.to_string();
        match e {
            IndexError::Io(_) | IndexError::DiskFull | IndexError::Store(_) => CliError::Io(msg),
            IndexError::AlreadyExists(_) => CliError::Config(format!("{msg}; pass --force to rebuild it")),
            IndexError::NotFinalized(_) => CliError::prerequisite(msg, "build-index"),
            IndexError::NotFound(_) | IndexError::CorruptMeta(..) => CliError::Data(msg),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Index(e) => e.into(),
            MapError::Ingest(e) => e.into(),
            MapError::Io(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Index(e) => e.into(),
            ClassifyError::Table(e) => e.into(),
            ClassifyError::Io(e) => e.into(),
            ClassifyError::Rule(e) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ProvenanceError> for CliError {
    fn from(e: ProvenanceError) -> Self {
        match e {
            ProvenanceError::Io(e) => e.into(),
            ProvenanceError::Table(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::MissingPhaseOutputs { missing, hint } => {
                CliError::prerequisite(format!("missing {missing}"), hint.trim_start_matches("bibmap "))
            }
            ReportError::Table(e) => e.into(),
            ReportError::Io(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ResolverError> for CliError {
    fn from(e: ResolverError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Index(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli.args)?;
    match cli.command {
        Command::BuildIndex => phases::run_phases(&cfg, &[Phase::BuildIndex]),
        Command::Map => phases::run_phases(&cfg, &[Phase::Map]),
        Command::Classify => phases::run_phases(&cfg, &[Phase::Classify]),
        Command::Provenance => phases::run_phases(&cfg, &[Phase::Provenance]),
        Command::Report { format } => {
            phases::run_phases(&cfg, &[Phase::Report])?;
            phases::print_report(&cfg, format)
        }
        Command::RunAll => {
            let selected: Vec<Phase> = cfg.phases.iter().copied().collect();
            phases::run_phases(&cfg, &selected)
        }
        Command::DumpIndex { output } => phases::dump(&cfg, output.as_deref()),
        Command::VerifySample {
            n,
            seed,
            resolver,
            resolver_fixture,
        } => {
            let name = resolver.unwrap_or_else(|| cfg.resolver.clone());
            let fixture = resolver_fixture.or_else(|| cfg.resolver_fixture.clone());
            phases::verify(&cfg, n, seed, &name, fixture)
        }
    }
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main_from_env() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bibmap: {e}");
            e.exit_code()
        }
    }
}
