//! Command-line front end: `ingest`, `analyze`, `report`, `selfcheck`.
//!
//! Exit codes: 0 success, 1 input/data errors, 2 configuration errors,
//! 3 output path collisions. Every flag can also be set through an
//! environment variable prefixed `REVIEW_DIFFUSION_`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::engine::{build_successor_dag, shortest_witness, SummaryStream};
use crate::fixtures;
use crate::ingest::{assemble_channels, parse_events, slice_window, BotFilter, EventFormat, EventKind, IngestConfig, IngestError};
use crate::metrics::{Analysis, MetricsAccumulator, BAND_PERCENTILES, TABLE_PERCENTILES};
use crate::model::{Duration, GraphFile, ModelError, TimeInstant, SECONDS_PER_DAY};
use crate::selfcheck;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_COLLISION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "review-diffusion", version, about = "Information diffusion bounds for code-review networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a graph file from an interaction log.
    Ingest(IngestArgs),
    /// Compute horizons, distance distributions and growth bands for a graph file.
    Analyze(AnalyzeArgs),
    /// Print the percentile and bound tables of an analysis directory.
    Report(ReportArgs),
    /// Check the engine against brute-force enumeration on bundled fixtures.
    Selfcheck,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Interaction log (CSV or JSON lines).
    #[arg(long, env = "REVIEW_DIFFUSION_EVENTS")]
    events: PathBuf,
    /// Log format; guessed from the extension when omitted.
    #[arg(long, env = "REVIEW_DIFFUSION_INPUT_FORMAT")]
    input_format: Option<EventFormat>,
    /// First day of the observation window (a Monday, UTC).
    #[arg(long, env = "REVIEW_DIFFUSION_MONDAY")]
    monday: NaiveDate,
    #[arg(long, default_value_t = 4, env = "REVIEW_DIFFUSION_WEEKS")]
    weeks: u32,
    /// Bot ids or glob patterns, one per line.
    #[arg(long, env = "REVIEW_DIFFUSION_BOTS")]
    bots: Option<PathBuf>,
    #[arg(long, env = "REVIEW_DIFFUSION_SALT")]
    salt: Option<String>,
    /// Keep raw participant ids.
    #[arg(long, env = "REVIEW_DIFFUSION_NO_ANONYMIZE")]
    no_anonymize: bool,
    /// Interaction kinds to keep (comma separated).
    #[arg(long, value_delimiter = ',', env = "REVIEW_DIFFUSION_KINDS")]
    kinds: Option<Vec<String>>,
    /// Graph file to write.
    #[arg(short, long, env = "REVIEW_DIFFUSION_OUTPUT")]
    output: PathBuf,
    /// Ingest report; defaults to `report.json` next to the graph file.
    #[arg(long, env = "REVIEW_DIFFUSION_REPORT")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long, env = "REVIEW_DIFFUSION_GRAPH")]
    graph: PathBuf,
    /// Output directory.
    #[arg(short, long, env = "REVIEW_DIFFUSION_OUTPUT")]
    output: PathBuf,
    /// Growth grid step: seconds, or a number with s/m/h/d/w suffix.
    #[arg(long, default_value = "1d", env = "REVIEW_DIFFUSION_GRID")]
    grid: String,
    #[arg(long, value_delimiter = ',', env = "REVIEW_DIFFUSION_PERCENTILES")]
    percentiles: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', env = "REVIEW_DIFFUSION_BANDS")]
    bands: Option<Vec<f64>>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "REVIEW_DIFFUSION_WORKERS")]
    workers: Option<usize>,
    /// Also write one lexicographically smallest shortest journey per reachable pair.
    #[arg(long, env = "REVIEW_DIFFUSION_WITNESS")]
    witness: bool,
    /// Overwrite existing outputs.
    #[arg(long, env = "REVIEW_DIFFUSION_FORCE")]
    force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory written by `analyze`.
    #[arg(long, env = "REVIEW_DIFFUSION_INPUT")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text, env = "REVIEW_DIFFUSION_FORMAT")]
    format: ReportFormat,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }

    fn config(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: message.to_string() }
    }

    fn collision(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_COLLISION, message: message.to_string() }
    }
}

type Outcome = Result<(), Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(&a, out),
        Command::Analyze(a) => analyze(&a, out),
        Command::Report(a) => report(&a, out),
        Command::Selfcheck => return selfcheck_with(&fixtures::bundled(), &selfcheck::default_evaluator, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn ingest_failure(e: IngestError) -> Failure {
    match e {
        IngestError::SaltMissing => Failure::config("anonymization is enabled: pass --salt (or --no-anonymize)"),
        e @ (IngestError::NotAMonday(_) | IngestError::InvalidWeeks | IngestError::BotPattern { .. }) => Failure::config(e),
        e => Failure::input(e),
    }
}

fn ingest(args: &IngestArgs, out: &mut dyn Write) -> Outcome {
    let window = slice_window(args.monday, args.weeks).map_err(ingest_failure)?;
    let mut config = IngestConfig::new(window);
    config.anonymize = !args.no_anonymize;
    config.salt = args.salt.clone();
    if config.anonymize && config.salt.as_deref().is_none_or(str::is_empty) {
        return Err(ingest_failure(IngestError::SaltMissing));
    }
    if let Some(kinds) = &args.kinds {
        config.include_kinds = kinds
            .iter()
            .map(|k| k.parse::<EventKind>().map_err(|k| Failure::config(format!("--kinds: unknown kind {k:?}"))))
            .collect::<Result<BTreeSet<_>, _>>()?;
    }
    if let Some(path) = &args.bots {
        let text = String::from_utf8(read(path)?).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        config.bots = BotFilter::parse(&text).map_err(ingest_failure)?;
    }
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.output.parent().unwrap_or(Path::new("")).join("report.json"));
    if same_path(&args.output, &args.events) || same_path(&report_path, &args.events) || args.output == report_path {
        return Err(Failure::collision("output paths must differ from each other and from the events file"));
    }

    let format = args.input_format.unwrap_or_else(|| match args.events.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "ndjson") => EventFormat::JsonLines,
        _ => EventFormat::Csv,
    });
    let file = fs::File::open(&args.events).map_err(|e| Failure::input(format!("{}: {e}", args.events.display())))?;
    let (graph, report) = assemble_channels(parse_events(file, format), &config).map_err(ingest_failure)?;

    write_file(&args.output, graph.to_file().to_json_pretty().as_bytes())?;
    let mut report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    report_json.push('\n');
    write_file(&report_path, report_json.as_bytes())?;

    let _ = writeln!(out, "channels: {}  participants: {}", report.channels_built, report.participants_kept);
    let _ = writeln!(
        out,
        "events: read {}  kept {}  bots {}  kinds {}  outside window {}",
        report.events_read, report.events_kept, report.events_dropped_by_bot, report.events_dropped_by_kind, report.events_dropped_by_window
    );
    for (class, count) in &report.bound_histogram {
        let _ = writeln!(out, "{:<14} {count}", class.as_str());
    }
    Ok(())
}

/// Parses `3600`, `90s`, `30m`, `6h`, `1d`, `1w` into seconds.
pub fn parse_resolution(text: &str) -> Option<Duration> {
    let text = text.trim();
    let (digits, unit) = match text.find(|c: char| !c.is_ascii_digit()) {
        Some(i) => text.split_at(i),
        None => (text, "s"),
    };
    let n: i64 = digits.parse().ok()?;
    let scale = match unit {
        "s" => 1,
        "m" => 60,
        "h" => 3_600,
        "d" => SECONDS_PER_DAY,
        "w" => 7 * SECONDS_PER_DAY,
        _ => return None,
    };
    (n > 0).then_some(n * scale)
}

/// Settings echoed into the run manifest. The worker count is not part of it
/// because it never changes any output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub grid_resolution_seconds: Duration,
    pub percentiles: Vec<f64>,
    pub band_percentiles: Vec<f64>,
    pub witness: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    input: ManifestInput<'a>,
    config: &'a RunConfig,
    participants: usize,
    channels: usize,
    outputs: Vec<ManifestOutput>,
}

#[derive(Serialize)]
struct ManifestInput<'a> {
    path: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct ManifestOutput {
    file: &'static str,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const ANALYSIS_FILES: [&str; 6] =
    ["horizons.csv", "topological_ecdf.csv", "temporal_ecdf.csv", "percentiles.csv", "bounds.csv", "growth_bands.csv"];
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WITNESS_FILE: &str = "witnesses.csv";

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Outcome {
    let resolution = parse_resolution(&args.grid).ok_or_else(|| Failure::config(format!("--grid: cannot parse {:?}", args.grid)))?;
    let percentiles = args.percentiles.clone().unwrap_or_else(|| TABLE_PERCENTILES.to_vec());
    let bands = args.bands.clone().unwrap_or_else(|| BAND_PERCENTILES.to_vec());
    if let Some(p) = percentiles.iter().chain(&bands).find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Failure::config(format!("percentile {p} outside (0, 1]")));
    }
    if args.workers == Some(0) {
        return Err(Failure::config("--workers must be at least 1"));
    }

    let mut names: Vec<&str> = ANALYSIS_FILES.to_vec();
    names.push(MANIFEST_FILE);
    if args.witness {
        names.push(WITNESS_FILE);
    }
    if same_path(&args.output, &args.graph) {
        return Err(Failure::collision("output directory is the graph file"));
    }
    for name in &names {
        let path = args.output.join(name);
        if same_path(&path, &args.graph) {
            return Err(Failure::collision(format!("{} would overwrite the input graph", path.display())));
        }
        if path.exists() && !args.force {
            return Err(Failure::collision(format!("{} exists (use --force to overwrite)", path.display())));
        }
    }

    let bytes = read(&args.graph)?;
    let file: GraphFile = serde_json::from_slice(&bytes).map_err(|e| Failure::input(format!("{}: {e}", args.graph.display())))?;
    let graph = file.into_graph().map_err(|e: ModelError| Failure::input(format!("{}: {e}", args.graph.display())))?;

    let window = graph.window();
    if window.length() % resolution != 0 {
        return Err(Failure::config(format!("--grid: {resolution}s does not divide the window length {}s", window.length())));
    }
    let grid: Vec<TimeInstant> = (1..=window.length() / resolution).map(|k| window.start() + k * resolution).collect();

    let mut acc = MetricsAccumulator::new(graph.participant_count(), grid);
    for summary in SummaryStream::new(&graph, args.workers) {
        acc.push(&summary);
    }
    let analysis: Analysis = acc.finish(graph.bound_histogram(), &bands).map_err(Failure::input)?;

    let mut contents: Vec<(&'static str, String)> = vec![
        ("horizons.csv", analysis.horizons_csv()),
        ("topological_ecdf.csv", analysis.topological_ecdf_csv()),
        ("temporal_ecdf.csv", analysis.temporal_ecdf_csv()),
        ("percentiles.csv", analysis.percentiles_csv(&percentiles).map_err(Failure::config)?),
        ("bounds.csv", analysis.bounds_csv()),
        ("growth_bands.csv", analysis.growth_bands_csv()),
    ];
    if args.witness {
        contents.push((WITNESS_FILE, witnesses_csv(&graph)));
    }

    let config = RunConfig { grid_resolution_seconds: resolution, percentiles, band_percentiles: bands, witness: args.witness };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        input: ManifestInput { path: args.graph.to_str().unwrap_or("<non-utf8 path>"), sha256: sha256_hex(&bytes) },
        config: &config,
        participants: graph.participant_count(),
        channels: graph.channel_count(),
        outputs: contents.iter().map(|(file, text)| ManifestOutput { file, sha256: sha256_hex(text.as_bytes()) }).collect(),
    };
    let mut manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_json.push('\n');

    fs::create_dir_all(&args.output).map_err(|e| Failure::input(format!("{}: {e}", args.output.display())))?;
    for (name, text) in &contents {
        write_file(&args.output.join(name), text.as_bytes())?;
    }
    write_file(&args.output.join(MANIFEST_FILE), manifest_json.as_bytes())?;
    let _ = writeln!(
        out,
        "analyzed {} participants, {} channels -> {}",
        graph.participant_count(),
        graph.channel_count(),
        args.output.display()
    );
    Ok(())
}

fn witnesses_csv(graph: &crate::model::TemporalHypergraph) -> String {
    use std::fmt::Write as _;
    let dag = build_successor_dag(graph);
    let mut text = String::from("source,target,hops,departure,arrival,channels\n");
    for source in graph.participants() {
        for target in graph.participants() {
            if let Ok(Some(j)) = shortest_witness(graph, &dag, source.as_str(), target.as_str()) {
                writeln!(text, "{source},{target},{},{},{},{}", j.hop_count(), j.departure, j.arrival, j.hops.join(";")).unwrap();
            }
        }
    }
    text
}

#[derive(Serialize)]
struct PercentileRecord {
    metric: String,
    p: String,
    lower: String,
    upper: String,
}

#[derive(Serialize)]
struct BoundRecord {
    class: String,
    count: u64,
    share: f64,
}

fn read_csv<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn report(args: &ReportArgs, out: &mut dyn Write) -> Outcome {
    let percentiles_path = args.input.join("percentiles.csv");
    let bounds_path = args.input.join("bounds.csv");
    match args.format {
        ReportFormat::Csv => {
            out.write_all(&read(&percentiles_path)?).map_err(Failure::input)?;
            out.write_all(&read(&bounds_path)?).map_err(Failure::input)?;
        }
        ReportFormat::Json | ReportFormat::Text => {
            let rows: Vec<(String, String, String, String)> = read_csv(&percentiles_path)?;
            let bounds: Vec<(String, u64, f64)> = read_csv(&bounds_path)?;
            if args.format == ReportFormat::Json {
                #[derive(Serialize)]
                struct Report {
                    percentiles: Vec<PercentileRecord>,
                    bounds: Vec<BoundRecord>,
                }
                let report = Report {
                    percentiles: rows.into_iter().map(|(metric, p, lower, upper)| PercentileRecord { metric, p, lower, upper }).collect(),
                    bounds: bounds.into_iter().map(|(class, count, share)| BoundRecord { class, count, share }).collect(),
                };
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                writeln!(out, "{text}").map_err(Failure::input)?;
            } else {
                let mut current = String::new();
                for (metric, p, lower, upper) in rows {
                    if metric != current {
                        writeln!(out, "\n{metric}\n  {:>5}  {:>12}  {:>12}", "p", "lower", "upper").map_err(Failure::input)?;
                        current = metric;
                    }
                    writeln!(out, "  {p:>5}  {lower:>12}  {upper:>12}").map_err(Failure::input)?;
                }
                writeln!(out, "\nchannel bounds").map_err(Failure::input)?;
                for (class, count, share) in bounds {
                    writeln!(out, "  {class:<14} {count:>8}  {:>6.1}%", share * 100.0).map_err(Failure::input)?;
                }
            }
        }
    }
    Ok(())
}

/// Runs `selfcheck` against the given fixtures and evaluator.
pub fn selfcheck_with(fixtures: &[fixtures::Fixture], evaluator: selfcheck::SourceEvaluator<'_>, out: &mut dyn Write) -> u8 {
    let Some(verdicts) = selfcheck::run(fixtures, evaluator) else {
        let _ = writeln!(out, "no fixtures to check");
        return EXIT_CONFIG;
    };
    let mut failed = 0;
    for v in &verdicts {
        match &v.mismatch {
            None => {
                let _ = writeln!(out, "PASS  {:<24} {} sources", v.fixture, v.sources);
            }
            Some(why) => {
                failed += 1;
                let _ = writeln!(out, "FAIL  {:<24} {why}", v.fixture);
            }
        }
    }
    let _ = writeln!(out, "{} of {} fixtures passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_INPUT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolutions() {
        assert_eq!(parse_resolution("1d"), Some(86_400));
        assert_eq!(parse_resolution("3600"), Some(3_600));
        assert_eq!(parse_resolution("6h"), Some(21_600));
        assert_eq!(parse_resolution("0d"), None);
        assert_eq!(parse_resolution("1y"), None);
        assert_eq!(parse_resolution(""), None);
    }
}
