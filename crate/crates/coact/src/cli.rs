//! Command-line front end: `analyze` wires ingest → metrics → stats → report,
//! `simulate` writes synthetic logs, `power` sizes a study, and `example`
//! prints the built-in 25-instance walkthrough.
//!
//! Conventions: long kebab-case flags only; `-` means stdin for log input;
//! exit code 0 on success, 1 on validation problems, 2 on I/O failure;
//! `--error-json` switches stderr to a machine-readable error object. The
//! `COACT_OUT_DIR` environment variable supplies a default output directory
//! and nothing else. Identical inputs and flags produce byte-identical
//! outputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::domain::{build_profiles, DomainError, LossKind, ParticipantProfile};
use crate::ingest::{self, IngestError, LogFormat, LogSchema, ScreenBasis, ValidationReport};
use crate::metrics::{self, ComplementarityBreakdown};
use crate::report::{
    self, canonical_json, format_g6, CiMethod, ComparisonSpec, Report, ReportFormat, TestKind,
};
use crate::simulate::{
    self, ClassificationScenario, IntegrationPolicy, RegressionScenario, ReliancePolicy,
    SimulateError,
};
use crate::stats::{self, Design, PowerModel, PowerRequest, StatsError};

const OUT_DIR_ENV: &str = "COACT_OUT_DIR";

#[derive(Debug)]
enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<metrics::MetricsError> for CliError {
    fn from(e: metrics::MetricsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<report::ReportError> for CliError {
    fn from(e: report::ReportError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io_err(context: &str, e: io::Error) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}

#[derive(Parser, Debug)]
#[command(
    name = "coact",
    version,
    about = "Decision-log analytics for human-AI teams: loss decompositions, \
             comparison statistics, simulation, and power planning"
)]
struct Cli {
    /// Emit errors to stderr as a json object instead of plain text.
    #[arg(long, global = true)]
    error_json: bool,
    /// Print progress and data-quality notes to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest a decision log, screen it, and render the decomposition report.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic decision log with controllable team asymmetry.
    Simulate(SimulateArgs),
    /// Sample-size and power calculations for planned comparisons.
    Power(PowerArgs),
    /// Print the built-in 25-instance worked example and exit.
    Example(ExampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LossArg {
    AbsoluteError,
    ZeroOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Markdown,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TestArg {
    Student,
    Welch,
    MannWhitney,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    TeamLoss,
    RawPredictions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LogFormatArg {
    Csv,
    Jsonl,
}

impl From<LogFormatArg> for LogFormat {
    fn from(a: LogFormatArg) -> Self {
        match a {
            LogFormatArg::Csv => LogFormat::Csv,
            LogFormatArg::Jsonl => LogFormat::JsonLines,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Regression,
    Classification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DesignArg {
    TwoSample,
    OneSample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    NoncentralT,
    NormalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExampleFormatArg {
    Text,
    Json,
    Markdown,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Decision log path; `-` reads from stdin.
    #[arg(long)]
    input: PathBuf,
    /// Log schema (json). Defaults to the standard regression column set with
    /// the format inferred from the input extension.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Override the loss implied by the schema's task kind.
    #[arg(long)]
    loss: Option<LossArg>,
    /// Drop participants whose team decisions exceed this value.
    #[arg(long)]
    max_value: Option<f64>,
    /// Drop participants via MAD outlier screening at this threshold.
    #[arg(long)]
    mad_threshold: Option<f64>,
    /// Basis for MAD screening.
    #[arg(long, value_enum, default_value_t = BasisArg::TeamLoss)]
    screen_basis: BasisArg,
    /// First condition of the comparison pair. Defaults to automatic pairing
    /// when the log holds exactly two conditions.
    #[arg(long)]
    condition_a: Option<String>,
    /// Second condition of the comparison pair.
    #[arg(long)]
    condition_b: Option<String>,
    /// Test applied to every compared metric.
    #[arg(long, value_enum, default_value_t = TestArg::Student)]
    test: TestArg,
    /// Bonferroni family size; defaults to the number of comparisons run.
    #[arg(long)]
    family_size: Option<u32>,
    /// Confidence level for summary intervals.
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// Use a seeded percentile bootstrap (this many resamples) for the
    /// intervals instead of the t-based default.
    #[arg(long)]
    bootstrap: Option<u32>,
    /// Seed for the bootstrap resampler.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Additionally show loss metrics as instance counts (mean × N).
    #[arg(long)]
    counts: bool,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Output directory for the rendered files; without it (or COACT_OUT_DIR)
    /// the primary document goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the ingest/screening validation report (json) here.
    #[arg(long)]
    validation_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario config file (json); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Which generator to run; required unless the config names one.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    /// Log destination; `-` writes to stdout.
    #[arg(long)]
    out: PathBuf,
    /// Log file format.
    #[arg(long, value_enum, default_value_t = LogFormatArg::Csv)]
    log_format: LogFormatArg,
    /// Write the matching log schema (json) here, for `analyze --schema`.
    #[arg(long)]
    schema_out: Option<PathBuf>,
    #[arg(long)]
    participants: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    // regression knobs
    #[arg(long)]
    truth_min: Option<f64>,
    #[arg(long)]
    truth_max: Option<f64>,
    #[arg(long)]
    truth_mean: Option<f64>,
    #[arg(long)]
    ai_mae: Option<f64>,
    #[arg(long)]
    human_mae: Option<f64>,
    /// Adds a second condition re-running every participant at this lower
    /// human MAE (an information-advantage analog).
    #[arg(long)]
    uhci_human_mae: Option<f64>,
    /// Mean AI weight of the convex-blend integration policy.
    #[arg(long)]
    ai_weight_mean: Option<f64>,
    /// Concentration of the convex-blend weight distribution.
    #[arg(long)]
    concentration: Option<f64>,
    /// Switch the integration policy to pick-one with this AI probability.
    #[arg(long)]
    pick_one_ai_prob: Option<f64>,
    // classification knobs
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    ai_error: Option<f64>,
    #[arg(long)]
    human_error: Option<f64>,
    /// P(AI errs | human errs): low values plant complementary errors.
    #[arg(long)]
    overlap: Option<f64>,
    /// Probability the human adopts the AI label on disagreement.
    #[arg(long)]
    adopt_prob: Option<f64>,
    /// Extra adoption probability when the human's own label is wrong.
    #[arg(long)]
    difficulty_boost: Option<f64>,
    /// Condition label stamped on classification records.
    #[arg(long)]
    condition: Option<String>,
}

#[derive(Args, Debug)]
struct PowerArgs {
    /// Target effect size (Cohen's d).
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    power: f64,
    /// Bonferroni family size dividing alpha.
    #[arg(long, default_value_t = 1)]
    comparisons: u32,
    #[arg(long, value_enum, default_value_t = DesignArg::TwoSample)]
    design: DesignArg,
    #[arg(long, value_enum, default_value_t = ModelArg::NoncentralT)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = ExampleFormatArg::Text)]
    format: ExampleFormatArg,
}

#[derive(Args, Debug)]
struct ExampleArgs {
    #[arg(long, value_enum, default_value_t = ExampleFormatArg::Text)]
    format: ExampleFormatArg,
}

/// Entry point behind `main`; returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let error_json = cli.error_json;
    let verbose = cli.verbose;
    let outcome = match cli.command {
        Command::Analyze(args) => cmd_analyze(args, verbose),
        Command::Simulate(args) => cmd_simulate(args, verbose),
        Command::Power(args) => cmd_power(args),
        Command::Example(args) => cmd_example(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            if error_json {
                let doc = json!({
                    "code": e.code(),
                    "kind": e.kind(),
                    "message": e.message(),
                });
                eprintln!("{}", canonical_json(&doc));
            } else {
                eprintln!("error: {}", e.message());
            }
            e.code()
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| io_err("reading stdin", e))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| io_err(&format!("reading {}", path.display()), e))
    }
}

fn load_schema(args: &AnalyzeArgs) -> Result<LogSchema, CliError> {
    match &args.schema {
        Some(path) => {
            let bytes =
                fs::read(path).map_err(|e| io_err(&format!("reading {}", path.display()), e))?;
            let schema: LogSchema = serde_json::from_slice(&bytes).map_err(|e| {
                CliError::Validation(format!("schema {}: {e}", path.display()))
            })?;
            schema.validate()?;
            Ok(schema)
        }
        None => {
            let format = match args.input.extension().and_then(|e| e.to_str()) {
                Some("jsonl") | Some("ndjson") => LogFormat::JsonLines,
                _ => LogFormat::Csv,
            };
            Ok(LogSchema::regression(format))
        }
    }
}

fn out_dir(flag: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}

fn write_rendered(
    files: &[report::RenderedFile],
    dir: Option<PathBuf>,
    format: FormatArg,
    verbose: bool,
) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(&dir)
                .map_err(|e| io_err(&format!("creating {}", dir.display()), e))?;
            for f in files {
                let path = dir.join(&f.name);
                fs::write(&path, &f.bytes)
                    .map_err(|e| io_err(&format!("writing {}", path.display()), e))?;
                if verbose {
                    eprintln!("wrote {}", path.display());
                }
            }
            Ok(())
        }
        None if format == FormatArg::Csv => Err(CliError::Validation(
            "the csv bundle needs an output directory (--out or COACT_OUT_DIR)".into(),
        )),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(&files[0].bytes)
                .and_then(|_| {
                    if files[0].bytes.last() != Some(&b'\n') {
                        stdout.write_all(b"\n")
                    } else {
                        Ok(())
                    }
                })
                .map_err(|e| io_err("writing stdout", e))
        }
    }
}

fn pick_conditions(
    by_condition: &BTreeMap<String, Vec<ComplementarityBreakdown>>,
    args: &AnalyzeArgs,
    verbose: bool,
) -> Result<Option<(String, String)>, CliError> {
    match (&args.condition_a, &args.condition_b) {
        (Some(a), Some(b)) => {
            for c in [a, b] {
                if !by_condition.contains_key(c) {
                    return Err(CliError::Validation(format!(
                        "condition `{c}` does not occur in the log (available: {})",
                        by_condition.keys().cloned().collect::<Vec<_>>().join(", ")
                    )));
                }
            }
            Ok(Some((a.clone(), b.clone())))
        }
        (None, None) => {
            if by_condition.len() == 2 {
                let mut keys = by_condition.keys();
                Ok(Some((keys.next().unwrap().clone(), keys.next().unwrap().clone())))
            } else {
                if verbose && by_condition.len() > 2 {
                    eprintln!(
                        "note: {} conditions present; pass --condition-a/--condition-b to compare",
                        by_condition.len()
                    );
                }
                Ok(None)
            }
        }
        _ => Err(CliError::Validation(
            "--condition-a and --condition-b must be given together".into(),
        )),
    }
}

fn cmd_analyze(args: AnalyzeArgs, verbose: bool) -> Result<(), CliError> {
    let schema = load_schema(&args)?;
    let input = read_input(&args.input)?;
    let (records, mut validation) = ingest::parse_log(input.as_slice(), &schema)?;
    if records.is_empty() {
        return Err(CliError::Validation(format!(
            "empty dataset: no valid rows in {} ({} rejected)",
            args.input.display(),
            validation.rejected.len()
        )));
    }

    let records = if args.max_value.is_some() || args.mad_threshold.is_some() {
        let basis = match args.screen_basis {
            BasisArg::TeamLoss => ScreenBasis::TeamLossMean,
            BasisArg::RawPredictions => ScreenBasis::RawTeamPredictions,
        };
        let (kept, screen_report) = ingest::screen_participants_with(
            &records,
            args.max_value,
            args.mad_threshold,
            basis,
        )?;
        validation.warnings.extend(screen_report.warnings);
        validation.dropped_participants.extend(screen_report.dropped_participants);
        validation.accepted_count = kept.len();
        kept
    } else {
        records
    };
    if verbose {
        eprintln!(
            "{} rows accepted, {} rejected, {} participants dropped, {} warnings",
            validation.accepted_count,
            validation.rejected.len(),
            validation.dropped_participants.len(),
            validation.warnings.len()
        );
    }
    if let Some(path) = &args.validation_out {
        write_validation(path, &validation)?;
    }
    if records.is_empty() {
        return Err(CliError::Validation(
            "empty dataset: screening removed every participant".into(),
        ));
    }

    let loss_kind = match args.loss {
        Some(LossArg::AbsoluteError) => LossKind::AbsoluteError,
        Some(LossArg::ZeroOne) => LossKind::ZeroOne,
        None => schema.task_kind.loss_kind(),
    };
    let (profiles, profile_warnings) = build_profiles(&records, loss_kind)?;
    if verbose {
        for w in &profile_warnings {
            eprintln!("warning: {w:?}");
        }
    }

    let mut by_condition: BTreeMap<String, Vec<ComplementarityBreakdown>> = BTreeMap::new();
    let mut profiles_by_condition: BTreeMap<String, Vec<&ParticipantProfile>> = BTreeMap::new();
    for p in &profiles {
        by_condition.entry(p.condition_id.clone()).or_default().push(metrics::breakdown(p));
        profiles_by_condition.entry(p.condition_id.clone()).or_default().push(p);
    }

    let method = match args.bootstrap {
        Some(resamples) => CiMethod::Bootstrap { seed: args.seed, resamples },
        None => CiMethod::TBased,
    };
    let mut summaries = Vec::new();
    for breakdowns in by_condition.values() {
        summaries.push(report::summarize_condition_opts(breakdowns, args.ci_level, method)?);
    }

    let comparisons = match pick_conditions(&by_condition, &args, verbose)? {
        Some((a, b)) => {
            let test = match args.test {
                TestArg::Student => TestKind::StudentT,
                TestArg::Welch => TestKind::WelchT,
                TestArg::MannWhitney => TestKind::MannWhitneyU,
            };
            let specs = ComparisonSpec::full_battery(test);
            let family = args.family_size.unwrap_or(specs.len() as u32);
            report::compare_conditions(&by_condition[&a], &by_condition[&b], &specs, family)?
        }
        None => Vec::new(),
    };

    // the per-instance table needs one unambiguous participant set, so it is
    // only attached for single-condition logs
    let instances = if profiles_by_condition.len() == 1 {
        let only: Vec<ParticipantProfile> =
            profiles_by_condition.values().next().unwrap().iter().map(|&p| p.clone()).collect();
        match metrics::per_instance_table(&only) {
            Ok(rows) => rows,
            Err(e) => {
                if verbose {
                    eprintln!("note: per-instance table skipped: {e}");
                }
                Vec::new()
            }
        }
    } else {
        if verbose && profiles_by_condition.len() > 1 {
            eprintln!("note: per-instance table is only rendered for single-condition logs");
        }
        Vec::new()
    };

    let counts_n = if args.counts {
        Some(profiles[0].len() as u64)
    } else {
        None
    };
    let doc = Report { summaries, comparisons, instances, counts_n };
    let format = match args.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Markdown => ReportFormat::Markdown,
        FormatArg::Csv => ReportFormat::CsvBundle,
    };
    let files = report::render(&doc, format)?;
    write_rendered(&files, out_dir(&args.out), args.format, verbose)
}

fn write_validation(path: &Path, validation: &ValidationReport) -> Result<(), CliError> {
    let doc = serde_json::to_value(validation).expect("validation report serializes");
    fs::write(path, canonical_json(&doc) + "\n")
        .map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

/// One scenario block from a simulate config file; exactly one generator.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regression: Option<RegressionScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classification: Option<ClassificationScenario>,
}

fn default_regression() -> RegressionScenario {
    RegressionScenario {
        n_participants: 50,
        n_instances: 15,
        truth_min: 195_000.0,
        truth_max: 2_000_000.0,
        truth_mean: 703_120.0,
        ai_mae_target: 163_080.0,
        human_mae_target: 251_282.0,
        uhci_human_mae_target: None,
        integration: IntegrationPolicy::ConvexBlend { ai_weight_mean: 0.5, concentration: 8.0 },
        seed: 42,
    }
}

fn default_classification() -> ClassificationScenario {
    ClassificationScenario {
        n_participants: 50,
        n_instances: 15,
        n_classes: 16,
        ai_error_target: 0.2666,
        human_error_target: 0.2999,
        error_overlap: 0.5,
        reliance: ReliancePolicy { p_adopt_when_disagree: 0.5, difficulty_boost: None },
        seed: 42,
        condition_id: None,
    }
}

fn apply_regression_flags(
    mut s: RegressionScenario,
    args: &SimulateArgs,
) -> Result<RegressionScenario, CliError> {
    if let Some(v) = args.participants {
        s.n_participants = v;
    }
    if let Some(v) = args.instances {
        s.n_instances = v;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.truth_min {
        s.truth_min = v;
    }
    if let Some(v) = args.truth_max {
        s.truth_max = v;
    }
    if let Some(v) = args.truth_mean {
        s.truth_mean = v;
    }
    if let Some(v) = args.ai_mae {
        s.ai_mae_target = v;
    }
    if let Some(v) = args.human_mae {
        s.human_mae_target = v;
    }
    if let Some(v) = args.uhci_human_mae {
        s.uhci_human_mae_target = Some(v);
    }
    if let Some(p) = args.pick_one_ai_prob {
        if args.ai_weight_mean.is_some() || args.concentration.is_some() {
            return Err(CliError::Validation(
                "--pick-one-ai-prob conflicts with the convex-blend flags".into(),
            ));
        }
        s.integration = IntegrationPolicy::PickOne { ai_prob: p };
    } else if args.ai_weight_mean.is_some() || args.concentration.is_some() {
        let (mut mean, mut conc) = match s.integration {
            IntegrationPolicy::ConvexBlend { ai_weight_mean, concentration } => {
                (ai_weight_mean, concentration)
            }
            IntegrationPolicy::PickOne { ai_prob } => (ai_prob, 8.0),
        };
        if let Some(v) = args.ai_weight_mean {
            mean = v;
        }
        if let Some(v) = args.concentration {
            conc = v;
        }
        s.integration = IntegrationPolicy::ConvexBlend { ai_weight_mean: mean, concentration: conc };
    }
    Ok(s)
}

fn apply_classification_flags(
    mut s: ClassificationScenario,
    args: &SimulateArgs,
) -> Result<ClassificationScenario, CliError> {
    if let Some(v) = args.participants {
        s.n_participants = v;
    }
    if let Some(v) = args.instances {
        s.n_instances = v;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.classes {
        s.n_classes = v;
    }
    if let Some(v) = args.ai_error {
        s.ai_error_target = v;
    }
    if let Some(v) = args.human_error {
        s.human_error_target = v;
    }
    if let Some(v) = args.overlap {
        s.error_overlap = v;
    }
    if let Some(v) = args.adopt_prob {
        s.reliance.p_adopt_when_disagree = v;
    }
    if let Some(v) = args.difficulty_boost {
        s.reliance.difficulty_boost = Some(v);
    }
    if let Some(v) = &args.condition {
        s.condition_id = Some(v.clone());
    }
    Ok(s)
}

fn cmd_simulate(args: SimulateArgs, verbose: bool) -> Result<(), CliError> {
    let config: SimulateConfig = match &args.config {
        Some(path) => {
            let bytes =
                fs::read(path).map_err(|e| io_err(&format!("reading {}", path.display()), e))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?
        }
        None => SimulateConfig::default(),
    };
    if config.regression.is_some() && config.classification.is_some() {
        return Err(CliError::Validation(
            "config must name exactly one of `regression` or `classification`".into(),
        ));
    }
    let task = match (args.task, &config.regression, &config.classification) {
        (Some(t), _, _) => t,
        (None, Some(_), None) => TaskArg::Regression,
        (None, None, Some(_)) => TaskArg::Classification,
        _ => {
            return Err(CliError::Validation(
                "pass --task regression|classification (or a config naming one)".into(),
            ))
        }
    };

    let format: LogFormat = args.log_format.into();
    let (records, schema) = match task {
        TaskArg::Regression => {
            let scenario = apply_regression_flags(
                config.regression.unwrap_or_else(default_regression),
                &args,
            )?;
            if args.classes.is_some()
                || args.ai_error.is_some()
                || args.human_error.is_some()
                || args.overlap.is_some()
            {
                return Err(CliError::Validation(
                    "classification flags given for a regression scenario".into(),
                ));
            }
            if verbose {
                eprintln!(
                    "regression scenario: {} participants × {} instances, seed {}",
                    scenario.n_participants, scenario.n_instances, scenario.seed
                );
            }
            (simulate::simulate_regression_team(&scenario)?, LogSchema::regression(format))
        }
        TaskArg::Classification => {
            let scenario = apply_classification_flags(
                config.classification.unwrap_or_else(default_classification),
                &args,
            )?;
            if args.truth_min.is_some() || args.ai_mae.is_some() || args.human_mae.is_some() {
                return Err(CliError::Validation(
                    "regression flags given for a classification scenario".into(),
                ));
            }
            if verbose {
                eprintln!(
                    "classification scenario: {} participants × {} instances, seed {}",
                    scenario.n_participants, scenario.n_instances, scenario.seed
                );
            }
            let labels = simulate::class_labels(scenario.n_classes);
            (
                simulate::simulate_classification_team(&scenario)?,
                LogSchema::classification(format, labels),
            )
        }
    };

    if let Some(path) = &args.schema_out {
        let doc = serde_json::to_value(&schema).expect("schema serializes");
        fs::write(path, canonical_json(&doc) + "\n")
            .map_err(|e| io_err(&format!("writing {}", path.display()), e))?;
    }

    if args.out.as_os_str() == "-" {
        let mut buf = Vec::new();
        ingest::write_log(&records, &schema, &mut buf)?;
        io::stdout().write_all(&buf).map_err(|e| io_err("writing stdout", e))?;
    } else {
        let file = fs::File::create(&args.out)
            .map_err(|e| io_err(&format!("creating {}", args.out.display()), e))?;
        ingest::write_log(&records, &schema, io::BufWriter::new(file))?;
        if verbose {
            eprintln!("wrote {} records to {}", records.len(), args.out.display());
        }
    }
    Ok(())
}

fn cmd_power(args: PowerArgs) -> Result<(), CliError> {
    let request = PowerRequest {
        d: args.d,
        alpha: args.alpha,
        power: args.power,
        comparisons: args.comparisons,
        design: match args.design {
            DesignArg::TwoSample => Design::TwoSample,
            DesignArg::OneSample => Design::OneSample,
        },
    };
    let model = match args.model {
        ModelArg::NoncentralT => PowerModel::NoncentralT,
        ModelArg::NormalApprox => PowerModel::NormalApprox,
    };
    let size = stats::sample_size_with(&request, model)?;
    match args.format {
        ExampleFormatArg::Json => {
            let doc = serde_json::to_value(size).expect("sample size serializes");
            println!("{}", canonical_json(&doc));
        }
        _ => {
            println!(
                "per-group {}, total {}, achieved power {}, adjusted alpha {}",
                size.per_group,
                size.total,
                format_g6(size.achieved_power),
                format_g6(size.alpha_adjusted)
            );
        }
    }
    Ok(())
}

fn cmd_example(args: ExampleArgs) -> Result<(), CliError> {
    let profile = metrics::worked_example_profile();
    let b = metrics::breakdown(&profile);
    let n = profile.len() as u64;
    let count = |x: f64| format_g6(x * n as f64);
    match args.format {
        ExampleFormatArg::Text => {
            println!(
                "Worked example: {n} zero-one decisions; the AI errs on {}, the human on {}, \
                 the team on {}.",
                count(b.l_ai),
                count(b.l_human),
                count(b.l_team)
            );
            println!(
                "ctp={} cp={}/{n} cp_inh={}/{n} cp_coll={}/{n} ce={}/{n} ce_inh={}/{n} \
                 ce_coll={}/{n}",
                b.ctp,
                count(b.cp),
                count(b.cp_inh),
                count(b.cp_coll),
                count(b.ce),
                count(b.ce_inh),
                count(b.ce_coll)
            );
            println!(
                "Average view: cp={} cp_inh={} cp_coll={} ce={} ce_inh={} ce_coll={}",
                format_g6(b.cp),
                format_g6(b.cp_inh),
                format_g6(b.cp_coll),
                format_g6(b.ce),
                format_g6(b.ce_inh),
                format_g6(b.ce_coll)
            );
            println!(
                "The team realized {}/{} of its potential ({}%).",
                count(b.ce),
                count(b.cp),
                (100.0 * b.ce / b.cp).round()
            );
        }
        ExampleFormatArg::Json => {
            let doc = serde_json::to_value(&b).expect("breakdown serializes");
            println!("{}", canonical_json(&doc));
        }
        ExampleFormatArg::Markdown => {
            let summary = report::summarize_condition(std::slice::from_ref(&b))?;
            let instances = metrics::per_instance_table(std::slice::from_ref(&profile))?;
            let doc = Report {
                summaries: vec![summary],
                comparisons: Vec::new(),
                instances,
                counts_n: Some(n),
            };
            let files = report::render(&doc, ReportFormat::Markdown)?;
            io::stdout()
                .write_all(&files[0].bytes)
                .map_err(|e| io_err("writing stdout", e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_overrides_beat_config_values() {
        let args = Cli::try_parse_from([
            "coact",
            "simulate",
            "--task",
            "regression",
            "--out",
            "-",
            "--participants",
            "9",
            "--human-mae",
            "1000",
        ])
        .unwrap();
        let Command::Simulate(args) = args.command else { panic!("wrong subcommand") };
        let s = apply_regression_flags(default_regression(), &args).unwrap();
        assert_eq!(s.n_participants, 9);
        assert_eq!(s.human_mae_target, 1000.0);
        // untouched fields keep their config/default values
        assert_eq!(s.truth_mean, 703_120.0);
    }

    #[test]
    fn pick_one_flag_replaces_blend() {
        let args = Cli::try_parse_from([
            "coact",
            "simulate",
            "--task",
            "regression",
            "--out",
            "-",
            "--pick-one-ai-prob",
            "0.7",
        ])
        .unwrap();
        let Command::Simulate(args) = args.command else { panic!("wrong subcommand") };
        let s = apply_regression_flags(default_regression(), &args).unwrap();
        assert_eq!(s.integration, IntegrationPolicy::PickOne { ai_prob: 0.7 });
    }

    #[test]
    fn conflicting_integration_flags_rejected() {
        let args = Cli::try_parse_from([
            "coact",
            "simulate",
            "--task",
            "regression",
            "--out",
            "-",
            "--pick-one-ai-prob",
            "0.7",
            "--ai-weight-mean",
            "0.5",
        ])
        .unwrap();
        let Command::Simulate(args) = args.command else { panic!("wrong subcommand") };
        assert!(apply_regression_flags(default_regression(), &args).is_err());
    }

    #[test]
    fn error_codes_by_kind() {
        assert_eq!(CliError::Validation("x".into()).code(), 1);
        assert_eq!(CliError::Io("x".into()).code(), 2);
        let from_ingest: CliError =
            IngestError::Io(io::Error::new(io::ErrorKind::NotFound, "gone")).into();
        assert_eq!(from_ingest.code(), 2);
        let from_ingest: CliError = IngestError::NoRecords.into();
        assert_eq!(from_ingest.code(), 1);
    }

    #[test]
    fn schema_defaults_follow_extension() {
        let mk = |input: &str| AnalyzeArgs {
            input: PathBuf::from(input),
            schema: None,
            loss: None,
            max_value: None,
            mad_threshold: None,
            screen_basis: BasisArg::TeamLoss,
            condition_a: None,
            condition_b: None,
            test: TestArg::Student,
            family_size: None,
            ci_level: 0.95,
            bootstrap: None,
            seed: 42,
            counts: false,
            format: FormatArg::Json,
            out: None,
            validation_out: None,
        };
        assert_eq!(load_schema(&mk("log.csv")).unwrap().format, LogFormat::Csv);
        assert_eq!(load_schema(&mk("log.jsonl")).unwrap().format, LogFormat::JsonLines);
        assert_eq!(load_schema(&mk("-")).unwrap().format, LogFormat::Csv);
    }
}
