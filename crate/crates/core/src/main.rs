use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairci::ingest::{
    apply_multigroup_schema, apply_schema, default_cache_dir, ensure_cached, fetch_dataset,
    parse_bytes, parse_table, ParseOptions, Registry, SchemaConfig,
};
use fairci::report::{
    plot_csv, run_audit, AuditOptions, MetricSelection, Report, ValidationReport, ValidationResult,
};
use fairci::validation::{
    adjudicate_matrix, compare_bootstrap, coverage_simulation, rejection_rate_simulation,
    CellDistribution,
};
use fairci::{Error, Metric, Result};

/// Fairness audits with confidence intervals.
#[derive(Parser)]
#[command(name = "fairci", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate fairness ratios with intervals and tests on a table.
    Audit(AuditArgs),
    /// Run a simulation or oracle check.
    Validate(ValidateArgs),
    /// Turn a report into metric,point,lower,upper CSV.
    Plotdata(PlotArgs),
    /// Download and verify preset datasets into the cache.
    Fetch(FetchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Di,
    DiTrue,
    Ca,
    Cu,
    ParityGap,
    All,
}

impl From<MetricArg> for MetricSelection {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Di => MetricSelection::Di,
            MetricArg::DiTrue => MetricSelection::DiTrue,
            MetricArg::Ca => MetricSelection::Ca,
            MetricArg::Cu => MetricSelection::Cu,
            MetricArg::ParityGap => MetricSelection::ParityGap,
            MetricArg::All => MetricSelection::All,
        }
    }
}

#[derive(Args)]
struct DatasetArgs {
    /// Delimited input file.
    #[arg(long, requires = "schema", conflicts_with = "preset")]
    data: Option<PathBuf>,
    /// JSON schema mapping columns of --data.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Field delimiter of --data.
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Preset dataset id (adult, german, compas).
    #[arg(long, required_unless_present = "data")]
    preset: Option<String>,
    /// Use only the dataset cache; never touch the network.
    #[arg(long)]
    offline: bool,
    /// Dataset cache directory (default: $FAIRCI_CACHE_DIR or ~/.cache/fairci).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, value_enum, default_value = "all")]
    metric: MetricArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Threshold of the one-sided test H0: ratio <= beta.
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    /// Raw multi-level group column for pairwise ratios against --reference-group.
    #[arg(long, requires = "reference_group")]
    group_col: Option<String>,
    #[arg(long, requires = "group_col")]
    reference_group: Option<String>,
    /// Also compute bootstrap sigma with this many resamples.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Seed for the bootstrap.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    /// Empirical coverage of the interval.
    Coverage,
    /// Rejection rate of the one-sided test.
    Size,
    /// Closed-form covariance forms against the enumeration oracle.
    Adjudicate,
    /// Delta-method sigma against bootstrap sigma.
    Bootstrap,
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse()
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(value_enum)]
    check: Check,
    /// di, di-true, ca1, ca0, cu1 or cu0.
    #[arg(long, value_parser = parse_metric, default_value = "di")]
    metric: Metric,
    /// Sample size per replicate.
    #[arg(long, default_value_t = 5000)]
    n: u64,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random distributions for adjudicate.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Bootstrap resamples.
    #[arg(long, default_value_t = 500)]
    resamples: usize,
    /// JSON cell distribution to sample from.
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Audit or validation report (JSON).
    report: PathBuf,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    /// Preset ids; all presets when omitted.
    presets: Vec<String>,
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn emit(report: &Report, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        write_file(path, &report.to_json())?;
    }
    Ok(())
}

fn load_dataset(args: &DatasetArgs) -> Result<(fairci::ingest::AuditTable, SchemaConfig, fairci::ingest::RawTable)> {
    let cache_dir = args.cache_dir.clone().unwrap_or_else(default_cache_dir);
    match (&args.preset, &args.data, &args.schema) {
        (Some(id), _, _) => {
            let registry = Registry::from_env()?;
            let preset = registry.get(id)?;
            let table = fetch_dataset(&registry, id, &cache_dir, args.offline)?;
            let path = ensure_cached(id, preset, &cache_dir, true)?;
            let raw = parse_table(&path, &preset.format)?;
            Ok((table, preset.schema.clone(), raw))
        }
        (None, Some(data), Some(schema)) => {
            let schema = SchemaConfig::from_path(schema)?;
            let opts = ParseOptions {
                delimiter: args.delimiter.clone(),
                ..ParseOptions::default()
            };
            let raw = parse_table(data, &opts)?;
            Ok((apply_schema(&raw, &schema)?, schema, raw))
        }
        _ => Err(Error::InvalidArgument(
            "either --preset or both --data and --schema are required".into(),
        )),
    }
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let (table, schema, raw) = load_dataset(&args.dataset)?;
    let pairwise = match (&args.group_col, &args.reference_group) {
        (Some(col), Some(reference)) => {
            let (records, _) = apply_multigroup_schema(&raw, &schema, col)?;
            Some((records, reference.clone()))
        }
        _ => None,
    };
    let opts = AuditOptions {
        selection: args.metric.into(),
        alpha: args.alpha,
        beta: args.beta,
        preset: args.dataset.preset.clone(),
        bootstrap_resamples: args.bootstrap,
        seed: args.seed,
        pairwise,
    };
    let report = run_audit(&table, &opts)?;
    print!("{}", report.summary());
    emit(&Report::Audit(report), args.out.as_deref())
}

fn load_distribution(path: &Path) -> Result<CellDistribution> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str::<CellDistribution>(&text)
        .map_err(|e| Error::InvalidDistribution(e.to_string()))?
        .validated()
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let given = args.dist.as_deref().map(load_distribution).transpose()?;
    let (dist, result) = match args.check {
        Check::Coverage => {
            let dist = given.unwrap_or_else(CellDistribution::reference_scenario);
            let r = coverage_simulation(&dist, args.metric, args.n, args.reps, args.alpha, args.seed)?;
            (Some(dist), ValidationResult::Coverage(r))
        }
        Check::Size => {
            let dist = match given {
                Some(d) => d,
                None if args.metric == Metric::Dia => CellDistribution::with_disparate_impact(args.beta)?,
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "size checks for {} need --dist",
                        args.metric
                    )))
                }
            };
            let r = rejection_rate_simulation(
                &dist, args.metric, args.n, args.reps, args.beta, args.alpha, args.seed,
            )?;
            (Some(dist), ValidationResult::Size(r))
        }
        Check::Adjudicate => {
            if given.is_some() {
                return Err(Error::InvalidArgument(
                    "adjudicate draws its own random distributions; --dist is not used".into(),
                ));
            }
            let r = adjudicate_matrix(args.metric, args.trials, args.seed)?;
            (None, ValidationResult::Adjudication(r))
        }
        Check::Bootstrap => {
            let dist = given.unwrap_or_else(CellDistribution::reference_scenario);
            let r = compare_bootstrap(&dist, args.metric, args.n, args.resamples, args.seed)?;
            (Some(dist), ValidationResult::Bootstrap(r))
        }
    };
    let report = ValidationReport::new(args.seed, dist, result);
    print!("{}", report.summary());
    emit(&Report::Validation(report), args.out.as_deref())
}

fn cmd_plotdata(args: PlotArgs) -> Result<()> {
    let report = Report::read(&args.report)?;
    let csv = plot_csv(&report.plot_rows()?)?;
    match &args.out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_fetch(args: FetchArgs) -> Result<()> {
    let registry = Registry::from_env()?;
    let cache_dir = args.cache_dir.unwrap_or_else(default_cache_dir);
    let ids: Vec<String> = if args.presets.is_empty() {
        registry.ids().map(str::to_string).collect()
    } else {
        args.presets
    };
    for id in &ids {
        let preset = registry.get(id)?;
        let path = ensure_cached(id, preset, &cache_dir, args.offline)?;
        // parse once so a broken format is reported here rather than at audit time
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let raw = parse_bytes(&bytes, &preset.format, id)?;
        let table = apply_schema(&raw, &preset.schema)?;
        println!(
            "{id}: {} ({} records, {} dropped)",
            path.display(),
            table.records.len(),
            table.n_dropped
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Validate(v) => cmd_validate(v),
        Command::Plotdata(p) => cmd_plotdata(p),
        Command::Fetch(f) => cmd_fetch(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
