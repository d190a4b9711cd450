use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use innodex_core::analysis::{compare_groups, fit_polynomial, AnalysisError};
use innodex_core::indicators::{
    build_series, AggregationKind, ImpVariant, Indicator, IndicatorError, IndicatorParams, NormOptions, NormScope,
    NormalizationKind,
};
use innodex_core::index::Weights;
use innodex_core::ingest::{
    generate_lifecycle_for, ingest_csv, query_ids_for, IngestError, LifecycleScenario, MeasurementStore, Metric,
};
use innodex_core::model::{load_model, parse_model_with, validate_model_with, ModelError, ValidationOptions};
use innodex_core::pipeline::{
    emit_report, index_csv, parse_window, run_all, run_pipeline, ObjectReport, Overrides, PipelineError,
    ProjectConfig, ReportFormat,
};
use innodex_core::querygen::{generate_queries, render_query, Dialect, QueryError};

#[derive(Parser)]
#[command(name = "innodex", version, about = "Innovativeness indicators and index from search-measurement data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linguistic model operations.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Query generation.
    #[command(subcommand)]
    Queries(QueriesCmd),
    /// Load a measurement CSV into a store.
    Ingest(IngestArgs),
    /// Write a synthetic lifecycle into a store.
    Synth(SynthArgs),
    /// Compute yearly novelty and demand series for one source.
    Indicators(IndicatorsArgs),
    /// Trend fitting and group comparison.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Run the full evaluation for a project.
    Run(RunArgs),
    /// Re-emit a saved JSON report in another format.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Check a model file and print its violations.
    Validate {
        model: PathBuf,
        /// Report unequal archetype class sizes as a warning.
        #[arg(long)]
        cardinality_as_warning: bool,
    },
}

#[derive(Subcommand)]
enum QueriesCmd {
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `generic` writes the JSON export; other dialects write `query_id<TAB>score<TAB>text` lines.
        #[arg(long, default_value = "generic")]
        dialect: Dialect,
    },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, env = "INNODEX_STORE")]
    store: PathBuf,
    /// Reject rows outside `t0:tm`.
    #[arg(long, value_parser = window_arg)]
    window: Option<(i32, i32)>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    period: u32,
    #[arg(long, value_parser = window_arg)]
    window: (i32, i32),
    #[arg(long)]
    seed: u64,
    /// Store directory; records are added to what is already there.
    #[arg(long)]
    out: PathBuf,
    /// Take object id and query ids from this model.
    #[arg(long, conflicts_with = "queries")]
    model: Option<PathBuf>,
    /// Number of numbered queries when no model is given.
    #[arg(long, default_value_t = 8)]
    queries: usize,
    #[arg(long)]
    object: Option<String>,
    #[arg(long, default_value = "synthetic")]
    source: String,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    baseline: Option<f64>,
    #[arg(long)]
    growth: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value = "access_frequency")]
    demand_metric: Metric,
}

#[derive(Args)]
struct IndicatorsArgs {
    #[arg(long, env = "INNODEX_STORE")]
    store: PathBuf,
    #[arg(long)]
    object: String,
    #[arg(long)]
    source: String,
    #[arg(long, default_value = "linear")]
    norm: NormalizationKind,
    #[arg(long, default_value = "mean")]
    agg: AggregationKind,
    #[arg(long, value_parser = window_arg)]
    window: (i32, i32),
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "access_frequency")]
    demand_metric: Metric,
    /// Normalize each year on its own instead of over the whole window.
    #[arg(long)]
    per_year: bool,
    /// Substitute a minimum of 1 when exponential normalization meets a zero.
    #[arg(long)]
    exp_epsilon: bool,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Least-squares polynomial trend of a `year,value` series.
    Trend {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
        /// Row filter when the file has an `indicator` column.
        #[arg(long)]
        indicator: Option<Indicator>,
    },
    /// Percent excess of group A's mean over group B's.
    Groups {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Evaluate every model in the project.
    #[arg(long, conflicts_with = "object")]
    all: bool,
    #[arg(long)]
    object: Option<String>,
    #[arg(long, env = "INNODEX_STORE")]
    store: Option<PathBuf>,
    #[arg(long, value_parser = window_arg)]
    window: Option<(i32, i32)>,
    #[arg(long)]
    norm: Option<NormalizationKind>,
    #[arg(long)]
    agg: Option<AggregationKind>,
    /// `w_nov,w_dem,w_imp`.
    #[arg(long, value_parser = weights_arg)]
    weights: Option<Weights>,
    #[arg(long)]
    imp_variant: Option<ImpVariant>,
    #[arg(long)]
    exp_epsilon: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    out: PathBuf,
}

/// Argument problems detected after parsing; exit code 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn window_arg(s: &str) -> Result<(i32, i32), String> {
    parse_window(s).map_err(|e| e.to_string())
}

fn weights_arg(s: &str) -> Result<Weights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("{p:?} is not a number")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [n, d, i] => Weights::new(n, d, i).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated weights".into()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn model_validate(path: &Path, cardinality_as_warning: bool) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let opts = ValidationOptions { cardinality_as_warning };
    // parse_model_with validates too; re-run to list warnings on success
    let model = parse_model_with(&text, opts)?;
    let report = validate_model_with(&model, opts);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}: valid ({} markers, {} archetypes per class)", model.object_id, model.markers.len(), model.structure_archetypes.len());
    Ok(())
}

fn queries_generate(model: &Path, out: &Path, dialect: Dialect) -> Result<()> {
    let model = load_model(model)?;
    let set = generate_queries(&model)?;
    let text = match dialect {
        Dialect::Generic => set.to_json() + "\n",
        other => set.queries.iter().fold(String::new(), |mut acc, q| {
            let _ = writeln!(acc, "{}\t{}\t{}", q.query_id, q.score, render_query(&q.root, other));
            acc
        }),
    };
    write(out, &text)?;
    println!("{} queries written to {}", set.len(), out.display());
    Ok(())
}

fn open_store(dir: &Path, window: Option<(i32, i32)>) -> Result<MeasurementStore> {
    let existing = MeasurementStore::open(dir)?;
    Ok(match window {
        None => existing,
        Some((a, b)) => {
            let mut store = MeasurementStore::with_window(a, b);
            store.insert_all(existing.records())?;
            store
        }
    })
}

fn ingest(args: IngestArgs) -> Result<()> {
    let mut store = open_store(&args.store, args.window)?;
    let n = ingest_csv(&args.csv, &mut store)?;
    store.save(&args.store)?;
    println!("{n} records ingested; store holds {}", store.len());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let (object_id, ids) = match &args.model {
        Some(path) => {
            let model = load_model(path)?;
            let ids = generate_queries(&model)?.ids().into_iter().map(String::from).collect();
            (args.object.clone().unwrap_or(model.object_id), ids)
        }
        None => (args.object.clone().unwrap_or_else(|| "synthetic".into()), query_ids_for(args.queries)),
    };
    let mut sc = LifecycleScenario::new(args.period, args.window, args.seed);
    sc.object_id = object_id;
    sc.source_id = args.source.clone();
    sc.demand_metric = args.demand_metric;
    if let Some(v) = args.amplitude {
        sc.amplitude = v;
    }
    if let Some(v) = args.baseline {
        sc.baseline = v;
    }
    if let Some(v) = args.growth {
        sc.growth_rate = v;
    }
    if let Some(v) = args.noise {
        sc.noise_level = v;
    }
    let records = generate_lifecycle_for(&sc, &ids)?;
    let mut store = MeasurementStore::open(&args.out)?;
    let n = store.insert_all(records)?;
    store.save(&args.out)?;
    println!("{n} synthetic records for {} / {} written to {}", sc.object_id, sc.source_id, args.out.display());
    Ok(())
}

fn indicators(args: IndicatorsArgs) -> Result<()> {
    let store = MeasurementStore::open(&args.store)?;
    let params = IndicatorParams {
        normalization: args.norm,
        aggregation: args.agg,
        scope: if args.per_year { NormScope::Year } else { NormScope::Window },
        options: if args.exp_epsilon { NormOptions::EPSILON_ONE } else { NormOptions::default() },
    };
    let window = args.window.0..=args.window.1;
    let mut w = csv_writer();
    w.write_record(["year", "indicator", "value", "normalization", "aggregation"])?;
    for (indicator, metric) in [(Indicator::Nov, Metric::HitCount), (Indicator::Dem, args.demand_metric)] {
        let series = build_series(&store, &args.object, &args.source, indicator, metric, params, window.clone())?;
        for p in &series.points {
            w.write_record([
                p.year.to_string(),
                indicator.to_string(),
                p.value.to_string(),
                args.norm.to_string(),
                args.agg.to_string(),
            ])?;
        }
    }
    write(&args.out, &csv_string(w)?)
}

/// Reads the `value` column (and `year` when asked) of a CSV file.
fn read_values(path: &Path, indicator: Option<Indicator>) -> Result<Vec<(Option<i32>, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let value_col = col("value").ok_or_else(|| ConfigError(format!("{}: no `value` column", path.display())))?;
    let year_col = col("year");
    let ind_col = col("indicator");
    let mut kinds = BTreeSet::new();
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if let Some(c) = ind_col {
            kinds.insert(row[c].to_string());
            if let Some(want) = indicator {
                if row[c] != want.to_string() {
                    continue;
                }
            }
        }
        let value: f64 = row[value_col]
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("{}:{line}: bad value {:?}", path.display(), &row[value_col])))?;
        let year = match year_col {
            Some(c) => Some(
                row[c]
                    .trim()
                    .parse()
                    .map_err(|_| ConfigError(format!("{}:{line}: bad year {:?}", path.display(), &row[c])))?,
            ),
            None => None,
        };
        out.push((year, value));
    }
    if indicator.is_none() && kinds.len() > 1 {
        bail!(ConfigError(format!("{} mixes indicators {kinds:?}; pass --indicator", path.display())));
    }
    Ok(out)
}

fn analyze_trend(series: &Path, degree: usize, out: &Path, indicator: Option<Indicator>) -> Result<()> {
    let rows = read_values(series, indicator)?;
    let mut pts: Vec<(i32, f64)> = rows
        .into_iter()
        .map(|(y, v)| y.map(|y| (y, v)).ok_or_else(|| ConfigError(format!("{}: no `year` column", series.display()))))
        .collect::<Result<_, _>>()?;
    pts.sort_by_key(|p| p.0);
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => bail!(AnalysisError::TooFewPoints { degree, needed: degree + 1, found: 0 }),
    };
    let ts: Vec<f64> = pts.iter().map(|p| f64::from(p.0)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_polynomial(&ts, &ys, degree, (f64::from(first) + f64::from(last)) / 2.0)?;

    let mut w = csv_writer();
    w.write_record(["year", "value", "fitted"])?;
    for (year, value) in &pts {
        w.write_record([year.to_string(), value.to_string(), fit.evaluate(f64::from(*year)).to_string()])?;
    }
    write(out, &csv_string(w)?)?;
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(())
}

fn analyze_groups(a: &Path, b: &Path) -> Result<()> {
    let values = |p: &Path| -> Result<Vec<f64>> { Ok(read_values(p, None)?.into_iter().map(|(_, v)| v).collect()) };
    let cmp = compare_groups(&values(a)?, &values(b)?)?;
    println!("{}", serde_json::to_string_pretty(&cmp)?);
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = ProjectConfig::load(&args.config)?;
    cfg.apply(Overrides {
        store: args.store,
        window: args.window,
        normalization: args.norm,
        aggregation: args.agg,
        weights: args.weights,
        imp_variant: args.imp_variant,
        exp_epsilon: args.exp_epsilon.then_some(true),
    });
    let reports = if args.all { run_all(&cfg)? } else { vec![run_pipeline(&cfg, args.object.as_deref())?] };
    for r in &reports {
        for w in &r.warnings {
            eprintln!("warning [{}] {} {}: {}", r.object_id, w.stage, w.code, w.message);
        }
        for path in emit_report(r, args.format, &args.out)? {
            println!("{}", path.display());
        }
    }
    if args.all {
        let path = args.out.join("index.csv");
        write(&path, &index_csv(&reports)?)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let r = ObjectReport::from_json(&text)?;
    for path in emit_report(&r, args.format, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

/// 2 for configuration and input-definition errors, 3 for missing data, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return e.exit_code() as u8;
        }
        if cause.is::<ConfigError>() || cause.is::<ModelError>() {
            return 2;
        }
        if let Some(QueryError::InvalidModel(_)) = cause.downcast_ref::<QueryError>() {
            return 2;
        }
        if let Some(IngestError::NoData { .. }) = cause.downcast_ref::<IngestError>() {
            return 3;
        }
        if let Some(IndicatorError::NoData(_)) = cause.downcast_ref::<IndicatorError>() {
            return 3;
        }
        if let Some(IngestError::InvalidScenario(_)) = cause.downcast_ref::<IngestError>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Model(ModelCmd::Validate { model, cardinality_as_warning }) => model_validate(&model, cardinality_as_warning),
        Command::Queries(QueriesCmd::Generate { model, out, dialect }) => queries_generate(&model, &out, dialect),
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Indicators(a) => indicators(a),
        Command::Analyze(AnalyzeCmd::Trend { series, degree, out, indicator }) => {
            analyze_trend(&series, degree, &out, indicator)
        }
        Command::Analyze(AnalyzeCmd::Groups { a, b }) => analyze_groups(&a, &b),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
