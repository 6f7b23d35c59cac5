//! Command-line interface.
//!
//! Every flag can also come from a JSON file given with `--config`; keys are
//! the flag names without leading dashes (`"no-sleep": true`). Flags on the
//! command line win, and unknown keys are rejected.
//!
//! Exit codes: 0 on success, 1 on a domain error (its name is printed first
//! on standard error), 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{self, min_speedup, AnalysisError, FitWeighting};
use crate::error::{Error, Result};
use crate::fixture::{self, BundledTable, FitEntry, QualityEntry, QualityMetric, ENERGY_HEADER};
use crate::harness::{
    self, align_trace, BenchPlan, NoSleep, ReplayFilter, RunnerSpec, Sleeper, SyntheticDataset, WallClock,
};
use crate::quality::{self, QualityError};
use crate::report::{self, Format};
use crate::stats::fmt_fixed;
use crate::timing::{DeviceConfig, LatencyRecord, TaskKind};
use crate::trace::{self, ConvertOptions, CurrentUnit, SegmentationConfig, TrimPolicy, VoltageUnit};

/// Plan `data` value that makes `bench run` write synthetic images to disk
/// and hand their directory to the runner.
pub const SYNTHETIC_FILES: &str = "synthetic-files";

#[derive(Debug, Parser)]
#[command(name = "edgebench", version, about = "Latency, energy and output-equivalence benchmarking for edge inference")]
struct Cli {
    /// JSON file supplying values for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Live benchmark runs against an inference runner
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Power-trace analysis
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Fit t(n) = OT / n + IT to a latency series
    Fit(FitArgs),
    /// Minimum speed-up of one latency series over another
    Speedup(SpeedupArgs),
    /// Output equivalence between reference and candidate predictions
    #[command(subcommand)]
    Quality(QualityCommand),
    /// Render tables and plot data from a directory of CSV results
    Report(ReportArgs),
    /// Extract latency or energy rows from a fixture
    Replay(ReplayArgs),
    /// Convert a USB tester export into the canonical power log
    ConvertLog(ConvertArgs),
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Run a benchmark plan
    Run(BenchRunArgs),
}

#[derive(Debug, Subcommand)]
enum TraceCommand {
    /// Segment a power log and compute stable power per dataset
    Analyze(TraceAnalyzeArgs),
}

#[derive(Debug, Subcommand)]
enum QualityCommand {
    /// Dice agreement between two directories of masks
    Dice(DiceArgs),
    /// Probability differences between two classification outputs
    Classify(ClassifyArgs),
}

#[derive(Debug, Args)]
struct BenchRunArgs {
    /// Benchmark plan (JSON)
    #[arg(long, value_name = "FILE")]
    plan: Option<PathBuf>,
    /// Runner launch command, e.g. "runner-stub --base-ms 8.8"
    #[arg(long, value_name = "CMD")]
    runner: Option<String>,
    /// Skip guard-period sleeps (timing-only runs)
    #[arg(long)]
    no_sleep: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TraceAnalyzeArgs {
    /// Canonical power log (CSV)
    #[arg(long, value_name = "CSV")]
    log: Option<PathBuf>,
    /// Plan the trace was recorded under (JSON)
    #[arg(long, value_name = "FILE")]
    plan: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Latency CSV for the same runs; enables per-image energy
    #[arg(long, value_name = "CSV")]
    latency: Option<String>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Series (dataset_size,per_image_ms) or latency CSV
    #[arg(long, value_name = "CSV")]
    series: Option<String>,
    /// Weight points by 1/n
    #[arg(long)]
    weighted: bool,
    /// Write the fit as CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpeedupArgs {
    /// Latency CSV of the slower configuration
    #[arg(long, value_name = "CSV")]
    slow: Option<String>,
    /// Latency CSV of the faster configuration
    #[arg(long, value_name = "CSV")]
    fast: Option<String>,
    /// Write the result as CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiceArgs {
    /// Directory of reference masks
    #[arg(long = "ref", value_name = "DIR")]
    reference: Option<PathBuf>,
    /// Directory of candidate masks
    #[arg(long, value_name = "DIR")]
    cand: Option<PathBuf>,
    /// Task recorded in the output CSV
    #[arg(long, value_name = "TASK")]
    task: Option<String>,
    /// Comparison label recorded in the output CSV
    #[arg(long, value_name = "LABEL")]
    comparison: Option<String>,
    /// Write the result as CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Reference probabilities (image_id,p_glaucoma,p_healthy)
    #[arg(long = "ref", value_name = "CSV")]
    reference: Option<PathBuf>,
    /// Candidate probabilities (image_id,p_glaucoma,p_healthy)
    #[arg(long, value_name = "CSV")]
    cand: Option<PathBuf>,
    /// Comparison label recorded in the output CSV
    #[arg(long, value_name = "LABEL")]
    comparison: Option<String>,
    /// Write the result as CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory of result CSVs
    #[arg(long = "in", value_name = "DIR")]
    input: Option<PathBuf>,
    /// Report directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// csv or markdown
    #[arg(long, value_name = "FORMAT")]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Fixture CSV, or a bundled table name (a1, a2, a3, b1, b2, b3)
    #[arg(long, value_name = "CSV")]
    fixture: Option<String>,
    /// Task filter
    #[arg(long, value_name = "TASK")]
    task: Option<String>,
    /// Device filter, `name` or `name:mode`
    #[arg(long, value_name = "DEVICE")]
    device: Option<String>,
    /// Output CSV (default: standard output)
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Tester export
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Canonical power log to write
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Time column name (default: detected)
    #[arg(long, value_name = "NAME")]
    time_column: Option<String>,
    /// Voltage column name (default: detected)
    #[arg(long, value_name = "NAME")]
    voltage_column: Option<String>,
    /// Current column name (default: detected)
    #[arg(long, value_name = "NAME")]
    current_column: Option<String>,
    /// a, ma or auto
    #[arg(long, value_name = "UNIT")]
    current_unit: Option<String>,
    /// v, mv or auto
    #[arg(long, value_name = "UNIT")]
    voltage_unit: Option<String>,
    /// Sample period in seconds when the export has no time column
    #[arg(long, value_name = "SECONDS")]
    period: Option<f64>,
}

/// Values loaded from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    plan: Option<PathBuf>,
    runner: Option<String>,
    no_sleep: Option<bool>,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
    latency: Option<String>,
    series: Option<String>,
    weighted: Option<bool>,
    slow: Option<String>,
    fast: Option<String>,
    #[serde(rename = "ref")]
    reference: Option<PathBuf>,
    cand: Option<PathBuf>,
    task: Option<String>,
    comparison: Option<String>,
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    format: Option<String>,
    fixture: Option<String>,
    device: Option<String>,
    time_column: Option<String>,
    voltage_column: Option<String>,
    current_column: Option<String>,
    current_unit: Option<String>,
    voltage_unit: Option<String>,
    period: Option<f64>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))
    }
}

fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    flag.or(config)
        .ok_or_else(|| Error::Usage(format!("missing required flag --{name}")))
}

fn parse_task(s: &str) -> Result<TaskKind> {
    s.parse().map_err(|e: crate::timing::TimingError| Error::Usage(e.to_string()))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Reads a fixture path, falling back to the bundled table of that name.
fn read_input(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if !path.exists() {
        let bundled = match arg.to_ascii_lowercase().trim_end_matches(".csv") {
            "a1" => Some(BundledTable::A1),
            "a2" => Some(BundledTable::A2),
            "a3" => Some(BundledTable::A3),
            "b1" => Some(BundledTable::B1),
            "b2" => Some(BundledTable::B2),
            "b3" => Some(BundledTable::B3),
            _ => None,
        };
        if let Some(a) = bundled {
            return Ok(a.text().to_string());
        }
    }
    Ok(fixture::read_fixture(path)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    Ok(report::write_atomic(path, contents.as_bytes())?)
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::Io(format!("stdout: {e}")))
}

/// Latency records of a file that must hold exactly one task/device series.
fn single_series(arg: &str) -> Result<Vec<LatencyRecord>> {
    let records = fixture::parse_latency_csv(&read_input(arg)?)?;
    let first = records.first().ok_or(AnalysisError::EmptyInput)?;
    if records
        .iter()
        .any(|r| r.task != first.task || !r.device.same_device(&first.device))
    {
        return Err(AnalysisError::MixedGroups.into());
    }
    Ok(records)
}

fn bench_run(args: BenchRunArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let plan_path = required(args.plan, cfg.plan, "plan")?;
    let runner = required(args.runner, cfg.runner, "runner")?;
    let out_dir = required(args.out, cfg.out, "out")?;
    let no_sleep = args.no_sleep || cfg.no_sleep.unwrap_or(false);

    let mut plan = BenchPlan::load(&plan_path)?;
    if plan.data == SYNTHETIC_FILES {
        let data_dir = out_dir.join("data");
        let count = *plan.dataset_sizes.last().expect("validated plan has sizes");
        SyntheticDataset::new(plan.input_shape(), harness::DEFAULT_SEED).write_dir(&data_dir, count)?;
        plan.data = data_dir.display().to_string();
    }
    let spec = RunnerSpec::new(RunnerSpec::split_command(&runner), plan.model.clone(), plan.input_shape())?;
    let mut sleeper: Box<dyn Sleeper> = if no_sleep { Box::new(NoSleep) } else { Box::new(WallClock) };
    let result = harness::run_benchmark_process(&plan, &spec, sleeper.as_mut())?;
    let records = result.latency_records()?;

    write_file(&out_dir.join("latency.csv"), &fixture::write_latency_csv(&records))?;
    let json = serde_json::to_string_pretty(&result).expect("result serializes");
    write_file(&out_dir.join("result.json"), &(json + "\n"))?;
    for r in &records {
        match (r.latency, &r.error) {
            (Some(l), _) => say(
                out,
                format!("{} {}: {} ± {} ms", r.device, r.dataset_size, fmt_fixed(l.per_image_ms, 2), fmt_fixed(l.std_ms, 2)),
            )?,
            (None, e) => say(out, format!("{} {}: anomalous ({})", r.device, r.dataset_size, e.as_deref().unwrap_or("")))?,
        }
    }
    Ok(())
}

fn trace_analyze(args: TraceAnalyzeArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let log_path = required(args.log, cfg.log, "log")?;
    let plan_path = required(args.plan, cfg.plan, "plan")?;
    let out_dir = required(args.out, cfg.out, "out")?;
    let latency = args.latency.or(cfg.latency);

    let trace = trace::parse_power_log(&read_text(&log_path)?)?;
    let plan = BenchPlan::load(&plan_path)?;
    let seg = SegmentationConfig::default();
    let windows = trace::segment_phases(&trace, &plan.timeline(), &seg).map_err(|e| match e {
        trace::TraceError::SegmentationFailure { expected, detected } => {
            Error::Harness(harness::HarnessError::CountMismatch { expected, detected })
        }
        other => other.into(),
    })?;
    let aligned = align_trace(&plan, &trace, &seg, TrimPolicy::default())?;

    let t = |i: usize| trace.samples().get(i).map_or(f64::NAN, |s| s.t);
    let mut phases = String::from("kind,dataset_ordinal,start_index,end_index,start_s,end_s\n");
    for w in &windows {
        let kind = serde_json::to_value(w.kind).expect("phase kind serializes");
        phases.push_str(&format!(
            "{},{},{},{},{},{}\n",
            kind.as_str().unwrap_or_default(),
            w.dataset_ordinal.map_or_else(String::new, |o| o.to_string()),
            w.start_index,
            w.end_index,
            t(w.start_index),
            t(w.end_index - 1),
        ));
    }
    write_file(&out_dir.join("phases.csv"), &phases)?;

    let mut power = String::from("dataset_size,start_index,end_index,mean_power_w,power_std_w,samples_used\n");
    for a in &aligned {
        power.push_str(&format!(
            "{},{},{},{},{},{}\n",
            a.dataset_size, a.window.start_index, a.window.end_index, a.power.mean_watts, a.power.std_watts, a.power.samples_used
        ));
        say(
            out,
            format!("dataset {}: {} ± {} W", a.dataset_size, fmt_fixed(a.power.mean_watts, 2), fmt_fixed(a.power.std_watts, 2)),
        )?;
    }
    write_file(&out_dir.join("power.csv"), &power)?;

    if let Some(latency) = latency {
        let records = fixture::parse_latency_csv(&read_input(&latency)?)?;
        let device = plan.device_config();
        let powers: Vec<_> = aligned.iter().map(|a| (a.dataset_size, a.power)).collect();
        let rows = analysis::energy_rows_from_power(plan.task, &device, &powers, &records)?;
        write_file(&out_dir.join("energy.csv"), &fixture::write_energy_csv(&rows))?;
        let s = analysis::summarize_energy(&rows)?;
        say(
            out,
            format!(
                "mean power {} ± {} W, energy {} ± {} mJ per image",
                fmt_fixed(s.mean_power_w, 1),
                fmt_fixed(s.power_std_w, 1),
                fmt_fixed(s.energy_mj, 1),
                fmt_fixed(s.energy_std_mj, 1)
            ),
        )?;
    }
    Ok(())
}

fn fit(args: FitArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let series = required(args.series, cfg.series, "series")?;
    let weighting = if args.weighted || cfg.weighted.unwrap_or(false) {
        FitWeighting::InverseSize
    } else {
        FitWeighting::Uniform
    };
    let text = read_input(&series)?;
    let points = fixture::parse_series(&text)?;
    let fit = analysis::fit_hyperbolic_weighted(&points, weighting)?;
    say(
        out,
        format!(
            "OT={} IT={} residual_rms={}",
            fmt_fixed(fit.overload_term_ot, 3),
            fmt_fixed(fit.independent_term_it, 3),
            fmt_fixed(fit.residual_rms, 3)
        ),
    )?;
    if let Some(path) = args.out.or(cfg.out) {
        // Keep the series identity when the input was a single latency series.
        let (task, device) = match fixture::parse_latency_csv(&text) {
            Ok(recs) => match recs.first() {
                Some(f) if recs.iter().all(|r| r.task == f.task && r.device.same_device(&f.device)) => {
                    (Some(f.task), Some(f.device.clone()))
                }
                _ => (None, None),
            },
            Err(_) => (None, None),
        };
        let entry = FitEntry {
            task,
            device,
            weighting,
            fit,
        };
        write_file(&path, &fixture::write_fit_csv(&[entry]))?;
    }
    Ok(())
}

fn speedup(args: SpeedupArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let slow = required(args.slow, cfg.slow, "slow")?;
    let fast = required(args.fast, cfg.fast, "fast")?;
    let (slow, fast) = (single_series(&slow)?, single_series(&fast)?);
    let result = min_speedup(&slow, &fast)?;
    say(
        out,
        format!(
            "speedup={} argmin_dataset_size={} slow={} fast={}",
            fmt_fixed(result.value, 2),
            result.argmin_dataset_size,
            result.slow,
            result.fast
        ),
    )?;
    if let Some(path) = args.out.or(cfg.out) {
        write_file(&path, &fixture::write_speedup_csv(&[result]))?;
    }
    Ok(())
}

fn quality_dice(args: DiceArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let reference = required(args.reference, cfg.reference, "ref")?;
    let cand = required(args.cand, cfg.cand, "cand")?;
    let task = parse_task(&args.task.or(cfg.task).unwrap_or_else(|| "od_segmentation".into()))?;
    let pairs = quality::load_mask_pairs(&reference, &cand)?;
    if pairs.is_empty() {
        return Err(QualityError::EmptyInput.into());
    }
    for (name, r, c) in &pairs {
        log::debug!("{name}: dice {}", quality::dice(r, c)?);
    }
    let (r, c): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(_, r, c)| (r, c)).unzip();
    let stats = quality::dice_pair_stats(&r, &c)?;
    say(out, format!("dice={} n={}", stats.display(), stats.count))?;
    if let Some(path) = args.out.or(cfg.out) {
        let entry = QualityEntry {
            task,
            comparison: args.comparison.or(cfg.comparison).unwrap_or_else(|| "reference vs. candidate".into()),
            metric: QualityMetric::Dice,
            stats,
        };
        write_file(&path, &fixture::write_quality_csv(&[entry]))?;
    }
    Ok(())
}

fn quality_classify(args: ClassifyArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let reference = required(args.reference, cfg.reference, "ref")?;
    let cand = required(args.cand, cfg.cand, "cand")?;
    let r = quality::parse_prob_csv(&read_text(&reference)?)?;
    let c = quality::parse_prob_csv(&read_text(&cand)?)?;
    let pairs = quality::pair_by_id(&r, &c)?;
    let stats = quality::mean_classification_error(&pairs)?;
    let flips = pairs.iter().filter(|(r, c)| !quality::predicted_label_agrees(r, c)).count();
    say(out, format!("mean_error={} n={} label_changes={flips}", stats.display(), stats.count))?;
    if let Some(path) = args.out.or(cfg.out) {
        let entry = QualityEntry {
            task: TaskKind::FundusClassification,
            comparison: args.comparison.or(cfg.comparison).unwrap_or_else(|| "reference vs. candidate".into()),
            metric: QualityMetric::ClassificationError,
            stats,
        };
        write_file(&path, &fixture::write_quality_csv(&[entry]))?;
    }
    Ok(())
}

fn report_cmd(args: ReportArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let input = required(args.input, cfg.input, "in")?;
    let format: Format = match args.format.or(cfg.format) {
        Some(f) => f.parse().map_err(Error::Usage)?,
        None => Format::default(),
    };
    let bundle = report::load_bundle_from_dir(&input)?;
    if bundle.is_empty() {
        return Err(report::ReportError::EmptyBundle.into());
    }
    let out_dir = required(args.out, cfg.out, "out")?;
    let files = report::render_tables(&bundle, format)?;
    report::write_report(&files, &out_dir)?;
    for f in &files {
        say(out, out_dir.join(&f.path).display())?;
    }
    Ok(())
}

fn replay(args: ReplayArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let source = required(args.fixture, cfg.fixture, "fixture")?;
    let task = args.task.or(cfg.task).map(|t| parse_task(&t)).transpose()?;
    let device = args.device.or(cfg.device).map(|d| DeviceConfig::parse_selector(&d));
    let filter = ReplayFilter { task, device };
    let text = read_input(&source)?;
    let header = text.trim_start_matches('\u{feff}').lines().next().unwrap_or("").trim();
    let csv = if header == ENERGY_HEADER {
        let rows: Vec<_> = fixture::parse_energy_csv(&text)?
            .into_iter()
            .filter(|r| {
                filter.task.is_none_or(|t| t == r.task)
                    && filter.device.as_ref().is_none_or(|d| match d.power_mode {
                        None => d.name == r.device.name,
                        Some(_) => d.same_device(&r.device),
                    })
            })
            .collect();
        if rows.is_empty() {
            return Err(harness::HarnessError::NoMatchingRows.into());
        }
        fixture::write_energy_csv(&rows)
    } else {
        fixture::write_latency_csv(&harness::replay_fixture(&text, &filter)?)
    };
    match args.out.or(cfg.out) {
        Some(path) => write_file(&path, &csv),
        None => out.write_all(csv.as_bytes()).map_err(|e| Error::Io(format!("stdout: {e}"))),
    }
}

fn convert_log(args: ConvertArgs, cfg: ConfigFile, out: &mut dyn Write) -> Result<()> {
    let input = required(args.input, cfg.input, "in")?;
    let out_path = required(args.out, cfg.out, "out")?;
    let current_unit = match args.current_unit.or(cfg.current_unit).as_deref() {
        None | Some("auto") => CurrentUnit::Auto,
        Some("a") | Some("A") => CurrentUnit::Amperes,
        Some("ma") | Some("mA") => CurrentUnit::Milliamperes,
        Some(other) => return Err(Error::Usage(format!("unknown current unit '{other}'"))),
    };
    let voltage_unit = match args.voltage_unit.or(cfg.voltage_unit).as_deref() {
        None | Some("auto") => VoltageUnit::Auto,
        Some("v") | Some("V") => VoltageUnit::Volts,
        Some("mv") | Some("mV") => VoltageUnit::Millivolts,
        Some(other) => return Err(Error::Usage(format!("unknown voltage unit '{other}'"))),
    };
    let opts = ConvertOptions {
        time_column: args.time_column.or(cfg.time_column),
        voltage_column: args.voltage_column.or(cfg.voltage_column),
        current_column: args.current_column.or(cfg.current_column),
        current_unit,
        voltage_unit,
        delimiter: None,
        period_s: args.period.or(cfg.period),
    };
    let trace = trace::convert_tester_export(&read_text(&input)?, &opts)?;
    write_file(&out_path, &trace.to_csv())?;
    say(out, format!("{} samples written to {}", trace.len(), out_path.display()))
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Bench(BenchCommand::Run(a)) => bench_run(a, cfg, out),
        Command::Trace(TraceCommand::Analyze(a)) => trace_analyze(a, cfg, out),
        Command::Fit(a) => fit(a, cfg, out),
        Command::Speedup(a) => speedup(a, cfg, out),
        Command::Quality(QualityCommand::Dice(a)) => quality_dice(a, cfg, out),
        Command::Quality(QualityCommand::Classify(a)) => quality_classify(a, cfg, out),
        Command::Report(a) => report_cmd(a, cfg, out),
        Command::Replay(a) => replay(a, cfg, out),
        Command::ConvertLog(a) => convert_log(a, cfg, out),
    }
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", e.name());
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

/// Runs the CLI on the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Long help of the program and of every subcommand, concatenated.
///
/// ```
/// let help = edgebench::cli::help_text();
/// for flag in [
///     "--plan", "--runner", "--no-sleep", "--out", "--log", "--series", "--weighted", "--slow",
///     "--fast", "--ref", "--cand", "--in", "--format", "--fixture", "--task", "--device", "--config",
/// ] {
///     assert!(help.contains(flag), "{flag} missing from --help");
/// }
/// ```
pub fn help_text() -> String {
    fn walk(cmd: &mut clap::Command, out: &mut String) {
        out.push_str(&cmd.render_long_help().to_string());
        out.push('\n');
        for sub in cmd.get_subcommands_mut() {
            walk(sub, out);
        }
    }
    let mut cmd = Cli::command();
    cmd.build();
    let mut out = String::new();
    walk(&mut cmd, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("edgebench").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["fit", "--bogus"]).0, 2);
        let (code, _, err) = run_capture(&["fit"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("UsageError:"), "{err}");
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn bundled_speedup_and_fit() {
        let dir = tempfile::tempdir().unwrap();
        let slow = dir.path().join("slow.csv");
        let fast = dir.path().join("fast.csv");
        let s = slow.to_str().unwrap();
        let f = fast.to_str().unwrap();
        assert_eq!(run_capture(&["replay", "--fixture", "a3", "--task", "fundus", "--device", "maxwell_gpu:MaxN", "--out", s]).0, 0);
        assert_eq!(run_capture(&["replay", "--fixture", "a3", "--task", "fundus", "--device", "edge_tpu", "--out", f]).0, 0);
        let (code, out, _) = run_capture(&["speedup", "--slow", s, "--fast", f]);
        assert_eq!(code, 0);
        assert!(out.starts_with("speedup=1.25 argmin_dataset_size=20"), "{out}");

        let (code, _, err) = run_capture(&["speedup", "--slow", "a3", "--fast", f]);
        assert_eq!(code, 1);
        assert!(err.starts_with("MixedGroups:"), "{err}");
    }

    #[test]
    fn config_file_supplies_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        std::fs::write(&cfg, r#"{"fixture":"a1","task":"od","device":"edge_tpu"}"#).unwrap();
        let (code, out, _) = run_capture(&["replay", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 34);
        let (_, out, _) = run_capture(&["replay", "--config", cfg.to_str().unwrap(), "--device", "colab_gpu"]);
        assert!(out.lines().nth(1).unwrap().starts_with("od_segmentation,colab_gpu"));
        std::fs::write(&cfg, r#"{"fixture":"a1","colour":"blue"}"#).unwrap();
        let (code, _, err) = run_capture(&["replay", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("colour"));
    }

    #[test]
    fn domain_errors_exit_1_with_name() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = run_capture(&["report", "--in", dir.path().to_str().unwrap(), "--out", "/tmp/x"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("EmptyBundle:"), "{err}");
        let (code, _, err) = run_capture(&["replay", "--fixture", "/nonexistent/q.csv"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("FixtureNotFound:"), "{err}");
        let (code, _, err) = run_capture(&["replay", "--fixture", "a1", "--task", "fundus"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("NoMatchingRows:"), "{err}");
    }
}
