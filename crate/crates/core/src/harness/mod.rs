//! Benchmark orchestration against pluggable runners, fixture replay, and
//! alignment of recorded power traces with the benchmark plan.

mod process;
mod synthetic;
pub mod wire;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixture::{self, FixtureError};
use crate::timing::{self, DeviceConfig, LatencyRecord, Protocol, TaskKind, TimingError, TimingRun};
use crate::trace::{
    mean_stable_power, segment_phases, ExperimentTimeline, PhaseKind, PhaseWindow, PowerTrace,
    SegmentationConfig, StablePower, TraceError, TrimPolicy,
};

pub use process::{ProcessRunner, RunnerChannel};
pub use synthetic::{SyntheticDataset, DEFAULT_SEED};
use wire::{parse_reply, Command, Reply};

/// `data` value asking the runner to generate its own inputs.
pub const SYNTHETIC_DATA: &str = "synthetic";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("runner failed to launch: {0}")]
    RunnerLaunchFailure(String),
    #[error("runner exited before replying")]
    RunnerExited,
    #[error("protocol violation ({reason}) on line: {line}")]
    ProtocolViolation { line: String, reason: String },
    #[error("runner reported an error: {0}")]
    RunnerReportedError(String),
    #[error("no fixture rows match the filter")]
    NoMatchingRows,
    #[error("plan has {expected} datasets but the trace shows {detected} inference plateaus")]
    CountMismatch { expected: usize, detected: usize },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Timing(#[from] TimingError),
}

impl HarnessError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidPlan(_) => "InvalidPlan",
            Self::RunnerLaunchFailure(_) => "RunnerLaunchFailure",
            Self::RunnerExited => "RunnerExited",
            Self::ProtocolViolation { .. } => "ProtocolViolation",
            Self::RunnerReportedError(_) => "RunnerReportedError",
            Self::NoMatchingRows => "NoMatchingRows",
            Self::CountMismatch { .. } => "CountMismatch",
            Self::Io(_) => "Io",
            Self::Fixture(e) => e.name(),
            Self::Trace(e) => e.name(),
            Self::Timing(e) => e.name(),
        }
    }
}

/// How to start a runner and what it should load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunnerSpec {
    pub launch_command: Vec<String>,
    pub model_artifact: String,
    /// (height, width, channels)
    pub input_shape: [u32; 3],
}

impl RunnerSpec {
    pub fn new(launch_command: Vec<String>, model_artifact: impl Into<String>, input_shape: [u32; 3]) -> Result<Self, HarnessError> {
        if launch_command.first().is_none_or(|p| p.trim().is_empty()) {
            return Err(HarnessError::InvalidPlan("runner launch command is empty".into()));
        }
        if input_shape.contains(&0) {
            return Err(HarnessError::InvalidPlan(format!("input shape {input_shape:?} has a zero dimension")));
        }
        Ok(Self {
            launch_command,
            model_artifact: model_artifact.into(),
            input_shape,
        })
    }

    /// Splits a shell-style command line on whitespace, honouring simple
    /// single and double quotes.
    pub fn split_command(line: &str) -> Vec<String> {
        let mut words = Vec::new();
        let mut cur = String::new();
        let mut quote: Option<char> = None;
        let mut in_word = false;
        for ch in line.chars() {
            match (quote, ch) {
                (Some(q), c) if c == q => quote = None,
                (Some(_), c) => cur.push(c),
                (None, '"' | '\'') => {
                    quote = Some(ch);
                    in_word = true;
                }
                (None, c) if c.is_whitespace() => {
                    if in_word {
                        words.push(std::mem::take(&mut cur));
                        in_word = false;
                    }
                }
                (None, c) => {
                    cur.push(c);
                    in_word = true;
                }
            }
        }
        if in_word {
            words.push(cur);
        }
        words
    }
}

/// Guard periods of a plan; the dataset count comes from the plan itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanTimeline {
    pub pre_load_idle_s: f64,
    pub load_to_predict_gap_s: f64,
    pub has_engine_load_prelude: bool,
}

impl Default for PlanTimeline {
    fn default() -> Self {
        let t = ExperimentTimeline::new(1);
        Self {
            pre_load_idle_s: t.pre_load_idle_s,
            load_to_predict_gap_s: t.load_to_predict_gap_s,
            has_engine_load_prelude: t.has_engine_load_prelude,
        }
    }
}

fn default_repetitions() -> u32 {
    10
}

fn default_batch_size() -> u32 {
    10
}

fn default_data() -> String {
    SYNTHETIC_DATA.to_string()
}

/// A benchmark campaign for one task on one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchPlan {
    pub task: TaskKind,
    pub device: String,
    #[serde(default)]
    pub power_mode: Option<String>,
    pub dataset_sizes: Vec<u32>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Defaults to the device's usual protocol.
    #[serde(default)]
    pub protocol: Option<Protocol>,
    #[serde(default = "default_batch_size")]
    pub batch_size: u32,
    #[serde(default)]
    pub timeline: PlanTimeline,
    #[serde(default)]
    pub model: String,
    /// Defaults to the task's model input shape.
    #[serde(default)]
    pub input_shape: Option<[u32; 3]>,
    /// `synthetic`, or a directory of real inputs handed to the runner.
    #[serde(default = "default_data")]
    pub data: String,
    /// Free-form notes copied into the result, e.g. what the runner's timing
    /// bracket includes.
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl BenchPlan {
    pub fn new(task: TaskKind, device: &DeviceConfig, dataset_sizes: Vec<u32>) -> Self {
        Self {
            task,
            device: device.name.clone(),
            power_mode: device.power_mode.clone(),
            dataset_sizes,
            repetitions: default_repetitions(),
            protocol: Some(device.protocol),
            batch_size: default_batch_size(),
            timeline: PlanTimeline::default(),
            model: String::new(),
            input_shape: None,
            data: default_data(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let plan: BenchPlan =
            serde_json::from_str(text).map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::InvalidPlan(m));
        if self.device.trim().is_empty() {
            return invalid("device is empty".into());
        }
        if self.dataset_sizes.is_empty() {
            return invalid("dataset_sizes is empty".into());
        }
        if self.dataset_sizes.contains(&0) {
            return invalid("dataset sizes must be positive".into());
        }
        if self.dataset_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("dataset_sizes must be strictly increasing".into());
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1".into());
        }
        if self.batch_size == 0 {
            return invalid("batch_size must be at least 1".into());
        }
        if self.input_shape.is_some_and(|s| s.contains(&0)) {
            return invalid("input_shape has a zero dimension".into());
        }
        self.timeline().validate()?;
        Ok(())
    }

    pub fn device_config(&self) -> DeviceConfig {
        let device = DeviceConfig::new(self.device.trim(), self.power_mode.as_deref());
        match self.protocol {
            Some(p) => device.with_protocol(p),
            None => device,
        }
    }

    pub fn input_shape(&self) -> [u32; 3] {
        self.input_shape.unwrap_or_else(|| {
            let (h, w, c) = self.task.input_shape();
            [h, w, c]
        })
    }

    pub fn timeline(&self) -> ExperimentTimeline {
        ExperimentTimeline {
            dataset_count: self.dataset_sizes.len(),
            pre_load_idle_s: self.timeline.pre_load_idle_s,
            load_to_predict_gap_s: self.timeline.load_to_predict_gap_s,
            has_engine_load_prelude: self.timeline.has_engine_load_prelude,
        }
    }

    /// Element counts of the predict messages for one dataset, warm-up first.
    pub fn predict_counts(&self, dataset_size: u32) -> Vec<u32> {
        match self.device_config().protocol {
            Protocol::WholeDataset => vec![dataset_size; 1 + self.repetitions as usize],
            Protocol::Batched => {
                let batches = timing::batch_sizes(dataset_size, self.batch_size);
                std::iter::once(batches[0]).chain(batches).collect()
            }
            Protocol::ElementWise => vec![1; 1 + dataset_size as usize],
        }
    }
}

/// What happened for one dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub dataset_size: u32,
    pub load_ms: Option<f64>,
    /// Runner-reported wall times, warm-up first.
    pub wall_ms: Vec<f64>,
    /// Orchestrator-side request/reply times; diagnostic only.
    pub round_trip_ms: Vec<f64>,
    /// Runner error that ended this dataset early.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub plan: BenchPlan,
    pub runs: Vec<BenchRun>,
    pub runner_metadata: BTreeMap<String, String>,
}

impl BenchResult {
    pub fn timing_runs(&self) -> Result<Vec<TimingRun>, HarnessError> {
        let device = self.plan.device_config();
        self.runs
            .iter()
            .filter(|r| r.failure.is_none())
            .map(|r| Ok(TimingRun::new(device.clone(), self.plan.task, r.dataset_size, r.wall_ms.clone())?))
            .collect()
    }

    /// One record per run; failed runs become anomalous records carrying the
    /// runner's error text.
    pub fn latency_records(&self) -> Result<Vec<LatencyRecord>, HarnessError> {
        let device = self.plan.device_config();
        self.runs
            .iter()
            .map(|r| match &r.failure {
                Some(error) => Ok(LatencyRecord::failed(self.plan.task, device.clone(), r.dataset_size, error)),
                None => {
                    let run = TimingRun::new(device.clone(), self.plan.task, r.dataset_size, r.wall_ms.clone())?;
                    Ok(timing::per_image(&run, self.plan.batch_size)?)
                }
            })
            .collect()
    }
}

/// Waits out guard periods.
pub trait Sleeper {
    fn sleep(&mut self, duration: Duration);
}

/// Real wall-clock sleeps, so an external power log lines up with the plan.
#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock;

impl Sleeper for WallClock {
    fn sleep(&mut self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Skips guard periods (timing-only runs).
#[derive(Debug, Default, Clone, Copy)]
pub struct NoSleep;

impl Sleeper for NoSleep {
    fn sleep(&mut self, _: Duration) {}
}

fn exchange(runner: &mut dyn RunnerChannel, cmd: &Command) -> Result<(Reply, f64), HarnessError> {
    let started = Instant::now();
    runner.send(cmd)?;
    let line = runner.receive()?;
    let reply = parse_reply(&line)?;
    let expected_load = matches!(cmd, Command::Load { .. });
    match (&reply, expected_load) {
        (Reply::Loaded { .. }, false) => Err(HarnessError::ProtocolViolation {
            line,
            reason: "load reply to a predict command".into(),
        }),
        (Reply::Predicted { .. }, true) => Err(HarnessError::ProtocolViolation {
            line,
            reason: "predict reply to a load command".into(),
        }),
        _ => Ok((reply, started.elapsed().as_secs_f64() * 1e3)),
    }
}

fn run_dataset(
    plan: &BenchPlan,
    spec: &RunnerSpec,
    dataset_size: u32,
    runner: &mut dyn RunnerChannel,
    sleeper: &mut dyn Sleeper,
) -> Result<BenchRun, HarnessError> {
    let mut run = BenchRun {
        dataset_size,
        load_ms: None,
        wall_ms: Vec::new(),
        round_trip_ms: Vec::new(),
        failure: None,
    };
    sleeper.sleep(Duration::from_secs_f64(plan.timeline.pre_load_idle_s));
    let load = Command::Load {
        model: spec.model_artifact.clone(),
        input_shape: spec.input_shape,
    };
    match exchange(runner, &load)?.0 {
        Reply::Loaded { load_ms } => run.load_ms = Some(load_ms),
        Reply::Failed { error } => {
            log::warn!("dataset {dataset_size}: load failed: {error}");
            run.failure = Some(error);
            return Ok(run);
        }
        Reply::Predicted { .. } => unreachable!("exchange checks the reply kind"),
    }
    sleeper.sleep(Duration::from_secs_f64(plan.timeline.load_to_predict_gap_s));
    for n in plan.predict_counts(dataset_size) {
        let predict = Command::Predict {
            n,
            data: plan.data.clone(),
        };
        match exchange(runner, &predict)? {
            (Reply::Predicted { wall_ms, .. }, rtt) => {
                run.wall_ms.push(wall_ms);
                run.round_trip_ms.push(rtt);
            }
            (Reply::Failed { error }, _) => {
                log::warn!("dataset {dataset_size}: predict failed: {error}");
                run.failure = Some(error);
                break;
            }
            (Reply::Loaded { .. }, _) => unreachable!("exchange checks the reply kind"),
        }
    }
    Ok(run)
}

/// Runs every dataset of the plan in ascending order through `runner`.
///
/// Runner-reported errors end only the affected dataset; protocol-level
/// failures abort the campaign. `quit` is sent last in either case.
pub fn run_benchmark(
    plan: &BenchPlan,
    spec: &RunnerSpec,
    runner: &mut dyn RunnerChannel,
    sleeper: &mut dyn Sleeper,
) -> Result<BenchResult, HarnessError> {
    plan.validate()?;
    let mut runs = Vec::with_capacity(plan.dataset_sizes.len());
    for (i, &size) in plan.dataset_sizes.iter().enumerate() {
        log::info!("dataset {}/{}: {size} images", i + 1, plan.dataset_sizes.len());
        match run_dataset(plan, spec, size, runner, sleeper) {
            Ok(run) => runs.push(run),
            Err(e) => {
                let _ = runner.send(&Command::Quit);
                return Err(match (e, i) {
                    (HarnessError::RunnerExited, 0) => {
                        HarnessError::RunnerLaunchFailure("runner exited before completing the handshake".into())
                    }
                    (e, _) => e,
                });
            }
        }
    }
    runner.send(&Command::Quit)?;

    let mut runner_metadata = plan.metadata.clone();
    runner_metadata.insert("launch_command".into(), spec.launch_command.join(" "));
    runner_metadata.insert("model".into(), spec.model_artifact.clone());
    let [h, w, c] = spec.input_shape;
    runner_metadata.insert("input_shape".into(), format!("{h}x{w}x{c}"));
    runner_metadata.insert("protocol".into(), plan.device_config().protocol.to_string());
    runner_metadata.insert("timing_source".into(), "runner-reported wall_ms".into());
    Ok(BenchResult {
        plan: plan.clone(),
        runs,
        runner_metadata,
    })
}

/// Launches the runner as a subprocess and runs the plan against it.
pub fn run_benchmark_process(
    plan: &BenchPlan,
    spec: &RunnerSpec,
    sleeper: &mut dyn Sleeper,
) -> Result<BenchResult, HarnessError> {
    let mut runner = ProcessRunner::launch(spec)?;
    let result = run_benchmark(plan, spec, &mut runner, sleeper);
    if let Some(code) = runner.finish(Duration::from_secs(5)).filter(|&c| c != 0) {
        log::warn!("runner exited with status {code}");
    }
    result
}

/// Row selection for [`replay_fixture`]. A device without a power mode
/// matches every mode of that device.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayFilter {
    pub task: Option<TaskKind>,
    pub device: Option<DeviceConfig>,
}

impl ReplayFilter {
    pub fn matches(&self, r: &LatencyRecord) -> bool {
        self.task.is_none_or(|t| t == r.task)
            && self.device.as_ref().is_none_or(|d| match d.power_mode {
                None => d.name == r.device.name,
                Some(_) => d.same_device(&r.device),
            })
    }
}

/// Latency records of a fixture that pass the filter, unchanged.
pub fn replay_fixture(text: &str, filter: &ReplayFilter) -> Result<Vec<LatencyRecord>, HarnessError> {
    let rows: Vec<LatencyRecord> = fixture::parse_latency_csv(text)?
        .into_iter()
        .filter(|r| filter.matches(r))
        .collect();
    if rows.is_empty() {
        return Err(HarnessError::NoMatchingRows);
    }
    Ok(rows)
}

pub fn replay_fixture_file(path: &Path, filter: &ReplayFilter) -> Result<Vec<LatencyRecord>, HarnessError> {
    replay_fixture(&fixture::read_fixture(path)?, filter)
}

/// Inference window and stable power of one planned dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedDataset {
    pub dataset_size: u32,
    pub window: PhaseWindow,
    pub power: StablePower,
}

/// Segments a trace recorded during `plan` and pairs each dataset size with
/// its inference window's stable power, in plan order.
pub fn align_trace(
    plan: &BenchPlan,
    trace: &PowerTrace,
    cfg: &SegmentationConfig,
    trim: TrimPolicy,
) -> Result<Vec<AlignedDataset>, HarnessError> {
    let windows = segment_phases(trace, &plan.timeline(), cfg).map_err(|e| match e {
        TraceError::SegmentationFailure { expected, detected } => HarnessError::CountMismatch { expected, detected },
        other => other.into(),
    })?;
    let inference: Vec<PhaseWindow> = windows.into_iter().filter(|w| w.kind == PhaseKind::Inference).collect();
    if inference.len() != plan.dataset_sizes.len() {
        return Err(HarnessError::CountMismatch {
            expected: plan.dataset_sizes.len(),
            detected: inference.len(),
        });
    }
    plan.dataset_sizes
        .iter()
        .zip(inference)
        .map(|(&dataset_size, window)| {
            let power = mean_stable_power(trace, &window, trim)?;
            Ok(AlignedDataset {
                dataset_size,
                window,
                power,
            })
        })
        .collect()
}
