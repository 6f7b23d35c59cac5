//! Power-meter traces: parsing, phase segmentation and stable-power
//! extraction.
//!
//! A trace is the sequence of voltage/current samples logged by a USB power
//! meter placed between the supply and the board. Experiments leave idle
//! guard periods around every dataset load, which is what makes the inference
//! plateaus recoverable offline by [`segment_phases`].

mod convert;
mod segment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

pub use convert::{convert_tester_export, ConvertOptions, CurrentUnit, VoltageUnit};
pub use segment::{segment_phases, SegmentationConfig};

/// Header of the canonical power log.
pub const POWER_LOG_HEADER: &str = "timestamp_s,voltage_V,current_A";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("malformed power log at line {line}: {reason}")]
    MalformedLog { line: usize, reason: String },
    #[error("power log has no data rows")]
    EmptyLog,
    #[error("timestamps not strictly increasing at line {line} ({previous} then {current})")]
    NonMonotonicTimestamps {
        line: usize,
        previous: f64,
        current: f64,
    },
    #[error("expected {expected} inference plateaus, detected {detected}")]
    SegmentationFailure { expected: usize, detected: usize },
    #[error("dataset {dataset}: {detail}")]
    PhaseStructure { dataset: usize, detail: String },
    #[error("window of {len} samples leaves nothing after trimming {trim} from each end")]
    WindowTooShort { len: usize, trim: usize },
    #[error("window [{start}, {end}) is outside a trace of {len} samples")]
    WindowOutOfRange { start: usize, end: usize, len: usize },
    #[error("stable power is only defined for inference windows, got {0:?}")]
    NotInferenceWindow(PhaseKind),
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("unrecognized tester export: {0}")]
    UnrecognizedExport(String),
}

impl TraceError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MalformedLog { .. } => "MalformedLog",
            Self::EmptyLog => "EmptyLog",
            Self::NonMonotonicTimestamps { .. } => "NonMonotonicTimestamps",
            Self::SegmentationFailure { .. } => "SegmentationFailure",
            Self::PhaseStructure { .. } => "PhaseStructure",
            Self::WindowTooShort { .. } => "WindowTooShort",
            Self::WindowOutOfRange { .. } => "WindowOutOfRange",
            Self::NotInferenceWindow(_) => "NotInferenceWindow",
            Self::InvalidTimeline(_) => "InvalidTimeline",
            Self::UnrecognizedExport(_) => "UnrecognizedExport",
        }
    }
}

/// One meter reading. Time in seconds since log start, volts, amperes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub t: f64,
    pub voltage: f64,
    pub current: f64,
}

impl PowerSample {
    pub fn new(t: f64, voltage: f64, current: f64) -> Result<Self, String> {
        for (what, v) in [("timestamp", t), ("voltage", voltage), ("current", current)] {
            if !v.is_finite() {
                return Err(format!("{what} is not a finite number"));
            }
            if v < 0.0 {
                return Err(format!("{what} {v} is negative"));
            }
        }
        Ok(Self { t, voltage, current })
    }

    pub fn power(&self) -> f64 {
        instantaneous_power(self)
    }
}

/// Instantaneous power in watts.
pub fn instantaneous_power(s: &PowerSample) -> f64 {
    s.voltage * s.current
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    samples: Vec<PowerSample>,
    nominal_period: f64,
}

impl PowerTrace {
    /// Builds a trace; timestamps must be strictly increasing.
    pub fn new(samples: Vec<PowerSample>) -> Result<Self, TraceError> {
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(TraceError::NonMonotonicTimestamps {
                    // header is line 1, sample i is line i + 2
                    line: i + 3,
                    previous: pair[0].t,
                    current: pair[1].t,
                });
            }
        }
        Ok(Self {
            samples,
            nominal_period: 1.0,
        })
    }

    pub fn with_nominal_period(mut self, seconds: f64) -> Self {
        self.nominal_period = seconds;
        self
    }

    pub fn nominal_period(&self) -> f64 {
        self.nominal_period
    }

    pub fn samples(&self) -> &[PowerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.samples.iter().map(instantaneous_power).collect()
    }

    /// Serializes to the canonical log format. Parsing the output yields an
    /// identical trace.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str(POWER_LOG_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", s.t, s.voltage, s.current));
        }
        out
    }
}

/// Parses the canonical power log (`timestamp_s,voltage_V,current_A`).
///
/// Accepts LF or CRLF line endings and a trailing newline. Rows must carry
/// three non-negative decimal numbers with strictly increasing timestamps.
pub fn parse_power_log(text: &str) -> Result<PowerTrace, TraceError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));

    let header = lines.next().unwrap_or_default();
    if header != POWER_LOG_HEADER {
        return Err(TraceError::MalformedLog {
            line: 1,
            reason: format!("expected header '{POWER_LOG_HEADER}', found '{header}'"),
        });
    }

    let mut rows: Vec<(usize, &str)> = lines.enumerate().map(|(i, l)| (i + 2, l)).collect();
    while rows.last().is_some_and(|(_, l)| l.is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(TraceError::EmptyLog);
    }

    let mut samples = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(TraceError::MalformedLog {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut values = [0.0; 3];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = parse_decimal(field).ok_or_else(|| TraceError::MalformedLog {
                line,
                reason: format!("'{field}' is not a decimal number"),
            })?;
        }
        let sample = PowerSample::new(values[0], values[1], values[2])
            .map_err(|reason| TraceError::MalformedLog { line, reason })?;
        if let Some(prev) = samples.last().map(|p: &PowerSample| p.t) {
            if sample.t <= prev {
                return Err(TraceError::NonMonotonicTimestamps {
                    line,
                    previous: prev,
                    current: sample.t,
                });
            }
        }
        samples.push(sample);
    }
    PowerTrace::new(samples)
}

/// Plain decimal numbers only: no `inf`, `NaN`, or surrounding garbage.
pub(crate) fn parse_decimal(field: &str) -> Option<f64> {
    let field = field.trim();
    let body = field.strip_prefix(['-', '+']).unwrap_or(field);
    let well_formed = !body.is_empty()
        && body.bytes().any(|b| b.is_ascii_digit())
        && body
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'-' | b'+'))
        && body.as_bytes()[0] != b'e'
        && body.as_bytes()[0] != b'E';
    if !well_formed {
        return None;
    }
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Guard periods around each dataset, as configured when the trace was
/// recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentTimeline {
    pub dataset_count: usize,
    #[serde(default = "default_pre_load_idle")]
    pub pre_load_idle_s: f64,
    #[serde(default = "default_load_gap")]
    pub load_to_predict_gap_s: f64,
    /// Jetson-style runs load the inference engines once before the first
    /// dataset, which shows up as an extra plateau at the start.
    #[serde(default)]
    pub has_engine_load_prelude: bool,
}

fn default_pre_load_idle() -> f64 {
    10.0
}

fn default_load_gap() -> f64 {
    5.0
}

impl ExperimentTimeline {
    pub fn new(dataset_count: usize) -> Self {
        Self {
            dataset_count,
            pre_load_idle_s: default_pre_load_idle(),
            load_to_predict_gap_s: default_load_gap(),
            has_engine_load_prelude: false,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.dataset_count == 0 {
            return Err(TraceError::InvalidTimeline("dataset_count must be positive".into()));
        }
        if !(self.load_to_predict_gap_s >= 0.0 && self.pre_load_idle_s > self.load_to_predict_gap_s) {
            return Err(TraceError::InvalidTimeline(format!(
                "need pre_load_idle ({}) > load_to_predict_gap ({}) >= 0",
                self.pre_load_idle_s, self.load_to_predict_gap_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    EngineLoad,
    Idle,
    DatasetLoad,
    Inference,
}

/// Half-open sample range `[start_index, end_index)` labelled with its phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub kind: PhaseKind,
    pub start_index: usize,
    pub end_index: usize,
    /// Zero-based dataset this window belongs to; `None` for engine load.
    pub dataset_ordinal: Option<usize>,
}

impl PhaseWindow {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index
    }

    pub fn is_empty(&self) -> bool {
        self.end_index == self.start_index
    }
}

/// How many samples to drop at each end of an inference window before
/// averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimPolicy {
    pub fraction: f64,
    pub min_each_end: usize,
}

impl Default for TrimPolicy {
    fn default() -> Self {
        Self {
            fraction: 0.1,
            min_each_end: 1,
        }
    }
}

impl TrimPolicy {
    pub fn none() -> Self {
        Self {
            fraction: 0.0,
            min_each_end: 0,
        }
    }

    pub fn each_end(samples: usize) -> Self {
        Self {
            fraction: 0.0,
            min_each_end: samples,
        }
    }

    pub fn trim_count(&self, len: usize) -> usize {
        let proportional = (len as f64 * self.fraction + 1e-9).floor() as usize;
        proportional.max(self.min_each_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StablePower {
    pub mean_watts: f64,
    pub std_watts: f64,
    pub samples_used: usize,
}

/// Mean and population std of power over the trimmed interior of an
/// inference window.
pub fn mean_stable_power(
    trace: &PowerTrace,
    window: &PhaseWindow,
    trim: TrimPolicy,
) -> Result<StablePower, TraceError> {
    if window.kind != PhaseKind::Inference {
        return Err(TraceError::NotInferenceWindow(window.kind));
    }
    window_power(trace, window.start_index, window.end_index, trim)
}

/// Stable power over any sample range, regardless of phase.
pub fn window_power(
    trace: &PowerTrace,
    start: usize,
    end: usize,
    trim: TrimPolicy,
) -> Result<StablePower, TraceError> {
    if start > end || end > trace.len() {
        return Err(TraceError::WindowOutOfRange {
            start,
            end,
            len: trace.len(),
        });
    }
    let len = end - start;
    let k = trim.trim_count(len);
    if len <= 2 * k {
        return Err(TraceError::WindowTooShort { len, trim: k });
    }
    let powers: Vec<f64> = trace.samples[start + k..end - k]
        .iter()
        .map(instantaneous_power)
        .collect();
    let (mean_watts, std_watts) = stats::mean_and_std(&powers).expect("non-empty after trim");
    Ok(StablePower {
        mean_watts,
        std_watts,
        samples_used: powers.len(),
    })
}
