//! Per-image latency under the three measurement protocols.
//!
//! Every protocol discards exactly one warm-up measurement (the first one)
//! before averaging. Standard deviations are population deviations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimingError {
    #[error("whole-dataset run needs at least 2 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("batched run needs at least 2 batch times, got {0}")]
    TooFewBatches(usize),
    #[error("element-wise run needs at least 2 element times, got {0}")]
    TooFewElements(usize),
    #[error("run was recorded with protocol {actual}, expected {expected}")]
    ProtocolMismatch { expected: Protocol, actual: Protocol },
    #[error("wall time {value} ms at position {index} is not a positive finite number")]
    NonPositiveWallTime { index: usize, value: f64 },
    #[error("dataset size must be positive")]
    ZeroDatasetSize,
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("{dataset_size} elements in batches of {batch_size} need {expected} batches after warm-up, got {actual}")]
    BatchCountMismatch {
        dataset_size: u32,
        batch_size: u32,
        expected: usize,
        actual: usize,
    },
    #[error("unknown {what} '{value}'")]
    UnknownName { what: &'static str, value: String },
}

impl TimingError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TooFewRepetitions(_) => "TooFewRepetitions",
            Self::TooFewBatches(_) => "TooFewBatches",
            Self::TooFewElements(_) => "TooFewElements",
            Self::ProtocolMismatch { .. } => "ProtocolMismatch",
            Self::NonPositiveWallTime { .. } => "NonPositiveWallTime",
            Self::ZeroDatasetSize => "ZeroDatasetSize",
            Self::ZeroBatchSize => "ZeroBatchSize",
            Self::BatchCountMismatch { .. } => "BatchCountMismatch",
            Self::UnknownName { .. } => "UnknownName",
        }
    }
}

/// The three inference workloads that were benchmarked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    OdSegmentation,
    OcSegmentation,
    FundusClassification,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [
        TaskKind::OdSegmentation,
        TaskKind::OcSegmentation,
        TaskKind::FundusClassification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::OdSegmentation => "od_segmentation",
            TaskKind::OcSegmentation => "oc_segmentation",
            TaskKind::FundusClassification => "fundus_classification",
        }
    }

    /// Row label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            TaskKind::OdSegmentation => "OD segmentation",
            TaskKind::OcSegmentation => "OC segmentation",
            TaskKind::FundusClassification => "Fundus classification",
        }
    }

    /// Model input shape as (height, width, channels).
    pub fn input_shape(self) -> (u32, u32, u32) {
        match self {
            TaskKind::OdSegmentation | TaskKind::OcSegmentation => (128, 128, 3),
            TaskKind::FundusClassification => (224, 224, 3),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = TimingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "od_segmentation" | "od" => Ok(TaskKind::OdSegmentation),
            "oc_segmentation" | "oc" => Ok(TaskKind::OcSegmentation),
            "fundus_classification" | "fundus" => Ok(TaskKind::FundusClassification),
            _ => Err(TimingError::UnknownName {
                what: "task",
                value: s.to_string(),
            }),
        }
    }
}

/// How raw wall times relate to images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// One prediction call over the whole dataset per repetition.
    WholeDataset,
    /// One prediction call per batch of `batch_size` images.
    Batched,
    /// One prediction call per image.
    ElementWise,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::WholeDataset => "whole_dataset",
            Protocol::Batched => "batched",
            Protocol::ElementWise => "element_wise",
        }
    }

    /// Protocol used for a known device name; unknown devices default to
    /// whole-dataset timing.
    pub fn for_device(name: &str) -> Protocol {
        match name {
            "edge_tpu" => Protocol::ElementWise,
            "maxwell_gpu" => Protocol::Batched,
            _ => Protocol::WholeDataset,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = TimingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "whole_dataset" => Ok(Protocol::WholeDataset),
            "batched" => Ok(Protocol::Batched),
            "element_wise" => Ok(Protocol::ElementWise),
            _ => Err(TimingError::UnknownName {
                what: "protocol",
                value: s.to_string(),
            }),
        }
    }
}

/// Ordering key placing known devices in table order.
pub type DeviceSortKey = (usize, String, usize, String);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub name: String,
    /// Declared operating point, e.g. `5W` or `MaxN`.
    pub power_mode: Option<String>,
    pub protocol: Protocol,
}

const KNOWN_DEVICES: [(&str, &str); 4] = [
    ("colab_gpu", "Colab GPU"),
    ("colab_tpu", "Colab TPU"),
    ("edge_tpu", "Edge TPU"),
    ("maxwell_gpu", "Maxwell GPU"),
];

impl DeviceConfig {
    /// Builds a device config whose protocol follows [`Protocol::for_device`].
    pub fn new(name: impl Into<String>, power_mode: Option<&str>) -> Self {
        let name = name.into();
        let protocol = Protocol::for_device(&name);
        Self {
            name,
            power_mode: power_mode.filter(|m| !m.is_empty()).map(str::to_string),
            protocol,
        }
    }

    pub fn with_protocol(mut self, protocol: Protocol) -> Self {
        self.protocol = protocol;
        self
    }

    /// Parses a `name` or `name:mode` selector such as `maxwell_gpu:MaxN`.
    pub fn parse_selector(selector: &str) -> Self {
        match selector.split_once(':') {
            Some((name, mode)) => Self::new(name.trim(), Some(mode.trim())),
            None => Self::new(selector.trim(), None),
        }
    }

    /// Device identity (name and power mode), ignoring protocol.
    pub fn same_device(&self, other: &DeviceConfig) -> bool {
        self.name == other.name
            && match (&self.power_mode, &other.power_mode) {
                (None, None) => true,
                (Some(a), Some(b)) => a.eq_ignore_ascii_case(b),
                _ => false,
            }
    }

    /// `name` or `name_mode`, lowercased; used in file names.
    pub fn slug(&self) -> String {
        match &self.power_mode {
            Some(mode) => format!("{}_{}", self.name, mode.to_ascii_lowercase()),
            None => self.name.clone(),
        }
    }

    pub fn label(&self) -> String {
        let base = KNOWN_DEVICES
            .iter()
            .find(|(n, _)| *n == self.name)
            .map_or_else(|| self.name.clone(), |(_, l)| (*l).to_string());
        match &self.power_mode {
            Some(mode) => format!("{base} ({mode})"),
            None => base,
        }
    }

    /// Ordering key for table columns: known devices first, then by mode.
    pub fn sort_key(&self) -> DeviceSortKey {
        let rank = KNOWN_DEVICES
            .iter()
            .position(|(n, _)| *n == self.name)
            .unwrap_or(KNOWN_DEVICES.len());
        let mode = self.power_mode.clone().unwrap_or_default();
        let mode_rank = match mode.to_ascii_lowercase().as_str() {
            "" => 0,
            "5w" => 1,
            "maxn" | "10w" => 2,
            _ => 3,
        };
        (rank, self.name.clone(), mode_rank, mode)
    }
}

impl fmt::Display for DeviceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.power_mode {
            Some(mode) => write!(f, "{}:{}", self.name, mode),
            None => f.write_str(&self.name),
        }
    }
}

/// Raw wall times for one device, task and dataset size.
///
/// `measurements[0]` is always the warm-up measurement: the first whole
/// dataset repetition, the first (repeated) batch, or the first (repeated)
/// element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRun {
    pub device: DeviceConfig,
    pub task: TaskKind,
    pub dataset_size: u32,
    pub measurements: Vec<f64>,
}

impl TimingRun {
    pub fn new(
        device: DeviceConfig,
        task: TaskKind,
        dataset_size: u32,
        measurements: Vec<f64>,
    ) -> Result<Self, TimingError> {
        if dataset_size == 0 {
            return Err(TimingError::ZeroDatasetSize);
        }
        if let Some((index, &value)) = measurements
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(TimingError::NonPositiveWallTime { index, value });
        }
        Ok(Self {
            device,
            task,
            dataset_size,
            measurements,
        })
    }

    /// Measurements that count, i.e. everything after the warm-up.
    pub fn timed(&self) -> &[f64] {
        self.measurements.get(1..).unwrap_or(&[])
    }

    fn expect_protocol(&self, expected: Protocol) -> Result<(), TimingError> {
        if self.device.protocol != expected {
            return Err(TimingError::ProtocolMismatch {
                expected,
                actual: self.device.protocol,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub per_image_ms: f64,
    pub std_ms: f64,
}

/// Per-image latency for one device, task and dataset size.
///
/// `latency` is `None` for runs that produced no timing at all (the runner
/// failed, e.g. with an out-of-memory error); such records carry the failure
/// text in `error` and are always anomalous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub task: TaskKind,
    pub device: DeviceConfig,
    pub dataset_size: u32,
    pub latency: Option<Latency>,
    pub anomalous: bool,
    pub error: Option<String>,
}

impl LatencyRecord {
    pub fn measured(
        task: TaskKind,
        device: DeviceConfig,
        dataset_size: u32,
        per_image_ms: f64,
        std_ms: f64,
    ) -> Self {
        Self {
            task,
            device,
            dataset_size,
            latency: Some(Latency {
                per_image_ms,
                std_ms,
            }),
            anomalous: false,
            error: None,
        }
    }

    pub fn failed(task: TaskKind, device: DeviceConfig, dataset_size: u32, error: &str) -> Self {
        Self {
            task,
            device,
            dataset_size,
            latency: None,
            anomalous: true,
            error: Some(error.to_string()),
        }
    }

    pub fn per_image_ms(&self) -> Option<f64> {
        self.latency.map(|l| l.per_image_ms)
    }

    /// Mean per-image time if the record may enter fits and speed-ups.
    pub fn usable_ms(&self) -> Option<f64> {
        if self.anomalous {
            None
        } else {
            self.per_image_ms()
        }
    }
}

fn record_from(run: &TimingRun, per_image: &[f64]) -> LatencyRecord {
    let (mean, std) = stats::mean_and_std(per_image).expect("caller checked non-empty");
    LatencyRecord::measured(run.task, run.device.clone(), run.dataset_size, mean, std)
}

/// Whole-dataset protocol: each repetition's time divided by the dataset size.
pub fn per_image_whole_dataset(run: &TimingRun) -> Result<LatencyRecord, TimingError> {
    run.expect_protocol(Protocol::WholeDataset)?;
    if run.measurements.len() < 2 {
        return Err(TimingError::TooFewRepetitions(run.measurements.len()));
    }
    let n = f64::from(run.dataset_size);
    let per_image: Vec<f64> = run.timed().iter().map(|t| t / n).collect();
    Ok(record_from(run, &per_image))
}

/// Batched protocol: each batch's time divided by the images it held.
///
/// The warm-up is a repeated prediction of the first batch. When the dataset
/// size is not a multiple of `batch_size` the last batch is short and its
/// time is divided by its actual element count.
pub fn per_image_batched(run: &TimingRun, batch_size: u32) -> Result<LatencyRecord, TimingError> {
    run.expect_protocol(Protocol::Batched)?;
    if batch_size == 0 {
        return Err(TimingError::ZeroBatchSize);
    }
    if run.measurements.len() < 2 {
        return Err(TimingError::TooFewBatches(run.measurements.len()));
    }
    let sizes = batch_sizes(run.dataset_size, batch_size);
    if sizes.len() != run.timed().len() {
        return Err(TimingError::BatchCountMismatch {
            dataset_size: run.dataset_size,
            batch_size,
            expected: sizes.len(),
            actual: run.timed().len(),
        });
    }
    let per_image: Vec<f64> = run
        .timed()
        .iter()
        .zip(&sizes)
        .map(|(t, &k)| t / f64::from(k))
        .collect();
    Ok(record_from(run, &per_image))
}

/// Element-wise protocol: one time per image, first image predicted twice.
pub fn per_image_element_wise(run: &TimingRun) -> Result<LatencyRecord, TimingError> {
    run.expect_protocol(Protocol::ElementWise)?;
    if run.measurements.len() < 2 {
        return Err(TimingError::TooFewElements(run.measurements.len()));
    }
    Ok(record_from(run, run.timed()))
}

/// Dispatches on the run's protocol.
pub fn per_image(run: &TimingRun, batch_size: u32) -> Result<LatencyRecord, TimingError> {
    match run.device.protocol {
        Protocol::WholeDataset => per_image_whole_dataset(run),
        Protocol::Batched => per_image_batched(run, batch_size),
        Protocol::ElementWise => per_image_element_wise(run),
    }
}

/// Element counts of the batches covering `dataset_size` images.
pub fn batch_sizes(dataset_size: u32, batch_size: u32) -> Vec<u32> {
    assert!(batch_size > 0, "batch size must be positive");
    let mut sizes = Vec::with_capacity(dataset_size.div_ceil(batch_size) as usize);
    let mut left = dataset_size;
    while left > 0 {
        let k = left.min(batch_size);
        sizes.push(k);
        left -= k;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(protocol: Protocol, n: u32, times: &[f64]) -> TimingRun {
        let device = DeviceConfig::new("dev", None).with_protocol(protocol);
        TimingRun::new(device, TaskKind::OdSegmentation, n, times.to_vec()).unwrap()
    }

    fn lat(r: &LatencyRecord) -> (f64, f64) {
        let l = r.latency.unwrap();
        (l.per_image_ms, l.std_ms)
    }

    #[test]
    fn whole_dataset_discards_first_repetition() {
        let r = per_image_whole_dataset(&run(Protocol::WholeDataset, 10, &[200.0, 100.0, 100.0, 100.0]))
            .unwrap();
        assert_eq!(lat(&r), (10.0, 0.0));
    }

    #[test]
    fn whole_dataset_hand_computed() {
        let r =
            per_image_whole_dataset(&run(Protocol::WholeDataset, 20, &[500.0, 160.0, 140.0])).unwrap();
        let (m, s) = lat(&r);
        assert!((m - 7.5).abs() < 1e-12);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn whole_dataset_single_repetition() {
        let err = per_image_whole_dataset(&run(Protocol::WholeDataset, 10, &[100.0])).unwrap_err();
        assert_eq!(err, TimingError::TooFewRepetitions(1));
    }

    #[test]
    fn batched_constant() {
        let r = per_image_batched(&run(Protocol::Batched, 20, &[400.0, 343.0, 343.0]), 10).unwrap();
        let (m, s) = lat(&r);
        assert!((m - 34.3).abs() < 1e-12);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn batched_hand_computed() {
        let r = per_image_batched(&run(Protocol::Batched, 30, &[999.0, 250.0, 260.0, 250.0]), 10)
            .unwrap();
        let (m, s) = lat(&r);
        assert!((m - 76.0 / 3.0).abs() < 1e-12);
        // per-image {25, 26, 25}: variance = 2/9
        assert!((s - (2.0f64 / 9.0).sqrt()).abs() < 1e-12);
        assert!((s - 0.4714).abs() < 1e-4);
    }

    #[test]
    fn batched_single_batch() {
        let err = per_image_batched(&run(Protocol::Batched, 10, &[400.0]), 10).unwrap_err();
        assert_eq!(err, TimingError::TooFewBatches(1));
    }

    #[test]
    fn batched_short_final_batch_divides_by_actual_count() {
        // 25 images: batches of 10, 10, 5
        let r = per_image_batched(&run(Protocol::Batched, 25, &[90.0, 80.0, 80.0, 40.0]), 10).unwrap();
        assert_eq!(lat(&r), (8.0, 0.0));
    }

    #[test]
    fn batched_wrong_batch_count() {
        let err = per_image_batched(&run(Protocol::Batched, 30, &[90.0, 80.0, 80.0]), 10).unwrap_err();
        assert_eq!(err.name(), "BatchCountMismatch");
    }

    #[test]
    fn element_wise_constant() {
        let r = per_image_element_wise(&run(Protocol::ElementWise, 3, &[30.0, 8.8, 8.8, 8.8])).unwrap();
        assert_eq!(lat(&r), (8.8, 0.0));
    }

    #[test]
    fn element_wise_hand_computed() {
        let r = per_image_element_wise(&run(Protocol::ElementWise, 2, &[50.0, 8.0, 10.0])).unwrap();
        assert_eq!(lat(&r), (9.0, 1.0));
    }

    #[test]
    fn element_wise_single_element() {
        let err = per_image_element_wise(&run(Protocol::ElementWise, 1, &[7.5])).unwrap_err();
        assert_eq!(err, TimingError::TooFewElements(1));
    }

    #[test]
    fn protocol_mismatch_is_rejected() {
        let err = per_image_element_wise(&run(Protocol::Batched, 20, &[1.0, 2.0, 3.0])).unwrap_err();
        assert_eq!(err.name(), "ProtocolMismatch");
    }

    #[test]
    fn non_positive_wall_time_rejected() {
        let device = DeviceConfig::new("edge_tpu", None);
        let err = TimingRun::new(device, TaskKind::OdSegmentation, 2, vec![1.0, 0.0]).unwrap_err();
        assert_eq!(err, TimingError::NonPositiveWallTime { index: 1, value: 0.0 });
    }

    #[test]
    fn device_selectors() {
        let d = DeviceConfig::parse_selector("maxwell_gpu:MaxN");
        assert_eq!(d.power_mode.as_deref(), Some("MaxN"));
        assert_eq!(d.protocol, Protocol::Batched);
        assert_eq!(d.label(), "Maxwell GPU (MaxN)");
        assert_eq!(d.slug(), "maxwell_gpu_maxn");
        assert!(d.same_device(&DeviceConfig::new("maxwell_gpu", Some("maxn"))));
        assert_eq!(DeviceConfig::parse_selector("edge_tpu").protocol, Protocol::ElementWise);
    }

    #[test]
    fn batch_sizes_cover_dataset() {
        assert_eq!(batch_sizes(25, 10), vec![10, 10, 5]);
        assert_eq!(batch_sizes(20, 10), vec![10, 10]);
        assert!(batch_sizes(0, 10).is_empty());
    }

    fn any_protocol() -> impl Strategy<Value = Protocol> {
        prop_oneof![
            Just(Protocol::WholeDataset),
            Just(Protocol::Batched),
            Just(Protocol::ElementWise)
        ]
    }

    fn times_for(protocol: Protocol, n: u32) -> impl Strategy<Value = Vec<f64>> {
        let len = match protocol {
            Protocol::WholeDataset => 2..12usize,
            Protocol::Batched => {
                let k = n.div_ceil(10) as usize + 1;
                k..k + 1
            }
            Protocol::ElementWise => (n as usize + 1)..(n as usize + 2),
        };
        proptest::collection::vec(0.1f64..1000.0, len)
    }

    fn case() -> impl Strategy<Value = (Protocol, u32, Vec<f64>)> {
        (any_protocol(), 1u32..60).prop_flat_map(|(p, n)| (Just(p), Just(n), times_for(p, n)))
    }

    proptest! {
        #[test]
        fn scaling_wall_times_scales_latency((p, n, times) in case(), c in 0.01f64..100.0) {
            let base = per_image(&run(p, n, &times), 10).unwrap();
            let scaled_times: Vec<f64> = times.iter().map(|t| t * c).collect();
            let scaled = per_image(&run(p, n, &scaled_times), 10).unwrap();
            let (m0, s0) = lat(&base);
            let (m1, s1) = lat(&scaled);
            prop_assert!((m1 - c * m0).abs() <= 1e-9 * (c * m0).max(1.0));
            prop_assert!((s1 - c * s0).abs() <= 1e-9 * (c * m0).max(1.0));
        }

        #[test]
        fn warm_up_value_is_irrelevant((p, n, times) in case(), warm in 0.1f64..1e6) {
            let mut replaced = times.clone();
            replaced[0] = warm;
            let a = per_image(&run(p, n, &times), 10).unwrap();
            let b = per_image(&run(p, n, &replaced), 10).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn constant_measurements_have_zero_std(n in 1u32..40, t in 0.1f64..500.0) {
            let r = per_image_element_wise(&run(Protocol::ElementWise, n, &vec![t; n as usize + 1])).unwrap();
            let (m, s) = lat(&r);
            prop_assert!((m - t).abs() <= 1e-12 * t);
            prop_assert!(s <= 1e-12 * t);
        }
    }
}
