use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, HyperbolicFit};
use crate::timing::{DeviceConfig, LatencyRecord, TaskKind};

/// Smallest slow/fast per-image time ratio over the shared dataset sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupResult {
    pub scenario: TaskKind,
    pub slow: DeviceConfig,
    pub fast: DeviceConfig,
    pub value: f64,
    pub argmin_dataset_size: u32,
}

fn usable_by_size(records: &[LatencyRecord]) -> Result<BTreeMap<u32, f64>, AnalysisError> {
    let mut map = BTreeMap::new();
    for r in records {
        if let Some(ms) = r.usable_ms() {
            if map.insert(r.dataset_size, ms).is_some() {
                return Err(AnalysisError::InvalidInput(format!(
                    "dataset size {} appears twice in one series",
                    r.dataset_size
                )));
            }
        }
    }
    Ok(map)
}

/// Minimum speed-up of `fast` over `slow`; anomalous and failed records are
/// skipped. Ties resolve to the smallest dataset size.
pub fn min_speedup(
    slow: &[LatencyRecord],
    fast: &[LatencyRecord],
) -> Result<SpeedupResult, AnalysisError> {
    let (first_slow, first_fast) = match (slow.first(), fast.first()) {
        (Some(s), Some(f)) => (s, f),
        _ => return Err(AnalysisError::EmptyInput),
    };
    let slow_ms = usable_by_size(slow)?;
    let fast_ms = usable_by_size(fast)?;

    let mut best: Option<(f64, u32)> = None;
    for (&size, &s) in &slow_ms {
        let Some(&f) = fast_ms.get(&size) else { continue };
        if f <= 0.0 {
            return Err(AnalysisError::InvalidInput(format!(
                "non-positive time {f} ms at size {size}"
            )));
        }
        let ratio = s / f;
        if best.is_none_or(|(v, _)| ratio < v) {
            best = Some((ratio, size));
        }
    }
    let (value, argmin_dataset_size) = best.ok_or(AnalysisError::NoCommonSizes)?;
    Ok(SpeedupResult {
        scenario: first_slow.task,
        slow: first_slow.device.clone(),
        fast: first_fast.device.clone(),
        value,
        argmin_dataset_size,
    })
}

/// Large-dataset limit of edge time over cloud time: `edge / IT`.
pub fn asymptotic_speedup(edge_per_image_ms: f64, fit: &HyperbolicFit) -> Result<f64, AnalysisError> {
    if fit.independent_term_it <= 0.0 {
        return Err(AnalysisError::NonPositiveIT(fit.independent_term_it));
    }
    Ok(edge_per_image_ms / fit.independent_term_it)
}
