use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::stats;
use crate::timing::{DeviceConfig, DeviceSortKey, LatencyRecord, TaskKind};
use crate::trace::StablePower;

/// Energy per image in millijoules: watts times milliseconds.
///
/// Both inputs are expected to be non-negative; no rounding is applied.
pub fn image_energy(mean_power_w: f64, per_image_ms: f64) -> f64 {
    mean_power_w * per_image_ms
}

/// Mean stable power and per-image energy for one dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub task: TaskKind,
    pub device: DeviceConfig,
    pub dataset_size: u32,
    pub mean_power_w: f64,
    pub power_std_w: f64,
    pub energy_mj: f64,
}

/// Aggregate over every dataset size of one task and device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub task: TaskKind,
    pub device: DeviceConfig,
    pub mean_power_w: f64,
    pub power_std_w: f64,
    pub energy_mj: f64,
    pub energy_std_mj: f64,
    pub rows: usize,
}

/// Mean and population std of power and energy across the rows of a single
/// task/device group.
pub fn summarize_energy(rows: &[EnergyRow]) -> Result<EnergySummary, AnalysisError> {
    let first = rows.first().ok_or(AnalysisError::EmptyInput)?;
    if rows
        .iter()
        .any(|r| r.task != first.task || !r.device.same_device(&first.device))
    {
        return Err(AnalysisError::MixedGroups);
    }
    let powers: Vec<f64> = rows.iter().map(|r| r.mean_power_w).collect();
    let energies: Vec<f64> = rows.iter().map(|r| r.energy_mj).collect();
    let (mean_power_w, power_std_w) = stats::mean_and_std(&powers).expect("non-empty");
    let (energy_mj, energy_std_mj) = stats::mean_and_std(&energies).expect("non-empty");
    Ok(EnergySummary {
        task: first.task,
        device: first.device.clone(),
        mean_power_w,
        power_std_w,
        energy_mj,
        energy_std_mj,
        rows: rows.len(),
    })
}

/// Groups rows by task and device and summarizes each group, in table order.
pub fn summarize_all(rows: &[EnergyRow]) -> Vec<EnergySummary> {
    let mut groups: BTreeMap<(TaskKind, DeviceSortKey), Vec<EnergyRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.task, r.device.sort_key()))
            .or_default()
            .push(r.clone());
    }
    groups
        .values()
        .map(|g| summarize_energy(g).expect("groups are non-empty and homogeneous"))
        .collect()
}

/// Joins per-dataset stable power with the matching latency records.
pub fn energy_rows_from_power(
    task: TaskKind,
    device: &DeviceConfig,
    powers: &[(u32, StablePower)],
    latencies: &[LatencyRecord],
) -> Result<Vec<EnergyRow>, AnalysisError> {
    powers
        .iter()
        .map(|&(size, power)| {
            let per_image_ms = latencies
                .iter()
                .filter(|r| r.task == task && r.device.same_device(device) && r.dataset_size == size)
                .find_map(LatencyRecord::usable_ms)
                .ok_or(AnalysisError::MissingLatency(size))?;
            Ok(EnergyRow {
                task,
                device: device.clone(),
                dataset_size: size,
                mean_power_w: power.mean_watts,
                power_std_w: power.std_watts,
                energy_mj: image_energy(power.mean_watts, per_image_ms),
            })
        })
        .collect()
}
