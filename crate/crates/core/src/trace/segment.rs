//! Plateau-based phase segmentation.
//!
//! Power is compared against two thresholds placed between the idle floor
//! and the trace peak. Runs above the inference threshold are inference
//! plateaus; the last run above the load threshold before each plateau is
//! that dataset's load, and the quiet stretch before the load is its idle
//! guard period.

use serde::{Deserialize, Serialize};

use super::{ExperimentTimeline, PhaseKind, PhaseWindow, PowerTrace, TraceError};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Load threshold as a fraction of the floor-to-peak rise.
    pub k_load: f64,
    /// Inference threshold as a fraction of the floor-to-peak rise.
    pub k_inference: f64,
    /// Quantile of all samples taken as the idle floor.
    pub floor_quantile: f64,
    /// Rises smaller than this (watts) count as a flat trace.
    pub min_contrast_w: f64,
    /// Runs separated by at most this many seconds are merged.
    pub max_dropout_s: f64,
    /// Minimum idle stretch before a load, as a fraction of the timeline's
    /// pre-load idle period.
    pub min_idle_fraction: f64,
    pub min_plateau_samples: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            k_load: 0.15,
            k_inference: 0.5,
            floor_quantile: 0.1,
            min_contrast_w: 0.05,
            max_dropout_s: 2.0,
            min_idle_fraction: 0.5,
            min_plateau_samples: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Levels {
    floor: f64,
    load: f64,
    inference: f64,
}

fn levels(powers: &[f64], cfg: &SegmentationConfig) -> Option<Levels> {
    if powers.is_empty() {
        return None;
    }
    let mut sorted = powers.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = cfg.floor_quantile.clamp(0.0, 1.0);
    let floor = sorted[((sorted.len() - 1) as f64 * q).round() as usize];
    let peak = *sorted.last().expect("non-empty");
    let rise = peak - floor;
    if rise < cfg.min_contrast_w {
        return None;
    }
    Some(Levels {
        floor,
        load: floor + cfg.k_load * rise,
        inference: floor + cfg.k_inference * rise,
    })
}

/// Maximal runs `[start, end)` within `[from, to)` whose power exceeds
/// `threshold`, merging runs separated by at most `max_dropout_s`.
fn runs_above(
    times: &[f64],
    powers: &[f64],
    from: usize,
    to: usize,
    threshold: f64,
    max_dropout_s: f64,
) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = from;
    while i < to {
        if powers[i] > threshold {
            let start = i;
            while i < to && powers[i] > threshold {
                i += 1;
            }
            match runs.last_mut() {
                Some(last) if times[start] - times[last.1 - 1] <= max_dropout_s => last.1 = i,
                _ => runs.push((start, i)),
            }
        } else {
            i += 1;
        }
    }
    runs
}

/// Splits a trace into idle / dataset-load / inference windows per dataset,
/// plus a leading engine-load window when the timeline declares one.
pub fn segment_phases(
    trace: &PowerTrace,
    timeline: &ExperimentTimeline,
    cfg: &SegmentationConfig,
) -> Result<Vec<PhaseWindow>, TraceError> {
    timeline.validate()?;
    let expected = timeline.dataset_count;
    let failure = |detected| TraceError::SegmentationFailure { expected, detected };
    if trace.is_empty() {
        return Err(failure(0));
    }
    let times: Vec<f64> = trace.samples().iter().map(|s| s.t).collect();
    let powers = trace.powers();
    let n = powers.len();

    let mut windows = Vec::with_capacity(3 * expected + 1);
    let mut base = 0;
    if timeline.has_engine_load_prelude {
        let lv = levels(&powers, cfg).ok_or_else(|| failure(0))?;
        let (start, end) = *runs_above(&times, &powers, 0, n, lv.load, cfg.max_dropout_s)
            .first()
            .ok_or_else(|| failure(0))?;
        windows.push(PhaseWindow {
            kind: PhaseKind::EngineLoad,
            start_index: start,
            end_index: end,
            dataset_ordinal: None,
        });
        base = end;
    }

    let lv = levels(&powers[base..], cfg).ok_or_else(|| failure(0))?;
    let plateaus: Vec<(usize, usize)> =
        runs_above(&times, &powers, base, n, lv.inference, cfg.max_dropout_s)
            .into_iter()
            .filter(|(s, e)| e - s >= cfg.min_plateau_samples.max(1))
            .collect();
    if plateaus.len() != expected {
        return Err(failure(plateaus.len()));
    }

    let above_load = |i: usize| powers[i] > lv.load;
    let mut region_start = base;
    for (ordinal, &(inf_start, inf_end)) in plateaus.iter().enumerate() {
        let structure = |detail: String| TraceError::PhaseStructure {
            dataset: ordinal,
            detail,
        };

        // Ramp samples glued to the previous plateau are not idle.
        while region_start < inf_start && above_load(region_start) {
            region_start += 1;
        }
        // Nor is the ramp into this plateau, unless load and inference are
        // allowed to be back to back.
        let mut region_end = inf_start;
        if timeline.load_to_predict_gap_s > 0.0 {
            while region_end > region_start && above_load(region_end - 1) {
                region_end -= 1;
            }
        }

        let active = runs_above(&times, &powers, region_start, region_end, lv.load, cfg.max_dropout_s);
        let &(load_start, load_end) = active
            .last()
            .ok_or_else(|| structure("no dataset load detected before the inference plateau".into()))?;
        let idle_start = active
            .len()
            .checked_sub(2)
            .map_or(region_start, |i| active[i].1);
        if idle_start >= load_start {
            return Err(structure("no idle period before the dataset load".into()));
        }
        let idle_s = times[load_start] - times[idle_start];
        let min_idle_s = cfg.min_idle_fraction * timeline.pre_load_idle_s;
        if idle_s + 1e-9 < min_idle_s {
            return Err(structure(format!(
                "idle period of {idle_s:.3} s is shorter than the required {min_idle_s:.3} s"
            )));
        }

        let mean_of = |s: usize, e: usize| stats::mean(&powers[s..e]).expect("non-empty run");
        let inf_mean = mean_of(inf_start, inf_end);
        let load_mean = mean_of(load_start, load_end);
        if !(inf_mean > load_mean && load_mean > lv.floor) {
            return Err(structure(format!(
                "phase powers out of order: inference {inf_mean:.3} W, load {load_mean:.3} W, floor {:.3} W",
                lv.floor
            )));
        }

        for (kind, start_index, end_index) in [
            (PhaseKind::Idle, idle_start, load_start),
            (PhaseKind::DatasetLoad, load_start, load_end),
            (PhaseKind::Inference, inf_start, inf_end),
        ] {
            windows.push(PhaseWindow {
                kind,
                start_index,
                end_index,
                dataset_ordinal: Some(ordinal),
            });
        }
        region_start = inf_end;
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::PowerSample;

    /// 1 Hz trace from (duration_s, watts) segments at a fixed 5 V.
    fn synth(segments: &[(usize, f64)]) -> PowerTrace {
        let mut samples = Vec::new();
        for &(secs, watts) in segments {
            for _ in 0..secs {
                let t = samples.len() as f64;
                samples.push(PowerSample::new(t, 5.0, watts / 5.0).unwrap());
            }
        }
        PowerTrace::new(samples).unwrap()
    }

    fn kinds(ws: &[PhaseWindow]) -> Vec<PhaseKind> {
        ws.iter().map(|w| w.kind).collect()
    }

    #[test]
    fn single_dataset_triple() {
        let trace = synth(&[(10, 2.0), (3, 3.0), (5, 2.0), (8, 5.0)]);
        let ws = segment_phases(&trace, &ExperimentTimeline::new(1), &SegmentationConfig::default()).unwrap();
        assert_eq!(kinds(&ws), vec![PhaseKind::Idle, PhaseKind::DatasetLoad, PhaseKind::Inference]);
        assert_eq!((ws[0].start_index, ws[0].end_index), (0, 10));
        assert_eq!((ws[1].start_index, ws[1].end_index), (10, 13));
        assert_eq!((ws[2].start_index, ws[2].end_index), (18, 26));
    }

    #[test]
    fn too_many_datasets_requested() {
        let trace = synth(&[(10, 2.0), (3, 3.0), (5, 2.0), (8, 5.0)]);
        let err = segment_phases(&trace, &ExperimentTimeline::new(2), &SegmentationConfig::default()).unwrap_err();
        assert_eq!(err, TraceError::SegmentationFailure { expected: 2, detected: 1 });
    }

    #[test]
    fn flat_trace_has_no_plateaus() {
        let trace = synth(&[(40, 2.0)]);
        let err = segment_phases(&trace, &ExperimentTimeline::new(1), &SegmentationConfig::default()).unwrap_err();
        assert_eq!(err, TraceError::SegmentationFailure { expected: 1, detected: 0 });
    }

    #[test]
    fn engine_load_prelude() {
        let trace = synth(&[
            (5, 2.0),
            (6, 3.5),
            (10, 2.0),
            (2, 3.0),
            (5, 2.0),
            (8, 6.0),
            (10, 2.0),
            (2, 3.0),
            (5, 2.0),
            (9, 6.2),
            (4, 2.0),
        ]);
        let mut tl = ExperimentTimeline::new(2);
        tl.has_engine_load_prelude = true;
        let ws = segment_phases(&trace, &tl, &SegmentationConfig::default()).unwrap();
        assert_eq!(ws.len(), 7);
        assert_eq!(ws[0].kind, PhaseKind::EngineLoad);
        assert_eq!((ws[0].start_index, ws[0].end_index), (5, 11));
        assert_eq!((ws[3].start_index, ws[3].end_index), (28, 36));
        assert_eq!((ws[6].start_index, ws[6].end_index), (53, 62));
        assert_eq!(ws[6].dataset_ordinal, Some(1));
    }

    #[test]
    fn high_engine_load_does_not_count_as_inference() {
        // Engine load above the inference plateau height.
        let trace = synth(&[(5, 2.0), (6, 8.0), (10, 2.0), (2, 3.0), (5, 2.0), (8, 6.0), (4, 2.0)]);
        let mut tl = ExperimentTimeline::new(1);
        tl.has_engine_load_prelude = true;
        let ws = segment_phases(&trace, &tl, &SegmentationConfig::default()).unwrap();
        assert_eq!((ws[3].start_index, ws[3].end_index), (28, 36));
    }

    #[test]
    fn missing_load_is_a_structure_error() {
        let trace = synth(&[(10, 2.0), (8, 5.0), (3, 2.0)]);
        let err = segment_phases(&trace, &ExperimentTimeline::new(1), &SegmentationConfig::default()).unwrap_err();
        assert_eq!(err.name(), "PhaseStructure");
    }

    #[test]
    fn short_dropout_inside_plateau_is_merged() {
        let trace = synth(&[(10, 2.0), (3, 3.0), (5, 2.0), (4, 5.0), (1, 2.5), (4, 5.0), (3, 2.0)]);
        let ws = segment_phases(&trace, &ExperimentTimeline::new(1), &SegmentationConfig::default()).unwrap();
        assert_eq!((ws[2].start_index, ws[2].end_index), (18, 27));
    }

    #[test]
    fn windows_are_disjoint_and_sorted() {
        let mut segs = vec![];
        for k in 0..5 {
            segs.extend([(12, 2.0), (3, 2.8), (5, 2.0), (6 + k, 4.5 + 0.1 * k as f64)]);
        }
        segs.push((5, 2.0));
        let trace = synth(&segs);
        let ws = segment_phases(&trace, &ExperimentTimeline::new(5), &SegmentationConfig::default()).unwrap();
        assert_eq!(ws.len(), 15);
        for pair in ws.windows(2) {
            assert!(pair[0].end_index <= pair[1].start_index);
        }
        assert!(ws.iter().all(|w| w.end_index <= trace.len() && !w.is_empty()));
    }
}
