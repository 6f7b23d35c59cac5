//! CSV formats for latency, energy, series, fit and speed-up tables, plus the
//! bundled reference tables.
//!
//! Readers locate columns by header name, so column order is free, but every
//! required column must be present and unknown columns are rejected. Writers
//! emit the canonical column order with LF line endings.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::analysis::{EnergyRow, FitWeighting, HyperbolicFit, SpeedupResult};
use crate::quality::{ConfusionMatrix, QualityStats};
use crate::stats::fmt_min_decimals;
use crate::timing::{DeviceConfig, Latency, LatencyRecord, TaskKind};
use crate::trace::parse_decimal;

pub const LATENCY_HEADER: &str = "task,device,power_mode,dataset_size,per_image_ms,std_ms,anomalous,error";
pub const ENERGY_HEADER: &str = "task,device,power_mode,dataset_size,mean_power_w,power_std_w,energy_mj";
pub const SERIES_HEADER: &str = "dataset_size,per_image_ms";
pub const FIT_HEADER: &str =
    "task,device,power_mode,weighting,overload_term_ot,independent_term_it,residual_rms";
pub const SPEEDUP_HEADER: &str =
    "task,slow_device,slow_power_mode,fast_device,fast_power_mode,value,argmin_dataset_size";
pub const QUALITY_HEADER: &str = "task,comparison,metric,mean,std,count";
pub const CONFUSION_HEADER: &str = "matrix,true_label,glaucoma,healthy";

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture not found: {0}")]
    NotFound(String),
    #[error("malformed fixture at line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FixtureError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NotFound(_) => "FixtureNotFound",
            Self::Malformed { .. } => "MalformedFixture",
            Self::Io { .. } => "Io",
        }
    }

    fn at(line: u64, reason: impl Into<String>) -> Self {
        Self::Malformed {
            line,
            reason: reason.into(),
        }
    }
}

/// Reads a fixture file, mapping a missing file to [`FixtureError::NotFound`].
pub fn read_fixture(path: &Path) -> Result<String, FixtureError> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            FixtureError::NotFound(path.display().to_string())
        } else {
            FixtureError::Io {
                path: path.display().to_string(),
                source,
            }
        }
    })
}

/// Rows of a CSV table with named-column access.
struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn parse(text: &str, required: &[&str], optional: &[&str]) -> Result<Self, FixtureError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| FixtureError::at(1, e.to_string()))?
            .clone();
        let mut columns = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if !required.contains(&h) && !optional.contains(&h) {
                return Err(FixtureError::at(1, format!("unknown column '{h}'")));
            }
            if columns.insert(h.to_string(), i).is_some() {
                return Err(FixtureError::at(1, format!("duplicate column '{h}'")));
            }
        }
        if let Some(missing) = required.iter().find(|c| !columns.contains_key(**c)) {
            return Err(FixtureError::at(1, format!("missing column '{missing}'")));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                FixtureError::at(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push((line, record));
        }
        Ok(Self { columns, rows })
    }

    fn has(&self, column: &str) -> bool {
        self.columns.contains_key(column)
    }
}

struct Row<'a> {
    table: &'a Table,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, column: &str) -> &str {
        self.table
            .columns
            .get(column)
            .and_then(|&i| self.record.get(i))
            .unwrap_or("")
    }

    fn err(&self, reason: impl Into<String>) -> FixtureError {
        FixtureError::at(self.line, reason)
    }

    fn number(&self, column: &str) -> Result<f64, FixtureError> {
        let raw = self.raw(column);
        parse_decimal(raw).ok_or_else(|| self.err(format!("{column}: '{raw}' is not a number")))
    }

    fn non_negative(&self, column: &str) -> Result<f64, FixtureError> {
        let v = self.number(column)?;
        if v < 0.0 {
            return Err(self.err(format!("{column}: {v} is negative")));
        }
        Ok(v)
    }

    fn optional_number(&self, column: &str) -> Result<Option<f64>, FixtureError> {
        if self.raw(column).is_empty() {
            Ok(None)
        } else {
            self.non_negative(column).map(Some)
        }
    }

    fn size(&self, column: &str) -> Result<u32, FixtureError> {
        let raw = self.raw(column);
        match raw.parse::<u32>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(self.err(format!("{column}: '{raw}' is not a positive integer"))),
        }
    }

    fn task(&self, column: &str) -> Result<TaskKind, FixtureError> {
        self.raw(column).parse().map_err(|e| self.err(format!("{e}")))
    }

    fn device(&self, name_col: &str, mode_col: &str) -> Result<DeviceConfig, FixtureError> {
        let name = self.raw(name_col);
        if name.is_empty() {
            return Err(self.err(format!("{name_col} is empty")));
        }
        Ok(DeviceConfig::new(name, Some(self.raw(mode_col))))
    }

    fn boolean(&self, column: &str) -> Result<bool, FixtureError> {
        match self.raw(column) {
            "" | "false" => Ok(false),
            "true" => Ok(true),
            other => Err(self.err(format!("{column}: '{other}' is not true/false"))),
        }
    }
}

fn rows(table: &Table) -> impl Iterator<Item = Row<'_>> {
    table.rows.iter().map(move |(line, record)| Row {
        table,
        line: *line,
        record,
    })
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

fn write_row<const N: usize>(w: &mut csv::Writer<Vec<u8>>, fields: [&str; N]) {
    w.write_record(fields).expect("in-memory writer");
}

fn header_fields(header: &str) -> Vec<&str> {
    header.split(',').collect()
}

// ---------------------------------------------------------------------------
// latency

pub fn parse_latency_csv(text: &str) -> Result<Vec<LatencyRecord>, FixtureError> {
    let table = Table::parse(
        text,
        &["task", "device", "power_mode", "dataset_size", "per_image_ms", "std_ms"],
        &["anomalous", "error"],
    )?;
    rows(&table)
        .map(|row| {
            let task = row.task("task")?;
            let device = row.device("device", "power_mode")?;
            let dataset_size = row.size("dataset_size")?;
            let mean = row.optional_number("per_image_ms")?;
            let std = row.optional_number("std_ms")?;
            let error = Some(row.raw("error").to_string()).filter(|e| !e.is_empty());
            let latency = match (mean, std) {
                (Some(per_image_ms), Some(std_ms)) => Some(Latency {
                    per_image_ms,
                    std_ms,
                }),
                (None, None) if error.is_some() => None,
                (None, None) => return Err(row.err("per_image_ms is empty but no error is given")),
                _ => return Err(row.err("per_image_ms and std_ms must both be present or both empty")),
            };
            let anomalous = row.boolean("anomalous")?;
            if latency.is_none() && !anomalous && table.has("anomalous") {
                return Err(row.err("failed rows must be flagged anomalous"));
            }
            Ok(LatencyRecord {
                task,
                device,
                dataset_size,
                latency,
                anomalous: anomalous || latency.is_none(),
                error,
            })
        })
        .collect()
}

pub fn write_latency_csv(records: &[LatencyRecord]) -> String {
    let mut w = writer();
    write_row::<8>(&mut w, header_fields(LATENCY_HEADER).try_into().expect("8 columns"));
    for r in records {
        let (mean, std) = match r.latency {
            Some(l) => (fmt_min_decimals(l.per_image_ms, 2), fmt_min_decimals(l.std_ms, 2)),
            None => (String::new(), String::new()),
        };
        let size = r.dataset_size.to_string();
        write_row(
            &mut w,
            [
                r.task.as_str(),
                &r.device.name,
                r.device.power_mode.as_deref().unwrap_or(""),
                &size,
                &mean,
                &std,
                if r.anomalous { "true" } else { "false" },
                r.error.as_deref().unwrap_or(""),
            ],
        );
    }
    finish(w)
}

// ---------------------------------------------------------------------------
// energy

pub fn parse_energy_csv(text: &str) -> Result<Vec<EnergyRow>, FixtureError> {
    let table = Table::parse(text, &header_fields(ENERGY_HEADER), &[])?;
    rows(&table)
        .map(|row| {
            Ok(EnergyRow {
                task: row.task("task")?,
                device: row.device("device", "power_mode")?,
                dataset_size: row.size("dataset_size")?,
                mean_power_w: row.non_negative("mean_power_w")?,
                power_std_w: row.non_negative("power_std_w")?,
                energy_mj: row.non_negative("energy_mj")?,
            })
        })
        .collect()
}

pub fn write_energy_csv(rows: &[EnergyRow]) -> String {
    let mut w = writer();
    write_row::<7>(&mut w, header_fields(ENERGY_HEADER).try_into().expect("7 columns"));
    for r in rows {
        write_row(
            &mut w,
            [
                r.task.as_str(),
                &r.device.name,
                r.device.power_mode.as_deref().unwrap_or(""),
                &r.dataset_size.to_string(),
                &fmt_min_decimals(r.mean_power_w, 1),
                &fmt_min_decimals(r.power_std_w, 1),
                &fmt_min_decimals(r.energy_mj, 0),
            ],
        );
    }
    finish(w)
}

// ---------------------------------------------------------------------------
// series

/// `(dataset_size, per_image_ms)` points from either a plain series file or a
/// latency fixture; anomalous and failed rows are dropped.
pub fn parse_series(text: &str) -> Result<Vec<(u32, f64)>, FixtureError> {
    let first_line = text.trim_start_matches('\u{feff}').lines().next().unwrap_or("");
    if first_line.split(',').any(|c| c.trim() == "task") {
        return Ok(parse_latency_csv(text)?
            .iter()
            .filter_map(|r| r.usable_ms().map(|ms| (r.dataset_size, ms)))
            .collect());
    }
    let table = Table::parse(text, &header_fields(SERIES_HEADER), &[])?;
    rows(&table)
        .map(|row| Ok((row.size("dataset_size")?, row.non_negative("per_image_ms")?)))
        .collect()
}

pub fn write_series(points: &[(u32, f64)]) -> String {
    let mut out = format!("{SERIES_HEADER}\n");
    for (n, t) in points {
        out.push_str(&format!("{n},{}\n", fmt_min_decimals(*t, 2)));
    }
    out
}

// ---------------------------------------------------------------------------
// fits

/// A fit together with the series it was computed from, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct FitEntry {
    pub task: Option<TaskKind>,
    pub device: Option<DeviceConfig>,
    pub weighting: FitWeighting,
    pub fit: HyperbolicFit,
}

pub fn parse_fit_csv(text: &str) -> Result<Vec<FitEntry>, FixtureError> {
    let table = Table::parse(text, &header_fields(FIT_HEADER), &[])?;
    rows(&table)
        .map(|row| {
            let task = if row.raw("task").is_empty() {
                None
            } else {
                Some(row.task("task")?)
            };
            let device = if row.raw("device").is_empty() {
                None
            } else {
                Some(row.device("device", "power_mode")?)
            };
            let weighting = match row.raw("weighting") {
                "" | "uniform" => FitWeighting::Uniform,
                "inverse_size" => FitWeighting::InverseSize,
                other => return Err(row.err(format!("unknown weighting '{other}'"))),
            };
            Ok(FitEntry {
                task,
                device,
                weighting,
                fit: HyperbolicFit {
                    overload_term_ot: row.number("overload_term_ot")?,
                    independent_term_it: row.number("independent_term_it")?,
                    residual_rms: row.non_negative("residual_rms")?,
                },
            })
        })
        .collect()
}

pub fn write_fit_csv(entries: &[FitEntry]) -> String {
    let mut w = writer();
    write_row::<7>(&mut w, header_fields(FIT_HEADER).try_into().expect("7 columns"));
    for e in entries {
        write_row(
            &mut w,
            [
                e.task.map_or("", TaskKind::as_str),
                e.device.as_ref().map_or("", |d| d.name.as_str()),
                e.device
                    .as_ref()
                    .and_then(|d| d.power_mode.as_deref())
                    .unwrap_or(""),
                match e.weighting {
                    FitWeighting::Uniform => "uniform",
                    FitWeighting::InverseSize => "inverse_size",
                },
                &e.fit.overload_term_ot.to_string(),
                &e.fit.independent_term_it.to_string(),
                &e.fit.residual_rms.to_string(),
            ],
        );
    }
    finish(w)
}

// ---------------------------------------------------------------------------
// speed-ups

pub fn parse_speedup_csv(text: &str) -> Result<Vec<SpeedupResult>, FixtureError> {
    let table = Table::parse(text, &header_fields(SPEEDUP_HEADER), &[])?;
    rows(&table)
        .map(|row| {
            let value = row.number("value")?;
            if value <= 0.0 {
                return Err(row.err("speed-up must be positive"));
            }
            Ok(SpeedupResult {
                scenario: row.task("task")?,
                slow: row.device("slow_device", "slow_power_mode")?,
                fast: row.device("fast_device", "fast_power_mode")?,
                value,
                argmin_dataset_size: row.size("argmin_dataset_size")?,
            })
        })
        .collect()
}

pub fn write_speedup_csv(results: &[SpeedupResult]) -> String {
    let mut w = writer();
    write_row::<7>(&mut w, header_fields(SPEEDUP_HEADER).try_into().expect("7 columns"));
    for r in results {
        write_row(
            &mut w,
            [
                r.scenario.as_str(),
                &r.slow.name,
                r.slow.power_mode.as_deref().unwrap_or(""),
                &r.fast.name,
                r.fast.power_mode.as_deref().unwrap_or(""),
                &r.value.to_string(),
                &r.argmin_dataset_size.to_string(),
            ],
        );
    }
    finish(w)
}

// ---------------------------------------------------------------------------
// quality

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QualityMetric {
    Dice,
    ClassificationError,
}

impl QualityMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            QualityMetric::Dice => "dice",
            QualityMetric::ClassificationError => "classification_error",
        }
    }
}

/// Aggregate agreement between a reference and a candidate device.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityEntry {
    pub task: TaskKind,
    /// Column label, e.g. `Colab vs. Jetson Nano`.
    pub comparison: String,
    pub metric: QualityMetric,
    pub stats: QualityStats,
}

pub fn parse_quality_csv(text: &str) -> Result<Vec<QualityEntry>, FixtureError> {
    let table = Table::parse(text, &header_fields(QUALITY_HEADER), &[])?;
    rows(&table)
        .map(|row| {
            let metric = match row.raw("metric") {
                "dice" => QualityMetric::Dice,
                "classification_error" => QualityMetric::ClassificationError,
                other => return Err(row.err(format!("unknown metric '{other}'"))),
            };
            let count = row
                .raw("count")
                .parse::<usize>()
                .map_err(|_| row.err(format!("count: '{}' is not an integer", row.raw("count"))))?;
            Ok(QualityEntry {
                task: row.task("task")?,
                comparison: row.raw("comparison").to_string(),
                metric,
                stats: QualityStats {
                    mean: row.non_negative("mean")?,
                    std: row.non_negative("std")?,
                    count,
                },
            })
        })
        .collect()
}

pub fn write_quality_csv(entries: &[QualityEntry]) -> String {
    let mut w = writer();
    write_row::<6>(&mut w, header_fields(QUALITY_HEADER).try_into().expect("6 columns"));
    for e in entries {
        write_row(
            &mut w,
            [
                e.task.as_str(),
                &e.comparison,
                e.metric.as_str(),
                &e.stats.mean.to_string(),
                &e.stats.std.to_string(),
                &e.stats.count.to_string(),
            ],
        );
    }
    finish(w)
}

/// Named 2x2 count matrices, one CSV row per true label.
pub fn parse_confusion_csv(text: &str) -> Result<Vec<(String, ConfusionMatrix)>, FixtureError> {
    let table = Table::parse(text, &header_fields(CONFUSION_HEADER), &[])?;
    let mut out: Vec<(String, [Option<[u64; 2]>; 2])> = Vec::new();
    for row in rows(&table) {
        let name = row.raw("matrix").to_string();
        let idx = match row.raw("true_label") {
            "glaucoma" => 0,
            "healthy" => 1,
            other => return Err(row.err(format!("unknown label '{other}'"))),
        };
        let count = |col: &str| {
            row.raw(col)
                .parse::<u64>()
                .map_err(|_| row.err(format!("{col}: '{}' is not a count", row.raw(col))))
        };
        let counts = [count("glaucoma")?, count("healthy")?];
        let pos = match out.iter().position(|(n, _)| *n == name) {
            Some(p) => p,
            None => {
                out.push((name.clone(), [None, None]));
                out.len() - 1
            }
        };
        if out[pos].1[idx].replace(counts).is_some() {
            return Err(row.err(format!("matrix '{name}' repeats a row")));
        }
    }
    out.into_iter()
        .map(|(name, rows)| match rows {
            [Some(g), Some(h)] => Ok((name, ConfusionMatrix { counts: [g, h] })),
            _ => Err(FixtureError::at(0, format!("matrix '{name}' needs a glaucoma and a healthy row"))),
        })
        .collect()
}

pub fn write_confusion_csv(matrices: &[(String, ConfusionMatrix)]) -> String {
    let mut w = writer();
    write_row::<4>(&mut w, header_fields(CONFUSION_HEADER).try_into().expect("4 columns"));
    for (name, m) in matrices {
        for (label, row) in ["glaucoma", "healthy"].iter().zip(m.counts) {
            write_row(&mut w, [name.as_str(), label, &row[0].to_string(), &row[1].to_string()]);
        }
    }
    finish(w)
}

// ---------------------------------------------------------------------------
// bundled reference tables

/// The reference tables shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundledTable {
    /// Per-image latency, OD segmentation.
    A1,
    /// Per-image latency, OC segmentation.
    A2,
    /// Per-image latency, fundus classification.
    A3,
    /// Power and energy, OD segmentation.
    B1,
    /// Power and energy, OC segmentation.
    B2,
    /// Power and energy, fundus classification.
    B3,
}

impl BundledTable {
    pub fn text(self) -> &'static str {
        match self {
            BundledTable::A1 => include_str!("../../../fixtures/a1.csv"),
            BundledTable::A2 => include_str!("../../../fixtures/a2.csv"),
            BundledTable::A3 => include_str!("../../../fixtures/a3.csv"),
            BundledTable::B1 => include_str!("../../../fixtures/b1.csv"),
            BundledTable::B2 => include_str!("../../../fixtures/b2.csv"),
            BundledTable::B3 => include_str!("../../../fixtures/b3.csv"),
        }
    }

    pub fn latency(task: TaskKind) -> BundledTable {
        match task {
            TaskKind::OdSegmentation => BundledTable::A1,
            TaskKind::OcSegmentation => BundledTable::A2,
            TaskKind::FundusClassification => BundledTable::A3,
        }
    }

    pub fn energy(task: TaskKind) -> BundledTable {
        match task {
            TaskKind::OdSegmentation => BundledTable::B1,
            TaskKind::OcSegmentation => BundledTable::B2,
            TaskKind::FundusClassification => BundledTable::B3,
        }
    }
}

/// Latency records of a bundled A table.
pub fn bundled_latency(task: TaskKind) -> Vec<LatencyRecord> {
    parse_latency_csv(BundledTable::latency(task).text()).expect("bundled fixture parses")
}

/// Energy rows of a bundled B table.
pub fn bundled_energy(task: TaskKind) -> Vec<EnergyRow> {
    parse_energy_csv(BundledTable::energy(task).text()).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_tables_have_expected_shape() {
        for task in TaskKind::ALL {
            let lat = bundled_latency(task);
            assert_eq!(lat.len(), 5 * 33);
            let energy = bundled_energy(task);
            assert_eq!(energy.len(), 3 * 10);
        }
        let a3 = bundled_latency(TaskKind::FundusClassification);
        assert_eq!(a3.iter().filter(|r| r.anomalous).count(), 5);
        assert_eq!(a3.iter().filter(|r| r.latency.is_none()).count(), 2);
    }

    #[test]
    fn bundled_latency_round_trips_byte_for_byte() {
        for a in [BundledTable::A1, BundledTable::A2, BundledTable::A3] {
            let parsed = parse_latency_csv(a.text()).unwrap();
            assert_eq!(write_latency_csv(&parsed), a.text());
        }
        for b in [BundledTable::B1, BundledTable::B2, BundledTable::B3] {
            let parsed = parse_energy_csv(b.text()).unwrap();
            assert_eq!(write_energy_csv(&parsed), b.text());
        }
    }

    #[test]
    fn latency_columns_may_be_reordered() {
        let text = "dataset_size,task,device,power_mode,std_ms,per_image_ms\n10,od,edge_tpu,,1.10,8.80\n";
        let r = parse_latency_csv(text).unwrap();
        assert_eq!(r[0].per_image_ms(), Some(8.8));
        assert!(!r[0].anomalous);
    }

    #[test]
    fn latency_errors() {
        let bad = [
            "task,device\nod,edge_tpu\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms,extra\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nxx,edge_tpu,,10,1,1\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nod,edge_tpu,,0,1,1\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nod,edge_tpu,,10,-1,1\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nod,edge_tpu,,10,,\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nod,edge_tpu,,10,1,\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms,anomalous\nod,edge_tpu,,10,1,1,maybe\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nod,,,10,1,1\n",
            "task,device,power_mode,dataset_size,per_image_ms,std_ms\nod,edge_tpu,,10,1\n",
        ];
        for text in bad {
            let err = parse_latency_csv(text).unwrap_err();
            assert_eq!(err.name(), "MalformedFixture", "{text:?}");
        }
    }

    #[test]
    fn series_from_either_format() {
        let pts = parse_series("dataset_size,per_image_ms\n10,73.61\n20,39.09\n").unwrap();
        assert_eq!(pts, vec![(10, 73.61), (20, 39.09)]);
        let a3 = parse_series(include_str!("../../../fixtures/a3_edgetpu.csv")).unwrap();
        assert_eq!(a3.len(), 30);
        assert_eq!(parse_series(&write_series(&pts)).unwrap(), pts);
    }

    #[test]
    fn missing_file() {
        let err = read_fixture(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert_eq!(err.name(), "FixtureNotFound");
    }

    #[test]
    fn fit_and_speedup_round_trip() {
        let entry = FitEntry {
            task: Some(TaskKind::OdSegmentation),
            device: Some(DeviceConfig::new("colab_tpu", None)),
            weighting: FitWeighting::Uniform,
            fit: HyperbolicFit {
                overload_term_ot: 672.867_213_41,
                independent_term_it: 5.742_291_74,
                residual_rms: 0.415,
            },
        };
        assert_eq!(parse_fit_csv(&write_fit_csv(std::slice::from_ref(&entry))).unwrap(), vec![entry]);
        let sp = SpeedupResult {
            scenario: TaskKind::FundusClassification,
            slow: DeviceConfig::new("maxwell_gpu", Some("MaxN")),
            fast: DeviceConfig::new("edge_tpu", None),
            value: 1.25,
            argmin_dataset_size: 20,
        };
        assert_eq!(parse_speedup_csv(&write_speedup_csv(std::slice::from_ref(&sp))).unwrap(), vec![sp]);
    }

    fn record() -> impl Strategy<Value = LatencyRecord> {
        (
            prop::sample::select(TaskKind::ALL.to_vec()),
            prop::sample::select(vec![("edge_tpu", None), ("maxwell_gpu", Some("5W")), ("colab_tpu", None)]),
            1u32..5000,
            prop::option::of((0.001f64..1e4, 0.0f64..1e3)),
            any::<bool>(),
        )
            .prop_map(|(task, (dev, mode), n, lat, anomalous)| match lat {
                Some((m, s)) => LatencyRecord {
                    anomalous,
                    ..LatencyRecord::measured(task, DeviceConfig::new(dev, mode), n, m, s)
                },
                None => LatencyRecord::failed(task, DeviceConfig::new(dev, mode), n, "memory error, out of RAM"),
            })
    }

    #[test]
    fn quality_and_confusion_round_trip() {
        let entries = vec![QualityEntry {
            task: TaskKind::OdSegmentation,
            comparison: "Colab vs. Jetson Nano".into(),
            metric: QualityMetric::Dice,
            stats: QualityStats {
                mean: 0.999,
                std: 0.001,
                count: 50,
            },
        }];
        assert_eq!(parse_quality_csv(&write_quality_csv(&entries)).unwrap(), entries);
        let m = vec![("human".to_string(), ConfusionMatrix { counts: [[67, 33], [13, 87]] })];
        let text = write_confusion_csv(&m);
        assert_eq!(text, "matrix,true_label,glaucoma,healthy\nhuman,glaucoma,67,33\nhuman,healthy,13,87\n");
        assert_eq!(parse_confusion_csv(&text).unwrap(), m);
        let half = "matrix,true_label,glaucoma,healthy\nx,glaucoma,1,2\n";
        assert_eq!(parse_confusion_csv(half).unwrap_err().name(), "MalformedFixture");
        let twice = "matrix,true_label,glaucoma,healthy\nx,healthy,1,2\nx,healthy,1,2\n";
        assert_eq!(parse_confusion_csv(twice).unwrap_err().name(), "MalformedFixture");
    }

    proptest! {
        #[test]
        fn latency_csv_round_trips(records in proptest::collection::vec(record(), 0..20)) {
            let text = write_latency_csv(&records);
            let parsed = parse_latency_csv(&text).unwrap();
            prop_assert_eq!(&parsed, &records);
            prop_assert_eq!(write_latency_csv(&parsed), text);
        }

        #[test]
        fn parsers_never_panic(text in "\\PC{0,200}") {
            let _ = parse_latency_csv(&text);
            let _ = parse_energy_csv(&text);
            let _ = parse_series(&text);
            let _ = parse_fit_csv(&text);
            let _ = parse_speedup_csv(&text);
        }
    }
}
