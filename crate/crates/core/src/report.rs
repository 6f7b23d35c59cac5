//! Tables and plot-data files.
//!
//! Rendering is a pure function of the bundle: identical inputs give
//! byte-identical files. Markdown cells use `mean ± std`; CSV keeps mean and
//! std in separate columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{summarize_all, EnergyRow, EnergySummary, FitWeighting, HyperbolicFit, SpeedupResult};
use crate::fixture::{
    self, FitEntry, FixtureError, QualityEntry, QualityMetric, CONFUSION_HEADER, ENERGY_HEADER, FIT_HEADER,
    LATENCY_HEADER, QUALITY_HEADER, SPEEDUP_HEADER,
};
use crate::quality::{normalize_confusion, ConfusionMatrix, QualityError};
use crate::stats::{fmt_fixed, fmt_min_decimals, round_half_away};
use crate::timing::{DeviceConfig, DeviceSortKey, LatencyRecord, TaskKind};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    EmptyBundle,
    #[error("no records to plot")]
    EmptyInput,
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

impl ReportError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EmptyBundle => "EmptyBundle",
            Self::EmptyInput => "EmptyInput",
            Self::Io(_) => "Io",
            Self::Fixture(e) => e.name(),
            Self::Quality(e) => e.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Csv,
    #[default]
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(format!("unknown format '{s}' (expected csv or markdown)")),
        }
    }
}

/// Everything a report can show. The energy summary is derived from
/// `energy`; the other tables are rendered as given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub latency: Vec<LatencyRecord>,
    pub energy: Vec<EnergyRow>,
    pub speedups: Vec<SpeedupResult>,
    pub fits: Vec<FitEntry>,
    pub quality: Vec<QualityEntry>,
    /// Raw counts; rendered row-normalized.
    pub confusion: Vec<(String, ConfusionMatrix)>,
}

impl ReportBundle {
    pub fn is_empty(&self) -> bool {
        self.latency.is_empty()
            && self.energy.is_empty()
            && self.speedups.is_empty()
            && self.fits.is_empty()
            && self.quality.is_empty()
            && self.confusion.is_empty()
    }

    pub fn summary(&self) -> Vec<EnergySummary> {
        summarize_all(&self.energy)
    }

    /// Adds latency records, keeping the first record for any repeated
    /// (task, device, size).
    pub fn add_latency(&mut self, records: impl IntoIterator<Item = LatencyRecord>) {
        let mut seen: BTreeSet<(TaskKind, String, u32)> =
            self.latency.iter().map(|r| (r.task, r.device.slug(), r.dataset_size)).collect();
        for r in records {
            if seen.insert((r.task, r.device.slug(), r.dataset_size)) {
                self.latency.push(r);
            } else {
                log::debug!("skipping repeated latency row {} {} {}", r.task, r.device, r.dataset_size);
            }
        }
    }

    pub fn add_energy(&mut self, rows: impl IntoIterator<Item = EnergyRow>) {
        let mut seen: BTreeSet<(TaskKind, String, u32)> =
            self.energy.iter().map(|r| (r.task, r.device.slug(), r.dataset_size)).collect();
        for r in rows {
            if seen.insert((r.task, r.device.slug(), r.dataset_size)) {
                self.energy.push(r);
            }
        }
    }
}

/// A rendered file, relative to the report root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub path: PathBuf,
    pub contents: String,
}

fn file(path: impl Into<PathBuf>, contents: String) -> RenderedFile {
    RenderedFile {
        path: path.into(),
        contents,
    }
}

fn fixed(x: f64, places: u32) -> String {
    fmt_fixed(round_half_away(x, places), places)
}

fn pm(mean: f64, std: f64, places: u32) -> String {
    format!("{} ± {}", fixed(mean, places), fixed(std, places))
}

fn shape_label(task: TaskKind, n: u32) -> String {
    let (h, w, c) = task.input_shape();
    format!("({n}, {h}, {w}, {c})")
}

fn md_table(caption: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("**{caption}**\n\n");
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory writer");
    for r in rows {
        w.write_record(r).expect("in-memory writer");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

fn devices_of<'a>(devices: impl Iterator<Item = &'a DeviceConfig>) -> Vec<DeviceConfig> {
    let mut map: BTreeMap<_, DeviceConfig> = BTreeMap::new();
    for d in devices {
        map.entry(d.sort_key()).or_insert_with(|| d.clone());
    }
    map.into_values().collect()
}

fn tasks_of(tasks: impl Iterator<Item = TaskKind>) -> Vec<TaskKind> {
    tasks.collect::<BTreeSet<_>>().into_iter().collect()
}

fn latency_markdown(task: TaskKind, records: &[&LatencyRecord]) -> String {
    let devices = devices_of(records.iter().map(|r| &r.device));
    let sizes: BTreeSet<u32> = records.iter().map(|r| r.dataset_size).collect();
    let mut header = vec!["Dataset (shape)".to_string()];
    header.extend(devices.iter().map(DeviceConfig::label));
    let rows: Vec<Vec<String>> = sizes
        .iter()
        .map(|&n| {
            let mut row = vec![shape_label(task, n)];
            for d in &devices {
                let rec = records.iter().find(|r| r.dataset_size == n && r.device.same_device(d));
                row.push(match rec {
                    None => "-".into(),
                    Some(r) => {
                        let cell = match (r.latency, &r.error) {
                            (Some(l), _) => pm(l.per_image_ms, l.std_ms, 2),
                            (None, Some(e)) => e.replace('_', " "),
                            (None, None) => "-".into(),
                        };
                        if r.anomalous {
                            format!("**{cell}**")
                        } else {
                            cell
                        }
                    }
                });
            }
            row
        })
        .collect();
    md_table(
        &format!("Per-image prediction times for {} (ms).", task.label()),
        &header,
        &rows,
    )
}

fn energy_markdown(task: TaskKind, rows_in: &[&EnergyRow]) -> String {
    let devices = devices_of(rows_in.iter().map(|r| &r.device));
    let sizes: BTreeSet<u32> = rows_in.iter().map(|r| r.dataset_size).collect();
    let mut header = vec!["Dataset (shape)".to_string()];
    for d in &devices {
        header.push(format!("{} power (W)", d.label()));
        header.push(format!("{} energy (mJ)", d.label()));
    }
    let rows: Vec<Vec<String>> = sizes
        .iter()
        .map(|&n| {
            let mut row = vec![shape_label(task, n)];
            for d in &devices {
                match rows_in.iter().find(|r| r.dataset_size == n && r.device.same_device(d)) {
                    Some(r) => {
                        row.push(pm(r.mean_power_w, r.power_std_w, 1));
                        row.push(fixed(r.energy_mj, 0));
                    }
                    None => row.extend(["-".to_string(), "-".to_string()]),
                }
            }
            row
        })
        .collect();
    md_table(
        &format!("Mean power and per-image energy for {} (W, mJ).", task.label()),
        &header,
        &rows,
    )
}

fn summary_tables(summary: &[EnergySummary]) -> (String, String) {
    let devices = devices_of(summary.iter().map(|s| &s.device));
    let tasks = tasks_of(summary.iter().map(|s| s.task));
    let mut header = vec!["Task".to_string()];
    for d in &devices {
        header.push(format!("{} power (W)", d.label()));
        header.push(format!("{} energy (mJ)", d.label()));
    }
    let md_rows: Vec<Vec<String>> = tasks
        .iter()
        .map(|&t| {
            let mut row = vec![t.label().to_string()];
            for d in &devices {
                match summary.iter().find(|s| s.task == t && s.device.same_device(d)) {
                    Some(s) => {
                        row.push(pm(s.mean_power_w, s.power_std_w, 1));
                        row.push(pm(s.energy_mj, s.energy_std_mj, 1));
                    }
                    None => row.extend(["-".to_string(), "-".to_string()]),
                }
            }
            row
        })
        .collect();
    let md = md_table("Mean power and per-image energy by task and device (W, mJ).", &header, &md_rows);
    let csv_rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.task.as_str().to_string(),
                s.device.name.clone(),
                s.device.power_mode.clone().unwrap_or_default(),
                fixed(s.mean_power_w, 1),
                fixed(s.power_std_w, 1),
                fixed(s.energy_mj, 1),
                fixed(s.energy_std_mj, 1),
                s.rows.to_string(),
            ]
        })
        .collect();
    let csv = csv_table(
        &["task", "device", "power_mode", "mean_power_w", "power_std_w", "energy_mj", "energy_std_mj", "rows"],
        &csv_rows,
    );
    (csv, md)
}

fn speedup_tables(results: &[SpeedupResult]) -> (String, String) {
    let mut pairs: BTreeMap<_, (DeviceConfig, DeviceConfig)> = BTreeMap::new();
    for r in results {
        pairs
            .entry((r.fast.sort_key(), r.slow.sort_key()))
            .or_insert_with(|| (r.fast.clone(), r.slow.clone()));
    }
    let pairs: Vec<_> = pairs.into_values().collect();
    let tasks = tasks_of(results.iter().map(|r| r.scenario));
    let mut header = vec!["Task".to_string()];
    header.extend(pairs.iter().map(|(f, s)| format!("{} vs. {}", f.label(), s.label())));
    let md_rows: Vec<Vec<String>> = tasks
        .iter()
        .map(|&t| {
            let mut row = vec![t.label().to_string()];
            for (f, s) in &pairs {
                row.push(
                    results
                        .iter()
                        .find(|r| r.scenario == t && r.fast.same_device(f) && r.slow.same_device(s))
                        .map_or_else(|| "-".to_string(), |r| fixed(r.value, 2)),
                );
            }
            row
        })
        .collect();
    let md = md_table("Minimum speed-ups (slower over faster per-image time).", &header, &md_rows);
    let csv_rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.scenario.as_str().to_string(),
                r.slow.name.clone(),
                r.slow.power_mode.clone().unwrap_or_default(),
                r.fast.name.clone(),
                r.fast.power_mode.clone().unwrap_or_default(),
                fixed(r.value, 2),
                r.argmin_dataset_size.to_string(),
            ]
        })
        .collect();
    (csv_table(&SPEEDUP_HEADER.split(',').collect::<Vec<_>>(), &csv_rows), md)
}

fn weighting_name(w: FitWeighting) -> &'static str {
    match w {
        FitWeighting::Uniform => "uniform",
        FitWeighting::InverseSize => "inverse_size",
    }
}

fn fit_tables(fits: &[FitEntry]) -> (String, String) {
    let cells = |e: &FitEntry| {
        vec![
            e.task.map_or_else(|| "-".to_string(), |t| t.label().to_string()),
            e.device.as_ref().map_or_else(|| "-".to_string(), DeviceConfig::label),
            weighting_name(e.weighting).to_string(),
            fixed(e.fit.overload_term_ot, 3),
            fixed(e.fit.independent_term_it, 3),
            fixed(e.fit.residual_rms, 3),
        ]
    };
    let header: Vec<String> = ["Task", "Device", "Weighting", "OT (ms·images)", "IT (ms)", "Residual RMS (ms)"]
        .map(String::from)
        .to_vec();
    let md = md_table(
        "Fitted latency model t(n) = OT / n + IT.",
        &header,
        &fits.iter().map(cells).collect::<Vec<_>>(),
    );
    let csv_rows: Vec<Vec<String>> = fits
        .iter()
        .map(|e| {
            vec![
                e.task.map_or("", TaskKind::as_str).to_string(),
                e.device.as_ref().map_or_else(String::new, |d| d.name.clone()),
                e.device.as_ref().and_then(|d| d.power_mode.clone()).unwrap_or_default(),
                weighting_name(e.weighting).to_string(),
                fixed(e.fit.overload_term_ot, 3),
                fixed(e.fit.independent_term_it, 3),
                fixed(e.fit.residual_rms, 3),
            ]
        })
        .collect();
    (csv_table(&FIT_HEADER.split(',').collect::<Vec<_>>(), &csv_rows), md)
}

fn quality_tables(entries: &[QualityEntry], metric: QualityMetric) -> Option<(String, String)> {
    let entries: Vec<&QualityEntry> = entries.iter().filter(|e| e.metric == metric).collect();
    if entries.is_empty() {
        return None;
    }
    let mut comparisons: Vec<&str> = Vec::new();
    for e in &entries {
        if !comparisons.contains(&e.comparison.as_str()) {
            comparisons.push(&e.comparison);
        }
    }
    let tasks = tasks_of(entries.iter().map(|e| e.task));
    let mut header = vec!["Task".to_string()];
    header.extend(comparisons.iter().map(|c| c.to_string()));
    let rows: Vec<Vec<String>> = tasks
        .iter()
        .map(|&t| {
            let mut row = vec![t.label().to_string()];
            for c in &comparisons {
                row.push(
                    entries
                        .iter()
                        .find(|e| e.task == t && e.comparison == *c)
                        .map_or_else(|| "-".to_string(), |e| pm(e.stats.mean, e.stats.std, 3)),
                );
            }
            row
        })
        .collect();
    let caption = match metric {
        QualityMetric::Dice => "Per-image Dice agreement between reference and candidate masks.",
        QualityMetric::ClassificationError => "Mean classification error between reference and candidate probabilities.",
    };
    let md = md_table(caption, &header, &rows);
    let csv_rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            vec![
                e.task.as_str().to_string(),
                e.comparison.clone(),
                metric.as_str().to_string(),
                fixed(e.stats.mean, 3),
                fixed(e.stats.std, 3),
                e.stats.count.to_string(),
            ]
        })
        .collect();
    Some((csv_table(&QUALITY_HEADER.split(',').collect::<Vec<_>>(), &csv_rows), md))
}

fn confusion_tables(name: &str, m: &ConfusionMatrix) -> Result<(String, String), ReportError> {
    let n = normalize_confusion(m)?;
    let labels = ["Glaucoma", "Healthy"];
    let rows: Vec<Vec<String>> = labels
        .iter()
        .zip(n)
        .map(|(l, r)| vec![l.to_string(), fixed(r[0], 2), fixed(r[1], 2)])
        .collect();
    let header: Vec<String> = ["True \\ predicted", "Glaucoma", "Healthy"].map(String::from).to_vec();
    let md = md_table(&format!("Normalized confusion matrix: {name}."), &header, &rows);
    let csv_rows: Vec<Vec<String>> = ["glaucoma", "healthy"]
        .iter()
        .zip(n)
        .map(|(l, r)| vec![name.to_string(), l.to_string(), fixed(r[0], 2), fixed(r[1], 2)])
        .collect();
    Ok((csv_table(&CONFUSION_HEADER.split(',').collect::<Vec<_>>(), &csv_rows), md))
}

fn slugify(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

/// Plot data `dataset_size,observed_ms,std_ms[,fitted_ms]`, one row per
/// record with a measurement, ascending by size.
pub fn emit_plot_series(records: &[LatencyRecord], fit: Option<&HyperbolicFit>) -> Result<String, ReportError> {
    let mut points: Vec<(u32, f64, f64)> = records
        .iter()
        .filter_map(|r| r.latency.map(|l| (r.dataset_size, l.per_image_ms, l.std_ms)))
        .collect();
    if points.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    points.sort_by_key(|p| p.0);
    let mut out = String::from("dataset_size,observed_ms,std_ms");
    if fit.is_some() {
        out.push_str(",fitted_ms");
    }
    out.push('\n');
    for (n, mean, std) in points {
        let _ = write!(out, "{n},{},{}", fmt_min_decimals(mean, 2), fmt_min_decimals(std, 2));
        if let Some(f) = fit {
            let _ = write!(out, ",{}", fixed(f.predict(n), 4));
        }
        out.push('\n');
    }
    Ok(out)
}

fn fit_for<'a>(fits: &'a [FitEntry], task: TaskKind, device: &DeviceConfig) -> Option<&'a HyperbolicFit> {
    let matching = |e: &&FitEntry| e.task == Some(task) && e.device.as_ref().is_some_and(|d| d.same_device(device));
    fits.iter()
        .filter(matching)
        .find(|e| e.weighting == FitWeighting::Uniform)
        .or_else(|| fits.iter().find(matching))
        .map(|e| &e.fit)
}

/// Renders every table in the bundle.
///
/// Layout: `<task>/latency`, `<task>/energy`, `all/summary`, `all/speedup`,
/// `all/fits`, `all/dice`, `all/classification_error`,
/// `all/confusion_<name>` (each `.csv` or `.md`) and
/// `plots/<task>_<device>.csv`. Markdown output also gets a combined
/// `report.md`.
pub fn render_tables(bundle: &ReportBundle, format: Format) -> Result<Vec<RenderedFile>, ReportError> {
    if bundle.is_empty() {
        return Err(ReportError::EmptyBundle);
    }
    let ext = match format {
        Format::Csv => "csv",
        Format::Markdown => "md",
    };
    let mut files = Vec::new();
    let mut push = |dir: &str, name: &str, (csv, md): (String, String)| {
        let body = match format {
            Format::Csv => csv,
            Format::Markdown => md,
        };
        files.push(file(format!("{dir}/{name}.{ext}"), body));
    };

    for task in tasks_of(bundle.latency.iter().map(|r| r.task)) {
        let mut recs: Vec<&LatencyRecord> = bundle.latency.iter().filter(|r| r.task == task).collect();
        recs.sort_by_key(|a| (a.device.sort_key(), a.dataset_size));
        let owned: Vec<LatencyRecord> = recs.iter().map(|r| (*r).clone()).collect();
        push(task.as_str(), "latency", (fixture::write_latency_csv(&owned), latency_markdown(task, &recs)));
    }
    for task in tasks_of(bundle.energy.iter().map(|r| r.task)) {
        let mut rows: Vec<&EnergyRow> = bundle.energy.iter().filter(|r| r.task == task).collect();
        rows.sort_by_key(|a| (a.device.sort_key(), a.dataset_size));
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.task.as_str().to_string(),
                    r.device.name.clone(),
                    r.device.power_mode.clone().unwrap_or_default(),
                    r.dataset_size.to_string(),
                    fixed(r.mean_power_w, 1),
                    fixed(r.power_std_w, 1),
                    fixed(r.energy_mj, 0),
                ]
            })
            .collect();
        let csv = csv_table(&ENERGY_HEADER.split(',').collect::<Vec<_>>(), &csv_rows);
        push(task.as_str(), "energy", (csv, energy_markdown(task, &rows)));
    }
    if !bundle.energy.is_empty() {
        push("all", "summary", summary_tables(&bundle.summary()));
    }
    if !bundle.speedups.is_empty() {
        push("all", "speedup", speedup_tables(&bundle.speedups));
    }
    if !bundle.fits.is_empty() {
        push("all", "fits", fit_tables(&bundle.fits));
    }
    for metric in [QualityMetric::Dice, QualityMetric::ClassificationError] {
        if let Some(tables) = quality_tables(&bundle.quality, metric) {
            push("all", metric.as_str(), tables);
        }
    }
    for (name, m) in &bundle.confusion {
        push("all", &format!("confusion_{}", slugify(name)), confusion_tables(name, m)?);
    }

    let mut series: BTreeMap<(TaskKind, DeviceSortKey), Vec<LatencyRecord>> = BTreeMap::new();
    for r in &bundle.latency {
        series.entry((r.task, r.device.sort_key())).or_default().push(r.clone());
    }
    for ((task, _), recs) in &series {
        let device = &recs[0].device;
        if let Ok(csv) = emit_plot_series(recs, fit_for(&bundle.fits, *task, device)) {
            files.push(file(format!("plots/{}_{}.csv", task.as_str(), device.slug()), csv));
        }
    }

    if format == Format::Markdown {
        let mut combined = String::from("# Benchmark report\n");
        for f in files.iter().filter(|f| f.path.extension().is_some_and(|e| e == "md")) {
            let _ = write!(combined, "\n## {}\n\n{}", f.path.with_extension("").display(), f.contents);
        }
        files.push(file("report.md", combined));
    }
    Ok(files)
}

/// Writes a file via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let io = |e: std::io::Error| ReportError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

pub fn write_report(files: &[RenderedFile], out_dir: &Path) -> Result<(), ReportError> {
    for f in files {
        write_atomic(&out_dir.join(&f.path), f.contents.as_bytes())?;
    }
    Ok(())
}

/// Builds a bundle from every recognised `.csv` file directly inside `dir`,
/// classified by header. Other files are ignored.
pub fn load_bundle_from_dir(dir: &Path) -> Result<ReportBundle, ReportError> {
    let entries = std::fs::read_dir(dir).map_err(|e| ReportError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    let mut bundle = ReportBundle::default();
    for path in paths {
        let text = fixture::read_fixture(&path)?;
        let header = text.trim_start_matches('\u{feff}').lines().next().unwrap_or("").trim();
        let with_context = |e: FixtureError| {
            log::error!("{}: {e}", path.display());
            ReportError::from(e)
        };
        match header {
            h if h == LATENCY_HEADER || h == "task,device,power_mode,dataset_size,per_image_ms,std_ms" => {
                bundle.add_latency(fixture::parse_latency_csv(&text).map_err(with_context)?);
            }
            h if h == ENERGY_HEADER => bundle.add_energy(fixture::parse_energy_csv(&text).map_err(with_context)?),
            h if h == SPEEDUP_HEADER => bundle.speedups.extend(fixture::parse_speedup_csv(&text).map_err(with_context)?),
            h if h == FIT_HEADER => bundle.fits.extend(fixture::parse_fit_csv(&text).map_err(with_context)?),
            h if h == QUALITY_HEADER => bundle.quality.extend(fixture::parse_quality_csv(&text).map_err(with_context)?),
            h if h == CONFUSION_HEADER => {
                bundle.confusion.extend(fixture::parse_confusion_csv(&text).map_err(with_context)?)
            }
            _ => log::info!("ignoring {} (unrecognised header)", path.display()),
        }
    }
    Ok(bundle)
}
