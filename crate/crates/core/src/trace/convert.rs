//! Conversion of USB-tester exports into the canonical power log.
//!
//! Tester software exports delimited text with vendor-specific column names
//! and units. Columns are located by name (overridable), times may be plain
//! seconds, clock times or full date-times, and currents may be in mA.

use chrono::{NaiveDateTime, NaiveTime, Timelike};

use super::{parse_decimal, PowerSample, PowerTrace, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurrentUnit {
    /// Detect from the header (`mA` in the column name), else amperes.
    #[default]
    Auto,
    Amperes,
    Milliamperes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoltageUnit {
    #[default]
    Auto,
    Volts,
    Millivolts,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvertOptions {
    pub time_column: Option<String>,
    pub voltage_column: Option<String>,
    pub current_column: Option<String>,
    pub current_unit: CurrentUnit,
    pub voltage_unit: VoltageUnit,
    /// Field separator; detected from the header line when `None`.
    pub delimiter: Option<char>,
    /// Sample spacing used when the export has no time column.
    pub period_s: Option<f64>,
}

fn normalize(name: &str) -> String {
    name.trim().trim_matches('"').to_ascii_lowercase()
}

fn find_column(
    headers: &[String],
    explicit: Option<&str>,
    guess: impl Fn(&str) -> bool,
) -> Result<Option<usize>, TraceError> {
    if let Some(name) = explicit {
        let wanted = normalize(name);
        return headers
            .iter()
            .position(|h| *h == wanted)
            .map(Some)
            .ok_or_else(|| TraceError::UnrecognizedExport(format!("no column named '{name}'")));
    }
    Ok(headers.iter().position(|h| guess(h)))
}

fn is_time(h: &str) -> bool {
    h.contains("time") || h.contains("date") || h == "t" || h == "t(s)"
}

fn is_voltage(h: &str) -> bool {
    h.contains("volt") || h == "v" || h.starts_with("v(") || h.starts_with("v[") || h == "mv"
}

fn is_current(h: &str) -> bool {
    h.contains("curr") || h == "a" || h == "i" || h.starts_with("a(") || h.starts_with("i(") || h == "ma"
}

fn milli_in_header(h: &str, unit: &str) -> bool {
    h == unit || h.contains(&format!("({unit})")) || h.contains(&format!("[{unit}]"))
}

fn detect_delimiter(header: &str) -> char {
    ['\t', ';', ',']
        .into_iter()
        .max_by_key(|d| header.matches(*d).count())
        .filter(|d| header.contains(*d))
        .unwrap_or(',')
}

/// Seconds value of a time cell; clock times count from midnight.
fn parse_time(cell: &str) -> Option<f64> {
    let cell = cell.trim().trim_matches('"');
    if let Some(v) = parse_decimal(cell) {
        return Some(v);
    }
    for fmt in ["%H:%M:%S%.f", "%H:%M:%S"] {
        if let Ok(t) = NaiveTime::parse_from_str(cell, fmt) {
            return Some(f64::from(t.num_seconds_from_midnight()) + f64::from(t.nanosecond()) * 1e-9);
        }
    }
    for fmt in [
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y/%m/%d %H:%M:%S%.f",
        "%d/%m/%Y %H:%M:%S%.f",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(cell, fmt) {
            let utc = dt.and_utc();
            return Some(utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) * 1e-9);
        }
    }
    None
}

/// Converts a tester export to a canonical trace with times relative to the
/// first row.
pub fn convert_tester_export(text: &str, opts: &ConvertOptions) -> Result<PowerTrace, TraceError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| TraceError::UnrecognizedExport("export is empty".into()))?;
    let delimiter = opts.delimiter.unwrap_or_else(|| detect_delimiter(header));
    let headers: Vec<String> = header.split(delimiter).map(normalize).collect();

    let time_col = find_column(&headers, opts.time_column.as_deref(), is_time)?;
    let volt_col = find_column(&headers, opts.voltage_column.as_deref(), is_voltage)?
        .ok_or_else(|| TraceError::UnrecognizedExport("no voltage column".into()))?;
    let curr_col = find_column(&headers, opts.current_column.as_deref(), is_current)?
        .ok_or_else(|| TraceError::UnrecognizedExport("no current column".into()))?;
    if volt_col == curr_col {
        return Err(TraceError::UnrecognizedExport(
            "voltage and current resolve to the same column".into(),
        ));
    }

    let current_scale = match opts.current_unit {
        CurrentUnit::Amperes => 1.0,
        CurrentUnit::Milliamperes => 1e-3,
        CurrentUnit::Auto if milli_in_header(&headers[curr_col], "ma") => 1e-3,
        CurrentUnit::Auto => 1.0,
    };
    let voltage_scale = match opts.voltage_unit {
        VoltageUnit::Volts => 1.0,
        VoltageUnit::Millivolts => 1e-3,
        VoltageUnit::Auto if milli_in_header(&headers[volt_col], "mv") => 1e-3,
        VoltageUnit::Auto => 1.0,
    };
    let period = opts.period_s.unwrap_or(1.0);

    let mut samples: Vec<PowerSample> = Vec::new();
    let mut origin: Option<f64> = None;
    let mut day_offset = 0.0;
    let mut last_raw: Option<f64> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(delimiter).collect();
        let malformed = |reason: String| TraceError::MalformedLog { line: line_no, reason };
        let cell = |col: usize| {
            cells
                .get(col)
                .copied()
                .ok_or_else(|| malformed(format!("missing column {}", col + 1)))
        };
        let number = |col: usize| -> Result<f64, TraceError> {
            let raw = cell(col)?;
            parse_decimal(raw.trim().trim_matches('"'))
                .ok_or_else(|| malformed(format!("'{raw}' is not a decimal number")))
        };
        let voltage = number(volt_col)? * voltage_scale;
        let current = number(curr_col)? * current_scale;
        let t = match time_col {
            Some(col) => {
                let raw_cell = cell(col)?;
                let mut raw =
                    parse_time(raw_cell).ok_or_else(|| malformed(format!("'{raw_cell}' is not a time")))?;
                // Clock times wrap at midnight.
                if let Some(prev) = last_raw {
                    if raw + day_offset < prev && prev - (raw + day_offset) > 43_200.0 {
                        day_offset += 86_400.0;
                    }
                }
                raw += day_offset;
                last_raw = Some(raw);
                let base = *origin.get_or_insert(raw);
                raw - base
            }
            None => samples.len() as f64 * period,
        };
        if let Some(prev) = samples.last() {
            if t <= prev.t {
                return Err(TraceError::NonMonotonicTimestamps {
                    line: line_no,
                    previous: prev.t,
                    current: t,
                });
            }
        }
        let sample = PowerSample::new(t, voltage, current).map_err(malformed)?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(TraceError::EmptyLog);
    }
    PowerTrace::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tab_separated_with_milliamps() {
        let text = "Time\tVoltage(V)\tCurrent(mA)\n12:00:00\t5.10\t820\n12:00:01\t5.10\t900\n";
        let trace = convert_tester_export(text, &ConvertOptions::default()).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.samples()[1].t, 1.0);
        assert!((trace.powers()[0] - 4.182).abs() < 1e-12);
    }

    #[test]
    fn date_times_and_semicolons() {
        let text = "Date;V;A\n2021-09-01 10:00:00.5;5;1\n2021-09-01 10:00:01.5;5;2\n";
        let trace = convert_tester_export(text, &ConvertOptions::default()).unwrap();
        assert_eq!(trace.samples()[1].t, 1.0);
        assert_eq!(trace.powers(), vec![5.0, 10.0]);
    }

    #[test]
    fn clock_wraps_at_midnight() {
        let text = "time,volt,curr\n23:59:59,5,1\n00:00:00,5,1\n00:00:01,5,1\n";
        let trace = convert_tester_export(text, &ConvertOptions::default()).unwrap();
        let ts: Vec<f64> = trace.samples().iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn no_time_column_uses_period() {
        let text = "voltage,current\n5,1\n5,1\n5,1\n";
        let opts = ConvertOptions {
            period_s: Some(0.5),
            ..Default::default()
        };
        let trace = convert_tester_export(text, &opts).unwrap();
        assert_eq!(trace.samples()[2].t, 1.0);
    }

    #[test]
    fn explicit_columns() {
        let text = "a,b,c\n0,5,1\n1,5,2\n";
        let opts = ConvertOptions {
            time_column: Some("a".into()),
            voltage_column: Some("b".into()),
            current_column: Some("c".into()),
            ..Default::default()
        };
        let trace = convert_tester_export(text, &opts).unwrap();
        assert_eq!(trace.powers(), vec![5.0, 10.0]);
    }

    #[test]
    fn canonical_output_round_trips() {
        let text = "Time,Voltage(V),Current(A)\n0,5.08,0.91\n1,5.07,0.93\n";
        let trace = convert_tester_export(text, &ConvertOptions::default()).unwrap();
        assert_eq!(crate::trace::parse_power_log(&trace.to_csv()).unwrap(), trace);
    }

    #[test]
    fn errors() {
        let o = ConvertOptions::default();
        assert_eq!(convert_tester_export("", &o).unwrap_err().name(), "UnrecognizedExport");
        assert_eq!(convert_tester_export("time,foo\n0,1\n", &o).unwrap_err().name(), "UnrecognizedExport");
        assert_eq!(convert_tester_export("time,v,a\n", &o).unwrap_err().name(), "EmptyLog");
        assert_eq!(convert_tester_export("time,v,a\n0,x,1\n", &o).unwrap_err().name(), "MalformedLog");
        assert_eq!(
            convert_tester_export("time,v,a\n1,5,1\n0,5,1\n", &o).unwrap_err().name(),
            "NonMonotonicTimestamps"
        );
    }
}
