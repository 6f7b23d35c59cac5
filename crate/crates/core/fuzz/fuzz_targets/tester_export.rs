#![no_main]

use edgebench::trace::{convert_tester_export, parse_power_log, ConvertOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = convert_tester_export(text, &ConvertOptions::default()) {
        parse_power_log(&trace.to_csv()).expect("converted trace is a valid canonical log");
    }
});
