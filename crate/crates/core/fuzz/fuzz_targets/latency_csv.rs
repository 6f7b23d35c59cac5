#![no_main]

use edgebench::fixture::{parse_latency_csv, write_latency_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_latency_csv(text) {
        let again = parse_latency_csv(&write_latency_csv(&records)).expect("written fixture reparses");
        assert_eq!(records, again);
    }
});
