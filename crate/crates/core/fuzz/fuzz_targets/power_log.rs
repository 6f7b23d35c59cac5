#![no_main]

use edgebench::trace::parse_power_log;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = parse_power_log(text) {
        let again = parse_power_log(&trace.to_csv()).expect("canonical output reparses");
        assert_eq!(trace.samples(), again.samples());
    }
});
