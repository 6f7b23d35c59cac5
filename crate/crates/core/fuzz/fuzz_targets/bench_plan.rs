#![no_main]

use edgebench::harness::BenchPlan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = BenchPlan::from_json(text) {
        let _ = plan.timeline();
        let _ = plan.device_config();
        let _ = plan.input_shape();
    }
});
