#![no_main]

use edgebench::quality::{classification_error, parse_prob_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_prob_csv(text) {
        for (_, p) in &rows {
            assert_eq!(classification_error(p, p), 0.0);
        }
    }
});
