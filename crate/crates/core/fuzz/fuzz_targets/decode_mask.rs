#![no_main]

use edgebench::quality::{decode_mask, dice, parse_pgm, write_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(mask) = decode_mask(data) {
        let again = parse_pgm(&write_pgm(&mask)).expect("written mask reparses");
        assert_eq!(mask, again);
        assert_eq!(dice(&mask, &again).unwrap(), 1.0);
    }
});
