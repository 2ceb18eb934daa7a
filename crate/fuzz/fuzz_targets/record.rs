#![no_main]

use libfuzzer_sys::fuzz_target;
use twosys_core::model::codec::decode_record;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for line in text.lines() {
        let _ = decode_record(line);
    }
});
