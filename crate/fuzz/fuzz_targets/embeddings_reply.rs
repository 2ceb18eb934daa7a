#![no_main]

use libfuzzer_sys::fuzz_target;
use twosys_core::embedding::decode_embeddings;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = serde_json::from_str(text) {
        let _ = decode_embeddings(&v, 2, 16);
    }
});
