#![no_main]

use libfuzzer_sys::fuzz_target;
use twosys_core::fast::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cmd) = parse(text) {
        assert_eq!(parse(&cmd.render()).as_ref(), Ok(&cmd));
    }
});
