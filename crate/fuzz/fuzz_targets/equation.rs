#![no_main]

use libfuzzer_sys::fuzz_target;
use twosys_core::equation::parse_equation;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(eq) = parse_equation(text) {
        assert_eq!(parse_equation(&eq.to_string()), Ok(eq));
        let _ = eq.solve();
    }
});
