#![no_main]

use libfuzzer_sys::fuzz_target;
use sca_reco::Beta;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(b) = text.parse::<Beta>() {
            assert!(b.value() >= 0.0);
            let again: Beta = b.to_string().parse().expect("display parses");
            assert_eq!(again, b);
        }
    }
});
