#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(evals) = sca_reco::effectiveness::parse_evaluations(text) {
            for e in &evals {
                let _ = e.rescored(sca_reco::Beta::INFINITY);
            }
        }
    }
});
