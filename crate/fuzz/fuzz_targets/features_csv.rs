#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = sca_reco::dataset::parse_features(text) {
            for r in &rows {
                assert_eq!(r.names.len(), r.values.len());
                assert!(r.values.iter().all(|v| v.is_finite()));
            }
        }
        let _ = sca_reco::mining::parse_selected_features(text);
    }
});
