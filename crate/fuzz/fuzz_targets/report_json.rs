#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((sca, report, warnings)) = sca_reco::ingestion::parse_report_unchecked(text) {
            assert_eq!(report.warnings.len(), warnings.len());
            let _ = sca;
        }
        let _ = sca_reco::ingestion::parse_report(text, "p", "r1");
    }
});
