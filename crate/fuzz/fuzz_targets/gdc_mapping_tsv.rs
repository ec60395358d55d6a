#![no_main]

use libfuzzer_sys::fuzz_target;
use sca_reco::ingestion::parse_gdc_mapping;
use sca_reco::model::GdcTaxonomy;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let taxonomy = GdcTaxonomy::illustrative_default();
        if let Ok(m) = parse_gdc_mapping(text, &taxonomy) {
            // Whatever parses must survive a round trip.
            let again = parse_gdc_mapping(&m.to_tsv(), &taxonomy).expect("round trip");
            assert_eq!(again.len(), m.len());
        }
    }
});
