#![no_main]

use libfuzzer_sys::fuzz_target;
use sca_reco::model::GdcTaxonomy;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = GdcTaxonomy::from_tsv(text) {
            let again = GdcTaxonomy::from_tsv(&t.to_tsv()).expect("round trip");
            assert_eq!(again, t);
        }
    }
});
