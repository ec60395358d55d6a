#![no_main]

use libfuzzer_sys::fuzz_target;
use sca_reco::ingestion::{parse_corpus_manifest, parse_project_manifest};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_corpus_manifest(text);
        let _ = parse_project_manifest(text);
    }
});
