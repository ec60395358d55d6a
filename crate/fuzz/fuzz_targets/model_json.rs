#![no_main]

use libfuzzer_sys::fuzz_target;
use sca_reco::recommender::RecommendationModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = RecommendationModel::from_json(text) {
            // A model that loads must predict without panicking.
            let row = vec![0.0; m.feature_names.len()];
            let _ = m.predict_index(&row);
        }
    }
});
