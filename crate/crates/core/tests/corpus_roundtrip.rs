use std::collections::BTreeMap;

use sca_reco::dataset::load_features;
use sca_reco::evolution::label_project;
use sca_reco::ingestion::{load_gdc_mapping, load_taxonomy, Corpus};
use sca_reco::testkit::{generate, write_corpus, SynthConfig, TruthManifest};
use sca_reco::WarningLabel;

#[test]
fn written_corpus_loads_back_unchanged() {
    let corpus = generate(&SynthConfig::small(6, 21)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(&corpus, dir.path()).unwrap();

    let opened = Corpus::open(&dir.path().join("corpus")).unwrap();
    assert_eq!(opened.scas, corpus.scas());
    assert_eq!(opened.projects.len(), 6);
    for p in &corpus.projects {
        let loaded = opened.load_project(&p.snapshot.project_id).unwrap();
        assert_eq!(loaded, p.snapshot);
    }

    let taxonomy = load_taxonomy(&dir.path().join("taxonomy.tsv")).unwrap();
    assert_eq!(taxonomy, corpus.taxonomy);
    let mapping = load_gdc_mapping(&dir.path().join("gdc_map.tsv"), &taxonomy).unwrap();
    assert_eq!(mapping.len(), corpus.mapping.len());

    let features = load_features(&dir.path().join("features.csv")).unwrap();
    assert_eq!(features.len(), 6);
    for (fv, truth) in features.iter().zip(&manifest.projects) {
        assert_eq!(fv.project_id, truth.project);
        assert_eq!(fv.values, truth.features);
    }

    let text = std::fs::read_to_string(dir.path().join("truth.json")).unwrap();
    let reread: TruthManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(reread, manifest);
}

#[test]
fn labels_from_disk_match_the_truth_manifest() {
    let corpus = generate(&SynthConfig::small(8, 22)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(&corpus, dir.path()).unwrap();
    let opened = Corpus::open(&dir.path().join("corpus")).unwrap();
    let taxonomy = load_taxonomy(&dir.path().join("taxonomy.tsv")).unwrap();
    let mapping = load_gdc_mapping(&dir.path().join("gdc_map.tsv"), &taxonomy).unwrap();
    for truth in &manifest.projects {
        let snapshot = opened.load_project(&truth.project).unwrap();
        let labels = label_project(&snapshot, &opened.scas, &mapping).unwrap();
        let expected: BTreeMap<_, WarningLabel> = truth
            .warnings
            .iter()
            .map(|w| ((w.sca.clone(), w.class.clone(), w.start_line), w.expected))
            .collect();
        let got: BTreeMap<_, WarningLabel> = labels
            .iter()
            .flat_map(|(sca, l)| {
                l.warnings
                    .iter()
                    .map(move |w| ((sca.clone(), w.class_info.clone(), w.start_line), w.label))
            })
            .collect();
        assert_eq!(got, expected, "{}", truth.project);
    }
}

#[test]
fn missing_report_names_the_file() {
    let corpus = generate(&SynthConfig::small(2, 23)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&corpus, dir.path()).unwrap();
    let victim = dir.path().join("corpus/p001/r2/reports/pmd.json");
    std::fs::remove_file(&victim).unwrap();
    let opened = Corpus::open(&dir.path().join("corpus")).unwrap();
    assert!(opened.load_project("p000").is_ok());
    let err = opened.load_project("p001").unwrap_err().to_string();
    assert!(err.contains("pmd.json"), "{err}");
}
