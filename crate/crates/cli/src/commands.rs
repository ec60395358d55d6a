use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sca_reco::alignment::AlignmentDump;
use sca_reco::dataset::{load_features, FeatureVector, PreferenceDataset};
use sca_reco::effectiveness::{parse_evaluations, ProjectEvaluation};
use sca_reco::ingestion::{load_gdc_mapping, load_taxonomy, Corpus, GdcMapping};
use sca_reco::learners::ModelConfig;
use sca_reco::mining::{
    export_footprints, feature_footprint_csv, parse_selected_features, pca, rfe_cv, sca_footprint_csv,
    selected_features_text,
};
use sca_reco::model::{GdcTaxonomy, ScaId};
use sca_reco::recommender::{baseline_fixed, baseline_random, beta_sweep, cross_validate, train, RecommendationModel};
use sca_reco::testkit::{generate_corpus, SynthConfig};
use sca_reco::{evolution, pipeline, Error};

use crate::output::{file_stem, pretty, write_atomic};
use crate::{
    BaselineArgs, Cli, Command, CorpusArgs, CvArgs, DatasetArgs, EvaluateArgs, LabelArgs, MineArgs, RecommendArgs,
    SweepArgs, SynthArgs, TrainArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    /// Some projects failed; the rest were written.
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Partial { .. } => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Partial { failed, total } => write!(f, "{failed} of {total} projects failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            Error::InvalidBeta(m) => CliError::Usage(format!("invalid beta {m:?}")),
            other => CliError::Data(other),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => synth(a),
        Command::Label(a) => label(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Mine(a) => mine(a),
        Command::Train(a) => train_cmd(a),
        Command::Recommend(a) => recommend(a),
        Command::Cv(a) => cv(a),
        Command::Baseline(a) => baseline(a),
        Command::Sweep(a) => sweep(a),
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<SynthConfig>(&read(p)?)
            .map_err(|e| CliError::Data(Error::Parse(format!("{}: {e}", p.display()))))?,
        None => SynthConfig::default(),
    };
    if let Some(n) = a.projects {
        cfg.n_projects = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let manifest = generate_corpus(&cfg, &a.out)?;
    log::info!("generated {} projects under {}", manifest.projects.len(), a.out.display());
    Ok(())
}

struct Loaded {
    corpus: Corpus,
    mapping: GdcMapping,
}

fn open_corpus(a: &CorpusArgs) -> Result<Loaded> {
    let taxonomy = match &a.taxonomy {
        Some(p) => load_taxonomy(p)?,
        None => GdcTaxonomy::illustrative_default(),
    };
    let mapping = load_gdc_mapping(&a.gdc_map, &taxonomy)?;
    let corpus = Corpus::open(&a.corpus)?;
    Ok(Loaded { corpus, mapping })
}

/// Runs `f` on every project in the worker pool and reports failures;
/// results come back in project order.
fn per_project<T: Send>(
    corpus: &Corpus,
    f: impl Fn(&str) -> sca_reco::Result<T> + Sync,
) -> (Vec<(String, T)>, usize) {
    let results: Vec<(String, sca_reco::Result<T>)> = corpus
        .projects
        .par_iter()
        .map(|p| (p.clone(), f(p)))
        .collect();
    let mut ok = Vec::new();
    let mut failed = 0;
    for (p, r) in results {
        match r {
            Ok(v) => ok.push((p, v)),
            Err(e) => {
                eprintln!("project {p}: {e}");
                failed += 1;
            }
        }
    }
    (ok, failed)
}

fn finish(failed: usize, total: usize) -> Result<()> {
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Partial { failed, total })
    }
}

fn label(a: LabelArgs) -> Result<()> {
    let l = open_corpus(&a.corpus)?;
    let scas: Vec<ScaId> = match &a.sca {
        Some(s) => {
            let id = ScaId::new(s.as_str())?;
            if !l.corpus.scas.contains(&id) {
                return Err(CliError::Usage(format!("analyzer {id} is not declared by the corpus")));
            }
            vec![id]
        }
        None => l.corpus.scas.clone(),
    };
    let total = l.corpus.projects.len();
    let (_, failed) = per_project(&l.corpus, |p| {
        let snapshot = l.corpus.load_project(p)?;
        let labelings = evolution::label_project(&snapshot, &scas, &l.mapping)?;
        let dir = a.out.join(file_stem(p));
        for (sca, labeling) in &labelings {
            let io = |e: CliError| match e {
                CliError::Data(e) => e,
                other => Error::Schema(other.to_string()),
            };
            write_atomic(&dir.join(format!("{sca}.labels.json")), &pretty(&labeling.warnings)).map_err(io)?;
            write_atomic(&dir.join(format!("{sca}.audit.jsonl")), &labeling.audit_jsonl()).map_err(io)?;
        }
        Ok(())
    });
    finish(failed, total)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let l = open_corpus(&a.corpus)?;
    let total = l.corpus.projects.len();
    let (done, failed) = per_project(&l.corpus, |p| {
        let snapshot = l.corpus.load_project(p)?;
        let outcome = pipeline::evaluate_snapshot(&snapshot, &l.corpus.scas, &l.mapping, a.beta)?;
        let dump = AlignmentDump::from(&outcome.alignment);
        write_atomic(
            &a.out.join("alignment").join(format!("{}.json", file_stem(p))),
            &pretty(&dump),
        )
        .map_err(|e| Error::Schema(e.to_string()))?;
        Ok(outcome.evaluation)
    });
    let evaluations: Vec<ProjectEvaluation> = done.into_iter().map(|(_, e)| e).collect();
    write_atomic(&a.out.join("evaluation.json"), &pretty(&evaluations))?;
    let mut table = String::from("project\toptimal\n");
    for e in &evaluations {
        let names: Vec<&str> = e.optimal.iter().map(ScaId::as_str).collect();
        table.push_str(&format!("{}\t{}\n", e.project, names.join(",")));
    }
    write_atomic(&a.out.join("optimal.tsv"), &table)?;
    finish(failed, total)
}

fn load_dataset(features: &Path, evaluation: &Path, selected: Option<&PathBuf>) -> Result<(PreferenceDataset, Vec<ProjectEvaluation>)> {
    let fv = load_features(features)?;
    let evals = parse_evaluations(&read(evaluation)?)?;
    let mut ds = PreferenceDataset::join(&fv, &evals)?;
    if let Some(p) = selected {
        ds = ds.select(&parse_selected_features(&read(p)?))?;
    }
    Ok((ds, evals))
}

fn dataset(a: &DatasetArgs) -> Result<(PreferenceDataset, Vec<ProjectEvaluation>)> {
    load_dataset(&a.features, &a.evaluation, a.selected.as_ref())
}

/// Number of features shown as footprint tables.
const HIGHLIGHTED: usize = 9;

fn mine(a: MineArgs) -> Result<()> {
    let (ds, _) = load_dataset(&a.features, &a.evaluation, None)?;
    let rfe = rfe_cv(&ds, a.model, a.folds, a.seed)?;
    write_atomic(&a.out.join("selected_features.txt"), &selected_features_text(&rfe.selected))?;
    write_atomic(&a.out.join("feature_ranking.txt"), &selected_features_text(&rfe.ranking))?;
    let mut scores = String::from("size\tf1_micro\n");
    for (k, v) in &rfe.scores {
        scores.push_str(&format!("{k}\t{v}\n"));
    }
    write_atomic(&a.out.join("rfe_scores.tsv"), &scores)?;

    // PCA over the selected features, or every feature when fewer than two
    // survive.
    let basis = if rfe.selected.len() >= 2 { ds.select(&rfe.selected)? } else { ds.clone() };
    let (standardized, _) = sca_reco::dataset::standardize(&basis);
    let pca2 = pca(&standardized.rows, 2)?;
    let highlight: Vec<String> = rfe.ranking.iter().take(HIGHLIGHTED).cloned().collect();
    let fp = export_footprints(&pca2, &ds, &highlight)?;
    let dir = a.out.join("footprints");
    for (name, rows) in &fp.features {
        write_atomic(&dir.join(format!("feature_{}.csv", file_stem(name))), &feature_footprint_csv(rows))?;
    }
    for (sca, rows) in &fp.scas {
        write_atomic(&dir.join(format!("sca_{}.csv", file_stem(sca))), &sca_footprint_csv(rows))?;
    }
    let mut variance = String::from("component\texplained_variance\n");
    for (i, v) in pca2.explained_variance.iter().enumerate() {
        variance.push_str(&format!("pc{}\t{v}\n", i + 1));
    }
    write_atomic(&dir.join("pca.tsv"), &variance)?;
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let (ds, _) = dataset(&a.data)?;
    let model = train(&ds, &ModelConfig::default_for(a.model), a.seed)?;
    write_atomic(&a.out, &model.to_json())
}

fn recommend(a: RecommendArgs) -> Result<()> {
    let model = RecommendationModel::from_json(&read(&a.model)?)?;
    let rows = load_features(&a.features)?;
    let mut out = String::new();
    for fv in rows {
        let values = model
            .feature_names
            .iter()
            .map(|n| {
                fv.names
                    .iter()
                    .position(|m| m == n)
                    .map(|i| fv.values[i])
                    .ok_or_else(|| Error::FeatureMismatch(format!("project {} lacks feature {n}", fv.project_id)))
            })
            .collect::<sca_reco::Result<Vec<f64>>>()?;
        let sca = model.predict(&FeatureVector {
            project_id: fv.project_id,
            names: model.feature_names.clone(),
            values,
        })?;
        out.push_str(sca.as_str());
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    print!("{text}");
    match out {
        Some(p) => write_atomic(p, text),
        None => Ok(()),
    }
}

fn cv(a: CvArgs) -> Result<()> {
    let (ds, _) = dataset(&a.data)?;
    let report = cross_validate(&ds, &ModelConfig::default_for(a.model), a.folds, a.seed)?;
    emit(&pretty(&report), a.out.as_ref())
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let evals = parse_evaluations(&read(&a.evaluation)?)?;
    let truth: Vec<_> = evals.iter().map(ProjectEvaluation::label_set).collect();
    let scas: Vec<ScaId> = evals
        .first()
        .map(|e| e.scores.iter().map(|s| s.sca.clone()).collect())
        .unwrap_or_default();
    let metrics = match a.strategy.split_once(':') {
        Some(("fixed", sca)) => baseline_fixed(&ScaId::new(sca)?, &truth),
        None if a.strategy == "random" => baseline_random(&truth, &scas, a.repeats, a.seed)?,
        _ => {
            return Err(CliError::Usage(format!(
                "unknown strategy {:?}; use fixed:<sca> or random",
                a.strategy
            )))
        }
    };
    emit(&pretty(&metrics), a.out.as_ref())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let (ds, evals) = dataset(&a.data)?;
    let rows = beta_sweep(&evals, &ds, &ModelConfig::default_for(a.model), &a.betas, a.folds, a.seed)?;
    let mut table = String::from("beta\tp_micro\tr_micro\tf1_micro\n");
    for r in &rows {
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.beta, r.report.p_micro, r.report.r_micro, r.report.f1_micro
        ));
    }
    emit(&table, a.out.as_ref())
}
